import sys

from planreg.cli import main

sys.exit(main())
