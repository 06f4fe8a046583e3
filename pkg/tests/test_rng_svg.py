import xml.etree.ElementTree as ET

import numpy as np

from planreg.parallel import ordered_map
from planreg.rng import RngStream, as_generator
from planreg.svgplot import Series, line_chart, write_svg


def test_stream_reproducible_and_distinct():
    a = RngStream(3, 1).generator().random(5)
    np.testing.assert_array_equal(a, RngStream(3, 1).generator().random(5))
    assert not np.array_equal(a, RngStream(3, 2).generator().random(5))
    assert not np.array_equal(a, RngStream(4, 1).generator().random(5))


def test_substreams():
    root = RngStream(9)
    assert root.substream(1, 2) == root.substream(1, 2)
    assert root.substream(1, 2) != root.substream(2, 1)
    assert root.substream(1, 2).seed == 9


def test_as_generator():
    gen = np.random.default_rng(0)
    assert as_generator(gen) is gen
    np.testing.assert_array_equal(as_generator(5).random(3), RngStream(5).generator().random(3))


def _square(x):
    return x * x


def test_ordered_map_preserves_order():
    assert ordered_map(_square, range(10), threads=1) == ordered_map(_square, range(10), threads=3)


def test_svg_well_formed(tmp_path):
    chart = line_chart([Series("a & b", [1, 10, 100], [1.0, 2.0, 1.5], [0.5, 1.5, 1.0], [1.5, 2.5, 2.0]),
                        Series("flat", [1, 10, 100], [3.0, 3.0, 3.0])],
                       "title <x>", "x", "y", log_x=True)
    root = ET.fromstring(chart)
    assert root.tag.endswith("svg")
    path = tmp_path / "c.svg"
    write_svg(chart, path)
    ET.parse(path)
    assert "href" not in chart


def test_svg_single_point():
    ET.fromstring(line_chart([Series("one", [0.5], [2.0])], "t", "x", "y"))
