"""Dependency-free SVG emitters: validity and byte determinism."""

import xml.etree.ElementTree as ET

import numpy as np

from hypersr.svgplot import LineChart, heatmap_svg, table_svg


def chart():
    c = LineChart(title="stress fit", xlabel="stretch", ylabel="P [MPa]",
                  logy=True)
    x = np.linspace(1.0, 8.0, 40)
    c.add_series("data", x, 0.3 * (x - x**-2) + 0.01, markers=True)
    c.add_series("model", x, 0.3 * (x - x**-2) + 0.02)
    c.add_vline(6.2, "locking")
    c.add_hline(1.0)
    c.annotate(4.0, 1.5, "knee")
    return c


class TestLineChart:
    def test_is_well_formed_xml(self):
        root = ET.fromstring(chart().render())
        assert root.tag.endswith("svg")

    def test_contains_labels_and_series(self):
        svg = chart().render()
        for needle in ("stress fit", "stretch", "P [MPa]", "data", "model",
                       "locking", "knee"):
            assert needle in svg

    def test_byte_deterministic(self):
        assert chart().render() == chart().render()

    def test_handles_non_finite_points(self):
        c = LineChart(title="gaps")
        c.add_series("s", [1.0, 2.0, 3.0], [1.0, float("nan"), 2.0])
        ET.fromstring(c.render())


class TestHeatmap:
    def grid(self):
        x = np.linspace(0.5, 2.0, 8)
        y = np.linspace(0.5, 2.0, 8)
        z = np.subtract.outer(y, x)
        z[0, 0] = np.nan
        return x, y, z

    def test_well_formed_and_deterministic(self):
        x, y, z = self.grid()
        a = heatmap_svg(x, y, z, title="stability")
        assert a == heatmap_svg(x, y, z, title="stability")
        ET.fromstring(a)
        assert "stability" in a

    def test_non_finite_cells_rendered_gray(self):
        x, y, z = self.grid()
        assert "#555555" in heatmap_svg(x, y, z)


class TestTable:
    def test_well_formed_with_content(self):
        svg = table_svg(["term", "value"],
                        [["mu1", "0.63"], ["alpha3", "-3.18"]],
                        title="forensic")
        ET.fromstring(svg)
        for needle in ("forensic", "alpha3", "-3.18"):
            assert needle in svg
