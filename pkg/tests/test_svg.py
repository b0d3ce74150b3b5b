import xml.etree.ElementTree as ET

import numpy as np

from pllnoise.svg import Curve, psd_plot_svg

NS = "{http://www.w3.org/2000/svg}"


def _plot(**kw):
    f = np.geomspace(100, 1e7, 50)
    curves = [Curve(f, -30 * np.log10(f), "measured & fit"), Curve(f, -40 * np.log10(f), dashed=True)]
    return psd_plot_svg(curves, boundaries=[1e3, 1e5, 1e9], **kw)


def test_svg_is_well_formed():
    root = ET.fromstring(_plot(title="a < b"))
    assert root.tag == f"{NS}svg"
    assert len(root.findall(f"{NS}polyline")) == 2


def test_decade_ticks_and_labels():
    root = ET.fromstring(_plot())
    texts = [t.text for t in root.iter(f"{NS}text")]
    for label in ("100 Hz", "1 kHz", "10 kHz", "1 MHz", "10 MHz"):
        assert label in texts
    assert "measured & fit" in texts


def test_boundaries_outside_data_are_skipped():
    root = ET.fromstring(_plot())
    dashed = [ln for ln in root.iter(f"{NS}line") if ln.get("stroke-dasharray") == "5,4"]
    assert len(dashed) == 2


def test_points_stay_inside_canvas():
    root = ET.fromstring(_plot(width=400, height=300))
    for poly in root.iter(f"{NS}polyline"):
        xy = np.array([p.split(",") for p in poly.get("points").split()], dtype=float)
        assert np.all((xy[:, 0] >= 0) & (xy[:, 0] <= 400))
        assert np.all((xy[:, 1] >= 0) & (xy[:, 1] <= 300))
