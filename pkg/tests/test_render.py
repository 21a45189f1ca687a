from __future__ import annotations

import xml.etree.ElementTree as ET

from motoplace.cog_region import VehicleParams
from motoplace.geometry import DesignSpace
from motoplace.render import render_svg
from motoplace.topology import ElementSpec, PlacedCluster, PlacedElement, Placement, Topology

SPACE = DesignSpace(0.0, 1.0, 0.0, 0.5)
NS = "{http://www.w3.org/2000/svg}"


def classes(svg: str) -> list[str]:
    return [el.get("class") for el in ET.fromstring(svg).iter() if el.get("class")]


def two_elements():
    topo = Topology(
        "two",
        [
            ElementSpec("INV", "INV", 2.0, "rect", width=0.2, height=0.1),
            ElementSpec("GT", "GT", 1.0, "circle", radius=0.05),
        ],
    )
    placement = Placement({"INV": PlacedElement("INV", 0.3, 0.2, 45.0), "GT": PlacedElement("GT", 0.7, 0.2)})
    return topo, placement


def test_empty_placement_draws_boundaries_only():
    svg = render_svg(None, SPACE, mm_box=(0.1, 0.4, 0.1, 0.4))
    assert sorted(classes(svg)) == ["design-space", "mm-box"]
    assert 'stroke-dasharray' in svg


def test_element_count_matches():
    topo, placement = two_elements()
    svg = render_svg(placement, SPACE, topo)
    assert classes(svg).count("element") == 2
    assert classes(svg).count("component-cog") == 2
    labels = {el.get("data-label") for el in ET.fromstring(svg).iter() if el.get("class") == "element"}
    assert labels == {"INV", "GT"}


def test_subsystem_draws_one_shape_per_cluster_and_module_dots():
    spec = ElementSpec("BP", "BP", 6.0, "rect", n_sub=3, sub_width=0.1, sub_height=0.1, sub_mass=2.0)
    topo = Topology("bp", [spec])
    pe = PlacedElement("BP", 0.3, 0.2, 0.0, [PlacedCluster(1, 2, 0.2, 0.2, 0.0), PlacedCluster(1, 1, 0.3, 0.15, 90.0)])
    svg = render_svg(Placement({"BP": pe}), SPACE, topo)
    assert classes(svg).count("element") == 2
    assert classes(svg).count("module-cog") == 3


def test_markers_and_determinism():
    topo, placement = two_elements()
    vehicle = VehicleParams(1.4, 80.0, 0.7, 0.5, 75.0, 0.6, 0.9)
    kw = dict(vehicle=vehicle, ideal=(0.5, 0.1), mm_box=(0.1, 0.4, 0.1, 0.4))
    a = render_svg(placement, SPACE, topo, **kw)
    b = render_svg(placement, SPACE, topo, **kw)
    assert a == b and a.encode() == b.encode()
    cls = classes(a)
    for marker in ("chassis-cog", "rider-cog", "overall-cog", "ideal-cog"):
        assert marker in cls
    root = ET.fromstring(a)
    assert root.tag == NS + "svg" and root.get("data-format-version") == "1"
