"""Static SVG drawing of a placement.

Output is a pure function of the inputs: fixed element order, fixed number
formatting, no timestamps.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from motoplace.cog_region import RegionGrid, VehicleParams
from motoplace.geometry import Circle, DesignSpace, Rect
from motoplace.topology import Placement, Topology, element_shapes
from motoplace.verify import overall_cog

SVG_FORMAT_VERSION = 1
SCALE = 500.0  # pixels per metre
MARGIN = 40.0
COLOURS = {"MM": "#d9534f", "HM": "#f0ad4e", "INV": "#5bc0de", "BP": "#5cb85c", "GT": "#9b59b6", "WL": "#7f8c8d"}


def _n(v: float) -> str:
    out = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if out in ("-0", "") else out


class _Canvas:
    def __init__(self, x_min: float, x_max: float, y_min: float, y_max: float):
        self.x0, self.y1 = x_min, y_max
        self.width = (x_max - x_min) * SCALE + 2 * MARGIN
        self.height = (y_max - y_min) * SCALE + 2 * MARGIN
        self.items: list[str] = []

    def px(self, x: float, y: float) -> tuple[str, str]:
        return _n((x - self.x0) * SCALE + MARGIN), _n((self.y1 - y) * SCALE + MARGIN)

    def add(self, item: str) -> None:
        self.items.append(item)

    def document(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(self.width)}" height="{_n(self.height)}" '
            f'viewBox="0 0 {_n(self.width)} {_n(self.height)}" data-format-version="{SVG_FORMAT_VERSION}">'
        )
        return "\n".join([head, *self.items, "</svg>"]) + "\n"


def _polygon(c: _Canvas, rect: Rect, fill: str, cls: str, label: str) -> None:
    pts = " ".join(",".join(c.px(x, y)) for x, y in rect.corners())
    c.add(f'<polygon class="{cls}" data-label="{escape(label)}" points="{pts}" fill="{fill}" fill-opacity="0.6" stroke="black" stroke-width="1"/>')


def _circle(c: _Canvas, circ: Circle, fill: str, cls: str, label: str) -> None:
    cx, cy = c.px(circ.x, circ.y)
    c.add(
        f'<circle class="{cls}" data-label="{escape(label)}" cx="{cx}" cy="{cy}" r="{_n(circ.r * SCALE)}" '
        f'fill="{fill}" fill-opacity="0.6" stroke="black" stroke-width="1"/>'
    )


def _dot(c: _Canvas, x: float, y: float, cls: str, r: float = 2.0, fill: str = "black") -> None:
    cx, cy = c.px(x, y)
    c.add(f'<circle class="{cls}" cx="{cx}" cy="{cy}" r="{_n(r)}" fill="{fill}"/>')


def _star(c: _Canvas, x: float, y: float, cls: str) -> None:
    pts = []
    for k in range(10):
        rad = 8.0 if k % 2 == 0 else 3.5
        a = math.pi / 2 + k * math.pi / 5
        pts.append((x + rad * math.cos(a) / SCALE, y + rad * math.sin(a) / SCALE))
    c.add(f'<polygon class="{cls}" points="{" ".join(",".join(c.px(px, py)) for px, py in pts)}" fill="gold" stroke="black" stroke-width="0.5"/>')


def _cross(c: _Canvas, x: float, y: float, cls: str) -> None:
    d = 6.0 / SCALE
    for (ax, ay), (bx, by) in (((x - d, y - d), (x + d, y + d)), ((x - d, y + d), (x + d, y - d))):
        p, q = c.px(ax, ay), c.px(bx, by)
        c.add(f'<line class="{cls}" x1="{p[0]}" y1="{p[1]}" x2="{q[0]}" y2="{q[1]}" stroke="red" stroke-width="2"/>')


def _box(c: _Canvas, box: tuple[float, float, float, float], cls: str, colour: str) -> None:
    x0, x1, y0, y1 = box
    px0, py1 = c.px(x0, y1)
    c.add(
        f'<rect class="{cls}" x="{px0}" y="{py1}" width="{_n((x1 - x0) * SCALE)}" height="{_n((y1 - y0) * SCALE)}" '
        f'fill="none" stroke="{colour}" stroke-width="1.5" stroke-dasharray="6,4"/>'
    )


def render_svg(
    placement: Placement | None,
    space: DesignSpace,
    topology: Topology | None = None,
    *,
    mm_box: tuple[float, float, float, float] | None = None,
    vehicle: VehicleParams | None = None,
    ideal: tuple[float, float] | None = None,
    region: RegionGrid | None = None,
    region_origin: tuple[float, float] = (0.0, 0.0),
) -> str:
    """Draw ``placement`` inside ``space``.

    ``region`` is drawn as shaded cells, shifted by ``region_origin`` (the rear
    contact point) into design coordinates.
    """
    shapes = element_shapes(placement, topology, skip_missing=True) if placement is not None and topology is not None else []
    xs = [space.x_min, space.x_max]
    ys = [space.y_min, space.y_max]
    for _, _, s in shapes:
        hw, hh = s.half_extents()
        xs += [s.x - hw, s.x + hw]
        ys += [s.y - hh, s.y + hh]
    if vehicle is not None:
        xs += [vehicle.chassis_x, vehicle.rider_x]
        ys += [vehicle.chassis_y, vehicle.rider_y]
    if ideal is not None:
        xs.append(ideal[0])
        ys.append(ideal[1])
    c = _Canvas(min(xs), max(xs), min(min(ys), 0.0), max(ys))
    c.add(f'<rect x="0" y="0" width="{_n(c.width)}" height="{_n(c.height)}" fill="white"/>')
    if region is not None:
        step_b = float(region.b[1] - region.b[0]) if len(region.b) > 1 else 0.02
        step_h = float(region.h[1] - region.h[0]) if len(region.h) > 1 else 0.02
        for i, h in enumerate(region.h):
            for j, b in enumerate(region.b):
                if region.inactive[i, j]:
                    x, y = region_origin[0] + b - step_b / 2, region_origin[1] + h + step_h / 2
                    px, py = c.px(x, y)
                    c.add(
                        f'<rect class="region" x="{px}" y="{py}" width="{_n(step_b * SCALE)}" '
                        f'height="{_n(step_h * SCALE)}" fill="#cce5ff" stroke="none"/>'
                    )
    _box(c, (space.x_min, space.x_max, space.y_min, space.y_max), "design-space", "black")
    if mm_box is not None:
        _box(c, mm_box, "mm-box", "#d9534f")
    for label, spec, shape in shapes:
        fill = COLOURS.get(spec.type, "#cccccc")
        if isinstance(shape, Rect):
            _polygon(c, shape, fill, "element", label)
        else:
            _circle(c, shape, fill, "element", label)
        tx, ty = c.px(shape.x, shape.y)
        c.add(f'<text x="{tx}" y="{ty}" font-size="10" text-anchor="middle" dy="-4">{escape(label)}</text>')
    if placement is not None and topology is not None:
        for spec in topology.existing:
            pe = placement.elements.get(spec.name)
            if pe is None:
                continue
            if spec.is_subsystem:
                for cl in pe.clusters:
                    for mx, my in _module_centres(spec, cl):
                        _dot(c, mx, my, "module-cog", 1.5)
            else:
                _dot(c, pe.x, pe.y, "component-cog")
    if vehicle is not None:
        _star(c, vehicle.chassis_x, vehicle.chassis_y, "chassis-cog")
        _star(c, vehicle.rider_x, vehicle.rider_y, "rider-cog")
        if placement is not None and topology is not None and all(s.name in placement.elements for s in topology.existing):
            gx, gy = overall_cog(placement, topology, vehicle)
            _dot(c, gx, gy, "overall-cog", 5.0, "navy")
    if ideal is not None:
        _cross(c, ideal[0], ideal[1], "ideal-cog")
    return c.document()


def _module_centres(spec, cl) -> list[tuple[float, float]]:
    ca, sa = math.cos(math.radians(cl.angle)), math.sin(math.radians(cl.angle))
    out = []
    for a in range(cl.n_w):
        for b in range(cl.n_h):
            u = (a - (cl.n_w - 1) / 2) * spec.sub_width
            v = (b - (cl.n_h - 1) / 2) * spec.sub_height
            out.append((cl.x + ca * u - sa * v, cl.y + sa * u + ca * v))
    return out
