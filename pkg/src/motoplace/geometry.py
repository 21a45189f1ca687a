"""Continuous-domain geometry for rectangles and circles.

Angles are in degrees. Rectangles carry an orientation in [0, 180); circles
carry a projected angle in [0, 180] that only matters for the discretised
separation test. All separation checks treat touching shapes as separated
and accept overlap up to ``EPS_GEO``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EPS_GEO = 1e-6


def cosd(angle: float) -> float:
    """Cosine of an angle in degrees, with exact zeros at odd multiples of 90."""
    value = math.cos(math.radians(angle))
    return 0.0 if abs(value) < 1e-15 else value


def sind(angle: float) -> float:
    value = math.sin(math.radians(angle))
    return 0.0 if abs(value) < 1e-15 else value


@dataclass(frozen=True)
class Rect:
    w: float
    h: float
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"rectangle dimensions must be positive, got {self.w} x {self.h}")
        if not 0.0 <= self.theta < 180.0:
            raise ValueError(f"rectangle angle must lie in [0, 180), got {self.theta}")

    @property
    def u1(self) -> tuple[float, float]:
        return (cosd(self.theta), sind(self.theta))

    @property
    def u2(self) -> tuple[float, float]:
        return (-sind(self.theta), cosd(self.theta))

    def half_extents(self) -> tuple[float, float]:
        """Half width and half height of the axis-aligned bounding box."""
        c, s = abs(cosd(self.theta)), abs(sind(self.theta))
        return (self.w / 2 * c + self.h / 2 * s, self.w / 2 * s + self.h / 2 * c)

    def corners(self) -> list[tuple[float, float]]:
        (c1, s1), (c2, s2) = self.u1, self.u2
        out = []
        for a, b in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
            out.append(
                (
                    self.x + a * self.w / 2 * c1 + b * self.h / 2 * c2,
                    self.y + a * self.w / 2 * s1 + b * self.h / 2 * s2,
                )
            )
        return out

    def contains(self, px: float, py: float, tol: float = 0.0) -> bool:
        dx, dy = px - self.x, py - self.y
        (c1, s1), (c2, s2) = self.u1, self.u2
        return (
            abs(dx * c1 + dy * s1) <= self.w / 2 + tol
            and abs(dx * c2 + dy * s2) <= self.h / 2 + tol
        )


@dataclass(frozen=True)
class Circle:
    r: float
    x: float = 0.0
    y: float = 0.0
    theta_p: float = 0.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"circle radius must be positive, got {self.r}")
        if not 0.0 <= self.theta_p <= 180.0:
            raise ValueError(f"projected angle must lie in [0, 180], got {self.theta_p}")

    def half_extents(self) -> tuple[float, float]:
        return (self.r, self.r)


@dataclass(frozen=True)
class AngleScheme:
    n_a: int = 4
    n_pa: int = 3

    def __post_init__(self):
        discretize_angles(self.n_a)
        discretize_projected_angles(self.n_pa)

    @property
    def angles(self) -> list[float]:
        return discretize_angles(self.n_a)

    @property
    def projected_angles(self) -> list[float]:
        return discretize_projected_angles(self.n_pa)

    def perpendicular(self, k: int) -> int:
        """Index of the angle 90 degrees away from angle ``k``."""
        return (k + self.n_a // 2) % self.n_a


@dataclass(frozen=True)
class DesignSpace:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"empty design space {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains_shape(self, shape: Rect | Circle, tol: float = EPS_GEO) -> float:
        """Largest protrusion of ``shape`` outside the space (<= 0 means inside)."""
        ex, ey = shape.half_extents()
        return max(
            self.x_min - (shape.x - ex),
            (shape.x + ex) - self.x_max,
            self.y_min - (shape.y - ey),
            (shape.y + ey) - self.y_max,
        )


def discretize_angles(n_a: int) -> list[float]:
    if isinstance(n_a, bool) or not isinstance(n_a, int) or n_a < 2 or n_a % 2:
        raise ValueError(f"number of angles must be an even integer >= 2, got {n_a!r}")
    return [180.0 * k / n_a for k in range(n_a)]


def discretize_projected_angles(n_pa: int) -> list[float]:
    if isinstance(n_pa, bool) or not isinstance(n_pa, int) or n_pa < 2:
        raise ValueError(f"number of projected angles must be an integer >= 2, got {n_pa!r}")
    return [180.0 * k / (n_pa - 1) for k in range(n_pa)]


def distinct_axes(angles: list[float]) -> list[float]:
    """Drop angles whose axis duplicates an earlier one (theta and theta + 180)."""
    out: list[float] = []
    for a in angles:
        if not any(abs((a - b) % 180.0) < 1e-9 or abs((a - b) % 180.0 - 180.0) < 1e-9 for b in out):
            out.append(a)
    return out


def _dot(a: tuple[float, float], b: tuple[float, float]) -> float:
    return a[0] * b[0] + a[1] * b[1]


def sat_margins(a: Rect, b: Rect) -> list[float]:
    """Left side minus right side of the four rectangle separation conditions.

    A non-negative entry means the corresponding axis separates the pair.
    """
    v = (b.x - a.x, b.y - a.y)
    margins = []
    for owner, other in ((a, b), (b, a)):
        for axis, half in ((owner.u1, owner.w / 2), (owner.u2, owner.h / 2)):
            reach = half + abs(other.w / 2 * _dot(other.u1, axis)) + abs(other.h / 2 * _dot(other.u2, axis))
            margins.append(abs(_dot(v, axis)) - reach)
    return margins


def rects_separated(a: Rect, b: Rect, tol: float = EPS_GEO) -> bool:
    return max(sat_margins(a, b)) >= -tol


def rect_circle_gap(d: Rect, z: Circle) -> float:
    """Distance from the circle boundary to the rectangle (negative when overlapping)."""
    dx, dy = z.x - d.x, z.y - d.y
    lx, ly = _dot((dx, dy), d.u1), _dot((dx, dy), d.u2)
    cx = min(max(lx, -d.w / 2), d.w / 2)
    cy = min(max(ly, -d.h / 2), d.h / 2)
    dist = math.hypot(lx - cx, ly - cy)
    if dist == 0.0:
        # centre inside the rectangle: penetration is the depth to the nearest face plus r
        return -(min(d.w / 2 - abs(lx), d.h / 2 - abs(ly)) + z.r)
    return dist - z.r


def rect_circle_separated(d: Rect, z: Circle, tol: float = EPS_GEO) -> bool:
    return rect_circle_gap(d, z) >= -tol


def rect_circle_margin_discrete(d: Rect, z: Circle, theta_p: float) -> float:
    """Margin of the projected-axis test for one projected angle, in the rectangle frame."""
    dx, dy = z.x - d.x, z.y - d.y
    c, s = cosd(d.theta), sind(d.theta)
    vr = (c * dx + s * dy, -s * dx + c * dy)
    up = (cosd(theta_p), sind(theta_p))
    reach = z.r + d.w / 2 * abs(up[0]) + d.h / 2 * abs(up[1])
    return abs(_dot(vr, up)) - reach


def rect_circle_separated_discrete(d: Rect, z: Circle, projected: list[float], tol: float = EPS_GEO) -> bool:
    """Sufficient separation test over a finite set of projected angles."""
    return any(rect_circle_margin_discrete(d, z, t) >= -tol for t in projected)


def circles_gap(a: Circle, b: Circle) -> float:
    return math.hypot(b.x - a.x, b.y - a.y) - (a.r + b.r)


def circles_separated(a: Circle, b: Circle, tol: float = EPS_GEO) -> bool:
    return circles_gap(a, b) >= -tol


def circles_margin_discrete(a: Circle, b: Circle, theta_p: float) -> float:
    return abs((b.x - a.x) * cosd(theta_p) + (b.y - a.y) * sind(theta_p)) - (a.r + b.r)


def circles_separated_discrete(a: Circle, b: Circle, projected: list[float], tol: float = EPS_GEO) -> bool:
    return any(circles_margin_discrete(a, b, t) >= -tol for t in projected)


def shapes_separated(a: Rect | Circle, b: Rect | Circle, tol: float = EPS_GEO) -> bool:
    if isinstance(a, Rect) and isinstance(b, Rect):
        return rects_separated(a, b, tol)
    if isinstance(a, Circle) and isinstance(b, Circle):
        return circles_separated(a, b, tol)
    if isinstance(a, Circle):
        a, b = b, a
    return rect_circle_separated(a, b, tol)


def penetration(a: Rect | Circle, b: Rect | Circle) -> float:
    """Positive overlap depth of two shapes, 0 when separated."""
    if isinstance(a, Rect) and isinstance(b, Rect):
        return max(0.0, -max(sat_margins(a, b)))
    if isinstance(a, Circle) and isinstance(b, Circle):
        return max(0.0, -circles_gap(a, b))
    if isinstance(a, Circle):
        a, b = b, a
    return max(0.0, -rect_circle_gap(a, b))


def rotate_point(px: float, py: float, angle: float) -> tuple[float, float]:
    c, s = cosd(angle), sind(angle)
    return (c * px - s * py, s * px + c * py)


def abutment(a: Rect, b: Rect, eps: float, tol: float = EPS_GEO) -> tuple[bool, float, float]:
    """Check whether two rectangles, aligned or at 90 degrees, share an edge segment.

    Works in the frame of ``a``. Returns ``(abutting, gap, lateral_overlap)`` for
    the best axis: the pair abuts when the gap along one axis lies in
    ``[-tol, eps]`` while the projections on the other axis overlap by more
    than ``tol``.
    """
    v = (b.x - a.x, b.y - a.y)
    rel = (b.theta - a.theta) % 180.0
    if abs(rel) < 1e-9 or abs(rel - 180.0) < 1e-9:
        bw, bh = b.w, b.h
    elif abs(rel - 90.0) < 1e-9:
        bw, bh = b.h, b.w
    else:
        return (False, math.inf, 0.0)
    p1, p2 = abs(_dot(v, a.u1)), abs(_dot(v, a.u2))
    best = (False, math.inf, 0.0)
    for gap, lateral in (
        (p1 - (a.w + bw) / 2, (a.h + bh) / 2 - p2),
        (p2 - (a.h + bh) / 2, (a.w + bw) / 2 - p1),
    ):
        ok = -tol <= gap <= eps and lateral > tol
        if ok and not best[0]:
            best = (True, gap, lateral)
        elif not best[0] and abs(gap) < abs(best[1]):
            best = (False, gap, lateral)
    return best
