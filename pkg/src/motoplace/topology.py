"""Powertrain topology, sub-module arrangements and placements."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from motoplace.geometry import Circle, DesignSpace, Rect

ELEMENT_TYPES = ("MM", "HM", "INV", "BP", "GT", "WL")


class TopologyError(ValueError):
    """Raised for an inconsistent topology description."""


@dataclass(frozen=True)
class ElementSpec:
    name: str
    type: str
    mass: float
    shape: str  # "rect" | "circle"
    width: float = 0.0
    height: float = 0.0
    radius: float = 0.0
    n_sub: int = 0
    sub_width: float = 0.0
    sub_height: float = 0.0
    sub_mass: float = 0.0
    fixed: bool = False
    x: float | None = None
    y: float | None = None
    angle: float = 0.0
    exists: bool = True
    role: str | None = None

    @property
    def is_subsystem(self) -> bool:
        return self.n_sub >= 1

    def validate(self) -> None:
        where = f"element {self.name!r}"
        if self.type not in ELEMENT_TYPES:
            raise TopologyError(f"{where}: unknown type {self.type!r} (expected one of {ELEMENT_TYPES})")
        if self.shape not in ("rect", "circle"):
            raise TopologyError(f"{where}: shape must be 'rect' or 'circle'")
        if self.exists and not self.mass > 0:
            raise TopologyError(f"{where}: mass must be positive")
        if self.n_sub < 0:
            raise TopologyError(f"{where}: n_sub must be >= 0")
        if self.is_subsystem:
            if self.shape != "rect":
                raise TopologyError(f"{where}: subsystems are built from rectangular modules")
            if not (self.sub_width > 0 and self.sub_height > 0 and self.sub_mass > 0):
                raise TopologyError(f"{where}: sub-module width, height and mass must be positive")
            if self.n_sub * self.sub_mass > self.mass * (1 + 1e-9):
                raise TopologyError(f"{where}: {self.n_sub} modules of {self.sub_mass} kg exceed the subsystem mass")
            if self.fixed:
                raise TopologyError(f"{where}: subsystems cannot be fixed")
        elif self.shape == "rect" and not (self.width > 0 and self.height > 0):
            raise TopologyError(f"{where}: rectangle needs positive width and height")
        elif self.shape == "circle" and not self.radius > 0:
            raise TopologyError(f"{where}: circle needs a positive radius")
        if self.fixed and (self.x is None or self.y is None):
            raise TopologyError(f"{where}: fixed elements need x and y")
        if not 0.0 <= self.angle < 180.0:
            raise TopologyError(f"{where}: angle must lie in [0, 180)")

    def shape_at(self, x: float, y: float, angle: float = 0.0) -> Rect | Circle:
        if self.shape == "circle":
            return Circle(self.radius, x, y)
        return Rect(self.width, self.height, x, y, angle)


@dataclass(frozen=True)
class Arrangement:
    """A rectangular ``n_w`` x ``n_h`` grid of identical sub-modules."""

    n_w: int
    n_h: int
    sub_w: float
    sub_h: float
    sub_m: float

    @property
    def n_b(self) -> int:
        return self.n_w * self.n_h

    @property
    def w(self) -> float:
        return self.n_w * self.sub_w

    @property
    def h(self) -> float:
        return self.n_h * self.sub_h

    @property
    def m(self) -> float:
        return self.n_b * self.sub_m


def enumerate_arrangements(spec: ElementSpec, space: DesignSpace) -> list[Arrangement]:
    """All grids that fit the module budget, the subsystem mass and the design space.

    Ordered by module count, then by the longer side, then by column count.
    """
    if not spec.is_subsystem:
        raise TopologyError(f"element {spec.name!r} is a component and has no arrangements")
    out = []
    for n_w in range(1, spec.n_sub + 1):
        for n_h in range(1, spec.n_sub // n_w + 1):
            arr = Arrangement(n_w, n_h, spec.sub_width, spec.sub_height, spec.sub_mass)
            if arr.m > spec.mass * (1 + 1e-12):
                continue
            if arr.w > space.width + 1e-12 or arr.h > space.height + 1e-12:
                continue
            out.append(arr)
    out.sort(key=lambda a: (a.n_b, max(a.n_w, a.n_h), a.n_w))
    return out


@dataclass
class Topology:
    name: str
    elements: list[ElementSpec]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        seen = set()
        for e in self.elements:
            e.validate()
            if e.name in seen:
                raise TopologyError(f"duplicate element name {e.name!r}")
            seen.add(e.name)
        if sum(1 for e in self.existing if e.type == "MM") > 1:
            raise TopologyError("at most one mounted motor is supported")

    @property
    def existing(self) -> list[ElementSpec]:
        return [e for e in self.elements if e.exists]

    def __getitem__(self, name: str) -> ElementSpec:
        for e in self.elements:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def n_mm(self) -> int:
        return sum(1 for e in self.existing if e.type == "MM")

    @property
    def element_mass(self) -> float:
        return sum(e.mass for e in self.existing)

    def rear_wheel(self) -> ElementSpec | None:
        wheels = [e for e in self.existing if e.type == "WL"]
        for w in wheels:
            if w.role == "rear":
                return w
        return min(wheels, key=lambda w: w.x) if wheels else None


@dataclass
class PlacedCluster:
    n_w: int
    n_h: int
    x: float
    y: float
    angle: float = 0.0


@dataclass
class PlacedElement:
    name: str
    x: float
    y: float
    angle: float = 0.0
    clusters: list[PlacedCluster] = field(default_factory=list)


@dataclass
class Placement:
    elements: dict[str, PlacedElement]
    objective: float | None = None

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "objective": self.objective,
            "elements": [asdict(e) for e in self.elements.values()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Placement:
        elements = {}
        for raw in data["elements"]:
            clusters = [PlacedCluster(**c) for c in raw.get("clusters", [])]
            el = PlacedElement(raw["name"], float(raw["x"]), float(raw["y"]), float(raw.get("angle", 0.0)), clusters)
            elements[el.name] = el
        return cls(elements, data.get("objective"))


def element_shapes(
    placement: Placement, topology: Topology, skip_missing: bool = False
) -> list[tuple[str, ElementSpec, Rect | Circle]]:
    """Flatten a placement into labelled shapes; subsystems yield one rectangle per cluster."""
    out = []
    for spec in topology.existing:
        if skip_missing and spec.name not in placement.elements:
            continue
        pe = placement.elements[spec.name]
        if spec.is_subsystem:
            for i, c in enumerate(pe.clusters):
                shape = Rect(c.n_w * spec.sub_width, c.n_h * spec.sub_height, c.x, c.y, c.angle)
                out.append((f"{spec.name}.c{i + 1}", spec, shape))
        else:
            out.append((spec.name, spec, spec.shape_at(pe.x, pe.y, pe.angle)))
    return out


def fixed_placement(spec: ElementSpec) -> PlacedElement:
    return PlacedElement(spec.name, float(spec.x), float(spec.y), spec.angle)
