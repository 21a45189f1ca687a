"""Model-free checks of a placement.

Everything here is recomputed from shapes, masses and positions using exact
geometry; nothing is read back from solver variables. A model-feasible
placement always passes. The reverse can fail only through the conservative
discretised circle tests used in the model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from motoplace.cog_region import VehicleParams
from motoplace.geometry import EPS_GEO, AngleScheme, DesignSpace, Rect, abutment, penetration
from motoplace.topology import Placement, Topology, element_shapes

REPORT_FORMAT_VERSION = 1
CATEGORIES = ("bounds", "overlap", "contiguity", "connectivity", "mass", "orientation", "objective", "mm_box")


class PlacementError(ValueError):
    """Placement does not match the topology (missing elements, bad cluster data)."""


@dataclass
class Violation:
    category: str
    items: list[str]
    magnitude: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"category": self.category, "items": self.items, "magnitude": self.magnitude, "detail": self.detail}


@dataclass
class VerificationReport:
    categories: dict[str, bool]
    violations: list[Violation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    objective: float | None = None
    reported_objective: float | None = None
    cog: tuple[float, float] | None = None
    abutment_graphs: dict[str, dict] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.categories.values())

    def to_dict(self) -> dict:
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "passed": self.passed,
            "categories": dict(self.categories),
            "violations": [v.to_dict() for v in self.violations],
            "warnings": list(self.warnings),
            "objective": self.objective,
            "reported_objective": self.reported_objective,
            "cog": list(self.cog) if self.cog else None,
            "abutment_graphs": self.abutment_graphs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = [f"verification: {'PASS' if self.passed else 'FAIL'}"]
        for name in CATEGORIES:
            if name in self.categories:
                lines.append(f"  {name:<13} {'ok' if self.categories[name] else 'FAILED'}")
        for v in self.violations:
            lines.append(f"  - {v.category}: {', '.join(v.items)} ({v.magnitude:.3g}) {v.detail}".rstrip())
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        if self.objective is not None:
            lines.append(f"  objective {self.objective:.10g}")
        return "\n".join(lines)


@dataclass
class Tolerances:
    geo: float = EPS_GEO
    eps: float = 1e-3  # contiguity gap
    objective_rel: float = 1e-6
    mass_rel: float = 1e-9


def overall_cog(placement: Placement, topology: Topology, vehicle: VehicleParams) -> tuple[float, float]:
    mx = vehicle.chassis_mass * vehicle.chassis_x + vehicle.rider_mass * vehicle.rider_x
    my = vehicle.chassis_mass * vehicle.chassis_y + vehicle.rider_mass * vehicle.rider_y
    total = vehicle.chassis_mass + vehicle.rider_mass
    for spec in topology.existing:
        pe = placement.elements[spec.name]
        if spec.is_subsystem:
            for c in pe.clusters:
                m = c.n_w * c.n_h * spec.sub_mass
                mx, my = mx + m * c.x, my + m * c.y
        else:
            mx, my = mx + spec.mass * pe.x, my + spec.mass * pe.y
        total += spec.mass
    return (mx / total, my / total)


def objective_of(
    placement: Placement,
    topology: Topology,
    vehicle: VehicleParams,
    ideal: tuple[float, float],
    l_n: float = 1.0,
    l_n_mm: float = 1.0,
) -> float:
    """Placement objective recomputed from positions and masses."""
    cx, cy = overall_cog(placement, topology, vehicle)
    value = ((cx - ideal[0]) ** 2 + (cy - ideal[1]) ** 2) / l_n
    mm = [s for s in topology.existing if s.type == "MM"]
    if mm:
        rear = topology.rear_wheel()
        pe = placement.elements[mm[0].name]
        value += ((pe.x - rear.x) ** 2 + (pe.y - rear.y) ** 2) / l_n_mm
    return float(value)


def _check_structure(placement: Placement, topology: Topology, scheme: AngleScheme | None) -> None:
    for spec in topology.existing:
        if spec.name not in placement.elements:
            raise PlacementError(f"placement has no entry for element {spec.name!r}")
        pe = placement.elements[spec.name]
        if not all(map(math.isfinite, (pe.x, pe.y, pe.angle))):
            raise PlacementError(f"{spec.name}: non-finite position or angle")
        if spec.is_subsystem:
            if not pe.clusters:
                raise PlacementError(f"{spec.name}: subsystem placed without clusters")
            for c in pe.clusters:
                if c.n_w < 1 or c.n_h < 1:
                    raise PlacementError(f"{spec.name}: cluster grid {c.n_w}x{c.n_h} is not positive")
                if scheme is not None and not _on_grid(c.angle, scheme.angles):
                    raise PlacementError(f"{spec.name}: cluster angle {c.angle} is not a discretised angle")
        elif spec.shape == "rect" and not spec.fixed and scheme is not None and not _on_grid(pe.angle, scheme.angles):
            raise PlacementError(f"{spec.name}: angle {pe.angle} is not a discretised angle")


def _on_grid(angle: float, angles: list[float]) -> bool:
    return any(abs((angle - a + 90.0) % 180.0 - 90.0) < 1e-6 for a in angles)


def _components(n: int, edges: list[tuple[int, int]]) -> int:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(i) for i in range(n)})


def verify(
    placement: Placement,
    topology: Topology,
    space: DesignSpace,
    vehicle: VehicleParams,
    ideal: tuple[float, float],
    tolerances: Tolerances | None = None,
    *,
    scheme: AngleScheme | None = None,
    l_n: float = 1.0,
    l_n_mm: float = 1.0,
    mm_box: tuple[float, float, float, float] | None = None,
    reported_objective: float | None = None,
) -> VerificationReport:
    tol = tolerances or Tolerances()
    _check_structure(placement, topology, scheme)
    cats = {c: True for c in CATEGORIES}
    out: list[Violation] = []
    warnings: list[str] = []

    def fail(cat: str, items: list[str], mag: float, detail: str = "") -> None:
        cats[cat] = False
        out.append(Violation(cat, items, float(mag), detail))

    shapes = element_shapes(placement, topology)
    # (1) inside the design space; fixed elements are exempt
    for label, spec, shape in shapes:
        if spec.fixed:
            continue
        protrusion = space.contains_shape(shape)
        if protrusion > tol.geo:
            fail("bounds", [label], protrusion, "outside the design space")
    # (2) pairwise separation, exact geometry
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            la, sa, a = shapes[i]
            lb, sb, b = shapes[j]
            if sa.fixed and sb.fixed:
                continue
            depth = penetration(a, b)
            if depth > tol.geo:
                fail("overlap", [la, lb], depth, "penetration depth")
    # (3)-(5) subsystem structure
    graphs = {}
    for spec in topology.existing:
        if not spec.is_subsystem:
            continue
        pe = placement.elements[spec.name]
        rects = [Rect(c.n_w * spec.sub_width, c.n_h * spec.sub_height, c.x, c.y, c.angle) for c in pe.clusters]
        labels = [f"{spec.name}.c{k + 1}" for k in range(len(rects))]
        edges = []
        for a in range(len(rects)):
            for b in range(a + 1, len(rects)):
                ok, _, _ = abutment(rects[a], rects[b], tol.eps, tol.geo)
                if ok:
                    edges.append((a, b))
        graphs[spec.name] = {"nodes": len(rects), "edges": [[labels[a], labels[b]] for a, b in edges]}
        if len(rects) > 1:
            touched = {k for e in edges for k in e}
            for k in range(len(rects)):
                if k not in touched:
                    gaps = [abutment(rects[k], rects[o], tol.eps, tol.geo)[1] for o in range(len(rects)) if o != k]
                    fail("contiguity", [labels[k]], min(abs(g) for g in gaps), "cluster abuts no other cluster")
            parts = _components(len(rects), edges)
            if parts > 1:  # reported only, never a failure
                warnings.append(f"{spec.name}: abutment graph has {parts} components")
        modules = sum(c.n_w * c.n_h for c in pe.clusters)
        mass = modules * spec.sub_mass
        if abs(mass - spec.mass) > tol.mass_rel * spec.mass:
            fail("mass", [spec.name], abs(mass - spec.mass), f"{modules} modules weigh {mass:g} kg, expected {spec.mass:g} kg")
        for a in range(len(pe.clusters)):
            for b in range(a + 1, len(pe.clusters)):
                rel = (pe.clusters[b].angle - pe.clusters[a].angle) % 90.0
                off = min(rel, 90.0 - rel)
                if off > 1e-6:
                    fail("orientation", [labels[a], labels[b]], off, "cluster angles neither equal nor 90 degrees apart")
    # (6) objective
    value = objective_of(placement, topology, vehicle, ideal, l_n, l_n_mm)
    if reported_objective is not None:
        err = abs(value - reported_objective)
        if err > tol.objective_rel * max(1.0, abs(value)):
            fail("objective", ["objective"], err, f"recomputed {value:.10g}, reported {reported_objective:.10g}")
    # (7) mounted-motor box
    mm = [s for s in topology.existing if s.type == "MM"]
    if mm and mm_box is not None:
        pe = placement.elements[mm[0].name]
        x0, x1, y0, y1 = mm_box
        excess = max(x0 - pe.x, pe.x - x1, y0 - pe.y, pe.y - y1)
        if excess > tol.geo:
            fail("mm_box", [mm[0].name], excess, "motor centre outside its box")
    return VerificationReport(
        cats,
        out,
        warnings,
        value,
        reported_objective,
        overall_cog(placement, topology, vehicle),
        graphs,
    )
