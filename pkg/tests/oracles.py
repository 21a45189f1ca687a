"""Independent reference computations shared by the test modules."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from motoplace.builder import BuildOptions, assemble
from motoplace.cog_region import VehicleParams
from motoplace.geometry import AngleScheme, Circle, DesignSpace, Rect
from motoplace.model import MiqpModel
from motoplace.topology import ElementSpec, Topology

BIG_SPACE = DesignSpace(-3.0, 3.0, -3.0, 3.0)
LIGHT_VEHICLE = VehicleParams(1.4, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


def milp_feasible(model: MiqpModel, fixed: dict[str, float]) -> bool:
    """Feasibility of ``model``'s constraints with ``fixed`` variables pinned, by a plain MILP solve."""
    a, lo, hi = model.matrices
    lb, ub = (arr.copy() for arr in model.bounds)
    for name, value in fixed.items():
        i = model.var_index[name]
        lb[i] = ub[i] = value
    integrality = np.zeros(model.n_vars)
    integrality[model.binary_indices] = 1
    res = milp(
        np.zeros(model.n_vars),
        constraints=LinearConstraint(a, lo, hi),
        integrality=integrality,
        bounds=Bounds(lb, ub),
        options={"presolve": True},
    )
    if res.status not in (0, 2):
        raise RuntimeError(f"MILP solve failed: {res.message}")
    return res.status == 0


def shape_spec(name: str, shape: Rect | Circle) -> ElementSpec:
    if isinstance(shape, Rect):
        return ElementSpec(name, "INV", 1.0, "rect", width=shape.w, height=shape.h)
    return ElementSpec(name, "GT", 1.0, "circle", radius=shape.r)


def pair_model(a: Rect | Circle, b: Rect | Circle, scheme: AngleScheme = AngleScheme(4, 3)) -> MiqpModel:
    """Model with two free elements shaped like ``a`` and ``b`` in a large design space."""
    topo = Topology("pair", [shape_spec("A", a), shape_spec("B", b)])
    return assemble(topo, BIG_SPACE, scheme, LIGHT_VEHICLE, (0.0, 0.0), BuildOptions())


def pair_fixings(model: MiqpModel, a: Rect | Circle, b: Rect | Circle, scheme: AngleScheme) -> dict[str, float]:
    out = {}
    for name, s in (("A", a), ("B", b)):
        out[f"x_{name}"], out[f"y_{name}"] = s.x, s.y
        if isinstance(s, Rect):
            for k, t in enumerate(scheme.angles):
                out[f"{name}_ang{k}"] = float(math.isclose(t, s.theta))
    return out


# -- leaf enumeration for small MIQPs ---------------------------------------------


def leaf_enumeration(model: MiqpModel) -> float:
    """Optimum of ``model`` by solving the convex QP of every binary assignment.

    The QP leaves are solved with cvxpy (Clarabel), independent of the solver
    under test. Returns ``inf`` when no leaf is feasible.
    """
    import cvxpy as cp

    a, lo, hi = model.matrices
    lb, ub = model.bounds
    bins = list(model.binary_indices)
    q = model.objective.hessian(model.n_vars).toarray()
    g = model.objective.gradient_vector(model.n_vars)
    x = cp.Variable(model.n_vars)
    fix_lo = cp.Parameter(model.n_vars)
    fix_hi = cp.Parameter(model.n_vars)
    cons = [x >= fix_lo, x <= fix_hi]
    fin_lo, fin_hi = np.isfinite(lo), np.isfinite(hi)
    if fin_lo.any():
        cons.append(a[fin_lo] @ x >= lo[fin_lo])
    if fin_hi.any():
        cons.append(a[fin_hi] @ x <= hi[fin_hi])
    q = 0.5 * (q + q.T)
    prob = cp.Problem(cp.Minimize(0.5 * cp.quad_form(x, cp.psd_wrap(q)) + g @ x), cons)
    best = math.inf
    for combo in itertools.product((0.0, 1.0), repeat=len(bins)):
        l, u = lb.copy(), ub.copy()
        l[bins] = combo
        u[bins] = combo
        fix_lo.value, fix_hi.value = l, u
        prob.solve(solver=cp.CLARABEL)
        if prob.status in ("optimal", "optimal_inaccurate"):
            best = min(best, prob.value + model.objective.constant)
    return best


# -- random placements ---------------------------------------------------------------


def random_placement(topology: Topology, space: DesignSpace, scheme: AngleScheme, rng, mm_box=None):
    """Uniformly scattered placement with one cluster per subsystem (not necessarily feasible)."""
    from motoplace.topology import PlacedCluster, PlacedElement, Placement, fixed_placement

    elements = {}
    for spec in topology.existing:
        if spec.fixed:
            elements[spec.name] = fixed_placement(spec)
            continue
        box = mm_box if spec.type == "MM" and mm_box is not None else (space.x_min, space.x_max, space.y_min, space.y_max)
        x, y = rng.uniform(box[0], box[1]), rng.uniform(box[2], box[3])
        angle = float(rng.choice(scheme.angles)) if spec.shape == "rect" else 0.0
        if spec.is_subsystem:
            # the longest single column of the modules; square modules make the transpose redundant
            cluster = PlacedCluster(1, spec.n_sub, x, y, angle)
            elements[spec.name] = PlacedElement(spec.name, x, y, 0.0, [cluster])
        else:
            elements[spec.name] = PlacedElement(spec.name, x, y, angle)
    return Placement(elements)


def circle_conservative(placement, topology: Topology, scheme: AngleScheme) -> bool:
    """True when some pair involving a circle is separated but fails the discretised test."""
    from motoplace.geometry import (
        circles_separated,
        circles_separated_discrete,
        rect_circle_separated,
        rect_circle_separated_discrete,
    )
    from motoplace.topology import element_shapes

    shapes = element_shapes(placement, topology)
    projected = scheme.projected_angles
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            (_, sa, a), (_, sb, b) = shapes[i], shapes[j]
            if sa.fixed and sb.fixed:
                continue
            if isinstance(a, Circle) and isinstance(b, Circle):
                if circles_separated(a, b) and not circles_separated_discrete(a, b, projected):
                    return True
            elif isinstance(a, Circle) or isinstance(b, Circle):
                d, z = (a, b) if isinstance(a, Rect) else (b, a)
                if rect_circle_separated(d, z) and not rect_circle_separated_discrete(d, z, projected):
                    return True
    return False


# -- generated MIQPs ----------------------------------------------------------------------


def random_miqp(rng, n_bin: int, n_cont: int, n_rows: int, name: str = "rand") -> MiqpModel:
    """Random convex MIQP that is feasible at a hidden point.

    Rows mix binaries and continuous variables with big-M-like coefficients and
    are made valid at a random integral point, so the instance is never empty.
    """
    from motoplace.linearize import LinConstraint, VarTable
    from motoplace.model import QuadObjective

    t = VarTable()
    bins = [t.binary(f"d{i}") for i in range(n_bin)]
    conts = [t.continuous(f"x{j}", -2.0, 2.0) for j in range(n_cont)]
    d0 = rng.integers(0, 2, n_bin).astype(float)
    x0 = rng.uniform(-2, 2, n_cont)
    z0 = np.concatenate([d0, x0])
    for r in range(n_rows):
        coef = np.zeros(n_bin + n_cont)
        picks = rng.choice(n_bin + n_cont, size=min(3, n_bin + n_cont), replace=False)
        coef[picks] = rng.normal(0, 1, len(picks)) * np.where(picks < n_bin, 3.0, 1.0)
        rhs = float(coef @ z0 + rng.uniform(0, 0.5))
        t.add(LinConstraint({int(i): float(coef[i]) for i in picks}, "<=", rhs), f"r{r}")
    if n_bin >= 3:
        t.add(LinConstraint({bins[0].index: 1.0, bins[1].index: 1.0, bins[2].index: 1.0}, ">=", 1.0), "cover")
        if d0[:3].sum() == 0:  # keep the hidden point feasible
            t.constraints.pop()
    obj = QuadObjective()
    b = rng.normal(0, 1, (n_cont, n_cont))
    q = b @ b.T / n_cont + 0.1 * np.eye(n_cont)
    for i in range(n_cont):
        for j in range(i, n_cont):
            val = q[i, i] if i == j else 2 * q[i, j]
            obj.quad[(conts[i].index, conts[j].index)] = float(val) / 2
    for i in range(n_cont):
        obj.linear[conts[i].index] = float(rng.normal(0, 1))
    for d in bins:
        obj.linear[d.index] = float(rng.normal(0, 0.5))
    obj.constant = 1.0
    return MiqpModel(name, list(t.vars), list(t.constraints), obj)


def line_blocks(lengths: list[float], masses: list[float], segment: float, target: float) -> MiqpModel:
    """Blocks on a segment ``[0, segment]`` that may not overlap; pull their CoG to ``target``."""
    from motoplace.linearize import VarTable, abs_disjunction
    from motoplace.model import QuadObjective

    t = VarTable()
    xs = [t.continuous(f"x{i}", l / 2, segment - l / 2) for i, l in enumerate(lengths)]
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            _, suc, _ = abs_disjunction(t, xs[j] - xs[i], (lengths[i] + lengths[j]) / 2, f"sep{i}{j}")
            t.add(suc >= 1, f"sep{i}{j}_any")
    total = sum(masses)
    cog = t.continuous("cog", 0.0, segment)
    expr = sum((m / total) * x for m, x in zip(masses, xs))
    t.add((cog - expr).equals(0.0), "cog")
    obj = QuadObjective()
    obj.add_square(cog.index, target, 1.0)
    return MiqpModel("line", list(t.vars), list(t.constraints), obj)


# -- L-shaped corridor: one cluster against two ------------------------------------


CORRIDOR_SPACE = DesignSpace(0.0, 0.5, 0.0, 0.5)
CORRIDOR_IDEAL = (0.05, 0.05)
CORRIDOR_MODULE = 0.1
CORRIDOR_MODULE_MASS = 10.0
CORRIDOR_BLOCK = ElementSpec("BLK", "INV", 1.0, "rect", width=0.4, height=0.4, fixed=True, x=0.3, y=0.3, angle=0.0)


def corridor_topology() -> Topology:
    """Three square modules that must fit the free L left of and below a fixed block."""
    m = CORRIDOR_MODULE
    bp = ElementSpec("BP", "BP", 3 * CORRIDOR_MODULE_MASS, "rect", n_sub=3, sub_width=m, sub_height=m, sub_mass=CORRIDOR_MODULE_MASS)
    return Topology("corridor", [bp, CORRIDOR_BLOCK])


def _polygon(w: float, h: float, x: float, y: float, theta: float):
    import shapely

    c, s = math.cos(math.radians(theta)), math.sin(math.radians(theta))
    pts = [(x + c * u - s * v, y + s * u + c * v) for u, v in ((-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2))]
    return shapely.Polygon(pts)


def _corridor_cost(points: list[tuple[float, float, float]]) -> float:
    """Objective for (mass, x, y) point masses plus the block, chassis and rider."""
    v = LIGHT_VEHICLE
    b = CORRIDOR_BLOCK
    masses = points + [(b.mass, b.x, b.y), (v.chassis_mass, v.chassis_x, v.chassis_y), (v.rider_mass, v.rider_x, v.rider_y)]
    total = sum(m for m, _, _ in masses)
    cx = sum(m * x for m, x, _ in masses) / total
    cy = sum(m * y for m, _, y in masses) / total
    return (cx - CORRIDOR_IDEAL[0]) ** 2 + (cy - CORRIDOR_IDEAL[1]) ** 2


def _corridor_poses(n_w: int, n_h: int, step: float, angles) -> list:
    """Every lattice pose of an ``n_w`` x ``n_h`` cluster inside the space and clear of the block."""
    import shapely

    space = shapely.box(0.0, 0.0, 0.5, 0.5).buffer(1e-9)
    block = shapely.box(0.1, 0.1, 0.5, 0.5)
    w, h = n_w * CORRIDOR_MODULE, n_h * CORRIDOR_MODULE
    grid = np.round(np.arange(0.0, 0.5 + step / 2, step), 10)
    out = []
    for theta in angles:
        for x in grid:
            for y in grid:
                p = _polygon(w, h, float(x), float(y), theta)
                if space.contains(p) and p.intersection(block).area <= 1e-12:
                    out.append((float(x), float(y), theta, p))
    return out


def corridor_optima(step: float = 0.005, eps: float = 1e-3, angles=(0.0, 45.0, 90.0, 135.0)) -> tuple[float, float]:
    """Best objective with one cluster of three modules, and with a 1 + 2 split, over a lattice of poses.

    Poses are checked with shapely. Two clusters count as joined when their
    boundaries share at least ``eps`` of length and their interiors do not
    overlap. Lattice optima are upper bounds on the continuous optima; the
    corner-packed optima of this instance lie on the lattice.
    """
    m = CORRIDOR_MODULE_MASS
    one = min(_corridor_cost([(3 * m, x, y)]) for x, y, _, _ in _corridor_poses(1, 3, step, angles))
    pairs = _corridor_poses(1, 2, step, angles)
    singles = _corridor_poses(1, 1, step, angles)
    two = math.inf
    for ax, ay, _, pa in pairs:
        near = pa.buffer(1e-9)
        for bx, by, _, pb in singles:
            if abs(ax - bx) > 0.16 or abs(ay - by) > 0.16:
                continue
            if pa.intersection(pb).area > 1e-12:
                continue
            if pb.boundary.intersection(near).length < eps - 1e-9:
                continue
            two = min(two, _corridor_cost([(2 * m, ax, ay), (m, bx, by)]))
    return one, two
