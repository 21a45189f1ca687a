"""Assembly of the placement MIQP.

Every existing element becomes one or more *objects*: a component is one
rectangle or circle, a subsystem is ``n_com`` rectangular clusters of its
sub-modules. Each free object has a centre, a one-hot angle choice (rectangles)
and, for clusters, a one-hot arrangement choice. Pairs of objects get
separating-axis disjunctions; clusters of one subsystem additionally get mass
equivalence, orientation coupling and contiguity constraints. The objective
pulls the overall centre of gravity towards the ideal point and, when present,
the mounted motor towards the rear wheel.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field

import numpy as np

from motoplace.cog_region import VehicleParams
from motoplace.geometry import AngleScheme, DesignSpace, Rect, distinct_axes
from motoplace.geometry import abutment as rect_abutment
from motoplace.linearize import (
    LinExpr,
    VarRef,
    VarTable,
    abs_cosd,
    abs_disjunction,
    abs_sind,
    and_binary,
    continuous_times_selected,
    continuous_times_trig,
    cosd,
    sind,
    size_big_m,
)
from motoplace.model import MiqpModel, QuadObjective
from motoplace.topology import (
    Arrangement,
    ElementSpec,
    PlacedCluster,
    PlacedElement,
    Placement,
    Topology,
    enumerate_arrangements,
)

__all__ = ["BuildError", "BuildOptions", "ModelBuilder", "assemble", "enumerate_arrangements"]


class BuildError(ValueError):
    """Model cannot be built; ``diagnostic`` says why in machine-readable form."""

    def __init__(self, message: str, **diagnostic):
        super().__init__(message)
        self.diagnostic = {"message": message, **diagnostic}


@dataclass
class BuildOptions:
    n_com: dict[str, int] = field(default_factory=dict)
    l_n: float = 1.0
    l_n_mm: float = 1.0
    mm_box: tuple[float, float, float, float] | None = None  # x_lo, x_hi, y_lo, y_hi
    eps: float = 1e-3
    symmetry_breaking: bool = True


@dataclass
class ModelObject:
    label: str
    spec: ElementSpec
    cluster: int | None
    shape: str
    fixed: bool
    x: LinExpr
    y: LinExpr
    w: LinExpr = field(default_factory=LinExpr)
    h: LinExpr = field(default_factory=LinExpr)
    r: float = 0.0
    angles: list[tuple[VarRef | None, float]] = field(default_factory=list)
    arrangements: list[tuple[VarRef | None, Arrangement]] = field(default_factory=list)
    x_var: VarRef | None = None
    y_var: VarRef | None = None
    reach: float = 0.0  # circumradius bound over all choices

    @property
    def is_rect(self) -> bool:
        return self.shape == "rect"

    @property
    def fixed_angle(self) -> bool:
        return len(self.angles) == 1 and self.angles[0][0] is None


def _dec(d: VarRef | None) -> LinExpr:
    return LinExpr(constant=1.0) if d is None else LinExpr.of(d)


def _subset_sum_table(sizes: list[int], parts: int, total: int) -> list[set[int]]:
    """``reach[c]`` holds the module totals reachable with exactly ``c`` clusters."""
    reach = [{0}]
    for _ in range(parts):
        reach.append({s + n for s in reach[-1] for n in sizes if s + n <= total})
    return reach


class ModelBuilder:
    def __init__(
        self,
        topology: Topology,
        space: DesignSpace,
        scheme: AngleScheme,
        vehicle: VehicleParams,
        ideal: tuple[float, float],
        options: BuildOptions | None = None,
    ):
        self.topology = topology
        self.space = space
        self.scheme = scheme
        self.vehicle = vehicle
        self.ideal = (float(ideal[0]), float(ideal[1]))
        self.options = options or BuildOptions()
        self.table = VarTable()
        self.objects: list[ModelObject] = []
        self.subsystems: dict[str, list[ModelObject]] = {}
        self._pair: dict[tuple[int, int], dict] = {}
        self.joins: list[dict] = []
        self.cog_vars: tuple[VarRef, VarRef] | None = None

    # objects -----------------------------------------------------------------
    def _angle_choices(self, name: str) -> list[tuple[VarRef | None, float]]:
        decisions = [(self.table.binary(f"{name}_ang{k}"), a) for k, a in enumerate(self.scheme.angles)]
        self.table.add(LinExpr.sum(d for d, _ in decisions).equals(1), f"{name}_ang_onehot")
        return decisions

    def _check_fits(self, name: str, sizes: list[tuple[float, float]]) -> None:
        """Raise unless some size fits the design space at some allowed angle."""
        s = self.space
        for w, h in sizes:
            for theta in self.scheme.angles:
                c, sn = abs_cosd(theta), abs_sind(theta)
                if w * c + h * sn <= s.x_max - s.x_min + 1e-12 and w * sn + h * c <= s.y_max - s.y_min + 1e-12:
                    return
        raise BuildError(f"{name} does not fit inside the design space at any allowed angle", object=name)

    def _center(self, name: str, ex_min: float, ey_min: float) -> tuple[VarRef, VarRef]:
        s = self.space
        x_lo, x_hi = s.x_min + ex_min, s.x_max - ex_min
        y_lo, y_hi = s.y_min + ey_min, s.y_max - ey_min
        if x_lo > x_hi + 1e-12 or y_lo > y_hi + 1e-12:
            raise BuildError(f"{name} does not fit inside the design space", object=name)
        return self.table.continuous(f"x_{name}", x_lo, x_hi), self.table.continuous(f"y_{name}", y_lo, y_hi)

    def add_component(self, spec: ElementSpec) -> ModelObject:
        name = spec.name
        if spec.fixed:
            obj = ModelObject(name, spec, None, spec.shape, True, LinExpr(constant=spec.x), LinExpr(constant=spec.y))
            if spec.shape == "rect":
                obj.w, obj.h = LinExpr(constant=spec.width), LinExpr(constant=spec.height)
                obj.angles = [(None, spec.angle)]
                obj.reach = math.hypot(spec.width, spec.height) / 2
            else:
                obj.r = obj.reach = spec.radius
            self.objects.append(obj)
            return obj
        if spec.shape == "circle":
            xv, yv = self._center(name, spec.radius, spec.radius)
            obj = ModelObject(name, spec, None, "circle", False, LinExpr.of(xv), LinExpr.of(yv), r=spec.radius)
            obj.reach = spec.radius
        else:
            half_min = min(spec.width, spec.height) / 2
            xv, yv = self._center(name, half_min, half_min)
            self._check_fits(name, [(spec.width, spec.height)])
            obj = ModelObject(name, spec, None, "rect", False, LinExpr.of(xv), LinExpr.of(yv))
            obj.w, obj.h = LinExpr(constant=spec.width), LinExpr(constant=spec.height)
            obj.angles = self._angle_choices(name)
            obj.reach = math.hypot(spec.width, spec.height) / 2
        obj.x_var, obj.y_var = xv, yv
        if spec.type == "MM" and self.options.mm_box is not None:
            bx0, bx1, by0, by1 = self.options.mm_box
            obj.x_var = self.table.tighten(xv, bx0, bx1)
            obj.y_var = self.table.tighten(yv, by0, by1)
        self.objects.append(obj)
        self._containment(obj)
        return obj

    def _containment(self, obj: ModelObject) -> None:
        """Keep the whole rotated footprint inside the design space."""
        if obj.shape == "circle" or obj.fixed:
            return  # circle centre bounds already include the radius
        name = obj.label
        ex = self._dim_times_angle(obj.w, obj, abs_cosd, f"{name}_wc") + self._dim_times_angle(obj.h, obj, abs_sind, f"{name}_hs")
        ey = self._dim_times_angle(obj.w, obj, abs_sind, f"{name}_ws") + self._dim_times_angle(obj.h, obj, abs_cosd, f"{name}_hc")
        s = self.space
        self.table.add(obj.x - 0.5 * ex >= s.x_min, f"{name}_in_xlo")
        self.table.add(obj.x + 0.5 * ex <= s.x_max, f"{name}_in_xhi")
        self.table.add(obj.y - 0.5 * ey >= s.y_min, f"{name}_in_ylo")
        self.table.add(obj.y + 0.5 * ey <= s.y_max, f"{name}_in_yhi")

    def _dim_times_angle(self, dim: LinExpr, obj: ModelObject, fn, name: str) -> LinExpr:
        if dim.is_constant:
            return LinExpr.sum(_dec(d) * (dim.constant * fn(a)) for d, a in obj.angles)
        return continuous_times_trig(self.table, dim, [_dec(d) for d, _ in obj.angles], [a for _, a in obj.angles], fn, name)[0]

    # clusters ----------------------------------------------------------------
    def build_cluster_constraints(self, spec: ElementSpec, n_com: int) -> list[ModelObject]:
        """Clusters of one subsystem with selection, mass, orientation and contiguity constraints."""
        if not 1 <= n_com <= spec.n_sub:
            raise BuildError(
                f"{spec.name}: number of clusters must lie in [1, {spec.n_sub}], got {n_com}",
                element=spec.name,
                n_com=n_com,
                n_sub=spec.n_sub,
            )
        if abs(spec.n_sub * spec.sub_mass - spec.mass) > 1e-9 * spec.mass:
            raise BuildError(
                f"{spec.name}: cluster masses can only sum to {spec.n_sub * spec.sub_mass} kg, "
                f"not the subsystem mass {spec.mass} kg",
                element=spec.name,
            )
        arrs = enumerate_arrangements(spec, self.space)
        if spec.sub_width == spec.sub_height:
            # transposed grid of square modules equals the original turned by 90 degrees
            arrs = [a for a in arrs if a.n_w <= a.n_h]
        sizes = sorted({a.n_b for a in arrs})
        reach = _subset_sum_table(sizes, n_com, spec.n_sub)
        if spec.n_sub not in reach[n_com]:
            raise BuildError(
                f"{spec.name}: no {n_com} arrangements add up to {spec.n_sub} modules",
                element=spec.name,
                n_com=n_com,
            )
        arrs = [a for a in arrs if spec.n_sub - a.n_b in reach[n_com - 1]]
        clusters = []
        count_terms = []
        for i in range(n_com):
            label = f"{spec.name}_c{i + 1}"
            if len(arrs) == 1:
                sel = [(None, arrs[0])]
            else:
                sel = [(self.table.binary(f"{label}_arr{a.n_w}x{a.n_h}"), a) for a in arrs]
                self.table.add(LinExpr.sum(d for d, _ in sel).equals(1), f"{label}_arr_onehot")
            w = LinExpr.sum(_dec(d) * a.w for d, a in sel)
            h = LinExpr.sum(_dec(d) * a.h for d, a in sel)
            count_terms.append(LinExpr.sum(_dec(d) * a.n_b for d, a in sel))
            half_min = min(min(a.w, a.h) for a in arrs) / 2
            xv, yv = self._center(label, half_min, half_min)
            obj = ModelObject(label, spec, i, "rect", False, LinExpr.of(xv), LinExpr.of(yv), w=w, h=h)
            obj.angles = self._angle_choices(label)
            obj.arrangements = sel
            obj.x_var, obj.y_var = xv, yv
            obj.reach = max(math.hypot(a.w, a.h) for a in arrs) / 2
            self.objects.append(obj)
            self._containment(obj)
            clusters.append(obj)
        # mass equivalence, in module counts (cluster mass = n_b * sub_mass)
        self.table.add(LinExpr.sum(count_terms).equals(spec.n_sub), f"{spec.name}_mass_equiv")
        for i in range(n_com):
            for j in range(i + 1, n_com):
                self._orientation_coupling(clusters[i], clusters[j])
        for i in range(1, n_com):
            self._contiguity_chain(clusters, i)
        if self.options.symmetry_breaking:
            for i in range(1, n_com):
                self.table.add(clusters[0].x <= clusters[i].x, f"{spec.name}_leftmost_c{i + 1}")
            for obj in clusters:
                self._square_turn_cut(obj)
        self.subsystems[spec.name] = clusters
        return clusters

    def _orientation_coupling(self, d: ModelObject, z: ModelObject) -> VarRef:
        n_a = self.scheme.n_a
        for k in range(n_a):
            kp = self.scheme.perpendicular(k)
            self.table.add(
                LinExpr.of(d.angles[k][0]) <= LinExpr.of(z.angles[k][0]) + z.angles[kp][0],
                f"orient_{d.label}_{z.label}_{k}",
            )
        # sum_k (d_k - z_k)^2 = 2 - 2 * sum_k (d_k AND z_k) under one-hot angles
        same = self.relative_angles(d, z).get(0.0, LinExpr())
        delta_o = self.table.binary(f"same_{d.label}_{z.label}", implied=True)
        sq = 2 - 2 * same
        self.table.add(1 - delta_o <= sq, f"same_{d.label}_{z.label}_lo")
        self.table.add(sq <= 2 * (1 - delta_o), f"same_{d.label}_{z.label}_hi")
        self.table.define(delta_o, lambda v, s=same: float(round(s.value(v))))
        self._pair_data(d, z)["delta_o"] = delta_o
        return delta_o

    def _square_turn_cut(self, obj: ModelObject) -> None:
        """A square cluster turned by 90 degrees is the same shape, so keep angles below 90."""
        square = [d for d, a in obj.arrangements if _is_square(a)]
        if not square:
            return
        for d, theta in obj.angles:
            if theta >= 90.0 - 1e-9:
                lhs = LinExpr.of(d) + (1 if square == [None] else LinExpr.sum(square))
                self.table.add(lhs <= 1, f"{obj.label}_square_turn_{theta:g}")

    def _contiguity_chain(self, clusters: list[ModelObject], i: int) -> None:
        z = clusters[i]
        if i == 1:
            self._contiguity(clusters[0], z, None)
            return
        adj = []
        for j in range(i):
            # projections first, so their recipes run before the indicator's
            self._proj(clusters[j], z, clusters[j], "u1"), self._proj(clusters[j], z, clusters[j], "u2")
            ind = self.table.binary(f"adj_{clusters[j].label}_{z.label}")
            self._contiguity(clusters[j], z, ind)
            adj.append(ind)
        self.table.add(LinExpr.sum(adj) >= 1, f"{z.label}_joined")

    def _contiguity(self, d: ModelObject, z: ModelObject, adj: VarRef | None) -> None:
        """Relative-position constraints that make ``z`` abut ``d`` (when ``adj`` is on)."""
        eps = self.options.eps
        pair = self._pair_data(d, z)
        delta_o = pair["delta_o"]
        p1, p2 = self._proj(d, z, d, "u1"), self._proj(d, z, d, "u2")
        side = self.table.binary(f"side_{d.label}_{z.label}")
        off_adj = LinExpr() if adj is None else 1 - LinExpr.of(adj)
        cases = (
            ("same", 1 - LinExpr.of(delta_o), z.w, z.h),
            ("perp", LinExpr.of(delta_o), z.h, z.w),
        )
        for tag, deact, l1, l2 in cases:
            along1 = 0.5 * (d.w + l1) - eps * (1 - side)
            along2 = 0.5 * (d.h + l2) - eps * side
            for axis, proj, limit in (("1", p1, along1), ("2", p2, along2)):
                for sign in (1.0, -1.0):
                    expr = sign * proj - limit
                    m = size_big_m(self.table, expr)
                    self.table.add(
                        expr <= m * deact + m * off_adj,
                        f"join_{d.label}_{z.label}_{tag}{axis}{'p' if sign > 0 else 'n'}",
                    )
        info = {"d": d, "z": z, "p1": p1, "p2": p2, "delta_o": delta_o}
        self.joins.append(info)

        def _limits(v):
            same = round(v[delta_o.index]) == 1
            l1 = (z.w if same else z.h).value(v)
            l2 = (z.h if same else z.w).value(v)
            return abs(p1.value(v)), abs(p2.value(v)), 0.5 * (d.w.value(v) + l1), 0.5 * (d.h.value(v) + l2)

        def side_recipe(v):
            a1, a2, r1, r2 = _limits(v)
            return float(a1 <= r1 + 1e-9 and a2 <= r2 - eps + 1e-9)

        self.table.define(side, side_recipe)
        if adj is not None:

            def adj_recipe(v):
                a1, a2, r1, r2 = _limits(v)
                ok1 = a1 <= r1 + 1e-9 and a2 <= r2 - eps + 1e-9
                ok0 = a1 <= r1 - eps + 1e-9 and a2 <= r2 + 1e-9
                return float(ok0 or ok1)

            self.table.define(adj, adj_recipe)

    # pairwise separation -------------------------------------------------------
    def _pair_data(self, a: ModelObject, b: ModelObject) -> dict:
        key = (id(a), id(b))
        if key not in self._pair:
            self._pair[key] = {"dx": b.x - a.x, "dy": b.y - a.y, "proj": {}, "dims": {}}
        return self._pair[key]

    def _times_angle(self, x: LinExpr, obj: ModelObject, fn, name: str) -> LinExpr:
        if obj.fixed_angle:
            return x * fn(obj.angles[0][1])
        if x.is_constant:
            return LinExpr.sum(_dec(d) * (x.constant * fn(t)) for d, t in obj.angles)
        return continuous_times_trig(self.table, x, [d for d, _ in obj.angles], [t for _, t in obj.angles], fn, name)[0]

    def _proj(self, a: ModelObject, b: ModelObject, owner: ModelObject, axis: str) -> LinExpr:
        """Centre vector from ``a`` to ``b`` projected on an axis of ``owner``."""
        pair = self._pair_data(a, b)
        key = (owner.label, axis)
        if key not in pair["proj"]:
            prefix = f"p_{a.label}_{b.label}_{owner.label}"
            terms = pair.setdefault("trig", {})

            def prod(which: str, fn):
                if (owner.label, which) not in terms:
                    src = pair["dx"] if which[0] == "x" else pair["dy"]
                    terms[(owner.label, which)] = self._times_angle(src, owner, fn, f"{prefix}_{which}")
                return terms[(owner.label, which)]

            if axis == "u1":
                pair["proj"][key] = prod("xc", cosd) + prod("ys", sind)
            else:
                pair["proj"][key] = prod("yc", cosd) - prod("xs", sind)
        return pair["proj"][key]

    def relative_angles(self, a: ModelObject, b: ModelObject) -> dict[float, LinExpr]:
        """One-hot selection over the relative angle ``(theta_b - theta_a) mod 180``."""
        pair = self._pair_data(a, b)
        if "rel" not in pair:
            groups: dict[float, LinExpr] = defaultdict(LinExpr)
            for k, (da, ta) in enumerate(a.angles):
                for l, (db, tb) in enumerate(b.angles):
                    rel = round((tb - ta) % 180.0, 9) % 180.0
                    if da is None and db is None:
                        term = LinExpr(constant=1.0)
                    elif da is None:
                        term = LinExpr.of(db)
                    elif db is None:
                        term = LinExpr.of(da)
                    else:
                        term = LinExpr.of(and_binary(self.table, da, db, f"and_{a.label}_{b.label}_{k}_{l}")[0])
                    groups[rel] = groups[rel] + term
            pair["rel"] = dict(sorted(groups.items()))
        return pair["rel"]

    def _dim_rel(self, a: ModelObject, b: ModelObject, obj: ModelObject, dim: str, fn) -> LinExpr:
        """``dim(obj) * fn(relative angle)`` for the pair ``(a, b)``."""
        pair = self._pair_data(a, b)
        key = (obj.label, dim, fn.__name__)
        if key not in pair["dims"]:
            rel = self.relative_angles(a, b)
            value = obj.w if dim == "w" else obj.h
            if value.is_constant:
                out = LinExpr.sum(d * (value.constant * fn(t)) for t, d in rel.items())
            else:
                out = continuous_times_selected(
                    self.table,
                    value,
                    list(rel.values()),
                    [fn(t) for t in rel],
                    f"s_{a.label}_{b.label}_{obj.label}_{dim}{fn.__name__[4:7]}",
                )[0]
            pair["dims"][key] = out
        return pair["dims"][key]

    def _disjunction(self, name: str, conditions: list[tuple[LinExpr, LinExpr]]) -> list[VarRef]:
        sucs = []
        for i, (lhs, rhs) in enumerate(conditions, start=1):
            _, suc, _ = abs_disjunction(self.table, lhs, rhs, f"{name}_{i}")
            sucs.append(suc)
        self.table.add(LinExpr.sum(sucs) >= 1, f"{name}_any")
        return sucs

    def _may_overlap(self, a: ModelObject, b: ModelObject) -> bool:
        def box(o: ModelObject):
            (xl, xh), (yl, yh) = self.table.bounds(o.x), self.table.bounds(o.y)
            return xl - o.reach, xh + o.reach, yl - o.reach, yh + o.reach

        ax0, ax1, ay0, ay1 = box(a)
        bx0, bx1, by0, by1 = box(b)
        return ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1

    def build_overlap_constraints(self, a: ModelObject, b: ModelObject) -> list[VarRef] | None:
        """Separating-axis disjunction for one pair; ``None`` when the pair can never touch."""
        if a.fixed and b.fixed:
            return None
        if not self._may_overlap(a, b):
            return None
        name = f"sep_{a.label}_{b.label}"
        projected = distinct_axes(self.scheme.projected_angles)
        if a.is_rect and b.is_rect:
            conds = [
                (self._proj(a, b, a, "u1"), 0.5 * a.w + 0.5 * (self._dim_rel(a, b, b, "w", abs_cosd) + self._dim_rel(a, b, b, "h", abs_sind))),
                (self._proj(a, b, a, "u2"), 0.5 * a.h + 0.5 * (self._dim_rel(a, b, b, "w", abs_sind) + self._dim_rel(a, b, b, "h", abs_cosd))),
                (self._proj(a, b, b, "u1"), 0.5 * b.w + 0.5 * (self._dim_rel(a, b, a, "w", abs_cosd) + self._dim_rel(a, b, a, "h", abs_sind))),
                (self._proj(a, b, b, "u2"), 0.5 * b.h + 0.5 * (self._dim_rel(a, b, a, "w", abs_sind) + self._dim_rel(a, b, a, "h", abs_cosd))),
            ]
        elif a.is_rect or b.is_rect:
            d, z = (a, b) if a.is_rect else (b, a)
            vr1, vr2 = self._proj(a, b, d, "u1"), self._proj(a, b, d, "u2")
            conds = [
                (vr1 * cosd(t) + vr2 * sind(t), z.r + 0.5 * d.w * abs_cosd(t) + 0.5 * d.h * abs_sind(t))
                for t in projected
            ]
        else:
            pair = self._pair_data(a, b)
            conds = [(pair["dx"] * cosd(t) + pair["dy"] * sind(t), LinExpr(constant=a.r + b.r)) for t in projected]
        return self._disjunction(name, conds)

    # objective ------------------------------------------------------------------
    def build_cog_objective(self) -> QuadObjective:
        veh = self.vehicle
        total = veh.chassis_mass + veh.rider_mass + self.topology.element_mass
        if not total > 0:
            raise BuildError("total mass must be positive")
        num = {"x": LinExpr(constant=veh.chassis_mass * veh.chassis_x + veh.rider_mass * veh.rider_x),
               "y": LinExpr(constant=veh.chassis_mass * veh.chassis_y + veh.rider_mass * veh.rider_y)}
        lo = {"x": [self.space.x_min, veh.chassis_x, veh.rider_x], "y": [self.space.y_min, veh.chassis_y, veh.rider_y]}
        hi = {"x": [self.space.x_max, veh.chassis_x, veh.rider_x], "y": [self.space.y_max, veh.chassis_y, veh.rider_y]}
        for obj in self.objects:
            for ax in ("x", "y"):
                pos = obj.x if ax == "x" else obj.y
                plo, phi = self.table.bounds(pos)
                lo[ax].append(plo)
                hi[ax].append(phi)
                if obj.arrangements and not (len(obj.arrangements) == 1 and obj.arrangements[0][0] is None):
                    decisions = [d for d, _ in obj.arrangements]
                    masses = [a.m for _, a in obj.arrangements]
                    term = continuous_times_selected(self.table, pos, decisions, masses, f"mpos_{obj.label}_{ax}")[0]
                elif obj.arrangements:
                    term = pos * obj.arrangements[0][1].m
                else:
                    term = pos * obj.spec.mass
                num[ax] = num[ax] + term
        cog = []
        for ax in ("x", "y"):
            var = self.table.continuous(f"{ax}_CoG", min(lo[ax]), max(hi[ax]))
            self.table.add((total * var).equals(num[ax]), f"cog_{ax}")
            self.table.define(var, lambda v, e=num[ax]: e.value(v) / total)
            cog.append(var)
        self.cog_vars = (cog[0], cog[1])
        obj_fn = QuadObjective()
        obj_fn.add_square(cog[0].index, self.ideal[0], 1.0 / self.options.l_n)
        obj_fn.add_square(cog[1].index, self.ideal[1], 1.0 / self.options.l_n)
        mm = [o for o in self.objects if o.spec.type == "MM"]
        if mm:
            rear = self.topology.rear_wheel()
            if rear is None:
                raise BuildError("a mounted motor needs a rear wheel to measure the chain length")
            weight = 1.0 / self.options.l_n_mm
            m = mm[0]
            if m.fixed:
                obj_fn.constant += weight * ((m.x.constant - rear.x) ** 2 + (m.y.constant - rear.y) ** 2)
            else:
                obj_fn.add_square(m.x_var.index, rear.x, weight)
                obj_fn.add_square(m.y_var.index, rear.y, weight)
        self.total_mass = total
        return obj_fn

    # assembly -------------------------------------------------------------------
    def build(self) -> MiqpModel:
        for spec in self.topology.existing:
            if spec.is_subsystem:
                self.build_cluster_constraints(spec, self.options.n_com.get(spec.name, 1))
            else:
                self.add_component(spec)
        for name in self.options.n_com:
            if name not in self.subsystems:
                raise BuildError(f"n_com given for {name!r}, which is not a subsystem", element=name)
        pairs = 0
        for i, a in enumerate(self.objects):
            for b in self.objects[i + 1:]:
                if self.build_overlap_constraints(a, b) is not None:
                    pairs += 1
        objective = self.build_cog_objective()
        meta = {
            "builder": self,
            "pairs": pairs,
            "total_mass": self.total_mass,
            "ideal": self.ideal,
        }
        name = f"{self.topology.name}_ncom" + "_".join(str(len(c)) for c in self.subsystems.values())
        return MiqpModel(name, list(self.table.vars), list(self.table.constraints), objective, dict(self.table.recipes), meta)

    # solution mapping -----------------------------------------------------------
    def placement_from(self, x: np.ndarray, objective: float | None = None) -> Placement:
        elements: dict[str, PlacedElement] = {}

        def angle_of(obj: ModelObject) -> float:
            if not obj.angles:
                return 0.0
            return max(obj.angles, key=lambda da: _dec(da[0]).value(x))[1]

        for obj in self.objects:
            if obj.cluster is None:
                elements[obj.label] = PlacedElement(obj.label, obj.x.value(x), obj.y.value(x), angle_of(obj))
        for name, clusters in self.subsystems.items():
            placed = []
            for obj in clusters:
                arr = max(obj.arrangements, key=lambda da: _dec(da[0]).value(x))[1]
                placed.append(PlacedCluster(arr.n_w, arr.n_h, obj.x.value(x), obj.y.value(x), angle_of(obj)))
            mass = sum(c.n_w * c.n_h for c in placed)
            cx = sum(c.n_w * c.n_h * c.x for c in placed) / mass
            cy = sum(c.n_w * c.n_h * c.y for c in placed) / mass
            elements[name] = PlacedElement(name, cx, cy, 0.0, placed)
        for spec in self.topology.existing:
            if spec.fixed:
                elements[spec.name] = PlacedElement(spec.name, float(spec.x), float(spec.y), spec.angle)
        order = [e.name for e in self.topology.existing]
        return Placement({n: elements[n] for n in order}, objective)

    def _order_clusters(self, spec: ElementSpec, clusters: list[PlacedCluster]) -> list[PlacedCluster]:
        """Leftmost cluster first, then breadth-first over abutments (matches the chain constraints)."""
        if len(clusters) <= 1:
            return list(clusters)
        shapes = [Rect(c.n_w * spec.sub_width, c.n_h * spec.sub_height, c.x, c.y, c.angle) for c in clusters]
        eps = self.options.eps
        adj = {
            i: [j for j in range(len(clusters)) if j != i and _abuts_strict(shapes[i], shapes[j], eps)]
            for i in range(len(clusters))
        }
        root = min(range(len(clusters)), key=lambda i: (clusters[i].x, clusters[i].y))
        seen, order, queue = {root}, [], deque([root])
        while queue:
            i = queue.popleft()
            order.append(i)
            for j in sorted(adj[i], key=lambda j: (clusters[j].x, clusters[j].y)):
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
        order += [i for i in range(len(clusters)) if i not in seen]
        return [clusters[i] for i in order]

    def primary_values(self, placement: Placement) -> dict[str, float]:
        """Values of the decision variables that encode ``placement``."""
        values: dict[str, float] = {}

        def set_angle(obj: ModelObject, angle: float) -> None:
            if obj.fixed_angle or not obj.angles:
                return
            k = min(range(len(obj.angles)), key=lambda k: abs((obj.angles[k][1] - angle + 90) % 180 - 90))
            if abs((obj.angles[k][1] - angle + 90) % 180 - 90) > 1e-6:
                raise ValueError(f"{obj.label}: angle {angle} is not in the discretised set")
            for kk, (d, _) in enumerate(obj.angles):
                values[d.name] = float(kk == k)

        for obj in self.objects:
            if obj.cluster is not None or obj.fixed:
                continue
            pe = placement.elements[obj.label]
            values[obj.x_var.name], values[obj.y_var.name] = pe.x, pe.y
            set_angle(obj, pe.angle)
        for name, slots in self.subsystems.items():
            spec = slots[0].spec
            placed = self._order_clusters(spec, placement.elements[name].clusters)
            if len(placed) != len(slots):
                raise ValueError(f"{name}: placement has {len(placed)} clusters, model expects {len(slots)}")
            for obj, pc in zip(slots, placed):
                values[obj.x_var.name], values[obj.y_var.name] = pc.x, pc.y
                n_w, n_h, angle = pc.n_w, pc.n_h, pc.angle
                avail = {(a.n_w, a.n_h): a for _, a in obj.arrangements}
                if (n_w, n_h) not in avail and (n_h, n_w) in avail and spec.sub_width == spec.sub_height:
                    n_w, n_h, angle = n_h, n_w, angle + 90.0  # the same footprint, transposed
                if (n_w, n_h) in avail and _is_square(avail[(n_w, n_h)]) and self.options.symmetry_breaking:
                    angle = angle % 90.0
                set_angle(obj, angle)
                match = [k for k, (_, a) in enumerate(obj.arrangements) if (a.n_w, a.n_h) == (n_w, n_h)]
                if not match:
                    raise ValueError(f"{obj.label}: arrangement {pc.n_w}x{pc.n_h} is not available in the model")
                for k, (d, _) in enumerate(obj.arrangements):
                    if d is not None:
                        values[d.name] = float(k == match[0])
        return values


def _is_square(arr) -> bool:
    return abs(arr.w - arr.h) <= 1e-12 * max(arr.w, arr.h)


def _abuts_strict(a, b, eps: float) -> bool:
    ok, _, lateral = rect_abutment(a, b, eps)
    return ok and lateral >= eps - 1e-9


def assemble(
    topology: Topology,
    space: DesignSpace,
    scheme: AngleScheme,
    vehicle: VehicleParams,
    ideal: tuple[float, float],
    options: BuildOptions | None = None,
) -> MiqpModel:
    """Build the complete placement MIQP for ``topology``."""
    return ModelBuilder(topology, space, scheme, vehicle, ideal, options).build()


def lift_placement(model: MiqpModel, placement: Placement) -> np.ndarray:
    """Full variable assignment of ``model`` that encodes ``placement``."""
    builder: ModelBuilder = model.meta["builder"]
    return model.complete(builder.primary_values(placement))


def extract_placement(model: MiqpModel, x: np.ndarray, objective: float | None = None) -> Placement:
    builder: ModelBuilder = model.meta["builder"]
    return builder.placement_from(np.asarray(x, dtype=float), objective)
