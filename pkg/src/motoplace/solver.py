"""Branch-and-bound for placement MIQPs.

Node relaxations are convex QPs. They are solved as LPs over an outer
approximation of the objective: every squared term ``c * z**2`` gets an
epigraph column ``t >= c * z**2`` that is cut by tangent planes on demand.
Tangents are globally valid, so the LP value is a lower bound for the node at
every iteration, while the LP point is feasible and its true objective is an
upper bound. The cut loop stops once the two meet (or the node can be pruned).
"""

from __future__ import annotations

import heapq
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import highspy
import numpy as np
import scipy.sparse as sp

from motoplace.model import FEAS_TOL, MiqpModel

log = logging.getLogger("motoplace.solver")

INT_TOL = 1e-6
OPT_TOL = 1e-9  # absolute; bounds and incumbents closer than this are treated as equal
OPT_REL = 2e-7  # relative pruning slack, just above the cut-loop tolerance below
NODE_RTOL = 1e-7  # outer-approximation accuracy demanded at tree nodes
LOG_EVERY = 1000
RELIABLE = 4  # observations per direction before a pseudocost is trusted
STRONG_CANDIDATES = 8  # most candidates strong-branched at one node
STRONG_LOOKAHEAD = 4  # stop strong branching after this many candidates without a better score
SCORE_EPS = 1e-7  # gains below this count as this, so one-sided gains still rank
RESULT_FORMAT_VERSION = 1


@dataclass
class SolveLimits:
    gap_tol: float = 0.0
    time_limit: float = 600.0
    node_limit: int | None = None
    threads: int = 1


@dataclass
class SolveResult:
    status: str  # optimal | gap-limit | time-limit | node-limit | infeasible
    x: np.ndarray | None
    objective: float | None
    bound: float
    gap: float | None
    nodes: int
    wall_time: float
    warm_start: dict | None = None
    names: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "format_version": RESULT_FORMAT_VERSION,
            "status": self.status,
            "objective": self.objective,
            "bound": self.bound if math.isfinite(self.bound) else None,
            "gap": self.gap,
            "nodes": self.nodes,
            "wall_time": self.wall_time,
            "warm_start": self.warm_start,
        }
        if self.x is not None:
            out["variables"] = {n: float(v) for n, v in zip(self.names, self.x)}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, data: dict, model: MiqpModel | None = None) -> SolveResult:
        x = None
        names = []
        if "variables" in data:
            names = list(data["variables"])
            if model is not None:
                names = [v.name for v in model.vars]
            x = np.array([data["variables"][n] for n in names], dtype=float)
        bound = data.get("bound")
        return cls(
            data["status"],
            x,
            data.get("objective"),
            -math.inf if bound is None else float(bound),
            data.get("gap"),
            int(data.get("nodes", 0)),
            float(data.get("wall_time", 0.0)),
            data.get("warm_start"),
            names,
        )


@dataclass
class Relaxation:
    status: str  # optimal | infeasible | cutoff | error
    value: float  # valid lower bound (LP value) or +inf
    x: np.ndarray | None
    upper: float = math.inf  # true objective at ``x``


class RelaxationEngine:
    """Hot-started LP outer approximation of a model's continuous relaxation."""

    def __init__(self, model: MiqpModel, max_rounds: int = 500):
        self.model = model
        self.max_rounds = max_rounds
        n = model.n_vars
        self.n = n
        lb, ub = model.bounds
        self.base_lb, self.base_ub = lb.copy(), ub.copy()
        # squared terms: (column, coefficient); non-diagonal Hessians are diagonalised
        quad = model.objective.hessian(n)
        cost = model.objective.gradient_vector(n)
        rows_extra = []
        self.terms: list[tuple[int, float, float, float]] = []  # (col, c, lo, hi)
        offdiag = sp.triu(quad, k=1).nnz > 0
        extra_cols = []  # (lo, hi)
        if not offdiag:
            for i in range(n):
                if quad[i, i] != 0.0:
                    if quad[i, i] < 0:
                        raise ValueError("objective is not convex")
                    self.terms.append((i, 0.5 * quad[i, i], lb[i], ub[i]))
        else:
            dense = quad.toarray()
            active = np.nonzero(np.any(dense != 0.0, axis=0))[0]
            sub = dense[np.ix_(active, active)]
            lam, vec = np.linalg.eigh(sub)
            if lam.min() < -1e-9 * max(1.0, abs(lam).max()):
                raise ValueError("objective is not convex")
            for k in range(len(lam)):
                if lam[k] <= 1e-12 * max(1.0, abs(lam).max()):
                    continue
                v = vec[:, k]
                lo = float(np.sum(np.where(v > 0, v * lb[active], v * ub[active])))
                hi = float(np.sum(np.where(v > 0, v * ub[active], v * lb[active])))
                col = n + len(extra_cols)
                extra_cols.append((lo, hi))
                rows_extra.append((active, v, col))
                self.terms.append((col, 0.5 * lam[k], lo, hi))
        self.n_z = len(extra_cols)
        self.t0 = n + self.n_z
        h = highspy.Highs()
        for key, val in (
            ("output_flag", False),
            ("threads", 1),
            ("presolve", "off"),
            ("primal_feasibility_tolerance", 1e-9),
            ("dual_feasibility_tolerance", 1e-9),
            ("random_seed", 0),
        ):
            h.setOptionValue(key, val)
        a, lo_r, hi_r = model.matrices
        big = highspy.kHighsInf
        col_lo = list(lb) + [c[0] for c in extra_cols] + [0.0] * len(self.terms)
        col_hi = list(ub) + [c[1] for c in extra_cols]
        for _, c, tlo, thi in self.terms:
            col_hi.append(c * max(tlo * tlo, thi * thi) * 1.0001 + 1e-9)
        col_cost = list(cost) + [0.0] * self.n_z + [1.0] * len(self.terms)
        ncol = len(col_lo)
        h.addVars(ncol, np.array(col_lo), np.array(col_hi))
        h.changeColsCost(ncol, np.arange(ncol, dtype=np.int32), np.array(col_cost, dtype=float))
        a = a.tocsr()
        if a.shape[0]:
            h.addRows(
                a.shape[0],
                np.where(np.isfinite(lo_r), lo_r, -big),
                np.where(np.isfinite(hi_r), hi_r, big),
                a.nnz,
                a.indptr[:-1].astype(np.int32),
                a.indices.astype(np.int32),
                a.data.astype(float),
            )
        for active, v, col in rows_extra:
            idx = np.append(active, col).astype(np.int32)
            val = np.append(v, -1.0)
            h.addRow(0.0, 0.0, len(idx), idx, val)
        self.constant = model.objective.constant
        self.h = h
        self.cuts = 0
        for k, (col, c, tlo, thi) in enumerate(self.terms):
            for z0 in {tlo, thi, 0.5 * (tlo + thi)}:
                self._add_cut(k, z0)
        self.cols = np.arange(n, dtype=np.int32)

    def _add_cut(self, k: int, z0: float) -> None:
        col, c, _, _ = self.terms[k]
        # t >= c z0^2 + 2 c z0 (z - z0)
        self.h.addRow(-c * z0 * z0, highspy.kHighsInf, 2, np.array([self.t0 + k, col], dtype=np.int32), np.array([1.0, -2.0 * c * z0]))
        self.cuts += 1

    def _true_value(self, sol: np.ndarray) -> float:
        x = sol[: self.n]
        return self.model.objective_value(x)

    def set_bounds(self, lb: np.ndarray, ub: np.ndarray) -> None:
        self.h.changeColsBounds(self.n, self.cols, lb, ub)

    def solve(self, lb: np.ndarray, ub: np.ndarray, cutoff: float = math.inf, rtol: float = 1e-10) -> Relaxation:
        self.set_bounds(lb, ub)
        retried = False
        for _ in range(self.max_rounds):
            self.h.run()
            status = self.h.getModelStatus()
            if status == highspy.HighsModelStatus.kInfeasible:
                return Relaxation("infeasible", math.inf, None)
            if status != highspy.HighsModelStatus.kOptimal:
                if retried:
                    return Relaxation("error", -math.inf, None)
                retried = True
                self.h.clearSolver()  # drop the basis and retry from scratch
                continue
            sol = np.asarray(self.h.getSolution().col_value)
            value = self.h.getInfo().objective_function_value + self.constant
            upper = self._true_value(sol)
            x = sol[: self.n]
            if value >= cutoff:
                return Relaxation("cutoff", value, x, upper)
            if upper - value <= OPT_TOL + rtol * max(1.0, abs(upper)):
                return Relaxation("optimal", value, x, upper)
            added = 0
            for k, (col, c, _, _) in enumerate(self.terms):
                z0, t = sol[col], sol[self.t0 + k]
                if c * z0 * z0 - t > 0.1 * OPT_TOL:
                    self._add_cut(k, z0)
                    added += 1
            if not added:
                return Relaxation("optimal", value, x, upper)
        return Relaxation("optimal", value, x, upper)


class BoundPropagator:
    """Activity-based bound tightening with integer rounding on binaries.

    Also turns an incumbent value into bounds on the squared objective terms.
    """

    def __init__(self, model: MiqpModel, passes: int = 3):
        a, lo, hi = model.matrices
        coo = a.tocoo()
        self.rows, self.cols, self.vals = coo.row, coo.col, coo.data
        self.m = a.shape[0]
        self.lo, self.hi = lo, hi
        self.passes = passes
        self.is_bin = np.zeros(model.n_vars, dtype=bool)
        self.is_bin[model.binary_indices] = True
        # objective as sum c_i (x_i - a_i)^2 + const when it separates that way
        obj = model.objective
        self.squares = None
        if all(i == j for i, j in obj.quad) and set(obj.linear) <= {i for i, _ in obj.quad}:
            cols = np.array(sorted(i for i, _ in obj.quad), dtype=int)
            c = np.array([obj.quad[(i, i)] for i in cols])
            a_ = np.array([-obj.linear.get(i, 0.0) / (2.0 * obj.quad[(i, i)]) for i in cols])
            self.squares = (cols, c, a_, obj.constant - float(np.sum(c * a_ * a_)))

    def cutoff_bounds(self, lb: np.ndarray, ub: np.ndarray, limit: float) -> None:
        if self.squares is None or not math.isfinite(limit):
            return
        cols, c, a_, const = self.squares
        room = limit - const
        if room < 0:
            lb[cols], ub[cols] = 1.0, 0.0  # empty: nothing can beat the incumbent
            return
        half = np.sqrt(room / c)
        lb[cols] = np.maximum(lb[cols], a_ - half)
        ub[cols] = np.minimum(ub[cols], a_ + half)

    def propagate(self, lb: np.ndarray, ub: np.ndarray) -> bool:
        """Tighten ``lb``/``ub`` in place; return False when the box is empty."""
        r, cidx, v = self.rows, self.cols, self.vals
        pos = v > 0
        for _ in range(self.passes):
            lo_c = np.where(pos, v * lb[cidx], v * ub[cidx])
            hi_c = np.where(pos, v * ub[cidx], v * lb[cidx])
            min_act = np.bincount(r, lo_c, minlength=self.m)
            max_act = np.bincount(r, hi_c, minlength=self.m)
            if np.any(min_act > self.hi + 1e-7) or np.any(max_act < self.lo - 1e-7):
                return False
            # residual activity of each row without the entry itself
            rest_min = min_act[r] - lo_c
            rest_max = max_act[r] - hi_c
            with np.errstate(invalid="ignore", divide="ignore"):
                up_from_hi = (self.hi[r] - rest_min) / v  # v>0: x <= ; v<0: x >=
                dn_from_lo = (self.lo[r] - rest_max) / v  # v>0: x >= ; v<0: x <=
            new_ub = np.where(pos, up_from_hi, dn_from_lo)
            new_lb = np.where(pos, dn_from_lo, up_from_hi)
            nub = ub.copy()
            nlb = lb.copy()
            np.minimum.at(nub, cidx, np.where(np.isnan(new_ub), np.inf, new_ub))
            np.maximum.at(nlb, cidx, np.where(np.isnan(new_lb), -np.inf, new_lb))
            b = self.is_bin
            nub[b] = np.floor(nub[b] + 1e-6)
            nlb[b] = np.ceil(nlb[b] - 1e-6)
            if np.any(nlb > nub + 1e-7):
                return False
            # ignore tiny continuous moves; keep the box well-formed
            nlb = np.minimum(nlb, nub)
            moved = (nub < ub - 1e-6 * np.maximum(1.0, np.abs(ub))) | (nlb > lb + 1e-6 * np.maximum(1.0, np.abs(lb)))
            if not moved.any():
                break
            lb[moved], ub[moved] = nlb[moved], nub[moved]
        return True


class LeafSolver:
    """Exact convex QP over the model with every binary fixed (HiGHS QP)."""

    def __init__(self, model: MiqpModel):
        self.model = model
        n = model.n_vars
        lb, ub = model.bounds
        h = highspy.Highs()
        for key, val in (("output_flag", False), ("threads", 1), ("random_seed", 0)):
            h.setOptionValue(key, val)
        big = highspy.kHighsInf
        h.addVars(n, lb, ub)
        h.changeColsCost(n, np.arange(n, dtype=np.int32), model.objective.gradient_vector(n))
        a, lo, hi = model.matrices
        a = a.tocsr()
        if a.shape[0]:
            h.addRows(
                a.shape[0],
                np.where(np.isfinite(lo), lo, -big),
                np.where(np.isfinite(hi), hi, big),
                a.nnz,
                a.indptr[:-1].astype(np.int32),
                a.indices.astype(np.int32),
                a.data.astype(float),
            )
        p = sp.tril(model.objective.hessian(n)).tocsc()
        if p.nnz:
            h.passHessian(n, p.nnz, highspy.HessianFormat.kTriangular, p.indptr.astype(np.int32), p.indices.astype(np.int32), p.data)
        self.h = h
        self.bins = model.binary_indices.astype(np.int32)

    def solve(self, values: np.ndarray) -> np.ndarray | None:
        v = np.round(values[self.bins])
        self.h.changeColsBounds(len(self.bins), self.bins, v, v)
        self.h.run()
        if self.h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
            return None
        x = np.asarray(self.h.getSolution().col_value, dtype=float)
        x[self.bins] = v
        return x

    def dual_bound(self, lb: np.ndarray, ub: np.ndarray) -> tuple[float, np.ndarray]:
        """Lagrangian lower bound over the box ``[lb, ub]`` from the last solve's row duals.

        Weak duality makes this valid for any multipliers; with the duals of
        a leaf optimum it is tight whenever no free binary wants to move.
        Also returns the box minimiser of the Lagrangian.
        """
        a, lo, hi = self.model.matrices
        d = self.model.objective.gradient_vector(self.model.n_vars)
        diag = np.zeros(self.model.n_vars)
        for (i, j), c in self.model.objective.quad.items():
            if i != j:
                return -math.inf, np.zeros(self.model.n_vars)
            diag[i] += c
        y0 = np.asarray(self.h.getSolution().row_dual, dtype=float)
        best, best_x = -math.inf, None
        for y in (y0, -y0):
            y = np.where((y > 0) & ~np.isfinite(lo), 0.0, y)
            y = np.where((y < 0) & ~np.isfinite(hi), 0.0, y)
            h_y = float(np.sum(np.where(y > 0, y * np.where(np.isfinite(lo), lo, 0.0), y * np.where(np.isfinite(hi), hi, 0.0))))
            e = d - a.T @ y
            with np.errstate(divide="ignore", invalid="ignore"):
                x = np.where(diag > 0, np.clip(-e / (2 * np.where(diag > 0, diag, 1.0)), lb, ub), np.where(e >= 0, lb, ub))
            g = float(np.sum(diag * x * x + e * x)) + h_y + self.model.objective.constant
            if g > best:
                best, best_x = g, x
        return best, best_x


def solve_qp_relaxation(model: MiqpModel, fixings: dict[int, float] | None = None) -> Relaxation:
    """Continuous relaxation of ``model`` with the given binaries fixed.

    Solved exactly by the HiGHS QP solver rather than by outer approximation,
    so the value is the relaxation optimum, not just a bound.
    """
    h = LeafSolver(model).h
    lb, ub = (np.asarray(b, dtype=float).copy() for b in model.bounds)
    for i, v in (fixings or {}).items():
        lb[i] = ub[i] = v
    n = model.n_vars
    h.changeColsBounds(n, np.arange(n, dtype=np.int32), lb, ub)
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kInfeasible:
        return Relaxation("infeasible", math.inf, None)
    if status != highspy.HighsModelStatus.kOptimal:
        return Relaxation("error", math.inf, None)
    x = np.asarray(h.getSolution().col_value, dtype=float)
    value = model.objective_value(x)
    return Relaxation("optimal", value, x, value)


@dataclass
class WarmStart:
    accepted: bool
    objective: float | None
    reason: str

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "objective": self.objective, "reason": self.reason}


def warm_start(model: MiqpModel, hint, tol: float = FEAS_TOL) -> WarmStart:
    """Accept ``hint`` as an incumbent iff it satisfies every constraint within ``tol``."""
    x = np.asarray(hint, dtype=float)
    if x.shape != (model.n_vars,):
        return WarmStart(False, None, f"expected {model.n_vars} values, got {x.shape}")
    if not np.all(np.isfinite(x)):
        return WarmStart(False, None, "hint contains non-finite values")
    bad = model.violations(x, tol)
    if bad:
        name, amount = bad[0]
        more = f" (and {len(bad) - 1} more)" if len(bad) > 1 else ""
        return WarmStart(False, None, f"violates {name} by {amount:.3g}{more}")
    return WarmStart(True, model.objective_value(x), "feasible")


@dataclass(order=True)
class _Node:
    bound: float
    id: int
    fix: tuple = field(compare=False)  # ((index, value), ...)
    depth: int = field(compare=False, default=0)
    origin: tuple | None = field(compare=False, default=None)  # (index, value, fractionality, parent value)


class _Pseudocosts:
    """Average bound gain per unit change of each binary, per branching direction."""

    def __init__(self, n: int):
        self.total = np.zeros((2, n))
        self.count = np.zeros((2, n), dtype=int)

    def record(self, j: int, value: float, frac: float, gain: float) -> None:
        d = int(value)
        dist = frac if d == 0 else 1.0 - frac
        if dist > INT_TOL and math.isfinite(gain):
            self.total[d, j] += max(gain, 0.0) / dist
            self.count[d, j] += 1

    def reliable(self, j: int) -> bool:
        return bool(self.count[0, j] >= RELIABLE and self.count[1, j] >= RELIABLE)

    def estimate(self, j: int, frac: float) -> tuple[float, float]:
        mean = self.total.sum(axis=1) / np.maximum(self.count.sum(axis=1), 1)
        per = [self.total[d, j] / self.count[d, j] if self.count[d, j] else mean[d] for d in (0, 1)]
        return per[0] * frac, per[1] * (1.0 - frac)


def _score(down: float, up: float) -> float:
    return max(down, SCORE_EPS) * max(up, SCORE_EPS)


def _gap(inc: float, bound: float) -> float:
    return max(0.0, inc - bound) / max(abs(inc), 1e-12)


def branch_and_bound(
    model: MiqpModel,
    limits: SolveLimits | None = None,
    hint=None,
) -> SolveResult:
    """Solve ``model`` to a certified gap.

    Branching takes the most fractional non-implied binary (lowest index on
    ties). Each branching dives into the rounding child and parks its sibling;
    when a dive dies the best-bound open node is taken next. Nodes are pruned
    once their bound is within ``OPT_TOL + OPT_REL * |incumbent|`` of the
    incumbent, so "optimal" means proven to that tolerance.
    """
    limits = limits or SolveLimits()
    start = time.perf_counter()
    names = [v.name for v in model.vars]
    engine = RelaxationEngine(model)
    leaf_solver = LeafSolver(model)
    prop = BoundPropagator(model)
    branch = model.branch_indices
    is_branch = np.zeros(model.n_vars, dtype=bool)
    is_branch[branch] = True
    inc_x, inc_val = None, math.inf
    ws_info = None
    if hint is not None:
        ws = warm_start(model, hint)
        ws_info = ws.to_dict()
        if ws.accepted:
            inc_x, inc_val = np.asarray(hint, dtype=float).copy(), ws.objective
            log.info("warm start accepted, objective %.10g", inc_val)
        else:
            log.info("warm start rejected: %s", ws.reason)

    heap: list[_Node] = []
    counter = 0
    nodes = 0
    status = None
    stack: list[_Node] = [_Node(-math.inf, 0, ())]

    def bounds_for(fix):
        lb, ub = engine.base_lb.copy(), engine.base_ub.copy()
        for i, v in fix:
            lb[i] = ub[i] = v
        return lb, ub

    def cutoff():
        return inc_val - OPT_TOL - OPT_REL * abs(inc_val) if inc_x is not None else math.inf

    def open_bound():
        cands = [n.bound for n in heap] + [n.bound for n in stack]
        return min(cands) if cands else math.inf

    pseudo = _Pseudocosts(model.n_vars)
    child_bounds = None

    def choose_branch(x, cands, lb, ub, bound):
        """Reliability branching: pseudocosts, strong branching where they are not yet trusted.

        Returns the branching index and any child bounds found on the way.
        """
        frac = {int(i): float(x[i]) for i in cands}
        est = {i: pseudo.estimate(i, f) for i, f in frac.items()}
        order = sorted(frac, key=lambda i: (-_score(*est[i]), i))
        best_j, best_score, best_children = order[0], _score(*est[order[0]]), {}
        unreliable = [i for i in order if not pseudo.reliable(i)][:STRONG_CANDIDATES]
        if not unreliable:
            return best_j, {}
        best_score, stale = -1.0, 0
        for i in unreliable:
            vals = {}
            for v in (0.0, 1.0):
                cl, cu = lb.copy(), ub.copy()
                cl[i] = cu[i] = v
                r = engine.solve(cl, cu, cutoff(), rtol=NODE_RTOL)
                vals[v] = {"optimal": r.value, "error": bound}.get(r.status, math.inf)
                pseudo.record(i, v, frac[i], vals[v] - bound)
            if math.isinf(vals[0.0]) and math.isinf(vals[1.0]):
                return None, {}
            sc = _score(vals[0.0] - bound, vals[1.0] - bound)
            if sc > best_score:
                best_j, best_score, best_children, stale = i, sc, vals, 0
            else:
                stale += 1
                if stale >= STRONG_LOOKAHEAD:
                    break
        for i in order:
            if pseudo.reliable(i) and _score(*est[i]) > best_score:
                return i, {}
        return best_j, best_children

    while stack or heap:
        elapsed = time.perf_counter() - start
        if elapsed > limits.time_limit:
            status = "time-limit"
            break
        if limits.node_limit is not None and nodes >= limits.node_limit:
            status = "node-limit"
            break
        if inc_x is not None and limits.gap_tol > 0:
            if _gap(inc_val, min(open_bound(), inc_val)) <= limits.gap_tol:
                status = "gap-limit"
                break
        node = stack.pop() if stack else heapq.heappop(heap)
        if node.bound >= cutoff():
            continue
        nodes += 1
        if nodes % LOG_EVERY == 0:
            ob = min(open_bound(), node.bound)
            log.info(
                "nodes %d  incumbent %s  bound %.10g  gap %s  open %d  cuts %d  time %.1fs",
                nodes,
                f"{inc_val:.10g}" if inc_x is not None else "-",
                ob,
                f"{_gap(inc_val, ob):.3e}" if inc_x is not None else "-",
                len(heap) + len(stack),
                engine.cuts,
                time.perf_counter() - start,
            )
        lb, ub = bounds_for(node.fix)
        prop.cutoff_bounds(lb, ub, cutoff())
        if not prop.propagate(lb, ub):
            continue
        rel = engine.solve(lb, ub, cutoff(), rtol=NODE_RTOL)
        if rel.status in ("infeasible", "cutoff"):
            continue
        fixed = {int(i) for i in branch if lb[i] == ub[i]}
        if rel.status == "error":
            # keep the parent bound and split on the first free decision
            free = [int(i) for i in branch if i not in fixed]
            if not free:
                continue
            j = free[0]
            for v in (0.0, 1.0):
                counter += 1
                heapq.heappush(heap, _Node(node.bound, counter, node.fix + ((j, v),), node.depth + 1))
            continue
        if node.origin is not None:
            oj, ov, of, ob = node.origin
            pseudo.record(oj, ov, of, rel.value - ob)
        bound = max(rel.value, node.bound)
        x = rel.x
        frac = np.abs(x[branch] - np.round(x[branch]))
        frac_ok = frac <= INT_TOL
        if np.all(frac_ok):
            # all decisions integral: fix them and finish the convex leaf problem
            cand = leaf_solver.solve(x)
            if cand is None or not model.is_feasible(cand):
                leaf_fix = tuple((int(i), float(round(x[i]))) for i in branch)
                leaf = engine.solve(*bounds_for(leaf_fix), rtol=1e-12)
                cand = None
                if leaf.status == "optimal":
                    cand = leaf.x.copy()
                    cand[model.binary_indices] = np.round(cand[model.binary_indices])
            if cand is not None and model.is_feasible(cand):
                val = model.objective_value(cand)
                if val < inc_val - OPT_TOL:
                    inc_x, inc_val = cand, val
                    log.info("incumbent %.10g at node %d", inc_val, nodes)
            free = [int(i) for i in branch if i not in fixed]
            if not free:
                continue
            # the cut loop only pins the node bound to its tolerance: settle it with
            # the Lagrangian bound of the leaf duals
            if cand is None:
                j = free[0]
                first = float(round(x[j]))
            else:
                g, gx = leaf_solver.dual_bound(lb, ub)
                if g >= cutoff():
                    continue
                bound = max(bound, g)
                moved = [i for i in free if abs(gx[i] - cand[i]) > 0.5]
                j = moved[0] if moved else free[0]
                first = float(round(cand[j]))
            children = [first, 1.0 - first]
        else:
            j, child_bounds = choose_branch(x, branch[~frac_ok], lb, ub, bound)
            if j is None:
                continue  # strong branching found both children of some binary infeasible
            first = 1.0 if x[j] >= 0.5 else 0.0
            children = [first, 1.0 - first]
        kids = []
        for v in children:
            counter += 1
            kid_bound = max(bound, child_bounds.get(v, -math.inf)) if child_bounds else bound
            kids.append(_Node(kid_bound, counter, node.fix + ((j, v),), node.depth + 1, (j, v, float(x[j]), bound)))
        child_bounds = None
        # dive into the rounding child (cheap hot start), park its sibling
        stack.append(kids[0])
        heapq.heappush(heap, kids[1])

    wall = time.perf_counter() - start
    if status is None:
        # tree exhausted: every node was pruned against the incumbent
        bound = inc_val if inc_x is not None else math.inf
        status = "optimal" if inc_x is not None else "infeasible"
    else:
        bound = min(open_bound(), inc_val)
    gap = _gap(inc_val, bound) if inc_x is not None else None
    log.info(
        "finished: %s  objective %s  bound %s  nodes %d  time %.1fs",
        status,
        f"{inc_val:.10g}" if inc_x is not None else "-",
        f"{bound:.10g}",
        nodes,
        wall,
    )
    return SolveResult(
        status,
        inc_x,
        inc_val if inc_x is not None else None,
        bound,
        gap,
        nodes,
        wall,
        ws_info,
        names,
    )
