"""The assembled mixed-integer quadratic program."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np
import scipy.sparse as sp

from motoplace.linearize import LinConstraint, VarRef

FEAS_TOL = 1e-6


@dataclass
class QuadObjective:
    """``sum quad[i, j] * x_i * x_j + sum linear[i] * x_i + constant`` with ``i <= j``."""

    quad: dict[tuple[int, int], float] = field(default_factory=dict)
    linear: dict[int, float] = field(default_factory=dict)
    constant: float = 0.0

    def add_square(self, index: int, target: float, weight: float) -> None:
        """Add ``weight * (x_index - target) ** 2``."""
        key = (index, index)
        self.quad[key] = self.quad.get(key, 0.0) + weight
        self.linear[index] = self.linear.get(index, 0.0) - 2.0 * weight * target
        self.constant += weight * target * target

    def value(self, x) -> float:
        out = self.constant
        for (i, j), c in self.quad.items():
            out += c * x[i] * x[j]
        for i, c in self.linear.items():
            out += c * x[i]
        return float(out)

    def hessian(self, n: int) -> sp.csc_matrix:
        """``P`` such that the quadratic part equals ``0.5 * x' P x``."""
        rows, cols, vals = [], [], []
        for (i, j), c in self.quad.items():
            if i == j:
                rows.append(i), cols.append(i), vals.append(2.0 * c)
            else:
                rows += [i, j]
                cols += [j, i]
                vals += [c, c]
        return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))

    def gradient_vector(self, n: int) -> np.ndarray:
        q = np.zeros(n)
        for i, c in self.linear.items():
            q[i] = c
        return q


@dataclass
class MiqpModel:
    name: str
    vars: list[VarRef]
    constraints: list[LinConstraint]
    objective: QuadObjective
    recipes: dict[int, Any] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.vars)

    @cached_property
    def binary_indices(self) -> np.ndarray:
        return np.array([v.index for v in self.vars if v.is_binary], dtype=int)

    @cached_property
    def branch_indices(self) -> np.ndarray:
        """Binaries that are genuine decisions (not implied by others)."""
        return np.array([v.index for v in self.vars if v.is_binary and not v.implied], dtype=int)

    @cached_property
    def var_index(self) -> dict[str, int]:
        return {v.name: v.index for v in self.vars}

    @cached_property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([v.lb for v in self.vars]), np.array([v.ub for v in self.vars]))

    @cached_property
    def matrices(self) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
        """Constraint matrix with row bounds ``lo <= A x <= hi``."""
        rows, cols, vals = [], [], []
        lo = np.empty(len(self.constraints))
        hi = np.empty(len(self.constraints))
        for r, con in enumerate(self.constraints):
            for i, c in con.terms.items():
                rows.append(r)
                cols.append(i)
                vals.append(c)
            lo[r] = con.rhs if con.sense in (">=", "==") else -np.inf
            hi[r] = con.rhs if con.sense in ("<=", "==") else np.inf
        a = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), self.n_vars))
        return a, lo, hi

    def objective_value(self, x) -> float:
        return self.objective.value(x)

    def violations(self, x, tol: float = FEAS_TOL) -> list[tuple[str, float]]:
        """Named violations larger than ``tol``, worst first (bounds and integrality included)."""
        x = np.asarray(x, dtype=float)
        out = []
        a, lo, hi = self.matrices
        act = a @ x
        excess = np.maximum(lo - act, act - hi)
        for r in np.nonzero(excess > tol)[0]:
            out.append((self.constraints[r].name, float(excess[r])))
        lb, ub = self.bounds
        for i in np.nonzero(np.maximum(lb - x, x - ub) > tol)[0]:
            out.append((f"bound:{self.vars[i].name}", float(max(lb[i] - x[i], x[i] - ub[i]))))
        b = self.binary_indices
        if len(b):
            frac = np.abs(x[b] - np.round(x[b]))
            for k in np.nonzero(frac > tol)[0]:
                out.append((f"integrality:{self.vars[b[k]].name}", float(frac[k])))
        out.sort(key=lambda t: -t[1])
        return out

    def is_feasible(self, x, tol: float = FEAS_TOL) -> bool:
        return not self.violations(x, tol)

    def complete(self, primary: dict[str, float]) -> np.ndarray:
        """Fill every variable from the given primary values using the recorded recipes."""
        x = np.full(self.n_vars, np.nan)
        for name, value in primary.items():
            x[self.var_index[name]] = value
        for v in self.vars:
            if v.index in self.recipes and np.isnan(x[v.index]):
                x[v.index] = self.recipes[v.index](x)
        missing = [self.vars[i].name for i in np.nonzero(np.isnan(x))[0]]
        if missing:
            raise ValueError(f"no value or recipe for {len(missing)} variables, e.g. {missing[:5]}")
        return x

    def counts(self) -> dict[str, int]:
        n_bin = len(self.binary_indices)
        return {
            "variables": self.n_vars,
            "binaries": n_bin,
            "branching_binaries": len(self.branch_indices),
            "continuous": self.n_vars - n_bin,
            "constraints": len(self.constraints),
        }
