from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from motoplace.linearize import (
    LinExpr,
    VarTable,
    abs_disjunction,
    and_binary,
    continuous_times_selected,
    continuous_times_trig,
    size_big_m,
    trig_of_selected_angle,
    trig_product,
)


def feasible(table: VarTable, values, tol=1e-9) -> bool:
    return all(c.violation(values) <= tol for c in table.constraints)


def lp_range(table: VarTable, expr: LinExpr, fixed: dict[int, float]) -> tuple[float, float]:
    """Min and max of ``expr`` over the constraint polytope with ``fixed`` variables pinned."""
    n = len(table.vars)
    bounds = [(fixed[i], fixed[i]) if i in fixed else (v.lb, v.ub) for i, v in enumerate(table.vars)]
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for con in table.constraints:
        row = np.zeros(n)
        for i, c in con.terms.items():
            row[i] = c
        if con.sense == "<=":
            a_ub.append(row), b_ub.append(con.rhs)
        elif con.sense == ">=":
            a_ub.append(-row), b_ub.append(-con.rhs)
        else:
            a_eq.append(row), b_eq.append(con.rhs)
    c = np.zeros(n)
    for i, v in expr.terms.items():
        c[i] = v
    out = []
    for sign in (1.0, -1.0):
        res = linprog(
            sign * c,
            A_ub=np.array(a_ub) if a_ub else None,
            b_ub=b_ub or None,
            A_eq=np.array(a_eq) if a_eq else None,
            b_eq=b_eq or None,
            bounds=bounds,
            method="highs",
            options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
        )
        assert res.status == 0, res.message
        out.append(sign * res.fun + expr.constant)
    return out[0], out[1]


# -- binary AND -----------------------------------------------------------------------


def test_and_binary_truth_table():
    t = VarTable()
    a, b = t.binary("a"), t.binary("b")
    c, cons = and_binary(t, a, b)
    assert len(cons) == 3 and c.implied
    for va, vb, vc in itertools.product((0, 1), repeat=3):
        assert feasible(t, [va, vb, vc]) == (vc == va * vb)


def test_and_binary_rejects_continuous():
    t = VarTable()
    with pytest.raises(ValueError):
        and_binary(t, t.continuous("x", 0, 1), t.binary("b"))


# -- trigonometric selections ------------------------------------------------------


def test_trig_of_selected_angle_examples():
    t = VarTable()
    d2 = [t.binary(f"d{k}") for k in range(2)]
    assert trig_of_selected_angle(d2, [0.0, 90.0], "cos").value([1, 0]) == 1.0
    d4 = [t.binary(f"e{k}") for k in range(4)]
    expr = trig_of_selected_angle(d4, [0.0, 45.0, 90.0, 135.0], "sin")
    assert expr.value([0, 0, 0, 1, 0, 0]) == pytest.approx(math.sqrt(2) / 2, rel=1e-12)
    with pytest.raises(ValueError):
        trig_of_selected_angle(d2, [0.0], "cos")


@pytest.mark.parametrize("fa,fb", [("cos", "cos"), ("cos", "sin"), ("sin", "abs_cos"), ("abs_sin", "abs_sin")])
def test_trig_product_matches_direct_trigonometry(fa, fb):
    angles = [0.0, 45.0, 90.0, 135.0]
    funcs = {"cos": math.cos, "sin": math.sin, "abs_cos": lambda r: abs(math.cos(r)), "abs_sin": lambda r: abs(math.sin(r))}
    t = VarTable()
    da = [t.binary(f"a{k}") for k in range(4)]
    db = [t.binary(f"b{k}") for k in range(4)]
    expr = trig_product(t, da, angles, fa, db, angles, fb, "p")
    for k, l in itertools.product(range(4), repeat=2):
        x = np.zeros(len(t.vars))
        x[da[k].index] = x[db[l].index] = 1.0
        for idx, recipe in t.recipes.items():
            x[idx] = recipe(x)
        assert feasible(t, x)
        want = funcs[fa](math.radians(angles[k])) * funcs[fb](math.radians(angles[l]))
        assert expr.value(x) == pytest.approx(want, rel=1e-9, abs=1e-15)


# -- continuous times selection --------------------------------------------------


def _ctt(lo, hi, angles, fn):
    t = VarTable()
    x = t.continuous("x", lo, hi)
    ds = [t.binary(f"d{k}") for k in range(len(angles))]
    t.add(LinExpr.sum(ds).equals(1))
    expr, aux, cons = continuous_times_trig(t, x, ds, angles, fn, "xc")
    return t, x, ds, expr, aux, cons


def test_continuous_times_trig_examples():
    t, x, ds, expr, aux, cons = _ctt(-10, 10, [0.0, 90.0], "cos")
    assert len(cons) == 4 * len(aux)
    lo, hi = lp_range(t, expr, {x.index: 3.0, ds[0].index: 1.0, ds[1].index: 0.0})
    assert lo == pytest.approx(3.0, abs=1e-9) and hi == pytest.approx(3.0, abs=1e-9)
    lo, hi = lp_range(t, expr, {x.index: 4.0, ds[0].index: 0.0, ds[1].index: 1.0})
    assert lo == pytest.approx(0.0, abs=1e-9) and hi == pytest.approx(0.0, abs=1e-9)


def test_continuous_times_trig_random_projection():
    rng = np.random.default_rng(7)
    angles = [0.0, 45.0, 90.0, 135.0]
    t, x, ds, expr, aux, cons = _ctt(-3.0, 5.0, angles, "sin")
    for _ in range(40):
        k = int(rng.integers(4))
        xv = float(rng.uniform(-3, 5))
        fixed = {x.index: xv} | {d.index: float(i == k) for i, d in enumerate(ds)}
        lo, hi = lp_range(t, expr, fixed)
        want = xv * math.sin(math.radians(angles[k]))
        assert lo == pytest.approx(want, rel=1e-9, abs=1e-9)
        assert hi == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_continuous_times_selected_accepts_affine_factor():
    t = VarTable()
    x, y = t.continuous("x", 0, 2), t.continuous("y", -1, 1)
    ds = [t.binary("d0"), t.binary("d1")]
    expr, aux, _ = continuous_times_selected(t, x - y, ds, [2.0, 0.0], "m")
    assert len(aux) == 1  # zero coefficient needs no auxiliary
    vals = np.zeros(len(t.vars))
    vals[x.index], vals[y.index], vals[ds[0].index] = 1.5, -0.5, 1.0
    for idx, recipe in t.recipes.items():
        vals[idx] = recipe(vals)
    assert feasible(t, vals)
    assert expr.value(vals) == pytest.approx(4.0)


def test_continuous_times_selected_rejects_non_binary_decisions():
    t = VarTable()
    x = t.continuous("x", 0, 1)
    with pytest.raises(ValueError):
        continuous_times_selected(t, x, [t.continuous("z", 0, 1)], [1.0], "bad")


def test_unbounded_variables_are_rejected():
    t = VarTable()
    with pytest.raises(ValueError):
        t.continuous("x", 0, math.inf)


# -- absolute-value disjunction -----------------------------------------------------


def _abs_case(a_val: float, b_val: float):
    t = VarTable()
    a = t.continuous("a", -10, 10)
    b = t.continuous("b", 0, 10)
    sgn, suc, cons = abs_disjunction(t, a, b, "q")
    assert len(cons) == 4
    out = {}
    for s, u in itertools.product((0, 1), repeat=2):
        vals = np.zeros(len(t.vars))
        vals[a.index], vals[b.index], vals[sgn.index], vals[suc.index] = a_val, b_val, s, u
        out[(s, u)] = feasible(t, vals)
    return out


def test_abs_disjunction_examples():
    assert _abs_case(5, 3)[(1, 1)]
    assert _abs_case(-5, 3)[(0, 1)]
    case = _abs_case(1, 3)
    assert not case[(0, 1)] and not case[(1, 1)]
    assert case[(0, 0)] or case[(1, 0)]


@given(st.floats(-10, 10), st.floats(0, 10))
def test_abs_disjunction_success_certifies_the_condition(a_val, b_val):
    case = _abs_case(a_val, b_val)
    if case[(0, 1)] or case[(1, 1)]:
        assert abs(a_val) >= b_val - 1e-9


# -- big-M sizing ----------------------------------------------------------------------


def test_size_big_m_examples():
    t = VarTable()
    x = t.continuous("x", -2, 5)
    assert size_big_m(t, x) == pytest.approx(5.5)
    t2 = VarTable()
    x2, y2 = t2.continuous("x", 0, 1), t2.continuous("y", 0, 4)
    assert size_big_m(t2, 2 * x2 - y2) == pytest.approx(4.4)
    t3 = VarTable()
    d = t3.binary("d")
    assert t3.bounds(d) == (0.0, 1.0)


@given(st.floats(-5, 0), st.floats(0.1, 5), st.floats(-3, 3))
def test_big_m_rows_are_slack_when_switched_off(lo, width, coef):
    t = VarTable()
    x = t.continuous("x", lo, lo + width)
    d = t.binary("d")
    _, aux, cons = continuous_times_selected(t, x, [d], [coef], "p")
    if not aux:
        return
    xc = aux[0]
    # with d = 0 the linking rows must hold at every corner of the (x, xc) box with xc = 0
    for xv in (x.lb, x.ub):
        vals = np.zeros(len(t.vars))
        vals[x.index] = xv
        vals[xc.index] = 0.0
        assert all(c.violation(vals) <= 1e-12 for c in cons)
    # and the linking rows stay slack for any xc in its box
    for xv, cv in itertools.product((x.lb, x.ub), (xc.lb, xc.ub)):
        vals = np.zeros(len(t.vars))
        vals[x.index], vals[xc.index] = xv, cv
        for c in cons:
            if c.name.endswith(("_ub", "_lb")):
                assert c.violation(vals) <= 1e-12
