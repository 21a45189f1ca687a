from __future__ import annotations

import numpy as np
import pytest

from conftest import DATA
from motoplace.config import load_config
from motoplace.export import export_names, read_model_highs, residuals, to_lp, to_mps, write_model
from motoplace.pipeline import build_model


@pytest.fixture(scope="module")
def model():
    cfg = load_config(DATA / "single_mm.toml")
    return build_model(cfg, (0.7, 0.02))


def _activities(lp, values: dict[str, float]) -> dict[str, float]:
    d = lp.lp_
    x = np.array([values[n] for n in d.col_names_])
    a = d.a_matrix_
    act = np.zeros(d.num_row_)
    for j in range(d.num_col_):
        for k in range(a.start_[j], a.start_[j + 1]):
            act[a.index_[k]] += a.value_[k] * x[j]
    return dict(zip(d.row_names_, act))


def _objective(lp, values: dict[str, float]) -> float:
    d = lp.lp_
    x = np.array([values[n] for n in d.col_names_])
    val = d.offset_ + float(np.dot(d.col_cost_, x))
    h = lp.hessian_
    for j in range(h.dim_):
        for k in range(h.start_[j], h.start_[j + 1]):
            i, q = h.index_[k], h.value_[k]
            # triangular storage: off-diagonal entries stand for both halves
            val += 0.5 * q * x[i] * x[j] * (1 if i == j else 2)
    return val


def test_lp_and_mps_describe_the_same_model(model, tmp_path):
    lp_path = write_model(model, tmp_path / "m.lp")
    mps_path = write_model(model, tmp_path / "m.mps")
    a, b = read_model_highs(lp_path), read_model_highs(mps_path)
    cols, rows = export_names(model)
    assert sorted(a.lp_.col_names_) == sorted(b.lp_.col_names_) == sorted(cols)
    assert sorted(a.lp_.row_names_) == sorted(b.lp_.row_names_)
    lo, hi = model.bounds
    rng = np.random.default_rng(11)
    binaries = set(model.binary_indices.tolist())
    for _ in range(5):
        x = rng.uniform(lo, hi)
        for i in binaries:
            x[i] = float(rng.integers(2))
        values = dict(zip(cols, x))
        act_a, act_b = _activities(a, values), _activities(b, values)
        assert max(abs(act_a[r] - act_b[r]) for r in act_a) <= 1e-9
        res_a, res_b = residuals(a, values), residuals(b, values)
        assert max(abs(res_a[r] - res_b[r]) for r in res_a) <= 1e-9
        # against the in-memory constraints
        for name, con in zip(rows, model.constraints):
            if name in act_a:
                lhs = sum(c * x[i] for i, c in con.terms.items())
                assert act_a[name] == pytest.approx(lhs, abs=1e-9)
        want = model.objective_value(x)
        assert _objective(a, values) == pytest.approx(want, rel=1e-9, abs=1e-12)
        assert _objective(b, values) == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_exports_are_deterministic(model):
    assert to_lp(model) == to_lp(model)
    assert to_mps(model) == to_mps(model)
    assert "format_version: 1" in to_lp(model)


def test_unknown_suffix(model, tmp_path):
    with pytest.raises(ValueError):
        write_model(model, tmp_path / "m.txt")
