import numpy as np
import pytest

import flm
from flm.assembly import assemble
from flm.regression import RidgeCgConfig, StlsqConfig, least_squares, ridge_normal_cg, stlsq
from flm.synth import SamplerSpec, gen_from_library


def test_least_squares_identity():
    rng = np.random.default_rng(0)
    U = rng.normal(size=7)
    W = least_squares(np.eye(7), U)
    assert np.allclose(W, U, atol=1e-14)


def test_least_squares_duplicate_column_min_norm():
    rng = np.random.default_rng(1)
    col = rng.normal(size=30)
    F = np.column_stack([col, col])
    U = 3.0 * col + rng.normal(scale=0.1, size=30)
    W = least_squares(F, U)
    # min-norm splits the weight evenly across the duplicated columns
    assert W[0] == pytest.approx(W[1], rel=1e-10)
    single = least_squares(col[:, None], U)
    res_dup = np.linalg.norm(U - F @ W)
    res_single = np.linalg.norm(U - col * single[0])
    assert res_dup == pytest.approx(res_single, rel=1e-12)


def test_least_squares_recovers_planted_solution():
    rng = np.random.default_rng(2)
    F = rng.normal(size=(200, 10))
    w_true = rng.normal(size=10)
    U = F @ w_true
    W = least_squares(F, U)
    assert np.max(np.abs(W - w_true)) < 1e-10


def _planted_case1_system(q=200, seed=123):
    terms = flm.build_library(flm.PRESETS["case1-mnist"])
    idx = {
        "a": next(i for i, t in enumerate(terms) if t.family_index == 1),
        "b": next(i for i, t in enumerate(terms) if t.family_index == 6),
        "c": next(i for i, t in enumerate(terms)
                  if t.family_index == 7 and abs(t.beta - 0.1) < 1e-12),
        "bias": len(terms) - 1,
    }
    coeffs = {"a": 2.0, "b": 0.5, "c": 1.5, "bias": 1.0}
    grid = flm.Grid2D(14, 14)
    ds = gen_from_library(
        [terms[idx[k]] for k in ("a", "b", "c", "bias")],
        [coeffs[k] for k in ("a", "b", "c", "bias")],
        SamplerSpec("smooth", {"max_modes": 3}),
        q, seed, grid,
    )
    F, U = assemble(ds, terms)
    return terms, idx, coeffs, F, U


def test_stlsq_zero_threshold_equals_least_squares():
    _, _, _, F, U = _planted_case1_system(q=60)
    W_ls = least_squares(F, U)
    W_st, report = stlsq(F, U, StlsqConfig(threshold=0.0, normalize_columns=False))
    denom = np.linalg.norm(W_ls)
    assert np.linalg.norm(W_st - W_ls) / denom < 1e-12
    assert report.sweeps == 1


def test_stlsq_exact_recovery():
    terms, idx, coeffs, F, U = _planted_case1_system()
    W, report = stlsq(F, U, StlsqConfig(threshold=0.1), bias_index=idx["bias"])
    support = set(np.flatnonzero(W))
    assert support == {idx["a"], idx["b"], idx["c"], idx["bias"]}
    assert W[idx["a"]] == pytest.approx(coeffs["a"], abs=1e-8)
    assert W[idx["b"]] == pytest.approx(coeffs["b"], abs=1e-8)
    assert W[idx["c"]] == pytest.approx(coeffs["c"], abs=1e-8)
    assert W[idx["bias"]] == pytest.approx(coeffs["bias"], abs=1e-8)
    assert report.active_count == 4
    assert report.sweeps <= len(terms)


def test_stlsq_active_count_monotone_in_threshold():
    _, idx, _, F, U = _planted_case1_system()
    counts = []
    for lam in (0.0, 0.01, 0.1, 1.0, 10.0):
        _, report = stlsq(F, U, StlsqConfig(threshold=lam), bias_index=idx["bias"])
        counts.append(report.active_count)
    assert counts == sorted(counts, reverse=True)


def test_stlsq_threshold_dominance_gives_bias_only():
    _, idx, _, F, U = _planted_case1_system(q=80)
    W, report = stlsq(F, U, StlsqConfig(threshold=1e6), bias_index=idx["bias"])
    assert report.active_count == 1
    assert np.flatnonzero(W).tolist() == [idx["bias"]]


def test_stlsq_empty_active_set_without_bias():
    rng = np.random.default_rng(5)
    F = rng.normal(size=(40, 6))
    U = rng.normal(size=40)
    W, report = stlsq(F, U, StlsqConfig(threshold=1e9))
    assert np.all(W == 0.0)
    assert report.active_count == 0
    assert report.warning is not None


def test_stlsq_zero_columns_dropped():
    rng = np.random.default_rng(6)
    F = rng.normal(size=(30, 4))
    F[:, 2] = 0.0
    w_true = np.array([1.0, -2.0, 0.0, 0.5])
    U = F @ w_true
    W, report = stlsq(F, U, StlsqConfig(threshold=0.01))
    assert W[2] == 0.0
    assert 2 in report.dropped_terms
    assert np.max(np.abs(W - w_true)) < 1e-10


def test_ridge_cg_identity_closed_form():
    rng = np.random.default_rng(7)
    U = rng.normal(size=9)
    W, report = ridge_normal_cg(np.eye(9), U, RidgeCgConfig(lam=0.5))
    assert np.max(np.abs(W - U / 1.5)) < 1e-10
    assert report.converged


def test_ridge_cg_matches_direct_solve():
    rng = np.random.default_rng(8)
    F = rng.normal(size=(500, 60))
    U = rng.normal(size=500)
    lam = 1e-9
    W, report = ridge_normal_cg(F, U, RidgeCgConfig(lam=lam, tol=1e-12))
    direct = np.linalg.solve(F.T @ F + lam * np.eye(60), F.T @ U)
    rel = np.linalg.norm(W - direct) / np.linalg.norm(direct)
    assert rel < 1e-8
    assert report.converged
    assert report.cg_iterations is not None and report.cg_iterations > 0


def test_ridge_cg_large_lambda_asymptotics():
    rng = np.random.default_rng(9)
    F = rng.normal(size=(80, 12))
    U = rng.normal(size=80)
    lam = 1e6 * np.linalg.norm(F.T @ F, 2)
    W, _ = ridge_normal_cg(F, U, RidgeCgConfig(lam=lam, tol=1e-14))
    expect = np.linalg.norm(F.T @ U) / lam
    assert np.linalg.norm(W) == pytest.approx(expect, rel=0.01)


def test_ridge_cg_approaches_least_squares():
    rng = np.random.default_rng(10)
    # well-conditioned tall system
    F = rng.normal(size=(120, 8)) + 2.0 * np.eye(120, 8)
    U = rng.normal(size=120)
    W_ls = least_squares(F, U)
    W_r, _ = ridge_normal_cg(F, U, RidgeCgConfig(lam=1e-12, tol=1e-14))
    rel = np.linalg.norm(W_r - W_ls) / np.linalg.norm(W_ls)
    assert rel < 1e-6


def test_ridge_cg_nonconvergence_flagged():
    rng = np.random.default_rng(11)
    F = rng.normal(size=(50, 20))
    U = rng.normal(size=50)
    W, report = ridge_normal_cg(F, U, RidgeCgConfig(lam=1e-9, tol=1e-14, max_iter=2))
    assert not report.converged
    assert report.warning is not None
    assert np.all(np.isfinite(W))
