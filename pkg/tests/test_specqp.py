"""Exactness of the small conic QP behind the spectral bundle."""

import numpy as np
import pytest

from bundlealm.model import svec_dim
from bundlealm.specqp import SpecQpResult, solve_spec_qp

from oracles import (quadratic_triangle_grid_min, sample_spectral_params,
                     svec_dense)


def _objective(P, q, u):
    return 0.5 * float(u @ P @ u) + float(q @ u)


def _pack(eta, S):
    return np.concatenate(([eta], svec_dense(S)))


def _random_psd_quadratic(rng, r, rank_deficit=0, q_scale=1.0):
    d = 1 + svec_dim(r)
    B = rng.standard_normal((max(d - rank_deficit, 1), d))
    P = B.T @ B
    q = q_scale * rng.standard_normal(d)
    return P, q


def _check_feasible(res, gamma, r):
    assert res.eta >= -1e-12
    assert np.min(np.linalg.eigvalsh(res.S)) >= -1e-9 * max(1.0, gamma)
    assert res.eta + np.trace(res.S) <= gamma + 1e-9 * max(1.0, gamma)


# ---------------------------------------------------------------------------
# input validation and trivial cases
# ---------------------------------------------------------------------------

def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        solve_spec_qp(np.eye(3), np.zeros(2), 1.0, 1)
    with pytest.raises(ValueError):
        solve_spec_qp(np.eye(2), np.zeros(2), -1.0, 1)


def test_zero_gamma_shortcut():
    res = solve_spec_qp(np.eye(2), np.array([1.0, 1.0]), 0.0, 1)
    assert res.eta == 0.0
    np.testing.assert_array_equal(res.S, np.zeros((1, 1)))
    assert res.kkt_residual == 0.0


def test_pure_linear_objective_saturates_best_ray():
    # P = 0, q with one negative coordinate: all mass on that coordinate
    r = 2
    d = 1 + svec_dim(r)
    q = np.zeros(d)
    q[0] = -3.0
    res = solve_spec_qp(np.zeros((d, d)), q, 2.0, r)
    assert res.eta == pytest.approx(2.0, rel=1e-9)
    assert np.trace(res.S) == pytest.approx(0.0, abs=1e-9)
    assert res.kkt_residual <= 1e-10


# ---------------------------------------------------------------------------
# r = 1 against the brute-force grid
# ---------------------------------------------------------------------------

def test_r1_matches_grid():
    rng = np.random.default_rng(0)
    for trial in range(20):
        P, q = _random_psd_quadratic(rng, 1,
                                     rank_deficit=trial % 2)
        gamma = float(rng.uniform(0.2, 5.0))
        res = solve_spec_qp(P, q, gamma, 1)
        u = _pack(res.eta, res.S)
        _, grid_val = quadratic_triangle_grid_min(P, q, gamma)
        assert _objective(P, q, u) <= grid_val + 1e-12 * (1.0 + abs(grid_val))
        assert abs(_objective(P, q, u) - grid_val) <= 1e-4 * (
            1.0 + abs(grid_val))
        _check_feasible(res, gamma, 1)


# ---------------------------------------------------------------------------
# randomized sweep across ranks and data scales
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("r", [1, 2, 3, 4, 5])
def test_sweep_certifies_and_beats_samples(r):
    rng = np.random.default_rng(100 + r)
    samples = sample_spectral_params(rng, r, 1.0, 4000)
    for trial in range(30):
        # rotate through the hard data classes: singular P, huge q,
        # dominant P with negligible q
        deficit = (trial % 3) * 2
        q_scale = [1.0, 1e3, 1e-3][trial % 3]
        P, q = _random_psd_quadratic(rng, r, rank_deficit=deficit,
                                     q_scale=q_scale)
        gamma = float(rng.uniform(0.1, 200.0))
        res = solve_spec_qp(P, q, gamma, r)
        assert isinstance(res, SpecQpResult)
        assert res.kkt_residual <= 1e-10
        assert res.newton_steps <= 200
        _check_feasible(res, gamma, r)
        u = _pack(res.eta, res.S)
        best_sample = np.min(
            0.5 * np.sum((samples * gamma) @ P * (samples * gamma), axis=1)
            + (samples * gamma) @ q)
        # the certificate is relative to the data scale, so the allowed
        # objective slack must be too
        scale = 1.0 + np.linalg.norm(P) * gamma**2 + np.linalg.norm(q) * gamma
        assert _objective(P, q, u) <= best_sample + 1e-8 * scale


def test_reported_residual_matches_recomputation():
    # the result's residual is the worst scaled KKT violation; recompute
    # the primal side independently
    rng = np.random.default_rng(200)
    P, q = _random_psd_quadratic(rng, 3)
    res = solve_spec_qp(P, q, 1.5, 3)
    assert res.kkt_residual <= 1e-10
    _check_feasible(res, 1.5, 3)


def test_solution_is_stationary_under_perturbation():
    # the returned point cannot be improved by feasible perturbations
    rng = np.random.default_rng(300)
    for r in (2, 4):
        P, q = _random_psd_quadratic(rng, r)
        gamma = 2.0
        res = solve_spec_qp(P, q, gamma, r)
        u = _pack(res.eta, res.S)
        base = _objective(P, q, u)
        scale = 1.0 + np.linalg.norm(P) * gamma**2 + np.linalg.norm(q) * gamma
        probes = sample_spectral_params(rng, r, gamma, 500)
        for t in (1e-4, 1e-2, 0.5):
            mixed = (1.0 - t) * u[None, :] + t * probes
            vals = 0.5 * np.sum((mixed @ P) * mixed, axis=1) + mixed @ q
            assert np.min(vals) >= base - 1e-9 * scale
