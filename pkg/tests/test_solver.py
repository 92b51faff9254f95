import json

import numpy as np
import pytest

from oracles import exact_perturbed_grid, exact_perturbed_u
from sigmak.geometry import WarpedBackground, beta0
from sigmak.grid import GridFunction, RadialGrid, decay_rate
from sigmak.operator import SigmaProblem, indicial_roots
from sigmak.solver import (
    SolverParams,
    continuation,
    fredholm_probe,
    intersection_check,
    newton_solve,
    sigma_tuple_check,
    uniqueness_probe,
)
from sigmak.symfunc import sigma_all

PERTURBED = WarpedBackground(3, "perturbed", 0.01)


@pytest.fixture(scope="module")
def perturbed_report():
    p = SigmaProblem.at_beta0(PERTURBED, 2, RadialGrid(16.0, 4000))
    return p, newton_solve(p)


def test_params_validation():
    with pytest.raises(ValueError):
        SolverParams(tol=0)
    with pytest.raises(ValueError):
        SolverParams(max_iter=0)


@pytest.mark.parametrize("n,k", [(2, 1), (3, 2), (4, 5)])
def test_trivial_solve(n, k):
    p = SigmaProblem.at_beta0(WarpedBackground(n), k, RadialGrid(12.0, 1000))
    rep = newton_solve(p)
    assert rep.converged and rep.iterations == 0
    np.testing.assert_array_equal(rep.u.values, 0.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_scaled_beta_gives_constant_shift(k):
    c = 0.1
    n = 3
    p = SigmaProblem(n, k, beta0(n, k) * np.exp(2 * k * c), WarpedBackground(n),
                     RadialGrid(12.0, 1000))
    rep = newton_solve(p)
    assert rep.converged
    assert np.max(np.abs(rep.u.values + c)) <= 1e-6


def test_perturbed_solve_report(perturbed_report):
    p, rep = perturbed_report
    assert rep.converged and rep.iterations <= 8
    assert rep.residual_history[-1] <= 1e-10
    assert rep.cone_ok
    hist = rep.residual_history
    assert all(b < a for a, b in zip(hist, hist[1:]))
    doc = rep.to_json()
    assert set(doc) == {"converged", "iterations", "residual_history", "beta", "k", "n",
                        "decay_estimate", "cone_ok"}
    json.dumps(doc)


def test_perturbed_solve_matches_quadrature_oracle(perturbed_report):
    p, rep = perturbed_report
    idx = np.arange(100, p.grid.N + 1, 100)
    exact = np.array([exact_perturbed_u(PERTURBED, s) for s in p.grid.t[idx]])
    assert np.max(np.abs(rep.u.values[idx] - exact)) <= 1e-7


def test_decay_estimate_follows_the_background(perturbed_report):
    # u decays like the warp perturbation, which the oracle reproduces
    p, rep = perturbed_report
    coarse = RadialGrid(16.0, 800)
    oracle = decay_rate(exact_perturbed_grid(PERTURBED, coarse))
    assert rep.decay_estimate == pytest.approx(oracle, rel=0.03)


def test_quadratic_convergence(perturbed_report):
    _, rep = perturbed_report
    r = np.array(rep.residual_history)
    # a step whose predicted residual a^2 sits at the rounding floor is left out
    pairs = [(a, b) for a, b in zip(r[-4:-1], r[-3:]) if a * a > 1e-10]
    C = np.exp(np.mean([np.log(b / a ** 2) for a, b in pairs]))
    for a, b in pairs:
        assert b <= 1.2 * C * a * a
    order = np.log(r[-1] / r[-2]) / np.log(r[-2] / r[-3])
    assert order >= 1.8


def test_non_convergence_is_reported():
    p = SigmaProblem.at_beta0(PERTURBED, 2, RadialGrid(12.0, 600))
    rep = newton_solve(p, SolverParams(max_iter=1))
    assert not rep.converged and rep.iterations == 1
    assert rep.message == "max_iter exceeded"


def test_bad_initial_guess_rejected():
    p = SigmaProblem.at_beta0(PERTURBED, 2, RadialGrid(12.0, 600))
    with pytest.raises(ValueError):
        newton_solve(p, u0=np.zeros(5))


def test_continuation_zero_amplitude():
    p = SigmaProblem.at_beta0(WarpedBackground(3), 2, RadialGrid(12.0, 1000))
    reps = continuation(p, [0.0])
    assert len(reps) == 1 and reps[0].converged
    np.testing.assert_array_equal(reps[0].u.values, 0.0)


def test_continuation_warm_start():
    p = SigmaProblem.at_beta0(WarpedBackground(3), 2, RadialGrid(16.0, 2000))
    amps = [0.005, 0.01, 0.02]
    reps = continuation(p, amps)
    assert len(reps) == 3 and all(r.converged for r in reps)
    for a, rep in zip(amps[1:], reps[1:]):
        cold = newton_solve(p.with_background(WarpedBackground(3, "perturbed", a)))
        assert rep.iterations <= cold.iterations
        np.testing.assert_allclose(rep.u.values, cold.u.values, atol=1e-10)


def test_continuation_stops_at_failure():
    p = SigmaProblem.at_beta0(WarpedBackground(3), 2, RadialGrid(12.0, 600))
    reps = continuation(p, [0.01, 0.02, 0.05], SolverParams(max_iter=2))
    assert len(reps) == 1 and not reps[0].converged


def test_mirrored_amplitudes_differ():
    g = RadialGrid(16.0, 2000)
    sols = []
    for a in (0.01, -0.01):
        rep = newton_solve(SigmaProblem.at_beta0(WarpedBackground(3, "perturbed", a), 2, g))
        assert rep.converged
        sols.append(rep.u.values)
    assert np.max(np.abs(sols[0] + sols[1])) > 1e-6


def test_uniqueness_probe(perturbed_report):
    p, _ = perturbed_report
    assert uniqueness_probe(p) <= 1e-8


@pytest.mark.parametrize("n,k", [(3, 1), (3, 2), (4, 3)])
def test_probe_window(n, k):
    ind = indicial_roots(n, k, beta0(n, k))
    mid = 0.5 * (ind.gamma_minus + ind.gamma_plus)
    norms = {}
    for T in (12.0, 16.0):
        p = SigmaProblem.at_beta0(WarpedBackground(n), k, RadialGrid(T, int(250 * T)))
        inside = [fredholm_probe(p, g) for g in (mid, ind.gamma_plus - 0.5)]
        assert not any(r.log_flag or r.singular for r in inside)
        edge = fredholm_probe(p, ind.gamma_plus)
        assert edge.log_flag
        norms[T] = (inside[0].weighted_norm, edge.weighted_norm)
    assert norms[16.0][0] == pytest.approx(norms[12.0][0], rel=1e-3)
    assert norms[16.0][1] > 1.2 * norms[12.0][1]


def test_probe_report_json():
    p = SigmaProblem.at_beta0(WarpedBackground(3), 1, RadialGrid(12.0, 1000))
    doc = fredholm_probe(p, 1.5).to_json()
    assert set(doc) == {"gamma", "weighted_norm", "log_slope", "log_flag", "singular"}
    json.dumps(doc)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_intersection_hyperbolic(n):
    rep = intersection_check(WarpedBackground(n))
    assert rep.einstein and rep.eigen_spread <= 1e-10
    assert all(rep.constant) and all(rep.matches_beta0)
    assert len(rep.sigmas) == n + 1
    np.testing.assert_allclose(rep.spectrum, -0.5, atol=1e-8)


def test_intersection_perturbed():
    rep = intersection_check(PERTURBED)
    assert not rep.einstein
    assert not all(rep.constant)
    assert rep.failing and rep.pointwise_spread > 1e-6
    json.dumps(rep.to_json())


def test_sigma_tuples():
    sigmas = sigma_all([-0.3] * 4)[1:]
    spectrum, spread, einstein = sigma_tuple_check(sigmas)
    np.testing.assert_allclose(spectrum, -0.3, atol=1e-8)
    assert einstein
    spectrum, spread, einstein = sigma_tuple_check(sigma_all([-1.0, -0.5, -0.5, 2.0])[1:])
    np.testing.assert_allclose(spectrum, [-1.0, -0.5, -0.5, 2.0], atol=1e-8)
    assert spread == pytest.approx(3.0) and not einstein
