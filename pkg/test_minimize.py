"""
Tests for nonloc.minimize: projected steepest descent, the uniqueness probe and
the cross-check against the convolution fixed point.
"""
import numpy as np
import pytest

from conftest import admissible_variation
from nonloc import grid
from nonloc.errors import PreconditionError
from nonloc.functional import energy, gateaux, strong_el_residual
from nonloc.minimize import (
    assemble_gradient,
    initial_iterate,
    minimize,
    summarize,
    uniqueness_probe,
)
from nonloc.models import GridFunction, Integrand, MinimizeResult, TerminationReason
from nonloc.presets import preset, verify_preset
from nonloc.schemas import FixedPointOptions, OptimizerOptions
from nonloc.semilinear import solve_fixed_point

TIGHT = OptimizerOptions(grad_tol=1e-11, max_iters=20000)


def quadratic(node_count=61):
    entry = preset("quadratic")
    return entry.instantiate(entry.domain.model_copy(update={"node_count": node_count}), audit=False)


def direct_solve(inst):
    """Dense solve of sum_j w_j (u_j - u_i) mu_ij = 0 on the free nodes."""
    d = inst.domain
    K = inst.mu.matrix * d.weights[None, :]
    free, fixed = d.free, d.fixed
    A = K[np.ix_(free, free)] - np.diag(K[free].sum(axis=1))
    rhs = -K[np.ix_(free, fixed)] @ inst.boundary.scalar[fixed]
    values = inst.boundary.scalar.copy()
    values[free] = np.linalg.solve(A, rhs)
    return values


# ==================== Gradient ====================

def test_gradient_pairs_with_the_first_variation(rng):
    inst = quadratic(41)
    d = inst.domain
    u = GridFunction(d, rng.uniform(-1.0, 1.0, d.node_count))
    g = assemble_gradient(u, inst.integrand).scalar
    assert np.all(g[d.fixed] == 0.0)
    for _ in range(5):
        phi = admissible_variation(d, rng)
        assert float(np.sum(g * phi.scalar)) == pytest.approx(gateaux(u, phi, inst.integrand), rel=1e-12, abs=1e-14)


def test_initial_iterate_modes():
    inst = quadratic(41)
    d, u0 = inst.domain, inst.boundary
    extended = initial_iterate(u0, "boundary_extend")
    assert np.all(extended[d.free] == pytest.approx(np.mean(u0.scalar[d.fixed])))
    assert np.array_equal(extended[d.fixed], u0.scalar[d.fixed])
    assert np.all(initial_iterate(u0, "zero")[d.free] == 0.0)
    assert np.array_equal(initial_iterate(u0, "given"), u0.scalar)


def test_minimize_needs_a_scalar_function():
    inst = quadratic(41)
    u0 = GridFunction.zeros(inst.domain, components=2)
    with pytest.raises(PreconditionError, match="N = 1"):
        minimize(inst.integrand, inst.domain, u0)


# ==================== Descent ====================

def test_quadratic_minimizer_matches_a_direct_solve():
    inst = quadratic(201)
    result = minimize(inst.integrand, inst.domain, inst.boundary, TIGHT)
    assert result.converged
    assert result.termination_reason == TerminationReason.GRADIENT_TOL
    np.testing.assert_allclose(result.u_star.scalar, direct_solve(inst), rtol=0, atol=1e-6)
    report = verify_preset(inst, result.u_star)
    assert report.passed
    assert report.details["residual_inf"] <= 1e-8


def test_energy_trace_never_increases_and_collar_is_held():
    inst = quadratic()
    result = minimize(inst.integrand, inst.domain, inst.boundary, TIGHT)
    trace = np.array(result.energy_trace)
    slack = 1e-12 * max(1.0, float(np.max(np.abs(trace))))
    assert np.all(np.diff(trace) <= slack)
    fixed = inst.domain.fixed
    assert np.array_equal(result.u_star.scalar[fixed], inst.boundary.scalar[fixed])


def test_converged_minimizer_has_a_small_first_variation(rng):
    inst = quadratic()
    d = inst.domain
    result = minimize(inst.integrand, d, inst.boundary, TIGHT)
    assert result.converged
    free_count = int(np.count_nonzero(d.free))
    for _ in range(20):
        phi = admissible_variation(d, rng)
        bound = TIGHT.grad_tol * grid.linf_norm(phi) * free_count
        assert abs(gateaux(result.u_star, phi, inst.integrand)) <= bound + 1e-12


def test_convex_minimizer_beats_admissible_competitors(rng):
    inst = quadratic()
    d = inst.domain
    u_star = minimize(inst.integrand, d, inst.boundary, TIGHT).u_star
    best = energy(u_star, inst.integrand)
    for scale in (1.0, 1e-2, 1e-4):
        for _ in range(5):
            phi = admissible_variation(d, rng)
            v = GridFunction(d, u_star.scalar + scale * phi.scalar)
            assert best <= energy(v, inst.integrand) + 1e-8


def test_max_iters_stops_without_convergence():
    inst = quadratic(41)
    result = minimize(inst.integrand, inst.domain, inst.boundary, OptimizerOptions(max_iters=2))
    assert not result.converged
    assert result.termination_reason == TerminationReason.MAX_ITERS
    assert result.iterations == 2
    assert len(result.energy_trace) == 3


def test_line_search_failure_is_reported():
    inst = quadratic(41)
    opts = OptimizerOptions(initial_step=1e-3, min_step=1.0)
    result = minimize(inst.integrand, inst.domain, inst.boundary, opts)
    assert result.termination_reason == TerminationReason.LINE_SEARCH_FAILURE
    assert not result.converged


def test_non_finite_initial_energy_is_a_precondition_error(domain):
    f = Integrand(
        name="log",
        eval=lambda x, z, u, xi: np.log(u - 1.0) + 0.0 * xi,
        du=lambda x, z, u, xi: 1.0 / (u - 1.0) + 0.0 * xi,
        dxi=lambda x, z, u, xi: np.zeros(np.broadcast(x, z, u, xi).shape),
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        with pytest.raises(PreconditionError, match="non-finite"):
            minimize(f, domain, GridFunction.zeros(domain))


def test_summarize_truncates_the_trace():
    inst = quadratic(41)
    result = MinimizeResult(u_star=inst.boundary, energy_trace=[float(k) for k in range(10, 0, -1)],
                            grad_inf_norm=0.5, iterations=9, converged=False,
                            termination_reason=TerminationReason.MAX_ITERS)
    summary = summarize(result, max_trace=3)
    assert summary.trace_truncated
    assert summary.energy_trace == [10.0, 9.0, 1.0]
    assert summary.final_energy == 1.0
    assert not summarize(result).trace_truncated


# ==================== Uniqueness ====================

def test_uniqueness_probe_agrees_for_a_convex_energy():
    inst = quadratic(41)
    report = uniqueness_probe(inst.integrand, inst.domain, inst.boundary, n_starts=3, seed=2, opts=TIGHT)
    assert report.passed
    assert not report.inconclusive
    assert report.details["max_pairwise_linf"] <= 1e-4


def test_uniqueness_probe_is_inconclusive_when_a_start_fails():
    inst = quadratic(41)
    report = uniqueness_probe(inst.integrand, inst.domain, inst.boundary, n_starts=2,
                              opts=OptimizerOptions(max_iters=1))
    assert report.inconclusive
    assert not report.passed


def test_unbounded_non_convex_energy_is_inconclusive():
    inst = quadratic(41)
    mu_of = grid.kernel_lookup(inst.mu)
    concave = Integrand(
        name="negative_dirichlet",
        eval=lambda x, z, u, xi: -xi ** 2 * mu_of(z),
        du=lambda x, z, u, xi: np.zeros(np.broadcast(x, z, u, xi).shape),
        dxi=lambda x, z, u, xi: -2.0 * xi * mu_of(z),
        p=2.0,
    )
    with np.errstate(over="ignore", invalid="ignore"):
        report = uniqueness_probe(concave, inst.domain, inst.boundary, n_starts=2, seed=3,
                                  opts=OptimizerOptions(max_iters=200))
    assert report.inconclusive
    assert not report.passed
    assert report.witness["failed_starts"] == [0, 1]


def test_uniqueness_probe_needs_two_starts():
    inst = quadratic(41)
    with pytest.raises(PreconditionError):
        uniqueness_probe(inst.integrand, inst.domain, inst.boundary, n_starts=1)


# ==================== Cross-validation ====================

@pytest.mark.slow
def test_arctan_minimizer_and_fixed_point_agree():
    entry = preset("arctan_semilinear")
    inst = entry.instantiate(entry.domain.model_copy(update={"node_count": 181}), audit=False)
    d = inst.domain
    by_descent = minimize(inst.integrand, d, inst.boundary, OptimizerOptions(grad_tol=1e-11, max_iters=20000))
    by_fixed_point = solve_fixed_point(inst.problem, opts=FixedPointOptions(tol=1e-12))
    assert by_descent.converged and by_fixed_point.converged

    gap = grid.linf_norm(by_descent.u_star.scalar - by_fixed_point.u_star.scalar, d.interior)
    assert gap <= 1e-5
    for u in (by_descent.u_star, by_fixed_point.u_star):
        assert verify_preset(inst, u).details["residual_inf"] <= 1e-7
    # the energy residual is -2 (L_mu[u] - f0) on Omega
    strong = strong_el_residual(by_fixed_point.u_star, inst.integrand).scalar
    assert grid.linf_norm(strong, d.interior) <= 2e-7

    probe = uniqueness_probe(inst.integrand, d, inst.boundary, n_starts=3, seed=0,
                             opts=OptimizerOptions(grad_tol=1e-11, max_iters=20000))
    assert probe.passed
