"""
Tests for nonloc.presets: the catalog, registration audits and the named residual checks.
"""
import numpy as np
import pytest

from nonloc import grid
from nonloc.errors import ConfigurationError
from nonloc.functional import strong_el_residual
from nonloc.minimize import minimize
from nonloc.models import GridFunction
from nonloc.operators import nonlocal_p_laplacian
from nonloc.presets import (
    CATALOG,
    describe,
    list_presets,
    preset,
    registration_audit,
    verify_preset,
)
from nonloc.schemas import KernelConfig, KernelType, OptimizerOptions

NAMES = ["arctan_semilinear", "double_power", "illposed", "quadratic", "quasilinear_potential",
         "semilinear_convolution"]


def on_grid(name, node_count):
    entry = preset(name)
    return entry.instantiate(entry.domain.model_copy(update={"node_count": node_count}), audit=False)


# ==================== Catalog ====================

def test_list_presets_is_sorted_and_complete():
    assert [info.name for info in list_presets()] == NAMES
    assert set(CATALOG) == set(NAMES)


def test_unknown_preset_names_the_alternatives():
    with pytest.raises(ConfigurationError, match="available"):
        preset("does_not_exist")


def test_describe_reports_solver_and_defaults():
    info = describe("arctan_semilinear")
    assert info.solver == "fixed_point"
    assert info.kind == "semilinear"
    assert info.domain.collar_width == 3.5
    assert info.domain.node_count == 451
    assert info.tolerance == 1e-7
    assert describe("illposed").solver == "illposed_demo"
    assert describe("quadratic").audits == ["convexity", "coercivity", "growth_GII"]


@pytest.mark.parametrize("name", [n for n in NAMES if n != "illposed"])
def test_presets_pass_their_registration_audit(name):
    inst = preset(name).instantiate()
    reports = registration_audit(inst)
    assert reports
    assert all(r.passed for r in reports)


def test_collar_value_override():
    inst = preset("double_power").instantiate(collar_value=2.0, audit=False)
    d = inst.domain
    assert np.all(inst.boundary.scalar[~d.interior] == 2.0)
    assert np.all(inst.boundary.scalar[d.interior] == 0.0)


def test_two_point_kernel_is_rejected(tmp_path):
    entry = preset("quadratic")
    domain = entry.domain.model_copy(update={"node_count": 21})
    d = grid.build_domain(domain.a, domain.b, domain.collar_width, domain.node_count)
    alpha = grid.two_point_from_function(d, lambda x, y: np.exp(-(x - y) ** 2))
    grid.write_kernel_table(alpha, tmp_path / "alpha.csv")
    kernel = KernelConfig(type=KernelType.TWO_POINT, file="alpha.csv")
    with pytest.raises(ConfigurationError, match="translation-invariant"):
        entry.instantiate(domain, kernel, base_dir=tmp_path)


# ==================== Residual checks ====================

def test_double_power_residual_of_zero_is_exactly_zero():
    inst = on_grid("double_power", 41)
    residual = inst.preset.residual(inst, GridFunction.zeros(inst.domain))
    assert np.all(residual == 0.0)


def test_semilinear_convolution_constants_are_consistent():
    inst = preset("semilinear_convolution").instantiate(audit=False)
    extras = inst.extras
    assert extras["M_normalization"] == pytest.approx(extras["M"], rel=1e-10)
    assert extras["gamma_mass"] == pytest.approx(1.0, rel=1e-10)
    assert extras["C"] == pytest.approx(float(np.sum(inst.domain.weights)) / (2.0 * extras["M"]), rel=1e-12)
    assert extras["M"] > 0


def test_semilinear_convolution_needs_mu_squared_above_mu():
    entry = preset("semilinear_convolution")
    kernel = KernelConfig(type=KernelType.CONSTANT, value=0.5, horizon=0.5)
    with pytest.raises(ConfigurationError, match="mu\\^2 > mu"):
        entry.instantiate(kernel=kernel, audit=False)


def test_arctan_energy_and_equation_share_their_residual():
    inst = on_grid("arctan_semilinear", 91)
    rng = np.random.default_rng(4)
    values = np.where(inst.domain.interior, rng.uniform(-1.0, 1.0, inst.domain.node_count), 0.0)
    u = GridFunction(inst.domain, values)
    strong = strong_el_residual(u, inst.integrand).scalar
    named = inst.preset.residual(inst, u)
    interior = inst.domain.interior
    np.testing.assert_allclose(strong[interior], -2.0 * named[interior], rtol=0, atol=1e-12)


def test_verify_preset_reports_the_worst_node():
    inst = on_grid("quadratic", 41)
    report = verify_preset(inst, inst.boundary)
    assert not report.passed
    assert report.details["residual_inf"] > inst.preset.tolerance
    assert inst.domain.free[report.witness["node"]]


def test_constant_one_fails_the_arctan_equation():
    inst = on_grid("arctan_semilinear", 91)
    ones = GridFunction(inst.domain, np.ones(inst.domain.node_count))
    report = verify_preset(inst, ones)
    assert not report.passed
    # L_mu[1] = 0, so the residual is the source term, largest at x = 0
    assert report.details["residual_inf"] == pytest.approx(2.0 * (np.pi / 4.0 + 1.0), rel=1e-12)
    assert report.witness["x"] == pytest.approx(0.0, abs=1e-12)


def test_verify_preset_runs_the_demo_for_the_illposed_preset():
    inst = on_grid("illposed", 181)
    report = verify_preset(inst, GridFunction.zeros(inst.domain), trials=10)
    assert report.check == "illposed"
    assert report.passed


@pytest.mark.slow
def test_quasilinear_minimizer_satisfies_its_equation():
    inst = on_grid("quasilinear_potential", 101)
    result = minimize(inst.integrand, inst.domain, inst.boundary, OptimizerOptions(grad_tol=1e-10, max_iters=20000))
    assert result.converged
    report = verify_preset(inst, result.u_star)
    assert report.passed
    assert report.details["residual_inf"] <= 1e-6


@pytest.mark.slow
def test_double_power_minimizer_satisfies_its_equation_and_not_the_swapped_one():
    inst = on_grid("double_power", 41)
    result = minimize(inst.integrand, inst.domain, inst.boundary, OptimizerOptions(grad_tol=1e-10, max_iters=20000))
    assert result.converged
    report = verify_preset(inst, result.u_star)
    assert report.passed
    # exponents swapped: L^q[u] = (p/q) |mu^q|_1 u|u|^(p-2) with (p, q) = (3, 2)
    u = result.u_star.scalar
    swapped = nonlocal_p_laplacian(result.u_star, inst.mu, 2.0).scalar \
        - 1.5 * grid.row_mass(inst.mu, 2.0) * u * np.abs(u)
    assert np.max(np.abs(swapped[inst.domain.free])) > 1e-2
