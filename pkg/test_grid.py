"""
Tests for nonloc.grid: domain construction, quadrature, norms and kernel sampling.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from nonloc import grid
from nonloc.errors import ConfigurationError, DataError
from nonloc.models import GridFunction, KernelKind, Region
from nonloc.schemas import KernelConfig, KernelType


# ==================== Domain ====================

def test_build_domain_labels_omega_and_collar(domain):
    inside = (domain.nodes >= -1.0 - 1e-12) & (domain.nodes <= 1.0 + 1e-12)
    assert np.array_equal(domain.interior, inside)
    assert domain.region_counts() == {"interior": 21, "collar_fixed": 20, "collar_free": 0}
    assert domain.spacing == pytest.approx(0.1)


def test_endpoints_belong_to_omega(domain):
    for endpoint in (-1.0, 1.0):
        k = int(np.argmin(np.abs(domain.nodes - endpoint)))
        assert domain.interior[k]


def test_weights_integrate_constants_exactly(domain):
    assert grid.integrate(1.0, domain) == pytest.approx(domain.measure, rel=1e-14)
    assert grid.integrate(domain.nodes, domain) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("count", [41, 81, 161])
def test_closed_region_integral_is_second_order(count):
    d = grid.build_domain(0.0, 1.0, 0.5, count)
    h = d.spacing
    closed = grid.integrate(d.nodes ** 2, d, Region.INTERIOR, closed=True)
    assert closed - 1.0 / 3.0 == pytest.approx(h * h / 6.0, rel=1e-8)
    # full-grid weights give Omega's end nodes a whole h
    open_sum = grid.integrate(d.nodes ** 2, d, Region.INTERIOR)
    assert open_sum - closed == pytest.approx(0.5 * h, rel=1e-10)


def test_closed_integral_over_all_nodes_matches_the_grid_weights(domain, rng):
    values = rng.uniform(-1.0, 1.0, domain.node_count)
    assert grid.integrate(values, domain, closed=True) == pytest.approx(grid.integrate(values, domain), rel=1e-13)


def test_closed_integral_ignores_isolated_nodes(domain):
    mask = np.zeros(domain.node_count, dtype=bool)
    mask[[3, 10, 11]] = True
    assert grid.integrate(1.0, domain, mask, closed=True) == pytest.approx(domain.spacing, rel=1e-14)


@pytest.mark.parametrize("a,b,width,count", [
    (1.0, 1.0, 1.0, 41),
    (-1.0, 1.0, 0.0, 41),
    (-1.0, 1.0, 1.0, 2),
])
def test_build_domain_rejects_bad_geometry(a, b, width, count):
    with pytest.raises(ConfigurationError):
        grid.build_domain(a, b, width, count)


def test_collar_with_a_single_node_is_rejected():
    # spacing 0.55 leaves only the end node in each collar band
    with pytest.raises(ConfigurationError, match="collar nodes"):
        grid.build_domain(-1.0, 1.0, 0.1, 5)


def test_gamma_prime_marks_free_collar_nodes():
    d = grid.build_domain(-1.0, 1.0, 1.0, 41, [(1.5, 2.0)])
    free = d.mask(Region.COLLAR_FREE)
    assert np.count_nonzero(free) == 6
    assert np.all(d.nodes[free] >= 1.5 - 1e-12)
    assert np.array_equal(d.free, d.interior | free)
    assert not np.any(d.fixed & d.free)


@pytest.mark.parametrize("intervals", [
    [(0.0, 0.5)],
    [(1.2, 1.6), (1.5, 1.9)],
    [(1.6, 1.6)],
])
def test_gamma_prime_rejects_bad_intervals(intervals):
    with pytest.raises(ConfigurationError):
        grid.build_domain(-1.0, 1.0, 1.0, 41, intervals)


def test_refine_keeps_every_node(domain):
    fine = grid.refine(domain)
    assert fine.node_count == 2 * domain.node_count - 1
    assert_allclose(fine.nodes[::2], domain.nodes, atol=1e-14)
    assert fine.spacing == pytest.approx(domain.spacing / 2)


# ==================== Norms ====================

def test_lp_norm_of_constant(domain):
    u = GridFunction(domain, np.full(domain.node_count, 3.0))
    assert grid.lp_norm(u, 2) == pytest.approx(3.0 * domain.measure ** 0.5)
    # 21 Omega nodes, each carrying the full-grid weight h
    assert grid.lp_norm(u, 1, Region.INTERIOR) == pytest.approx(3.0 * 21 * domain.spacing)


def test_lp_norm_rejects_p_below_one(domain):
    with pytest.raises(ConfigurationError):
        grid.lp_norm(GridFunction.zeros(domain), 0.5)


def test_linf_norm_respects_region(domain):
    values = np.zeros(domain.node_count)
    values[0] = 7.0
    values[20] = -2.0
    u = GridFunction(domain, values)
    assert grid.linf_norm(u) == 7.0
    assert grid.linf_norm(u, Region.INTERIOR) == 2.0


def test_weighted_seminorm_vanishes_on_constants(domain, mu):
    u = GridFunction(domain, np.full(domain.node_count, -4.0))
    assert grid.weighted_seminorm(u, mu, 2.0) == 0.0
    v = GridFunction(domain, domain.nodes)
    assert grid.weighted_seminorm(v, mu, 2.0) > 0.0


# ==================== Kernels ====================

def test_gaussian_kernel_is_symmetric_and_nonnegative(mu):
    assert mu.kind == KernelKind.TRANSLATION_INVARIANT
    assert mu.symmetric and mu.nonneg
    assert np.array_equal(mu.matrix, mu.matrix.T)


def test_constant_kernel_support_is_decided_on_offsets(domain):
    spec = KernelConfig(type=KernelType.CONSTANT, value=2.0, horizon=0.5)
    mu = grid.sample_kernel(spec, domain)
    assert np.count_nonzero(mu.samples) == 11
    assert grid.difference_mass(mu) == pytest.approx(2.0 * 11 * domain.spacing)
    assert grid.difference_mass(mu, 2.0) == pytest.approx(4.0 * 11 * domain.spacing)


def test_row_mass_is_one_on_omega_with_a_wide_collar(wide_domain, wide_mu):
    mass = grid.row_mass(wide_mu)
    assert np.max(np.abs(mass[wide_domain.interior] - 1.0)) < 1e-6
    assert np.all(mass[~wide_domain.interior] < 1.0 + 1e-12)


def test_kernel_lookup_matches_the_table(domain, mu):
    mu_of = grid.kernel_lookup(mu)
    z = domain.nodes[None, :] - domain.nodes[:, None]
    assert np.array_equal(mu_of(z), mu.matrix)


def test_kernel_lookup_rejects_two_point_kernels(domain):
    alpha = grid.two_point_from_function(domain, lambda x, y: np.exp(-(x - y) ** 2))
    with pytest.raises(ConfigurationError):
        grid.kernel_lookup(alpha)


def test_kernel_table_file_is_read_back_exactly(tmp_path, domain, mu):
    path = tmp_path / "mu.csv"
    grid.write_kernel_table(mu, path)
    again = grid.sample_kernel(KernelConfig(type=KernelType.TABLE, file="mu.csv"), domain, tmp_path)
    assert np.array_equal(again.samples, mu.samples)


def test_kernel_table_on_the_wrong_grid_is_rejected(tmp_path, domain, mu):
    path = tmp_path / "mu.csv"
    grid.write_kernel_table(mu, path)
    other = grid.build_domain(-1.0, 1.0, 1.0, 31)
    with pytest.raises(DataError):
        grid.sample_kernel(KernelConfig(type=KernelType.TABLE, file=str(path)), other)


def test_two_point_kernel_file(tmp_path, domain):
    alpha = grid.two_point_from_function(domain, lambda x, y: 1.0 + x * y)
    path = tmp_path / "alpha.csv"
    grid.write_kernel_table(alpha, path)
    again = grid.sample_kernel(KernelConfig(type=KernelType.TWO_POINT, file=str(path)), domain)
    assert again.kind == KernelKind.TWO_POINT
    assert np.array_equal(again.samples, alpha.samples)


def test_band_mask_counts_pairs_within_delta(domain):
    band = grid.band_mask(domain, 0.5)
    assert band[20, 15] and band[20, 25]
    assert not band[20, 26]
