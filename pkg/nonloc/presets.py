"""
Catalog of ready-to-run problems.

Each preset carries its integrand (or semilinear problem), grid and kernel
defaults, collar data, hypothesis audit data and a named residual that
verifies a computed solution.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from nonloc import grid
from nonloc.errors import ConfigurationError
from nonloc.functional import check_coercivity, check_convexity
from nonloc.models import (
    CoercivityData,
    DivergenceForm,
    Domain,
    GridFunction,
    GrowthData,
    GrowthMode,
    Integrand,
    KernelKind,
    KernelTable,
)
from nonloc.operators import nonlocal_laplacian, nonlocal_p_laplacian
from nonloc.schemas import DiagnosticReport, DomainConfig, KernelConfig, KernelType, PresetInfo
from nonloc.semilinear import SemilinearProblem, el_residual, illposed_demo

logger = logging.getLogger(__name__)

REGISTRATION_TRIALS = 2000
GROWTH_RADII = (1.0, 10.0)
COERCIVITY_BAND = 0.5

# min over u of 2u arctan(u) - ln(1 + u^2) + 2u, attained at u = -tan(1)
ARCTAN_POTENTIAL_MIN = 2.0 * math.log(math.cos(1.0))


@dataclass(frozen=True)
class PresetInstance:
    """A preset materialized on a concrete grid and kernel."""
    preset: "Preset"
    domain: Domain
    mu: KernelTable
    boundary: GridFunction
    integrand: Optional[Integrand] = None
    problem: Optional[SemilinearProblem] = None
    coercivity: Optional[CoercivityData] = None
    growth: Optional[GrowthData] = None
    form: Optional[DivergenceForm] = None
    source: Optional[GridFunction] = None
    extras: Dict[str, Any] = field(default_factory=dict)


Builder = Callable[[Domain, KernelTable, GridFunction], Dict[str, Any]]
Residual = Callable[[PresetInstance, GridFunction], np.ndarray]


@dataclass(frozen=True)
class Preset:
    """Catalog entry; `instantiate` builds it on a grid."""
    name: str
    provenance: str
    description: str
    kind: str
    solver: str
    verification: str
    tolerance: float
    domain: DomainConfig
    kernel: KernelConfig
    collar: Callable[[np.ndarray], np.ndarray]
    collar_label: str
    build: Builder
    residual: Optional[Residual] = None
    audits: tuple = ()

    def info(self) -> PresetInfo:
        return PresetInfo(
            name=self.name,
            provenance=self.provenance,
            description=self.description,
            kind=self.kind,
            solver=self.solver,
            verification=self.verification,
            tolerance=self.tolerance,
            domain=self.domain,
            kernel=self.kernel,
            collar=self.collar_label,
            audits=list(self.audits),
        )

    def instantiate(self, domain: Optional[DomainConfig] = None, kernel: Optional[KernelConfig] = None,
                    collar_value: Optional[float] = None, base_dir: Optional[Path] = None,
                    audit: bool = True) -> PresetInstance:
        """
        Build the preset on a grid, optionally overriding its defaults.

        Raises:
            ConfigurationError: If the kernel is unsuitable or the preset fails its own audits
        """
        dcfg = domain or self.domain
        kcfg = kernel or self.kernel
        d = grid.build_domain(dcfg.a, dcfg.b, dcfg.collar_width, dcfg.node_count, dcfg.gamma_prime)
        mu = grid.sample_kernel(kcfg, d, base_dir)
        if mu.kind != KernelKind.TRANSLATION_INVARIANT:
            raise ConfigurationError(f"preset '{self.name}' needs a translation-invariant kernel")

        if collar_value is None:
            collar = np.broadcast_to(np.asarray(self.collar(d.nodes), dtype=float), d.nodes.shape)
        else:
            collar = np.full(d.node_count, float(collar_value))
        boundary = GridFunction(d, np.where(d.interior, 0.0, collar))

        instance = PresetInstance(self, d, mu, boundary, **self.build(d, mu, boundary))
        if audit:
            failed = [r for r in registration_audit(instance) if not r.passed]
            if failed:
                raise ConfigurationError(
                    f"preset '{self.name}' fails its own {failed[0].check} audit "
                    f"(worst margin {failed[0].worst_margin:.3g})"
                )
        logger.debug("instantiated preset %s on %r", self.name, d)
        return instance


# ==================== Helpers ====================

def _zeros(*args):
    return np.zeros(np.broadcast(*args).shape)


def _signed_power(t, q):
    """|t|^(q-2) t for q >= 2."""
    return np.abs(t) ** (q - 2.0) * t


def _zero_table(mu: KernelTable) -> KernelTable:
    return grid.kernel_map(mu, lambda s: np.zeros_like(s), label="zero")


def _band_minimum(table: KernelTable, domain: Domain) -> float:
    return float(np.min(table.matrix[grid.band_mask(domain, COERCIVITY_BAND)]))


def _coercivity(alpha1: KernelTable, alpha2: KernelTable, alpha3: KernelTable,
                p: float, q: float, domain: Domain) -> CoercivityData:
    return CoercivityData(alpha1=alpha1, alpha2=alpha2, alpha3=alpha3, p=p, q=q,
                          C0=_band_minimum(alpha1, domain), delta=COERCIVITY_BAND)


def _measure(domain: Domain) -> float:
    """Quadrature of 1 over Omega plus collar."""
    return float(np.sum(domain.weights))


# ==================== quadratic ====================

def _quadratic(domain: Domain, mu: KernelTable, boundary: GridFunction) -> Dict[str, Any]:
    mu_of = grid.kernel_lookup(mu)
    integrand = Integrand(
        name="quadratic",
        eval=lambda x, z, u, xi: xi ** 2 * mu_of(z),
        du=_zeros,
        dxi=lambda x, z, u, xi: 2.0 * xi * mu_of(z),
        p=2.0,
        claims_convex=True,
        claims_coercive=True,
    )
    zero = _zero_table(mu)
    return {
        "integrand": integrand,
        "coercivity": _coercivity(mu, zero, zero, 2.0, 1.0, domain),
        "growth": GrowthData(mode=GrowthMode.GII, a=zero,
                             beta=grid.kernel_map(mu, lambda s: 2.0 * s, label="2mu"), p=2.0),
    }


# ==================== arctan_semilinear ====================

def _arctan_potential(u):
    return 2.0 * u * np.arctan(u) - np.log1p(u * u) + 2.0 * u


def _arctan(domain: Domain, mu: KernelTable, boundary: GridFunction) -> Dict[str, Any]:
    # Scaled so the discrete Euler-Lagrange equation reads L_mu[u] = f0(x, u)
    kappa = 2.0 / _measure(domain)
    mu_of = grid.kernel_lookup(mu)

    def f0(x, u):
        return 2.0 * (np.arctan(u) + 1.0) / (x ** 2 + 1.0)

    def df0(x, u):
        return 2.0 / ((1.0 + u ** 2) * (x ** 2 + 1.0))

    integrand = Integrand(
        name="arctan_semilinear",
        eval=lambda x, z, u, xi: xi ** 2 * mu_of(z) + kappa * _arctan_potential(u) / (x ** 2 + 1.0),
        du=lambda x, z, u, xi: kappa * f0(x, u) + _zeros(z, xi),
        dxi=lambda x, z, u, xi: 2.0 * xi * mu_of(z),
        p=2.0,
        q=1.0,
        claims_convex=True,
        claims_coercive=True,
    )
    alpha3 = grid.two_point_from_function(
        domain, lambda x, y: kappa * ARCTAN_POTENTIAL_MIN / (x ** 2 + 1.0) + 0.0 * y, label="alpha3")
    majorants = {
        R: grid.two_point_from_function(
            domain,
            lambda x, y, R=R: kappa * (math.pi + 2.0) / (x ** 2 + 1.0) + 2.0 * R * mu_of(y - x),
            label=f"a_{R:g}",
        )
        for R in GROWTH_RADII
    }
    return {
        "integrand": integrand,
        "problem": SemilinearProblem("arctan_semilinear", f0, df0, mu, monotonicity_floor=0.5,
                                     collar=boundary),
        "coercivity": _coercivity(mu, _zero_table(mu), alpha3, 2.0, 1.0, domain),
        "growth": GrowthData(mode=GrowthMode.GI, majorants=majorants),
        "extras": {"kappa": kappa},
    }


def _semilinear_residual(instance: PresetInstance, u: GridFunction) -> np.ndarray:
    return el_residual(instance.problem, u)


# ==================== illposed ====================

def spike(domain: Domain) -> Callable[[np.ndarray], np.ndarray]:
    """|x|^(-1/2), truncated at the grid scale."""
    h = domain.spacing
    return lambda x: np.maximum(np.abs(np.asarray(x, dtype=float)), h) ** -0.5


def _illposed(domain: Domain, mu: KernelTable, boundary: GridFunction) -> Dict[str, Any]:
    h = spike(domain)
    return {
        "problem": SemilinearProblem("illposed", lambda x, u: h(x) - u,
                                     lambda x, u: -np.ones(np.broadcast(x, u).shape),
                                     mu, monotonicity_floor=0.25, collar=boundary),
        "source": GridFunction.from_callable(domain, h),
    }


# ==================== quasilinear_potential ====================

QUASILINEAR_P = 2.0


def _quasilinear(domain: Domain, mu: KernelTable, boundary: GridFunction) -> Dict[str, Any]:
    p = QUASILINEAR_P
    mu_of = grid.kernel_lookup(mu)
    integrand = Integrand(
        name="quasilinear_potential",
        eval=lambda x, z, u, xi: np.abs(xi * mu_of(z)) ** p / p + 0.25 * u ** 4,
        du=lambda x, z, u, xi: u ** 3 + _zeros(x, z, xi),
        dxi=lambda x, z, u, xi: _signed_power(xi, p) * np.abs(mu_of(z)) ** p,
        p=p,
        claims_convex=True,
        claims_coercive=True,
    )
    form = DivergenceForm(
        g_u=lambda x, u, eta: u ** 3 + _zeros(x, eta),
        g_eta=lambda x, u, eta: _signed_power(eta, p),
    )
    zero = _zero_table(mu)
    majorants = {
        R: grid.kernel_map(mu, lambda s, R=R: R ** 3 + R ** (p - 1.0) * np.abs(s) ** p, label=f"a_{R:g}")
        for R in GROWTH_RADII
    }
    return {
        "integrand": integrand,
        "form": form,
        "coercivity": _coercivity(grid.kernel_map(mu, lambda s: np.abs(s) ** p / p), zero, zero,
                                  p, 1.0, domain),
        "growth": GrowthData(mode=GrowthMode.GI, majorants=majorants),
    }


def _quasilinear_residual(instance: PresetInstance, u: GridFunction) -> np.ndarray:
    lhs = nonlocal_p_laplacian(u, instance.mu, QUASILINEAR_P).scalar
    return lhs - _measure(instance.domain) * u.scalar ** 3


# ==================== double_power ====================

DOUBLE_POWER_P = 3.0
DOUBLE_POWER_Q = 2.0


def _double_power(domain: Domain, mu: KernelTable, boundary: GridFunction) -> Dict[str, Any]:
    p, q = DOUBLE_POWER_P, DOUBLE_POWER_Q
    mu_of = grid.kernel_lookup(mu)

    def du(x, z, u, xi):
        return q * _signed_power(u + xi, q) * np.abs(mu_of(z)) ** q

    integrand = Integrand(
        name="double_power",
        eval=lambda x, z, u, xi: np.abs((u + xi) * mu_of(z)) ** q + np.abs(xi * mu_of(z)) ** p,
        du=du,
        dxi=lambda x, z, u, xi: du(x, z, u, xi) + p * _signed_power(xi, p) * np.abs(mu_of(z)) ** p,
        p=p,
        q=q,
        claims_convex=True,
        claims_coercive=True,
    )
    zero = _zero_table(mu)
    # For (p, q) = (3, 2): 2 mu^2 (|u| + |xi|) <= 2 mu^2 + mu^2 (u^2 + xi^2)
    growth = GrowthData(
        mode=GrowthMode.GII,
        a=grid.kernel_map(mu, lambda s: 2.0 * s ** 2, label="a"),
        beta=grid.kernel_map(mu, lambda s: s ** 2 + 3.0 * np.abs(s) ** 3, label="beta"),
        p=p,
    )
    return {
        "integrand": integrand,
        "coercivity": _coercivity(grid.kernel_map(mu, lambda s: np.abs(s) ** p), zero, zero, p, q, domain),
        "growth": growth,
    }


def _double_power_residual(instance: PresetInstance, u: GridFunction) -> np.ndarray:
    p, q = DOUBLE_POWER_P, DOUBLE_POWER_Q
    lhs = nonlocal_p_laplacian(u, instance.mu, p).scalar
    return lhs - (q / p) * grid.row_mass(instance.mu, q) * _signed_power(u.scalar, q)


# ==================== semilinear_convolution ====================

def _potential_derivative(u):
    return 3.0 * u + u ** 3


def _semilinear_convolution(domain: Domain, mu: KernelTable, boundary: GridFunction) -> Dict[str, Any]:
    support = mu.samples != 0
    if not np.any(support):
        raise ConfigurationError("semilinear_convolution needs a kernel with nonempty support")
    s = mu.samples[support]
    if np.any(s ** 2 <= s):
        raise ConfigurationError("semilinear_convolution needs mu^2 > mu on the support of mu")

    constant = grid.difference_mass(mu, 2.0) - grid.difference_mass(mu, 1.0)
    raw = grid.kernel_map(mu, lambda t: t ** 2 - t, label="mu^2 - mu")
    gamma = grid.kernel_map(mu, lambda t: (t ** 2 - t) / constant, label="gamma")
    mu_of = grid.kernel_lookup(mu)

    integrand = Integrand(
        name="semilinear_convolution",
        eval=lambda x, z, u, xi: (1.5 * u ** 2 + 0.25 * u ** 4 + 2.0 * u * xi * mu_of(z)
                                  + (xi * mu_of(z)) ** 2),
        du=lambda x, z, u, xi: _potential_derivative(u) + 2.0 * xi * mu_of(z),
        dxi=lambda x, z, u, xi: 2.0 * u * mu_of(z) + 2.0 * xi * mu_of(z) ** 2,
        p=2.0,
        q=1.0,
        claims_convex=True,
        claims_coercive=True,
    )
    form = DivergenceForm(
        g_u=lambda x, u, eta: _potential_derivative(u) + 2.0 * eta,
        g_eta=lambda x, u, eta: 2.0 * u + 2.0 * eta,
    )
    majorants = {
        R: grid.kernel_map(mu, lambda t, R=R: 3.0 * R + R ** 3 + 2.0 * R * np.abs(t) + 2.0 * R * t ** 2,
                           label=f"a_{R:g}")
        for R in GROWTH_RADII
    }
    # f >= mu^2 xi^2 / 2 - 1/4, since the gap is (u^2 - 1)^2 / 4 + (mu xi + 2u)^2 / 2
    coercivity = _coercivity(grid.kernel_map(mu, lambda t: 0.5 * t ** 2), _zero_table(mu),
                             grid.kernel_map(mu, lambda t: np.full_like(t, -0.25)), 2.0, 1.0, domain)
    return {
        "integrand": integrand,
        "form": form,
        "coercivity": coercivity,
        "growth": GrowthData(mode=GrowthMode.GI, majorants=majorants),
        "extras": {
            "M": constant,
            "M_normalization": grid.difference_mass(raw),
            "gamma_mass": grid.difference_mass(gamma),
            "C": _measure(domain) / (2.0 * constant),
            "gamma": gamma,
        },
    }


def _semilinear_convolution_residual(instance: PresetInstance, u: GridFunction) -> np.ndarray:
    gamma = instance.extras["gamma"]
    return nonlocal_laplacian(u, gamma).scalar - instance.extras["C"] * _potential_derivative(u.scalar)


# ==================== Catalog ====================

OMEGA = {"a": -1.0, "b": 1.0}

CATALOG: Dict[str, Preset] = {
    preset.name: preset
    for preset in [
        Preset(
            name="quadratic",
            provenance="nonlocal Dirichlet energy, the linear model case of the minimization theory",
            description="f = xi^2 mu(z); minimizers solve L_mu[u] = 0 on Omega with u = x on the collar",
            kind="energy",
            solver="minimize",
            verification="nonlocal_laplacian(u)",
            tolerance=1e-8,
            domain=DomainConfig(**OMEGA, collar_width=1.5, node_count=201),
            kernel=KernelConfig(type=KernelType.GAUSSIAN, sigma=0.5),
            collar=lambda x: np.asarray(x, dtype=float),
            collar_label="u = x",
            build=_quadratic,
            residual=lambda inst, u: nonlocal_laplacian(u, inst.mu).scalar,
            audits=("convexity", "coercivity", "growth_GII"),
        ),
        Preset(
            name="arctan_semilinear",
            provenance="semilinear model problem solved by the convolution fixed point",
            description=("L_mu[u] = 2(arctan u + 1)/(x^2 + 1) on Omega = (-1, 1), u = 0 on the collar; "
                         "also the Euler-Lagrange equation of xi^2 mu(z) + k(2u arctan u - ln(1+u^2) + 2u)/(x^2+1)"),
            kind="semilinear",
            solver="fixed_point",
            verification="nonlocal_laplacian(u) - f0(x, u)",
            tolerance=1e-7,
            domain=DomainConfig(**OMEGA, collar_width=3.5, node_count=451),
            kernel=KernelConfig(type=KernelType.GAUSSIAN, sigma=1.0),
            collar=lambda x: np.zeros_like(x),
            collar_label="u = 0",
            build=_arctan,
            residual=_semilinear_residual,
            audits=("convexity", "coercivity", "growth_GI"),
        ),
        Preset(
            name="illposed",
            provenance="convolution equation with unbounded data, obstructed by Young's inequality",
            description="f0(x, u) = h(x) - u with h = |x|^(-1/2) truncated at the grid scale",
            kind="semilinear",
            solver="illposed_demo",
            verification="illposed_demo",
            tolerance=0.0,
            domain=DomainConfig(**OMEGA, collar_width=3.5, node_count=451),
            kernel=KernelConfig(type=KernelType.GAUSSIAN, sigma=1.0),
            collar=lambda x: np.zeros_like(x),
            collar_label="u = 0",
            build=_illposed,
            residual=_semilinear_residual,
        ),
        Preset(
            name="quasilinear_potential",
            provenance="p-Laplacian with a potential, f = |xi mu(z)|^p / p + G(u)",
            description="p = 2, G(u) = u^4/4; minimizers solve L^p_mu[u] = |D| u^3 with u = 1 on the collar",
            kind="energy",
            solver="minimize",
            verification="p_laplacian(u, p=2) - |D| u^3",
            tolerance=1e-6,
            domain=DomainConfig(**OMEGA, collar_width=1.5, node_count=201),
            kernel=KernelConfig(type=KernelType.GAUSSIAN, sigma=1.0),
            collar=lambda x: np.ones_like(x),
            collar_label="u = 1",
            build=_quasilinear,
            residual=_quasilinear_residual,
            audits=("convexity", "coercivity", "growth_GI"),
        ),
        Preset(
            name="double_power",
            provenance="two-power integrand f = |u(y) mu(z)|^q + |xi mu(z)|^p",
            description="(p, q) = (3, 2); Euler-Lagrange equation L^p_mu[u] = (q/p) |mu^q|_1 u|u|^(q-2)",
            kind="energy",
            solver="minimize",
            verification="p_laplacian(u, p=3) - (q/p) |mu^q|_1 u|u|^(q-2)",
            tolerance=1e-6,
            domain=DomainConfig(**OMEGA, collar_width=1.0, node_count=201),
            kernel=KernelConfig(type=KernelType.GAUSSIAN, sigma=1.0),
            collar=lambda x: np.full_like(x, 0.5),
            collar_label="u = 0.5",
            build=_double_power,
            residual=_double_power_residual,
            audits=("convexity", "coercivity", "growth_GII"),
        ),
        Preset(
            name="semilinear_convolution",
            provenance="convolution form of a semilinear equation, f = G(u) + 2u xi mu(z) + (xi mu(z))^2",
            description=("G(u) = 3u^2/2 + u^4/4, mu = 2 on |z| <= 1/2; minimizers solve L_gamma[u] = C g(u) "
                         "with gamma = (mu^2 - mu)/M, M = |mu^2|_1 - |mu|_1, C = |D|/(2M)"),
            kind="energy",
            solver="minimize",
            verification="nonlocal_laplacian_gamma(u) - C g(u)",
            tolerance=1e-6,
            domain=DomainConfig(**OMEGA, collar_width=1.0, node_count=201),
            kernel=KernelConfig(type=KernelType.CONSTANT, value=2.0, horizon=0.5),
            collar=lambda x: np.full_like(x, 0.5),
            collar_label="u = 0.5",
            build=_semilinear_convolution,
            residual=_semilinear_convolution_residual,
            audits=("convexity", "coercivity", "growth_GI"),
        ),
    ]
}


def preset(name: str) -> Preset:
    """
    Raises:
        ConfigurationError: If name is not in the catalog
    """
    try:
        return CATALOG[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset '{name}' (available: {', '.join(sorted(CATALOG))})")


def list_presets() -> List[PresetInfo]:
    return [CATALOG[name].info() for name in sorted(CATALOG)]


def describe(name: str) -> PresetInfo:
    return preset(name).info()


def registration_audit(instance: PresetInstance, trials: int = REGISTRATION_TRIALS,
                       seed: int = 0) -> List[DiagnosticReport]:
    """Convexity and (where declared) coercivity audits of a preset integrand."""
    f = instance.integrand
    if f is None:
        return []
    reports = []
    if f.claims_convex:
        reports.append(check_convexity(f, instance.domain, trials, seed))
    if f.claims_coercive and instance.coercivity is not None:
        reports.append(check_coercivity(f, instance.coercivity, instance.domain, trials, seed))
    return reports


def verify_preset(instance: PresetInstance, solution: GridFunction, trials: int = 100,
                  seed: int = 0) -> DiagnosticReport:
    """
    Evaluate the preset's named residual on Omega and the free collar and
    compare it with the preset tolerance.
    """
    p = instance.preset
    if p.solver == "illposed_demo":
        return illposed_demo(instance.source, instance.mu, trials, seed)
    residual = p.residual(instance, solution)
    free = instance.domain.free
    masked = np.where(free, np.abs(residual), 0.0)
    worst = int(np.argmax(masked))
    norm = float(masked[worst])
    return DiagnosticReport(
        check=f"verify_{p.name}",
        passed=norm <= p.tolerance,
        worst_margin=p.tolerance - norm,
        witness={"node": worst, "x": float(instance.domain.nodes[worst]), "residual": float(residual[worst])},
        details={"verification": p.verification, "residual_inf": norm, "tolerance": p.tolerance},
    )
