"""
Nonlocal energy F[u] = sum_i sum_j w_i w_j f(x_i, y_j - x_i, u_i, u_j - u_i),
its first variation, Euler-Lagrange residuals and sampled audits of
convexity, coercivity and derivative growth.

The sign convention is xi = u(y) - u(x) throughout, and the first variation is
the epsilon-derivative of F[u + eps*phi] at eps = 0.
"""
import logging
from typing import Dict, Optional, Tuple

import numpy as np

from nonloc import grid
from nonloc.errors import ConfigurationError, EvaluationError, PreconditionError
from nonloc.models import (
    CoercivityData,
    DivergenceForm,
    Domain,
    GridFunction,
    GrowthData,
    GrowthMode,
    Integrand,
    KernelTable,
    TwoPointField,
)
from nonloc.operators import nonlocal_divergence
from nonloc.parallel import map_rows
from nonloc.schemas import DiagnosticReport

logger = logging.getLogger(__name__)

DEFAULT_BOX = (-10.0, 10.0)
CHECK_TOL = 1e-10


def _scalar(u: GridFunction) -> np.ndarray:
    if u.components != 1:
        raise PreconditionError(f"energy functionals are scalar (N = 1), got N = {u.components}")
    return u.scalar


def _pair_args(domain: Domain, values: np.ndarray, block: np.ndarray):
    """Arguments (x, z, u, xi) for rows `block` against all columns."""
    x = domain.nodes
    X = x[block, None]
    U = values[block, None]
    return X, x[None, :] - X, U, values[None, :] - U


def _reverse_pair_args(domain: Domain, values: np.ndarray, block: np.ndarray):
    """Arguments (y, x - y, u(y), u(x) - u(y)) for rows `block`: entry [i, j] is the (j, i) pair."""
    x = domain.nodes
    X = x[block, None]
    U = values[block, None]
    return x[None, :], X - x[None, :], values[None, :], U - values[None, :]


def _checked(values: np.ndarray, shape, block: np.ndarray, what: str) -> np.ndarray:
    values = np.broadcast_to(np.asarray(values, dtype=float), shape)
    if not np.all(np.isfinite(values)):
        r, j = np.argwhere(~np.isfinite(values))[0]
        raise EvaluationError(f"non-finite {what}", location=(int(block[r]), int(j)))
    return values


# ==================== Energy & first variation ====================

def energy(u: GridFunction, f: Integrand, d: Optional[Domain] = None) -> float:
    """
    Double trapezoid quadrature of the integrand over (Omega + collar)^2.

    Raises:
        EvaluationError: If the integrand is non-finite at some node pair
    """
    domain = d or u.domain
    values = _scalar(u)
    w = domain.weights
    m = domain.node_count

    def rows(block):
        F = _checked(f.eval(*_pair_args(domain, values, block)), (block.size, m), block, "integrand")
        return np.sum(F * w[None, :], axis=1)

    return float(np.sum(w * map_rows(rows, m)))


def energy_change(u: GridFunction, v: GridFunction, f: Integrand) -> float:
    """
    F[v] - F[u] summed pair by pair.

    Pairs whose arguments did not change contribute exactly zero, which keeps
    the difference accurate long after F[v] and F[u] agree to working precision.
    """
    domain = u.domain
    old_values, new_values = _scalar(u), _scalar(v)
    w = domain.weights
    m = domain.node_count

    def rows(block):
        shape = (block.size, m)
        new = _checked(f.eval(*_pair_args(domain, new_values, block)), shape, block, "integrand")
        old = _checked(f.eval(*_pair_args(domain, old_values, block)), shape, block, "integrand")
        return np.sum((new - old) * w[None, :], axis=1)

    return float(np.sum(w * map_rows(rows, m)))


def check_admissible(phi: GridFunction) -> None:
    """Variations must vanish on the fixed collar."""
    fixed = phi.domain.fixed
    if np.any(phi.values[fixed] != 0.0):
        node = int(np.argwhere(np.any(phi.values != 0.0, axis=1) & fixed)[0][0])
        raise PreconditionError(f"variation is nonzero on the fixed collar (node {node})")


def gateaux(u: GridFunction, phi: GridFunction, f: Integrand, d: Optional[Domain] = None) -> float:
    """
    First variation sum_ij w_i w_j [phi_i f_u + (phi_j - phi_i) f_xi].

    Raises:
        PreconditionError: If phi is nonzero on a fixed collar node
    """
    check_admissible(phi)
    domain = d or u.domain
    values = _scalar(u)
    directions = _scalar(phi)
    w = domain.weights
    m = domain.node_count

    def rows(block):
        args = _pair_args(domain, values, block)
        du = _checked(f.du(*args), (block.size, m), block, "du")
        dxi = _checked(f.dxi(*args), (block.size, m), block, "dxi")
        phi_i = directions[block, None]
        variation = phi_i * du + (directions[None, :] - phi_i) * dxi
        return np.sum(variation * w[None, :], axis=1)

    return float(np.sum(w * map_rows(rows, m)))


def weak_residual_vector(u: GridFunction, f: Integrand, d: Optional[Domain] = None) -> GridFunction:
    """
    Per-node Euler-Lagrange density

        r_i = sum_j w_j [f_u(i, j) - f_xi(i, j) + f_xi(j, i)],

    where (i, j) means arguments (x_i, y_j - x_i, u_i, u_j - u_i). For every phi
    vanishing on the fixed collar, sum_i w_i phi_i r_i equals gateaux(u, phi).
    Fixed collar nodes are reported as 0.
    """
    domain = d or u.domain
    values = _scalar(u)
    w = domain.weights
    m = domain.node_count

    def rows(block):
        shape = (block.size, m)
        args = _pair_args(domain, values, block)
        du = _checked(f.du(*args), shape, block, "du")
        outgoing = _checked(f.dxi(*args), shape, block, "dxi")
        incoming = _checked(f.dxi(*_reverse_pair_args(domain, values, block)), shape, block, "dxi")
        return np.sum((du - outgoing + incoming) * w[None, :], axis=1)

    residual = map_rows(rows, m)
    residual[domain.fixed] = 0.0
    return GridFunction(domain, residual)


def strong_el_residual(u: GridFunction, f: Integrand, d: Optional[Domain] = None) -> GridFunction:
    """Strong-form residual on Omega and the free collar (same field as the weak density)."""
    return weak_residual_vector(u, f, d)


def divergence_form_residual(u: GridFunction, form: DivergenceForm, mu: KernelTable) -> GridFunction:
    """
    Residual of integrands f = g(x, u, xi * mu(z)) written with the nonlocal
    divergence: r(x) = sum_j w_j g_u(x, u(x), eta) - D_mu[g_eta](x), with
    eta(x, y) = (u(y) - u(x)) mu(x, y).
    """
    domain = u.domain
    values = _scalar(u)
    x = domain.nodes
    K = mu.matrix
    eta = (values[None, :] - values[:, None]) * K
    X, U = x[:, None], values[:, None]
    source = np.sum(np.broadcast_to(form.g_u(X, U, eta), eta.shape) * domain.weights[None, :], axis=1)
    flux = TwoPointField(domain, np.broadcast_to(form.g_eta(X, U, eta), eta.shape))
    residual = source - nonlocal_divergence(flux, mu).scalar
    residual[domain.fixed] = 0.0
    return GridFunction(domain, residual)


# ==================== Sampled audits ====================

def _sample(domain: Domain, trials: int, seed: int, box: Tuple[float, float]):
    rng = np.random.default_rng(seed)
    i, j = grid.sample_points(domain, trials, rng)
    x = domain.nodes[i]
    z = domain.nodes[j] - x
    return rng, i, j, x, z


def _witness(index: int, **arrays) -> Dict[str, float]:
    return {name: (int(a[index]) if a.dtype.kind in "iu" else float(a[index]))
            for name, a in arrays.items()}


def check_derivatives(f: Integrand, domain: Domain, trials: int = 100, seed: int = 0,
                      box: Tuple[float, float] = DEFAULT_BOX, rtol: float = 1e-6) -> DiagnosticReport:
    """
    Compare du/dxi with central differences of eval at random points.
    """
    rng, i, j, x, z = _sample(domain, trials, seed, box)
    u = rng.uniform(*box, size=trials)
    xi = rng.uniform(*box, size=trials)
    step_u = 1e-5 * np.maximum(1.0, np.abs(u))
    step_xi = 1e-5 * np.maximum(1.0, np.abs(xi))

    fd_u = (f.eval(x, z, u + step_u, xi) - f.eval(x, z, u - step_u, xi)) / (2 * step_u)
    fd_xi = (f.eval(x, z, u, xi + step_xi) - f.eval(x, z, u, xi - step_xi)) / (2 * step_xi)
    an_u = np.broadcast_to(f.du(x, z, u, xi), (trials,))
    an_xi = np.broadcast_to(f.dxi(x, z, u, xi), (trials,))

    err = np.maximum(np.abs(fd_u - an_u) / np.maximum(1.0, np.abs(an_u)),
                     np.abs(fd_xi - an_xi) / np.maximum(1.0, np.abs(an_xi)))
    worst = int(np.argmax(err))
    return DiagnosticReport(
        check="derivatives",
        passed=bool(err[worst] <= rtol),
        worst_margin=float(rtol - err[worst]),
        witness=_witness(worst, i=i, j=j, x=x, z=z, u=u, xi=xi),
        trials=trials,
        seed=seed,
        sample_box=box,
        details={"integrand": f.name, "max_relative_error": float(err[worst])},
    )


def check_convexity(f: Integrand, domain: Domain, trials: int = 10000, seed: int = 0,
                    box: Tuple[float, float] = DEFAULT_BOX, tol: float = CHECK_TOL) -> DiagnosticReport:
    """
    Search for violations of joint convexity of (u, xi) -> f(x, z, u, xi).

    The margin t f(P) + (1-t) f(Q) - f(tP + (1-t)Q) must be >= -tol (tol is
    scaled by the magnitude of the values compared).
    """
    rng, i, j, x, z = _sample(domain, trials, seed, box)
    u1, xi1 = rng.uniform(*box, size=trials), rng.uniform(*box, size=trials)
    u2, xi2 = rng.uniform(*box, size=trials), rng.uniform(*box, size=trials)
    t = rng.uniform(0.0, 1.0, size=trials)

    f1 = f.eval(x, z, u1, xi1)
    f2 = f.eval(x, z, u2, xi2)
    mid = f.eval(x, z, t * u1 + (1 - t) * u2, t * xi1 + (1 - t) * xi2)
    chord = t * f1 + (1 - t) * f2
    margin = chord - mid
    slack = tol * np.maximum(1.0, np.abs(t * f1) + np.abs((1 - t) * f2))

    worst = int(np.argmin(margin + slack))
    violations = int(np.count_nonzero(margin < -slack))
    logger.info("convexity audit of %s: %d violations in %d samples", f.name, violations, trials)
    return DiagnosticReport(
        check="convexity",
        passed=violations == 0,
        worst_margin=float(np.min(margin)),
        witness=_witness(worst, i=i, j=j, x=x, z=z, u=u1, xi=xi1, u2=u2, xi2=xi2, t=t),
        trials=trials,
        seed=seed,
        sample_box=box,
        details={"integrand": f.name, "violations": violations, "tolerance": tol},
    )


def validate_coercivity_data(c: CoercivityData, domain: Domain) -> None:
    """
    Raises:
        ConfigurationError: If q, p, the alpha1 band bound or the collar width are inconsistent
    """
    if not 1 <= c.q < c.p:
        raise ConfigurationError(f"coercivity needs 1 <= q < p, got q={c.q}, p={c.p}")
    if not c.C0 > 0:
        raise ConfigurationError(f"coercivity needs C0 > 0, got {c.C0}")
    if domain.collar_width < c.delta:
        raise ConfigurationError(
            f"collar_width {domain.collar_width} is smaller than the coercivity band delta {c.delta}"
        )
    band = grid.band_mask(domain, c.delta)
    low = c.alpha1.matrix[band]
    if np.any(low < c.C0):
        raise ConfigurationError(
            f"alpha1 drops to {float(np.min(low))} < C0={c.C0} on the band |y - x| <= {c.delta}"
        )


def check_coercivity(f: Integrand, c: CoercivityData, domain: Domain, trials: int = 10000,
                     seed: int = 0, box: Tuple[float, float] = DEFAULT_BOX,
                     tol: float = CHECK_TOL) -> DiagnosticReport:
    """
    Sampled check of f >= alpha1 |xi|^p + alpha2 |u|^q + alpha3.
    """
    validate_coercivity_data(c, domain)
    rng, i, j, x, z = _sample(domain, trials, seed, box)
    u = rng.uniform(*box, size=trials)
    xi = rng.uniform(*box, size=trials)

    lower = (c.alpha1.matrix[i, j] * np.abs(xi) ** c.p
             + c.alpha2.matrix[i, j] * np.abs(u) ** c.q
             + c.alpha3.matrix[i, j])
    value = np.broadcast_to(f.eval(x, z, u, xi), (trials,))
    margin = value - lower
    slack = tol * np.maximum(1.0, np.abs(lower))
    worst = int(np.argmin(margin + slack))
    violations = int(np.count_nonzero(margin < -slack))
    return DiagnosticReport(
        check="coercivity",
        passed=violations == 0,
        worst_margin=float(np.min(margin)),
        witness=_witness(worst, i=i, j=j, x=x, z=z, u=u, xi=xi),
        trials=trials,
        seed=seed,
        sample_box=box,
        details={"integrand": f.name, "violations": violations, "p": c.p, "q": c.q,
                 "C0": c.C0, "delta": c.delta},
    )


def check_growth(f: Integrand, data: GrowthData, domain: Domain, trials: int = 10000,
                 seed: int = 0, box: Tuple[float, float] = DEFAULT_BOX,
                 tol: float = CHECK_TOL) -> DiagnosticReport:
    """
    Sampled check that |f_u| and |f_xi| stay below the declared majorant.

    GI: for each radius R, |u|, |xi| <= R and the bound is a_R(x, z).
    GII: (u, xi) in the sample box and the bound is a + |beta| (|u|^(p-1) + |xi|^(p-1)).
    """
    rng, i, j, x, z = _sample(domain, trials, seed, box)

    cases = []
    if data.mode == GrowthMode.GI:
        if not data.majorants:
            raise ConfigurationError("GI audit needs at least one majorant a_R")
        for radius, table in sorted(data.majorants.items()):
            u = rng.uniform(-radius, radius, size=trials)
            xi = rng.uniform(-radius, radius, size=trials)
            cases.append((float(radius), u, xi, table.matrix[i, j]))
    else:
        if data.a is None or data.beta is None or data.p is None:
            raise ConfigurationError("GII audit needs a, beta and p")
        u = rng.uniform(*box, size=trials)
        xi = rng.uniform(*box, size=trials)
        bound = data.a.matrix[i, j] + np.abs(data.beta.matrix[i, j]) * (
            np.abs(u) ** (data.p - 1) + np.abs(xi) ** (data.p - 1))
        cases.append((None, u, xi, bound))

    worst_margin, worst_ratio, witness, violations = np.inf, 0.0, {}, 0
    for radius, u, xi, bound in cases:
        size = np.maximum(np.abs(np.broadcast_to(f.du(x, z, u, xi), (trials,))),
                          np.abs(np.broadcast_to(f.dxi(x, z, u, xi), (trials,))))
        margin = bound - size
        slack = tol * np.maximum(1.0, np.abs(bound))
        violations += int(np.count_nonzero(margin < -slack))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(bound > 0, size / np.where(bound > 0, bound, 1.0),
                             np.where(size > slack, np.inf, 0.0))
        k = int(np.argmin(margin + slack))
        if margin[k] < worst_margin:
            worst_margin = float(margin[k])
            witness = _witness(k, i=i, j=j, x=x, z=z, u=u, xi=xi)
            if radius is not None:
                witness["R"] = radius
        worst_ratio = max(worst_ratio, float(np.max(ratio)))

    return DiagnosticReport(
        check=f"growth_{data.mode.value}",
        passed=violations == 0,
        worst_margin=worst_margin,
        witness=witness,
        trials=trials * len(cases),
        seed=seed,
        sample_box=None if data.mode == GrowthMode.GI else box,
        details={"integrand": f.name, "violations": violations, "worst_ratio": worst_ratio,
                 "radii": [c[0] for c in cases if c[0] is not None]},
    )
