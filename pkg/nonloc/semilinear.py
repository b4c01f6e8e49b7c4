"""
Semilinear problems L_mu[u] = f0(x, u) solved by the convolution fixed point
u = g(x, u * mu), where g inverts v -> m v + f0(x, v) / 2 pointwise.

m is the discrete kernel mass seen from each node (1 in the continuous setting),
so the fixed point satisfies the discrete Laplacian identity exactly.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, lsqr

from nonloc import grid
from nonloc.errors import InversionError, ParameterError, PreconditionError
from nonloc.models import Domain, GridFunction, KernelKind, KernelTable, SolveResult, TerminationReason
from nonloc.operators import convolve, nonlocal_laplacian
from nonloc.schemas import DiagnosticReport, FixedPointOptions, SolveSummary

logger = logging.getLogger(__name__)

MASS_TOL = 1e-6
BRACKET_LIMIT = 1e6
MAX_NEWTON = 200
DIVERGENCE_WINDOW = 50
DIVERGENCE_GROWTH = 10.0
ROUGH_RATIO = 1.5
RESIDUAL_FACTOR = 10.0

Source = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SemilinearProblem:
    """
    L_mu[u] = f0(x, u) on Omega with u prescribed on the collar.

    Attributes:
        name: Label used in logs and reports
        f0: Right-hand side f0(x, u), vectorized
        df0: Partial derivative of f0 in u, vectorized
        mu: Translation-invariant kernel of unit mass
        monotonicity_floor: m0 > 0 with m + df0/2 >= m0 on the sample box
        collar: Collar data (zeros when omitted)
        box: Range of u sampled when checking the floor
    """
    name: str
    f0: Source
    df0: Source
    mu: KernelTable
    monotonicity_floor: float = 0.5
    collar: Optional[GridFunction] = None
    box: Tuple[float, float] = (-10.0, 10.0)

    @property
    def domain(self) -> Domain:
        return self.mu.domain

    @property
    def masses(self) -> np.ndarray:
        """Per-node kernel mass m_i."""
        return grid.row_mass(self.mu)

    def initial(self) -> GridFunction:
        """Collar data on the collar, zero on Omega."""
        values = np.zeros(self.domain.node_count)
        if self.collar is not None:
            values[~self.domain.interior] = self.collar.scalar[~self.domain.interior]
        return GridFunction(self.domain, values)

    def rhs(self, u: GridFunction) -> np.ndarray:
        return np.broadcast_to(self.f0(self.domain.nodes, u.scalar), (self.domain.node_count,))

    def validate(self, trials: int = 1000, seed: int = 0) -> None:
        """
        Raises:
            PreconditionError: If mu is not translation-invariant, its mass on
                Omega is not 1 within 1e-6, or the monotonicity floor fails
        """
        if self.mu.kind != KernelKind.TRANSLATION_INVARIANT:
            raise PreconditionError("semilinear problems need a translation-invariant kernel")
        if not self.monotonicity_floor > 0:
            raise PreconditionError(f"monotonicity floor must be positive, got {self.monotonicity_floor}")
        interior = self.domain.interior
        mass = self.masses[interior]
        worst = int(np.argmax(np.abs(mass - 1.0)))
        if abs(mass[worst] - 1.0) > MASS_TOL:
            raise PreconditionError(
                f"kernel mass {mass[worst]!r} at x={self.domain.nodes[interior][worst]!r} is not 1 "
                f"within {MASS_TOL} (widen the collar or refine the grid)"
            )

        rng = np.random.default_rng(seed)
        idx = rng.choice(np.flatnonzero(interior), size=trials)
        v = rng.uniform(*self.box, size=trials)
        slope = self.masses[idx] + 0.5 * np.broadcast_to(self.df0(self.domain.nodes[idx], v), (trials,))
        if np.min(slope) < self.monotonicity_floor:
            k = int(np.argmin(slope))
            raise PreconditionError(
                f"{self.name}: m + df0/2 = {slope[k]!r} < {self.monotonicity_floor} "
                f"at x={self.domain.nodes[idx[k]]!r}, u={v[k]!r}"
            )


# ==================== Pointwise inversion ====================

def _bracket(residual, w, scale, direction, pending):
    """
    Walk the `pending` points from w in `direction` with doubling steps until
    the residual changes sign. Returns the edges and the points that never did.
    """
    edge = w.copy()
    pending = pending.copy()
    distance = scale.copy()
    while np.any(pending):
        if np.any(distance[pending] > BRACKET_LIMIT * scale[pending]):
            return edge, pending & (distance > BRACKET_LIMIT * scale)
        edge[pending] = w[pending] + direction * distance[pending]
        pending &= ~(direction * residual(edge) >= 0)
        distance[pending] *= 2.0
    return edge, pending


def invert(p: SemilinearProblem, x: np.ndarray, w: np.ndarray, tol: float = 1e-14,
           mass: Optional[np.ndarray] = None, nodes: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Solve m v + f0(x, v) / 2 = w for v at every point.

    Safeguarded Newton starting at v = w; steps leaving the sign-change
    bracket are replaced by bisection. The bracket is grown geometrically from
    v = w.

    Args:
        p: Problem
        x: Points
        w: Right-hand sides
        tol: Residual tolerance, relative to max(1, |w|)
        mass: Per-point m (1 if omitted)
        nodes: Node indices reported in errors

    Raises:
        InversionError: If no sign change is found within 1e6 of w or Newton stalls
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    mass = np.ones_like(w) if mass is None else np.broadcast_to(np.asarray(mass, dtype=float), w.shape)
    scale = np.maximum(1.0, np.abs(w))

    def residual(v):
        return mass * v + 0.5 * np.broadcast_to(p.f0(x, v), v.shape) - w

    def fail(k, detail):
        node = None if nodes is None else int(nodes[k])
        raise InversionError(f"{p.name}: {detail}", node=node, x=float(x[k]))

    start = residual(w)
    lo, hi = w.copy(), w.copy()
    below = start > 0
    if np.any(below):
        edge, failed = _bracket(residual, w, scale, -1.0, below)
        if np.any(failed):
            fail(int(np.argmax(failed)), "no sign change below w (f0 not monotone)")
        lo[below] = edge[below]
    above = start < 0
    if np.any(above):
        edge, failed = _bracket(residual, w, scale, 1.0, above)
        if np.any(failed):
            fail(int(np.argmax(failed)), "no sign change above w (f0 not monotone)")
        hi[above] = edge[above]

    v = w.copy()
    for _ in range(MAX_NEWTON):
        r = residual(v)
        done = (np.abs(r) <= tol * scale) | (hi - lo <= 4 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi)))
        if np.all(done):
            return v
        lo = np.where(r < 0, v, lo)
        hi = np.where(r > 0, v, hi)
        slope = mass + 0.5 * np.broadcast_to(p.df0(x, v), v.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = v - r / slope
        unsafe = ~(slope > 0) | ~(newton >= lo) | ~(newton <= hi)
        v = np.where(done, v, np.where(unsafe, 0.5 * (lo + hi), newton))
    fail(int(np.argmax(~done)), f"no convergence in {MAX_NEWTON} Newton steps")


def invert_pointwise(p: SemilinearProblem, x: float, w: float, tol: float = 1e-14, mass: float = 1.0) -> float:
    """Scalar form of invert: v with |m v + f0(x, v)/2 - w| <= tol."""
    return float(invert(p, np.array([x]), np.array([w]), tol, np.array([mass]))[0])


# ==================== Fixed point ====================

def el_residual(p: SemilinearProblem, u: GridFunction) -> np.ndarray:
    """L_mu[u] - f0(x, u) at every node."""
    return nonlocal_laplacian(u, p.mu).scalar - p.rhs(u)


def solve_fixed_point(p: SemilinearProblem, u_init: Optional[GridFunction] = None,
                      opts: Optional[FixedPointOptions] = None, fast: Optional[bool] = None) -> SolveResult:
    """
    Iterate u <- (1 - theta) u + theta g(x, u * mu) on Omega, collar values held.

    Stops when the update sup-norm drops to opts.tol, after opts.max_iters
    sweeps, or when the update grew tenfold over 50 sweeps.
    A run counts as converged when the update tolerance was met and the
    residual is within RESIDUAL_FACTOR * opts.tol, recorded as residual_tol.

    Raises:
        PreconditionError: If the problem is invalid or u_init disagrees with the collar data
        InversionError: If the pointwise inverse fails at some node
    """
    opts = opts or FixedPointOptions()
    p.validate()
    domain = p.domain
    interior = domain.interior
    start = p.initial()
    if u_init is not None:
        if np.any(u_init.scalar[~interior] != start.scalar[~interior]):
            raise PreconditionError("initial iterate differs from the collar data on the collar")
        start = u_init

    values = start.scalar.copy()
    x = domain.nodes[interior]
    mass = p.masses[interior]
    nodes = np.flatnonzero(interior)
    theta = opts.damping
    updates: List[float] = []
    estimates: List[float] = []
    reason = TerminationReason.MAX_ITERS
    iterations = opts.max_iters
    logger.info("fixed point %s: M=%d, tol=%g, damping=%g", p.name, domain.node_count, opts.tol, theta)

    for k in range(opts.max_iters):
        w = convolve(GridFunction(domain, values), p.mu, fast).scalar[interior]
        new = invert(p, x, w, opts.inversion_tol, mass, nodes)
        if theta < 1.0:
            new = (1.0 - theta) * values[interior] + theta * new
        if not np.all(np.isfinite(new)):
            reason, iterations = TerminationReason.DIVERGED, k
            break
        update = float(np.max(np.abs(new - values[interior]))) if new.size else 0.0
        values[interior] = new
        if updates and updates[-1] > 0:
            estimates.append(update / updates[-1])
        updates.append(update)
        logger.debug("sweep %d: update=%.3g", k, update)
        if update <= opts.tol:
            reason, iterations = TerminationReason.UPDATE_TOL, k
            break
        if k >= DIVERGENCE_WINDOW and update >= DIVERGENCE_GROWTH * updates[k - DIVERGENCE_WINDOW]:
            reason, iterations = TerminationReason.DIVERGED, k
            break

    u_star = GridFunction(domain, values)
    residual = grid.linf_norm(el_residual(p, u_star), interior)
    residual_tol = RESIDUAL_FACTOR * opts.tol
    converged = reason == TerminationReason.UPDATE_TOL and residual <= residual_tol
    logger.info("fixed point %s: %s after %d sweeps, residual %.3g", p.name, reason.value, iterations, residual)
    return SolveResult(
        u_star=u_star,
        residual_inf=residual,
        iterations=iterations,
        contraction_estimates=estimates,
        converged=converged,
        termination_reason=reason,
        residual_tol=residual_tol,
        damping=theta,
    )


def summarize(result: SolveResult) -> SolveSummary:
    return SolveSummary(
        converged=result.converged,
        termination_reason=result.termination_reason,
        iterations=result.iterations,
        residual_inf=result.residual_inf,
        residual_tol=result.residual_tol,
        damping=result.damping,
        contraction_estimates=result.contraction_estimates,
    )


# ==================== Regularity surrogate ====================

# Central difference stencils: offsets, coefficients, power of h in the denominator
STENCILS: Dict[int, Tuple[Tuple[int, ...], Tuple[float, ...], int]] = {
    1: ((-1, 1), (-0.5, 0.5), 1),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0), 2),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5), 3),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0), 4),
}


def difference_quotient(u: GridFunction, order: int) -> np.ndarray:
    """
    Central difference of the given order at the Omega nodes whose stencil stays in Omega.
    """
    offsets, coefficients, power = STENCILS[order]
    domain = u.domain
    idx = np.flatnonzero(domain.interior)
    reach = max(abs(o) for o in offsets)
    centers = idx[reach:idx.size - reach] if idx.size > 2 * reach else idx[:0]
    values = u.scalar
    total = np.zeros(centers.size)
    for offset, c in zip(offsets, coefficients):
        total += c * values[centers + offset]
    return total / domain.spacing ** power


def smoothness_diagnostic(u: GridFunction, d: Domain, k: int,
                          refine: Callable[[Domain], GridFunction]) -> DiagnosticReport:
    """
    Compare the sup of finite-difference derivatives of orders 1..k on the
    grid and on its refinement (2M - 1 nodes).

    Args:
        u: Solution on d
        d: Domain
        k: Highest order, 1..4
        refine: Produces the solution on the refined domain (re-solve or re-sample)

    Raises:
        ParameterError: If k is outside 1..4
    """
    if not 1 <= k <= 4:
        raise ParameterError(f"smoothness diagnostic needs 1 <= k <= 4, got {k}")
    fine_domain = grid.refine(d)
    fine = refine(fine_domain)

    coarse_max, fine_max, ratios = [], [], []
    for order in range(1, k + 1):
        c = float(np.max(np.abs(difference_quotient(u, order)), initial=0.0))
        f = float(np.max(np.abs(difference_quotient(fine, order)), initial=0.0))
        if c > 0:
            ratio = f / c
        else:
            ratio = 1.0 if f == 0 else float("inf")
        coarse_max.append(c)
        fine_max.append(f)
        ratios.append(ratio)

    worst = int(np.argmax(np.abs(np.log(np.maximum(ratios, 1e-300)))))
    rough = [order for order, r in zip(range(1, k + 1), ratios) if r > ROUGH_RATIO]
    return DiagnosticReport(
        check="smoothness",
        passed=not rough,
        worst_margin=float(ROUGH_RATIO - max(ratios)),
        witness={"order": worst + 1, "ratio": ratios[worst]},
        trials=k,
        details={
            "coarse_max": coarse_max,
            "fine_max": fine_max,
            "ratios": ratios,
            "rough_orders": rough,
            "spacing": d.spacing,
        },
    )


# ==================== Ill-posedness ====================

def _restricted_convolution(mu: KernelTable) -> LinearOperator:
    """u on Omega (zero elsewhere) -> (u * mu) on Omega."""
    domain = mu.domain
    interior = domain.interior
    n = int(np.count_nonzero(interior))
    K = (mu.matrix.T * domain.weights[None, :])[np.ix_(interior, interior)]
    return LinearOperator((n, n), matvec=lambda v: K @ v, rmatvec=lambda v: K.T @ v, dtype=float)


def illposed_demo(h: GridFunction, mu: KernelTable, trials: int = 100, seed: int = 0,
                  iter_lim: Optional[int] = None) -> DiagnosticReport:
    """
    Convolution equation u * mu = h on Omega.

    Checks the discrete Young bound |u * mu|_inf <= |u|_1 |mu|_inf on random u,
    then solves the equation in the least-squares sense and reports the l1 norm
    any near-solution is forced to have.

    Raises:
        PreconditionError: If mu is not a bounded translation-invariant kernel
    """
    if mu.kind != KernelKind.TRANSLATION_INVARIANT or not np.isfinite(mu.sup):
        raise PreconditionError("ill-posedness demo needs a bounded translation-invariant kernel")
    domain = mu.domain
    sup_mu = mu.sup
    rng = np.random.default_rng(seed)

    violations, worst_ratio = 0, 0.0
    for _ in range(trials):
        u = GridFunction(domain, rng.standard_normal(domain.node_count))
        lhs = grid.linf_norm(convolve(u, mu))
        rhs = grid.lp_norm(u, 1) * sup_mu
        worst_ratio = max(worst_ratio, lhs / rhs if rhs > 0 else 0.0)
        if lhs > rhs * (1 + 1e-12):
            violations += 1

    interior = domain.interior
    target = h.scalar[interior]
    A = _restricted_convolution(mu)
    solution = lsqr(A, target, atol=1e-14, btol=1e-14, iter_lim=iter_lim or 10 * target.size)
    v, iterations = solution[0], int(solution[2])
    residual = A.matvec(v) - target

    l1_u = float(np.sum(domain.weights[interior] * np.abs(v)))
    linf_h = float(np.max(np.abs(target)))
    residual_inf = float(np.max(np.abs(residual)))
    forced = (linf_h - residual_inf) / sup_mu
    honored = l1_u >= forced * (1 - 1e-12)

    return DiagnosticReport(
        check="illposed",
        passed=violations == 0 and honored,
        worst_margin=float(l1_u - forced),
        witness={"young_worst_ratio": worst_ratio},
        trials=trials,
        seed=seed,
        details={
            "young_violations": violations,
            "l1_u": l1_u,
            "linf_h": linf_h,
            "linf_mu": sup_mu,
            "residual_inf": residual_inf,
            "forced_l1_bound": forced,
            "required_l1": linf_h / sup_mu,
            "lsqr_iterations": iterations,
            "spacing": domain.spacing,
        },
    )
