"""
Minimization of the discrete energy over the admissible class (values prescribed
on the fixed collar) by projected steepest descent with Armijo backtracking.
"""
import itertools
import logging
from typing import List, Optional

import numpy as np

from nonloc import grid
from nonloc.errors import EvaluationError, PreconditionError
from nonloc.functional import energy, energy_change, weak_residual_vector
from nonloc.models import Domain, GridFunction, Integrand, MinimizeResult, TerminationReason
from nonloc.schemas import DiagnosticReport, MinimizeSummary, OptimizerOptions

logger = logging.getLogger(__name__)


def assemble_gradient(u: GridFunction, f: Integrand, d: Optional[Domain] = None) -> GridFunction:
    """
    Nodal gradient g_i = w_i r_i on Omega and the free collar, 0 on the fixed collar.

    sum_i g_i phi_i equals gateaux(u, phi) for every admissible phi.
    """
    domain = d or u.domain
    residual = weak_residual_vector(u, f, domain).scalar
    g = domain.weights * residual
    g[domain.fixed] = 0.0
    return GridFunction(domain, g)


def initial_iterate(u0: GridFunction, init: str) -> np.ndarray:
    """
    Starting values: collar data from u0 and, on free nodes, zero / the mean
    fixed-collar value / u0 itself.
    """
    domain = u0.domain
    if u0.components != 1:
        raise PreconditionError(f"minimization is scalar (N = 1), got N = {u0.components}")
    values = u0.scalar.copy()
    if init == "given":
        return values
    fixed = domain.fixed
    fill = 0.0
    if init == "boundary_extend" and np.any(fixed):
        fill = float(np.mean(values[fixed]))
    values[domain.free] = fill
    return values


def minimize(f: Integrand, d: Domain, u0: GridFunction,
             opts: Optional[OptimizerOptions] = None) -> MinimizeResult:
    """
    Projected steepest descent with Armijo backtracking.

    Each iteration tries the previous accepted step times step_growth (capped
    at max_step) and halves it (backtrack factor) until
    F[u - s g] <= F[u] - c s |g|^2. For integrands claiming convexity, a step
    whose slope along the search line is still <= -c |g|^2 is accepted as well;
    by convexity that slope bounds the decrease from above.

    Args:
        f: Integrand
        d: Domain
        u0: Boundary data (its fixed-collar values are held bit-exactly)
        opts: Optimizer options

    Returns:
        MinimizeResult

    Raises:
        PreconditionError: If u0 has N > 1 or the initial energy is non-finite
    """
    opts = opts or OptimizerOptions()
    if u0.domain.node_count != d.node_count:
        raise PreconditionError("boundary data lives on a different grid than the domain")
    values = initial_iterate(u0, opts.init)
    free = d.free

    try:
        current = energy(GridFunction(d, values), f, d)
        g = assemble_gradient(GridFunction(d, values), f, d).scalar
    except EvaluationError as exc:
        raise PreconditionError(f"initial iterate has non-finite energy: {exc.detail}")

    trace: List[float] = [current]
    step = opts.initial_step
    reason = TerminationReason.MAX_ITERS
    iterations = 0
    logger.info("minimize %s: M=%d, E0=%.17g", f.name, d.node_count, current)

    for k in range(opts.max_iters):
        grad_inf = float(np.max(np.abs(g)))
        if grad_inf <= opts.grad_tol:
            reason = TerminationReason.GRADIENT_TOL
            break
        gg = float(np.sum(g * g))
        step = opts.initial_step if k == 0 else min(step * opts.step_growth, opts.max_step)

        accepted = None
        while step >= opts.min_step:
            with np.errstate(over="ignore", invalid="ignore"):
                trial = np.where(free, values - step * g, values)
            if not np.all(np.isfinite(trial)):
                step *= opts.backtrack
                continue
            try:
                change = energy_change(GridFunction(d, values), GridFunction(d, trial), f)
            except EvaluationError:
                change = np.nan
            if np.isfinite(change) and change <= -opts.armijo_c * step * gg:
                accepted = (trial, change, None)
                break
            if f.claims_convex and np.isfinite(change):
                g_trial = assemble_gradient(GridFunction(d, trial), f, d).scalar
                if float(np.sum(g_trial * g)) >= opts.armijo_c * gg:
                    accepted = (trial, change, g_trial)
                    break
            step *= opts.backtrack

        if accepted is None:
            reason = TerminationReason.LINE_SEARCH_FAILURE
            break

        values, change, g_next = accepted
        current = current + change
        trace.append(current)
        iterations = k + 1
        if not np.isfinite(current):
            reason = TerminationReason.NON_FINITE
            break
        if g_next is None:
            try:
                g_next = assemble_gradient(GridFunction(d, values), f, d).scalar
            except EvaluationError:
                reason = TerminationReason.NON_FINITE
                break
        g = g_next
        logger.debug("iteration %d: step=%.3g E=%.17g |g|=%.3g", iterations, step, current, grad_inf)
    else:
        iterations = opts.max_iters

    grad_inf = float(np.max(np.abs(g)))
    converged = reason == TerminationReason.GRADIENT_TOL
    logger.info("minimize %s: %s after %d iterations, |g|=%.3g", f.name, reason.value, iterations, grad_inf)
    return MinimizeResult(
        u_star=GridFunction(d, values),
        energy_trace=trace,
        grad_inf_norm=grad_inf,
        iterations=iterations,
        converged=converged,
        termination_reason=reason,
    )


def random_start(u0: GridFunction, rng: np.random.Generator, spread: float = 1.0) -> GridFunction:
    """u0 on the fixed collar, uniform noise around the mean collar value elsewhere."""
    domain = u0.domain
    values = initial_iterate(u0, "boundary_extend")
    free = domain.free
    values[free] += rng.uniform(-spread, spread, size=int(np.count_nonzero(free)))
    return GridFunction(domain, values)


def uniqueness_probe(f: Integrand, d: Domain, u0: GridFunction, n_starts: int = 3, seed: int = 0,
                     opts: Optional[OptimizerOptions] = None, tol: float = 1e-4) -> DiagnosticReport:
    """
    Minimize from n_starts random admissible iterates and compare the results.

    A start that fails to converge marks the probe inconclusive.

    Raises:
        PreconditionError: If n_starts < 2
    """
    if n_starts < 2:
        raise PreconditionError(f"uniqueness probe needs at least 2 starts, got {n_starts}")
    opts = (opts or OptimizerOptions()).model_copy(update={"init": "given"})
    rng = np.random.default_rng(seed)
    results = [minimize(f, d, random_start(u0, rng), opts) for _ in range(n_starts)]

    failed = [k for k, r in enumerate(results) if not r.converged]
    distance = 0.0
    for r1, r2 in itertools.combinations(results, 2):
        distance = max(distance, grid.linf_norm(r1.u_star.scalar - r2.u_star.scalar))
    inconclusive = bool(failed)
    passed = not inconclusive and distance <= tol
    return DiagnosticReport(
        check="uniqueness",
        passed=passed,
        worst_margin=float(tol - distance),
        witness={"failed_starts": failed},
        trials=n_starts,
        seed=seed,
        inconclusive=inconclusive,
        details={
            "integrand": f.name,
            "max_pairwise_linf": distance,
            "tolerance": tol,
            "termination_reasons": [r.termination_reason.value for r in results],
        },
    )


def summarize(result: MinimizeResult, max_trace: Optional[int] = None) -> MinimizeSummary:
    """JSON view of a run; a truncated trace keeps its head and the final value."""
    trace = list(result.energy_trace)
    truncated = max_trace is not None and len(trace) > max_trace
    if truncated:
        trace = trace[:max_trace - 1] + [trace[-1]]
    return MinimizeSummary(
        converged=result.converged,
        termination_reason=result.termination_reason,
        iterations=result.iterations,
        grad_inf_norm=result.grad_inf_norm,
        final_energy=result.energy_trace[-1],
        energy_trace=trace,
        trace_truncated=truncated,
    )
