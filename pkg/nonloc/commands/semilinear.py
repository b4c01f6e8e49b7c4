"""
`semilinear`: solve L_mu[u] = f0(x, u) for a preset by the convolution fixed point.
"""
import argparse

import numpy as np

from nonloc.commands.common import RunContext, add_preset_flag, common_flags, load_context
from nonloc.errors import ConfigurationError
from nonloc.models import GridFunction
from nonloc.presets import PresetInstance, verify_preset
from nonloc.semilinear import el_residual, solve_fixed_point, summarize


def register(subparsers) -> None:
    parser = subparsers.add_parser("semilinear", parents=[common_flags()],
                                   help="solve a semilinear preset by fixed-point iteration")
    add_preset_flag(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    ctx = load_context(args, "semilinear")
    return run_semilinear(ctx, ctx.instance())


def run_semilinear(ctx: RunContext, instance: PresetInstance) -> int:
    """Solve, verify and write solution, trace, report and residual."""
    problem = instance.problem
    if problem is None:
        raise ConfigurationError(f"preset '{instance.preset.name}' is not a semilinear problem")
    solver = ctx.config.solver
    result = solve_fixed_point(problem, None, solver.fixed_point, solver.fast_convolution)
    report = verify_preset(instance, result.u_star) if instance.preset.solver == "fixed_point" else None

    if ctx.emits("solution_csv"):
        ctx.write_csv("solution.csv", result.u_star)
    if ctx.emits("trace_json"):
        ctx.write_json("trace.json", summarize(result))
    if ctx.emits("report_json") and report is not None:
        ctx.write_json("report.json", report)
    if ctx.emits("residual_csv"):
        interior = instance.domain.interior
        residual = np.where(interior, el_residual(problem, result.u_star), 0.0)
        ctx.write_csv("residual.csv", GridFunction(instance.domain, residual))

    metrics = {
        "preset": instance.preset.name,
        "converged": result.converged,
        "termination_reason": result.termination_reason.value,
        "iterations": result.iterations,
        "residual_inf": result.residual_inf,
        "residual_tol": result.residual_tol,
        "damping": result.damping,
        "last_contraction": result.contraction_estimates[-1] if result.contraction_estimates else None,
    }
    if report is not None:
        metrics["verified"] = report.passed
    return ctx.finish(result.converged, metrics)
