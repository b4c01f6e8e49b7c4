"""
`minimize`: minimize a preset energy by projected steepest descent.
"""
import argparse

from nonloc import grid
from nonloc.commands.common import RunContext, add_preset_flag, common_flags, load_context
from nonloc.errors import ConfigurationError
from nonloc.functional import strong_el_residual
from nonloc.minimize import minimize, summarize
from nonloc.presets import PresetInstance, verify_preset


def register(subparsers) -> None:
    parser = subparsers.add_parser("minimize", parents=[common_flags()],
                                   help="minimize the energy of a preset")
    add_preset_flag(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    ctx = load_context(args, "minimize")
    return run_minimize(ctx, ctx.instance())


def run_minimize(ctx: RunContext, instance: PresetInstance) -> int:
    """Minimize, verify and write solution, trace, report and residual."""
    f = instance.integrand
    if f is None:
        raise ConfigurationError(f"preset '{instance.preset.name}' has no energy integrand")
    result = minimize(f, instance.domain, instance.boundary, ctx.config.solver.optimizer)
    report = verify_preset(instance, result.u_star)

    if ctx.emits("solution_csv"):
        ctx.write_csv("solution.csv", result.u_star)
    if ctx.emits("trace_json"):
        ctx.write_json("trace.json", summarize(result, ctx.config.output.max_trace))
    if ctx.emits("report_json"):
        ctx.write_json("report.json", report)
    if ctx.emits("residual_csv"):
        ctx.write_csv("residual.csv", strong_el_residual(result.u_star, f))

    return ctx.finish(result.converged, {
        "preset": instance.preset.name,
        "converged": result.converged,
        "termination_reason": result.termination_reason.value,
        "iterations": result.iterations,
        "grad_inf_norm": result.grad_inf_norm,
        "final_energy": result.energy_trace[-1],
        "verification_residual_inf": report.details.get("residual_inf"),
        "verified": report.passed,
        "solution_linf": grid.linf_norm(result.u_star),
    })
