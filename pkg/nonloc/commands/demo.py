"""
`demo-illposed`: Young-bound obstruction for convolution equations with
unbounded data, followed across grid refinements.
"""
import argparse
from typing import List

from nonloc.commands.common import RunContext, add_preset_flag, common_flags, load_context
from nonloc.models import GridFunction
from nonloc.presets import PresetInstance, spike
from nonloc.schemas import DiagnosticReport
from nonloc.semilinear import illposed_demo

DEFAULT_LEVELS = 3
DEFAULT_TRIALS = 100


def register(subparsers) -> None:
    parser = subparsers.add_parser("demo-illposed", parents=[common_flags()],
                                   help="ill-posedness demo for u * mu = h with unbounded h")
    add_preset_flag(parser)
    parser.add_argument("--levels", type=int, default=DEFAULT_LEVELS, help="grids (each refines the last)")
    parser.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="random u for the Young bound")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    ctx = load_context(args, "demo-illposed")
    if ctx.config.problem is None:
        ctx = load_context(args, "demo-illposed", preset_name="illposed")
    return run_demo(ctx, ctx.instance(audit=False), args.levels, args.trials)


def run_demo(ctx: RunContext, instance: PresetInstance, levels: int = DEFAULT_LEVELS,
             trials: int = DEFAULT_TRIALS) -> int:
    """Run the demo on `levels` grids, each with 2M - 1 nodes of the previous one."""
    reports: List[DiagnosticReport] = []
    domain_cfg = ctx.config.domain
    current = instance
    for level in range(max(1, levels)):
        if level:
            domain_cfg = domain_cfg.model_copy(update={"node_count": 2 * domain_cfg.node_count - 1})
            current = instance.preset.instantiate(domain_cfg, ctx.config.kernel,
                                                  ctx.config.problem.collar_value, ctx.base_dir, audit=False)
        h = current.source or GridFunction.from_callable(current.domain, spike(current.domain))
        reports.append(illposed_demo(h, current.mu, trials, ctx.seed))

    bounds = [r.details["required_l1"] for r in reports]
    growth = [b / a for a, b in zip(bounds, bounds[1:])]
    if ctx.emits("report_json"):
        ctx.write_json("report.json", {
            "levels": [r.model_dump(mode="json") for r in reports],
            "required_l1_growth": growth,
        })
    return ctx.finish(all(r.passed for r in reports), {
        "preset": instance.preset.name,
        "levels": len(reports),
        "required_l1": bounds,
        "required_l1_growth": growth,
        "forced_l1_bound": [r.details["forced_l1_bound"] for r in reports],
        "young_violations": sum(r.details["young_violations"] for r in reports),
    })
