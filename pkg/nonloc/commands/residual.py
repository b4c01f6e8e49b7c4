"""
`residual`: Euler-Lagrange residual of a given solution file.
"""
import argparse
from pathlib import Path

import numpy as np

from nonloc import io
from nonloc.commands.common import add_preset_flag, common_flags, load_context
from nonloc.functional import strong_el_residual
from nonloc.models import GridFunction
from nonloc.presets import verify_preset
from nonloc.semilinear import el_residual


def register(subparsers) -> None:
    parser = subparsers.add_parser("residual", parents=[common_flags()],
                                   help="evaluate the Euler-Lagrange residual of a solution")
    add_preset_flag(parser)
    parser.add_argument("--u", type=Path, required=True, help="solution CSV (x,u1)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    ctx = load_context(args, "residual")
    instance = ctx.instance(audit=False)
    u = io.read_grid_function(args.u, instance.domain)

    if instance.integrand is not None:
        residual = strong_el_residual(u, instance.integrand)
    else:
        values = el_residual(instance.problem, u)
        residual = GridFunction(instance.domain, np.where(instance.domain.interior, values, 0.0))
    report = verify_preset(instance, u, seed=ctx.seed)

    if ctx.emits("residual_csv"):
        ctx.write_csv("residual.csv", residual)
    if ctx.emits("report_json"):
        ctx.write_json("report.json", report)
    return ctx.finish(report.passed, {
        "preset": instance.preset.name,
        "verification": instance.preset.verification,
        "residual_inf": report.details.get("residual_inf"),
        "tolerance": instance.preset.tolerance,
    })
