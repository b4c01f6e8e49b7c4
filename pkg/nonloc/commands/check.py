"""
`check`: sampled audits of a preset integrand.
"""
import argparse

from nonloc.commands.common import add_preset_flag, common_flags, load_context
from nonloc.errors import ConfigurationError
from nonloc.functional import check_coercivity, check_convexity, check_derivatives, check_growth
from nonloc.minimize import uniqueness_probe

CHECKS = ["convexity", "coercivity", "growth", "derivatives", "uniqueness"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("check", parents=[common_flags()],
                                   help="audit convexity, coercivity, growth or derivatives of a preset")
    parser.add_argument("which", choices=CHECKS)
    add_preset_flag(parser)
    parser.add_argument("--trials", type=int, help="samples (default: solver.trials)")
    parser.add_argument("--box", type=float, nargs=2, metavar=("LO", "HI"), default=(-10.0, 10.0),
                        help="sample range of u and xi")
    parser.add_argument("--starts", type=int, default=3, help="random starts for the uniqueness probe")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    ctx = load_context(args, "check")
    instance = ctx.instance(audit=False)
    f = instance.integrand
    if f is None:
        raise ConfigurationError(f"preset '{instance.preset.name}' has no energy integrand to audit")
    trials = args.trials or ctx.config.solver.trials
    box = tuple(args.box)
    if not box[0] < box[1]:
        raise ConfigurationError(f"--box needs LO < HI, got {box}")
    domain, seed = instance.domain, ctx.seed

    if args.which == "convexity":
        report = check_convexity(f, domain, trials, seed, box)
    elif args.which == "coercivity":
        if instance.coercivity is None:
            raise ConfigurationError(f"preset '{instance.preset.name}' declares no coercivity data")
        report = check_coercivity(f, instance.coercivity, domain, trials, seed, box)
    elif args.which == "growth":
        if instance.growth is None:
            raise ConfigurationError(f"preset '{instance.preset.name}' declares no growth data")
        report = check_growth(f, instance.growth, domain, trials, seed, box)
    elif args.which == "derivatives":
        report = check_derivatives(f, domain, trials, seed, box)
    else:
        report = uniqueness_probe(f, domain, instance.boundary, args.starts, seed,
                                  ctx.config.solver.optimizer)

    if ctx.emits("report_json"):
        ctx.write_json("report.json", report)
    return ctx.finish(report.passed, {
        "preset": instance.preset.name,
        "check": report.check,
        "worst_margin": report.worst_margin,
        "trials": report.trials,
        "inconclusive": report.inconclusive,
    })
