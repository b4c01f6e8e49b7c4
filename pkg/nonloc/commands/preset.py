"""
`preset`: list, describe or run catalog presets.
"""
import argparse
import json

from nonloc.commands.common import add_preset_flag, common_flags, load_context
from nonloc.commands.demo import run_demo
from nonloc.commands.minimize import run_minimize
from nonloc.commands.semilinear import run_semilinear
from nonloc.errors import ConfigurationError
from nonloc.presets import describe, list_presets

ACTIONS = ["list", "describe", "run"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("preset", parents=[common_flags()], help="list, describe or run presets")
    parser.add_argument("action", choices=ACTIONS)
    parser.add_argument("name", nargs="?", help="preset name (describe, run)")
    add_preset_flag(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.action == "list":
        ctx = load_context(args, "preset")
        payload = [info.model_dump(mode="json") for info in list_presets()]
        print(json.dumps(payload, indent=2))
        ctx.write_json("presets.json", payload)
        return ctx.finish(True, {"action": "list", "presets": [entry["name"] for entry in payload]})

    name = args.name or args.preset
    if not name:
        raise ConfigurationError(f"preset {args.action} needs a preset name")
    ctx = load_context(args, "preset", preset_name=name)
    if args.action == "describe":
        info = describe(name)
        print(json.dumps(info.model_dump(mode="json"), indent=2))
        ctx.write_json("preset.json", info)
        return ctx.finish(True, {"action": "describe", "preset": name, "solver": info.solver})

    instance = ctx.instance()
    solver = instance.preset.solver
    if solver == "minimize":
        return run_minimize(ctx, instance)
    if solver == "fixed_point":
        return run_semilinear(ctx, instance)
    return run_demo(ctx, instance)
