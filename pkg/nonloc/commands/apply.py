"""
`apply`: evaluate one nonlocal operator on a grid function file.
"""
import argparse
from pathlib import Path

from pydantic import ValidationError

from nonloc import grid, io
from nonloc.commands.common import common_flags, load_context
from nonloc.errors import ConfigurationError, PreconditionError
from nonloc.models import TwoPointField
from nonloc.operators import (
    convolve,
    nonlocal_divergence,
    nonlocal_gradient,
    nonlocal_laplacian,
    nonlocal_p_laplacian,
)
from nonloc.schemas import DomainConfig, KernelConfig, KernelType

OPERATORS = ["gradient", "divergence", "laplacian", "p_laplacian", "convolve"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("apply", parents=[common_flags()],
                                   help="apply a nonlocal operator to a grid function")
    parser.add_argument("operator", choices=OPERATORS)
    parser.add_argument("--u", type=Path, help="grid function CSV (x,u1[,u2,...])")
    parser.add_argument("--field", type=Path, help="two-point field CSV i,j,alpha (divergence)")
    parser.add_argument("--domain", help="a,b,collar_width,node_count")
    parser.add_argument("--kernel", choices=[t.value for t in KernelType], help="kernel type")
    parser.add_argument("--sigma", type=float, help="gaussian width")
    parser.add_argument("--value", type=float, help="constant kernel value")
    parser.add_argument("--horizon", type=float, help="constant kernel horizon")
    parser.add_argument("--kernel-file", type=Path, help="kernel table CSV")
    parser.add_argument("--p", type=float, default=2.0, help="p-Laplacian exponent")
    parser.set_defaults(handler=run)


def _domain_override(text: str, base: DomainConfig) -> DomainConfig:
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigurationError(f"--domain expects a,b,collar_width,node_count, got '{text}'")
    try:
        return DomainConfig(a=float(parts[0]), b=float(parts[1]), collar_width=float(parts[2]),
                            node_count=int(parts[3]), gamma_prime=base.gamma_prime)
    except (ValueError, ValidationError) as exc:
        raise ConfigurationError(f"invalid --domain '{text}': {exc}")


def _kernel_override(args: argparse.Namespace, base: KernelConfig) -> KernelConfig:
    flags = {"type": args.kernel, "sigma": args.sigma, "value": args.value, "horizon": args.horizon,
             "file": str(args.kernel_file.resolve()) if args.kernel_file else None}
    given = {key: value for key, value in flags.items() if value is not None}
    if not given:
        return base
    try:
        return KernelConfig.model_validate({**base.model_dump(), **given})
    except ValidationError as exc:
        raise ConfigurationError(f"invalid kernel flags: {exc.errors()[0]['msg']}")


def run(args: argparse.Namespace) -> int:
    ctx = load_context(args, "apply")
    config = ctx.config
    domain_cfg = _domain_override(args.domain, config.domain) if args.domain else config.domain
    kernel_cfg = _kernel_override(args, config.kernel)
    ctx.config = config.model_copy(update={"domain": domain_cfg, "kernel": kernel_cfg})

    domain = grid.build_domain(domain_cfg.a, domain_cfg.b, domain_cfg.collar_width,
                               domain_cfg.node_count, domain_cfg.gamma_prime)
    mu = grid.sample_kernel(kernel_cfg, domain, ctx.base_dir)
    name = f"{args.operator}.csv"

    if args.operator == "divergence":
        if args.field is None:
            raise ConfigurationError("apply divergence needs --field")
        field = TwoPointField(domain, io.read_two_point_csv(args.field, domain.node_count))
        result = nonlocal_divergence(field, mu)
        ctx.write_csv(name, result)
        return ctx.finish(True, {"operator": args.operator, "linf": grid.linf_norm(result)})

    if args.u is None:
        raise ConfigurationError(f"apply {args.operator} needs --u")
    u = io.read_grid_function(args.u, domain)

    if args.operator == "gradient":
        if u.components != 1:
            raise PreconditionError("gradient output is written for scalar grid functions only")
        values = nonlocal_gradient(u, mu).values[:, :, 0]
        io.write_two_point_csv(ctx.out_dir / name, values)
        ctx.artifacts.append(name)
        return ctx.finish(True, {"operator": args.operator, "linf": float(abs(values).max())})

    if args.operator == "laplacian":
        result = nonlocal_laplacian(u, mu)
    elif args.operator == "p_laplacian":
        result = nonlocal_p_laplacian(u, mu, args.p)
    else:
        result = convolve(u, mu, config.solver.fast_convolution)
    ctx.write_csv(name, result)
    return ctx.finish(True, {"operator": args.operator, "linf": grid.linf_norm(result)})
