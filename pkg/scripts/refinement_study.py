#!/usr/bin/env python3
"""
Refinement study for the arctan semilinear preset.

Solves the preset by the convolution fixed point, re-solves on the grid with
2M - 1 nodes and compares finite-difference derivatives of orders 1..4.
A step function is run through the same diagnostic as the rough control case.

Usage:
    python scripts/refinement_study.py [node_count]

Environment:
    NONLOC_THREADS: worker threads for assembly
    NONLOC_LOG_LEVEL: logging level
"""
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np

from nonloc.config import configure_logging
from nonloc.models import GridFunction
from nonloc.presets import preset
from nonloc.semilinear import smoothness_diagnostic, solve_fixed_point

ORDERS = 4


def solve_on(node_count):
    entry = preset("arctan_semilinear")
    domain = entry.domain.model_copy(update={"node_count": node_count})
    instance = entry.instantiate(domain, audit=False)
    result = solve_fixed_point(instance.problem)
    print(f"  M={node_count}: {result.termination_reason.value} after {result.iterations} "
          f"iterations, residual {result.residual_inf:.2e}")
    return result.u_star


def print_report(label, report):
    print(f"\n{label}: {'smooth' if report.passed else 'ROUGH'}")
    for order, (c, f, r) in enumerate(zip(report.details["coarse_max"], report.details["fine_max"],
                                          report.details["ratios"]), start=1):
        print(f"  order {order}: coarse {c:.4e}  fine {f:.4e}  ratio {r:.3f}")


def main():
    configure_logging()
    node_count = int(sys.argv[1]) if len(sys.argv) > 1 else preset("arctan_semilinear").domain.node_count

    print("Solving arctan_semilinear...")
    u = solve_on(node_count)
    report = smoothness_diagnostic(u, u.domain, ORDERS, lambda fine: solve_on(fine.node_count))
    print_report("arctan_semilinear", report)

    step = lambda x: np.where(np.asarray(x) > 0.0, 1.0, 0.0)
    control = smoothness_diagnostic(GridFunction.from_callable(u.domain, step), u.domain, 1,
                                    lambda fine: GridFunction.from_callable(fine, step))
    print_report("step function (control)", control)

    return 0 if report.passed and not control.passed else 1


if __name__ == "__main__":
    sys.exit(main())
