#!/usr/bin/env python3
"""Probe the limit of the unmodified flux law with the operator constant.

For the unmodified variant with c1 = c_star, the mass-balance identity pins
the only admissible limiting coefficient, but whether the solutions actually
converge to the local free boundary problem is open.  This experiment
measures the boundary gap against a fine local reference as eps shrinks and
prints the raw numbers without asserting a verdict.
"""

import numpy as np

from frontlab import analysis, kernels, local_solver, nonlocal_solver, problem


def main():
    vconf = problem.validate(problem.symmetric_stefan(T=1.0))
    kernel = kernels.KernelSpec("epanechnikov")
    reference = local_solver.solve(vconf, n_cells=2048, dt=1e-4)
    variant = nonlocal_solver.NonlocalVariant("unmodified", c1=kernels.c_star(kernel))
    print("eps    sup|u-v|   sup|h_eps-h|   h_eps(T)    h(T)")
    for eps in (0.2, 0.1, 0.05, 0.025):
        sol = nonlocal_solver.solve(vconf, kernel, eps=eps, variant=variant)
        rep = analysis.sup_error(sol, reference)
        print(
            f"{eps:<6g} {rep.overall_sup:<10.4f} {rep.boundary_sup[1]:<14.4f} "
            f"{sol.boundary_h[-1]:<11.4f} {float(reference.boundary_h[-1]):.4f}"
        )
    ts = np.linspace(0.0, 1.0, 11)
    print("\nreference boundary h(t):", np.array2string(reference.h_of(ts), precision=4))


if __name__ == "__main__":
    main()
