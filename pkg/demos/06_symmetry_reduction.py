#!/usr/bin/env python3
"""Reduction to invariant coordinates.

Given invariants sigma_a of a group action and a section s with
sigma(s(r)) = r, the quotient tensor on the reduced chart is

    B_red^{ab}(r) = grad sigma_a . B . grad sigma_b  evaluated at s(r).

The library checks the two preconditions (the section identity, and
orbit-constancy of the invariants and of their brackets), builds the
reduced system symbolically when it can, and verifies that the
projection intertwines the ambient and reduced flows.
"""

import numpy as np

from leibniz import (
    IntegratorConfig,
    flow_commutation_check,
    make_system,
    reduce_by_invariants,
    relatedness_check,
    sample_points,
    welldefinedness_check,
)


def main() -> None:
    # --- rotation invariants on R^3 ----------------------------------------
    bundle = make_system("noncanonical-r3")
    ambient_pts = sample_points(bundle.sample_box, 50, 0)
    rep = welldefinedness_check(bundle.system, bundle.reduction, bundle.action,
                                ambient_pts, 1e-9)
    print("noncanonical-r3 under rotation about the third axis:")
    print(f"  welldefinedness: passed={rep.passed}"
          f" (sigma invariance {rep.details['sigma_invariance_max']:.2e},"
          f" bracket constancy {rep.details['bracket_constancy_max']:.2e})")

    reduced = reduce_by_invariants(bundle.system, bundle.reduction)
    print("  reduced tensor (symbolic):",
          [[str(node) for node in row] for row in reduced.tensor.entries_ast])
    print("  reduced Hamiltonian:", str(reduced.hamiltonian.ast))

    reduced_pts = sample_points([(0.5, 2.0), (-2.0, 2.0)], 50, 1)
    rep = relatedness_check(bundle.projection, bundle.system, reduced,
                            reduced_pts if False else ambient_pts, 1e-9)
    print(f"  projection relates the vector fields: passed={rep.passed}"
          f" (max residual {rep.max_residual:.2e})")

    cfg = IntegratorConfig(t1=1.0, dt=1e-3)
    rep = flow_commutation_check(bundle.projection, bundle.system, reduced,
                                 [1.0, 1.0, 1.0], cfg, 1e-6)
    print(f"  projecting the flow = flowing the projection: passed={rep.passed}"
          f" (gap {rep.max_residual:.2e})")

    # --- a reduction with a single global factor ----------------------------
    bundle = make_system("landau-lifschitz")
    reduced = reduce_by_invariants(bundle.system, bundle.reduction)
    print("\nlandau-lifschitz reduced by rotation invariants"
          " (sigma1 = (M1^2+M2^2)/2, sigma2 = M3):")
    r = np.array([0.8, -0.4])
    s1, s2 = r
    pattern = (np.array([[-2 * s1 * s2 ** 2, 2 * s1 * s2],
                         [2 * s1 * s2, -2 * s1]]) / (2 * s1 + s2 ** 2))
    got = reduced.tensor.matrix(r)
    ratio = got[0, 0] / pattern[0, 0]
    print(f"  at r = {r.tolist()}: reduced = factor * pattern with factor"
          f" = {ratio:.6f}")
    print(f"  entrywise gap |reduced - factor*pattern| ="
          f" {np.max(np.abs(got - ratio * pattern)):.2e}")
    print("  (the factor equals the symmetric-part coupling, 0.1 by default;"
          " see README 'Known discrepancies')")

    # --- the staged reduction of the constrained particle --------------------
    bundle = make_system("constrained-particle")
    reduced = reduce_by_invariants(bundle.system, bundle.reduction)
    stored = bundle.reduction_expected
    pts = sample_points([(-2.0, 2.0)] * 4, 50, 0)
    gap = max(np.max(np.abs(reduced.tensor.matrix(p) - stored.matrix(p)))
              for p in pts)
    print("\nconstrained particle, stage 1 (invariants y, p_x, p_y, p_z):")
    print(f"  computed quotient vs stored reference: max entry gap = {gap:.6f}")
    print("  The stored 4-D reference is NOT the quotient of the projected")
    print("  6-D tensor: they differ in column 0 only, by a constant unit gap")
    print("  in one entry.  Both generate the same dynamics for the stored")
    print("  Hamiltonian.  See README 'Known discrepancies'.")

    bundle = make_system("constrained-particle-reduced-1")
    reduced = reduce_by_invariants(bundle.system, bundle.reduction)
    stored = bundle.reduction_expected
    pts = sample_points([(-2.0, 2.0)] * 2, 50, 0)
    gap = max(np.max(np.abs(reduced.tensor.matrix(p) - stored.matrix(p)))
              for p in pts)
    print("\nstage 2 (invariants y, p_y on the stored 4-D system):")
    print("  reduced tensor:",
          [[str(node) for node in row] for row in reduced.tensor.entries_ast])
    print(f"  matches the stored 2-D reference exactly (gap = {gap:.1e})")


if __name__ == "__main__":
    main()
