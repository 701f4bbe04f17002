#!/usr/bin/env python3
"""Charts, tensors, brackets, and the two Leibniz vector fields.

A Leibniz tensor B on a coordinate chart assigns each point an n x n
matrix; the bracket of two scalar fields is

    [f, g](m) = grad f(m) . B(m) grad g(m).

The right vector field X^R_h = B grad h advances any f by [f, h]; the
left vector field X^L_h = -B^T grad h advances by -[h, f].  For a skew
tensor the two coincide (classical Hamiltonian mechanics); for a
symmetric tensor they are negatives of each other (gradient flows).
"""

import numpy as np

from leibniz import (
    CoordinateChart,
    LeibnizTensorField,
    ScalarField,
    bracket_eval,
    characteristic_image,
    decompose,
    is_casimir,
    jacobiator,
    make_system,
    sample_points,
)


def main() -> None:
    # --- canonical chart: [q, p] = 1 -----------------------------------
    chart = CoordinateChart(["q", "p"])
    B = LeibnizTensorField.from_expressions(
        chart, [["0", "1"], ["-1", "0"]], symmetry="skew", name="canonical"
    )
    q = ScalarField.from_expression(chart, "q")
    p = ScalarField.from_expression(chart, "p")
    h = ScalarField.from_expression(chart, "(q^2 + p^2)/2")
    m = np.array([0.3, -1.2])
    print("canonical chart (q, p):")
    print(f"  [q, p]       = {bracket_eval(B, q, p, m):+.1f}")
    print(f"  [p, q]       = {bracket_eval(B, p, q, m):+.1f}")
    print(f"  X^R_h at m   = {np.round(B.matrix(m) @ h.gradient(m), 6)}"
          "   (Hamilton's equations: (p, -q))")

    # --- skew vs symmetric: the two sides ------------------------------
    metric = LeibnizTensorField.from_expressions(
        chart, [["1", "0"], ["0", "1"]], symmetry="symmetric", name="euclidean"
    )
    grad_right = metric.matrix(m) @ h.gradient(m)
    grad_left = -metric.matrix(m).T @ h.gradient(m)
    print("\nsymmetric (metric) tensor: right and left fields are negatives")
    print(f"  X^R_h = {np.round(grad_right, 6)}   X^L_h = {np.round(grad_left, 6)}")

    # --- Jacobiator: zero iff the bracket is Poisson --------------------
    f2 = ScalarField.from_expression(chart, "q^2")
    g2 = ScalarField.from_expression(chart, "p^2")
    k2 = ScalarField.from_expression(chart, "q*p")
    print("\nJacobiator [[f,g],h] + [[g,h],f] + [[h,f],g]:")
    print(f"  canonical tensor, (q^2, p^2, qp):  {jacobiator(B, f2, g2, k2, m):+.2e}"
          "  (skew + Jacobi: a Poisson bracket)")
    xy = CoordinateChart(["x", "y"])
    ident = LeibnizTensorField.from_expressions(
        xy, [["1", "0"], ["0", "1"]], symmetry="symmetric"
    )
    fx = ScalarField.from_expression(xy, "x^2")
    gy = ScalarField.from_expression(xy, "y^2")
    hxy = ScalarField.from_expression(xy, "x*y")
    val = jacobiator(ident, fx, gy, hxy, np.array([1.0, 1.0]))
    print(f"  metric tensor, (x^2, y^2, xy) at (1,1): {val:+.6f}"
          "  (symmetric brackets are not Poisson)")

    # --- splitting a mixed tensor into skew + symmetric parts -----------
    so3 = make_system("rigid-body-dissipative", {"alpha": 0.1}).system
    skew, sym = decompose(so3.tensor)
    mm = np.array([1.0, 1.0, 1.0])
    print("\ndissipative rigid-body tensor at M=(1,1,1), split into parts:")
    print("  skew part, the conservative rotation generator:")
    print(np.array2string(skew.matrix(mm), prefix="    "))
    print("  symmetric part, the dissipation:")
    print(np.array2string(sym.matrix(mm), prefix="    "))

    # --- Casimirs and the characteristic image --------------------------
    norm2 = ScalarField.from_expression(so3.chart, "M1^2 + M2^2 + M3^2")
    pts = sample_points([(0.5, 2.0)] * 3, 25, 0)
    for side in ("left", "right"):
        rep = is_casimir(skew, norm2, side, pts, 1e-12)
        print(f"\n|M|^2 is a {side} Casimir of the skew part: passed={rep.passed}"
              f" (max residual {rep.max_residual:.2e})")
    img = characteristic_image(skew, mm)
    rank = np.linalg.matrix_rank(img)
    print(f"characteristic image of the skew part at (1,1,1) has rank {rank}"
          " (the tangent plane of the sphere |M| = const)")


if __name__ == "__main__":
    main()
