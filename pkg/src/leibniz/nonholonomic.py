"""Constrained Leibniz tensors by projection.

Constraints are scalar fields phi_1..phi_k (the constraint set is phi = 0,
with tangent bundle ker dphi) together with complement vector fields
w_1..w_k.  Wherever the k x k matrix A_{ab} = dphi_a(w_b) is invertible,

    pi(m) = Id - sum_ab w_a(m) (A(m)^{-1})_{ab} dphi_b(m)

is the projection onto ker dphi along span{w}, and the constrained tensor is
pi(m) B(m) — a single closed formula valid on the whole chart, so the tensor
needs no separate off-level-set extension.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import expr as ex
from .core import (CheckReport, LeibnizSystem, LeibnizTensorField,
                   PreconditionError, ScalarField, VectorField, _scan)
from .dynamics import (IntegratorConfig, TruncatedTrajectoryError, drift_report,
                       integrate)

__all__ = [
    "ConstraintSpec",
    "TransversalityError",
    "projector_at",
    "constrained_tensor",
    "constrained_system",
    "constraint_drift",
    "family_independence_check",
]


class TransversalityError(ArithmeticError):
    """ker dphi and span{w} fail to be complementary at a point."""

    def __init__(self, point, det: float, condition: float):
        super().__init__(
            f"constraint complement is degenerate at {list(map(float, point))}: "
            f"det A = {det:.6e}, condition = {condition:.3e}")
        self.det = det
        self.condition = condition


@dataclass
class ConstraintSpec:
    """Base system plus constraint fields phi_a and complement fields w_a."""

    system: LeibnizSystem
    phis: Sequence[ScalarField]
    ws: Sequence[VectorField]

    def __post_init__(self) -> None:
        if len(self.phis) != len(self.ws):
            raise ValueError("one complement field per constraint is required")
        for f in list(self.phis) + list(self.ws):
            if f.chart.names != self.system.chart.names:
                raise ValueError("constraint data must live on the system chart")

    @property
    def k(self) -> int:
        return len(self.phis)


def _gram(spec: ConstraintSpec, m):
    """W columns (n x k), dphi rows (k x n), and A = dphi W at m."""
    W = np.column_stack([w.value(m) for w in spec.ws]) if spec.k else np.zeros((spec.system.chart.dim, 0))
    Phi = np.vstack([p.gradient(m) for p in spec.phis]) if spec.k else np.zeros((0, spec.system.chart.dim))
    return W, Phi, Phi @ W


def _invert_gram(A: np.ndarray, m) -> np.ndarray:
    k = A.shape[0]
    S = np.linalg.svd(A, compute_uv=False)
    if S.size and (S[0] == 0.0 or S[-1] <= k * np.finfo(float).eps * S[0]):
        det = float(np.linalg.det(A))
        cond = float("inf") if S[-1] == 0.0 else float(S[0] / S[-1])
        raise TransversalityError(m, det, cond)
    return np.linalg.inv(A)


def projector_at(spec: ConstraintSpec, m) -> np.ndarray:
    """Idempotent matrix with range ker dphi(m) and kernel span{w_a(m)}."""
    n = spec.system.chart.dim
    if spec.k == 0:
        return np.eye(n)
    W, Phi, A = _gram(spec, m)
    return np.eye(n) - W @ _invert_gram(A, m) @ Phi


def _symbolic_constrained(spec: ConstraintSpec) -> Optional[list]:
    """Entry ASTs of pi B when every ingredient is expression-backed, k <= 2."""
    B = spec.system.tensor
    if B.entries_ast is None or spec.k == 0 or spec.k > 2:
        return None
    if any(p.grad_asts is None for p in spec.phis):
        return None
    if any(w.component_asts is None for w in spec.ws):
        return None
    n = spec.system.chart.dim
    k = spec.k
    wcols = [w.component_asts for w in spec.ws]         # wcols[a][i]
    dphi = [p.grad_asts for p in spec.phis]             # dphi[a][i]
    # A_{ab} = sum_i dphi_a_i * w_b_i
    A = [[ex.Num(0.0)] * k for _ in range(k)]
    for a in range(k):
        for b in range(k):
            acc = ex.Num(0.0)
            for i in range(n):
                acc = ex.c_add(acc, ex.c_mul(dphi[a][i], wcols[b][i]))
            A[a][b] = acc
    if k == 1:
        inv = [[ex.c_div(ex.Num(1.0), A[0][0])]]
    else:
        det = ex.c_sub(ex.c_mul(A[0][0], A[1][1]), ex.c_mul(A[0][1], A[1][0]))
        inv = [[ex.c_div(A[1][1], det), ex.c_div(ex.c_neg(A[0][1]), det)],
               [ex.c_div(ex.c_neg(A[1][0]), det), ex.c_div(A[0][0], det)]]
    # pi_ij = delta_ij - sum_ab w_a_i inv_ab dphi_b_j
    pi = [[ex.Num(1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            acc = ex.Num(0.0)
            for a in range(k):
                for b in range(k):
                    acc = ex.c_add(acc, ex.c_mul(ex.c_mul(wcols[a][i], inv[a][b]),
                                                 dphi[b][j]))
            pi[i][j] = ex.c_sub(pi[i][j], acc)
    # product (pi B)_{ij}
    out = [[ex.Num(0.0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = ex.Num(0.0)
            for l in range(n):
                acc = ex.c_add(acc, ex.c_mul(pi[i][l], B.entries_ast[l][j]))
            out[i][j] = acc
    return out


def constrained_tensor(spec: ConstraintSpec, name: str = "") -> LeibnizTensorField:
    """The tensor with matrix pi(m) B(m); with k = 0 returns B unchanged."""
    if spec.k == 0:
        return spec.system.tensor
    B = spec.system.tensor
    name = name or f"constrained({B.name})"
    asts = _symbolic_constrained(spec)
    if asts is not None:
        return LeibnizTensorField.from_asts(spec.system.chart, asts,
                                            symmetry="general", name=name)

    def matrix_fn(m):
        return projector_at(spec, m) @ B.matrix(m)

    return LeibnizTensorField.from_callable(spec.system.chart, matrix_fn,
                                            symmetry="general", name=name)


def constrained_system(spec: ConstraintSpec, name: str = "") -> LeibnizSystem:
    """System whose dynamics is X^R_H = pi B grad H on the base chart."""
    return LeibnizSystem(chart=spec.system.chart, tensor=constrained_tensor(spec),
                         hamiltonian=spec.system.hamiltonian,
                         domain=spec.system.domain,
                         domain_expr=spec.system.domain_expr,
                         name=name or f"constrained({spec.system.name})")


def constraint_drift(spec: ConstraintSpec, x0, cfg: IntegratorConfig,
                     tol: float = 1e-8, phi_tol: float = 1e-12) -> CheckReport:
    """Integrate the constrained dynamics and report max |phi_a| on the flow.

    Requires |phi_a(x0)| <= phi_tol for every constraint (x0 on the level set).
    """
    x0 = np.asarray(x0, dtype=float)
    for p in spec.phis:
        v = p.value(x0)
        if abs(v) > phi_tol:
            raise PreconditionError(
                f"x0 is not on the constraint set: |{p.name}(x0)| = {abs(v):.3e} > {phi_tol}")
    monitors = {f"phi{i}": p for i, p in enumerate(spec.phis)}
    traj = integrate(constrained_system(spec), x0, cfg, monitors=monitors)
    if traj.truncated:
        raise TruncatedTrajectoryError("constrained trajectory left the regular domain")
    per_phi = {}
    worst, worst_name = -1.0, ""
    for name in monitors:
        r = drift_report(traj, name)
        per_phi[name] = r.max_drift
        if r.max_drift > worst:
            worst, worst_name = r.max_drift, name
    return CheckReport(name="constraint-drift", passed=worst <= tol, tol=tol,
                       max_residual=worst, worst_point=None,
                       details={"per_constraint": per_phi, "worst": worst_name,
                                "t1": cfg.t1, "steps": int(traj.times.size - 1)})


def family_independence_check(family: Sequence[ConstraintSpec], samples,
                              tol: float) -> CheckReport:
    """Pass iff the constrained tensors agree entrywise across the family."""
    if not family:
        raise ValueError("empty family")
    tensors = [constrained_tensor(spec) for spec in family]

    def residual(m):
        base = tensors[0].matrix(m)
        worst = 0.0
        for t in tensors[1:]:
            worst = max(worst, float(np.max(np.abs(t.matrix(m) - base))))
        return worst

    worst, point = _scan(samples, residual)
    return CheckReport(name="family-independence", passed=worst <= tol, tol=tol,
                       max_residual=worst, worst_point=point,
                       details={"members": len(family)})
