"""Momentum maps, symmetry reduction to invariant coordinates, and the
pointwise reducibility test.

A momentum map component J with integrating factor f satisfies
X^L_J = f * xi_P for the generator xi_P.  Reduction is represented by
explicit invariants sigma_1..sigma_k plus a section s (reduced point ->
ambient point) with sigma(s(r)) = r; the reduced tensor is

    B_red^{ab}(r) = grad sigma_a(s(r))^T B(s(r)) grad sigma_b(s(r)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import expr as ex
from .core import (CheckReport, CoordinateChart, LeibnizSystem,
                   LeibnizTensorField, OutOfDomainError, PreconditionError,
                   ScalarField, SmoothMap, VectorField, _scan,
                   leibniz_vector_field)
from .dynamics import IntegratorConfig, drift_report, integrate

__all__ = [
    "ActionSpec",
    "MomentumMapSpec",
    "InvariantReduction",
    "SubspacePair",
    "momentum_map_check",
    "noether_drift",
    "reduce_by_invariants",
    "welldefinedness_check",
    "pointwise_reducibility",
]


@dataclass
class ActionSpec:
    """Basis generator vector fields, plus an optional group-element action
    map (parameter vector, point) -> point for orbit sampling."""

    generators: Sequence[VectorField]
    group_map: Optional[Callable] = None
    param_box: Sequence = field(default_factory=lambda: [(-1.0, 1.0)])

    def __post_init__(self) -> None:
        if not self.generators:
            raise ValueError("at least one generator is required")
        names = self.generators[0].chart.names
        if any(g.chart.names != names for g in self.generators):
            raise ValueError("generators must share one chart")

    @property
    def dim(self) -> int:
        return len(self.generators)


@dataclass
class MomentumMapSpec:
    """Momentum components J^xi and their integrating factors f_xi.

    ``factors=None`` asks checks to solve for the factor pointwise by least
    squares and report the consistency residual.
    """

    components: Sequence[ScalarField]
    factors: Optional[Sequence[ScalarField]] = None

    def __post_init__(self) -> None:
        if self.factors is not None and len(self.factors) != len(self.components):
            raise ValueError("one integrating factor per component is required")

    def component_names(self) -> list:
        return [c.name or f"J{i}" for i, c in enumerate(self.components)]


@dataclass
class InvariantReduction:
    """Invariant scalar fields, a section into the ambient chart, and the
    reduced chart the invariants coordinatize."""

    sigmas: Sequence[ScalarField]
    section: SmoothMap
    reduced_chart: CoordinateChart

    def __post_init__(self) -> None:
        if len(self.sigmas) != self.reduced_chart.dim:
            raise ValueError("one invariant per reduced coordinate is required")
        if self.section.chart_in.names != self.reduced_chart.names:
            raise ValueError("section must start on the reduced chart")

    def check_section(self, reduced_samples, tol: float = 1e-10) -> CheckReport:
        """Verify sigma(s(r)) = r at sampled reduced points."""

        def residual(r):
            s = self.section.value(r)
            return max(abs(sig.value(s) - r[i]) for i, sig in enumerate(self.sigmas))

        worst, point = _scan(reduced_samples, residual)
        return CheckReport(name="section-identity", passed=worst <= tol, tol=tol,
                           max_residual=worst, worst_point=point)


@dataclass
class SubspacePair:
    """Bases (columns) of a tangent subspace TS and a distribution D at a point."""

    ts_basis: np.ndarray
    d_basis: np.ndarray

    def __post_init__(self) -> None:
        self.ts_basis = np.atleast_2d(np.asarray(self.ts_basis, dtype=float))
        self.d_basis = np.atleast_2d(np.asarray(self.d_basis, dtype=float))
        for label, basis in (("TS", self.ts_basis), ("D", self.d_basis)):
            if basis.shape[1] and np.linalg.matrix_rank(basis) < basis.shape[1]:
                raise ValueError(f"{label} basis vectors are linearly dependent")


# === Momentum maps ===

def momentum_map_check(system: LeibnizSystem, action: ActionSpec,
                       mm: MomentumMapSpec, samples, tol: float) -> CheckReport:
    """Verify X^L_{J^xi} = f_xi xi_P componentwise at the sample points.

    With no supplied factors, f is solved at each point by least squares
    and the reported residual measures the consistency of that solve.
    """
    if len(mm.components) != action.dim:
        raise ValueError("one momentum component per generator is required")
    names = mm.component_names()
    per_generator = {name: 0.0 for name in names}
    solved: dict = {name: [] for name in names}

    def residual(m):
        system.require_in_domain(m)
        worst = 0.0
        for i, gen in enumerate(action.generators):
            xl = leibniz_vector_field(system.tensor, mm.components[i], m, side="left")
            xi = gen.value(m)
            if mm.factors is not None:
                f = mm.factors[i].value(m)
            else:
                denom = float(xi @ xi)
                f = float(xi @ xl) / denom if denom > 0.0 else 0.0
                solved[names[i]].append(f)
            r = float(np.max(np.abs(xl - f * xi)))
            per_generator[names[i]] = max(per_generator[names[i]], r)
            worst = max(worst, r)
        return worst

    worst, point = _scan(samples, residual)
    details = {"per_component": per_generator}
    if mm.factors is None:
        details["solved_factor_range"] = {
            name: [min(vals), max(vals)] for name, vals in solved.items() if vals}
    return CheckReport(name="momentum-map", passed=worst <= tol, tol=tol,
                       max_residual=worst, worst_point=point, details=details)


def noether_drift(system: LeibnizSystem, mm: MomentumMapSpec, x0,
                  cfg: IntegratorConfig, action: Optional[ActionSpec] = None,
                  tol: float = 1e-6, invariance_tol: float = 1e-9) -> CheckReport:
    """Integrate X^R_h and report the drift of every momentum component.

    When ``action`` is given, the hypothesis that the Hamiltonian is
    invariant along the generators (|dh . xi_P| <= invariance_tol) is checked
    along the trajectory and reported — a violation is recorded, not fatal.
    """
    names = mm.component_names()
    monitors = dict(zip(names, mm.components))
    traj = integrate(system, x0, cfg, monitors=monitors)
    drifts = {name: drift_report(traj, name).max_drift for name in names}
    worst_name = max(drifts, key=lambda k: drifts[k])
    details = {"drifts": drifts, "truncated": bool(traj.truncated),
               "steps": int(traj.times.size - 1)}
    if action is not None:
        inv = 0.0
        for m in traj.states:
            grad_h = system.hamiltonian.gradient(m)
            for gen in action.generators:
                inv = max(inv, float(abs(grad_h @ gen.value(m))))
        details["hamiltonian_invariance_residual"] = inv
        details["hamiltonian_invariant"] = bool(inv <= invariance_tol)
    worst = drifts[worst_name]
    return CheckReport(name="noether-drift", passed=worst <= tol and not traj.truncated,
                       tol=tol, max_residual=worst, worst_point=None, details=details)


# === Reduction by invariants ===

def _symbolic_reduced(system: LeibnizSystem, red: InvariantReduction):
    """Reduced tensor entry ASTs via substitution, or None."""
    B = system.tensor
    if B.entries_ast is None:
        return None
    if any(s.grad_asts is None for s in red.sigmas):
        return None
    section_asts = [c.ast for c in red.section.components]
    if any(a is None for a in section_asts):
        return None
    n = system.chart.dim
    k = len(red.sigmas)

    def pull(node):
        return ex.substitute(node, section_asts)

    dsig = [[pull(s.grad_asts[i]) for i in range(n)] for s in red.sigmas]
    Bsub = [[pull(B.entries_ast[i][j]) for j in range(n)] for i in range(n)]
    out = [[ex.Num(0.0)] * k for _ in range(k)]
    for a in range(k):
        for b in range(k):
            acc = ex.Num(0.0)
            for i in range(n):
                for j in range(n):
                    acc = ex.c_add(acc, ex.c_mul(ex.c_mul(dsig[a][i], Bsub[i][j]),
                                                 dsig[b][j]))
            out[a][b] = acc
    return out


def reduce_by_invariants(system: LeibnizSystem, red: InvariantReduction,
                         section_samples=None, section_tol: float = 1e-10,
                         name: str = "") -> LeibnizSystem:
    """Quotient system on the reduced chart.

    B_red^{ab}(r) = grad sigma_a(s(r))^T B(s(r)) grad sigma_b(s(r)) and
    h_red = h o s.  If ``section_samples`` is given, the section identity
    sigma(s(r)) = r is verified there first.
    """
    if section_samples is not None:
        report = red.check_section(section_samples, tol=section_tol)
        if not report.passed:
            raise PreconditionError(
                f"section identity fails: max residual {report.max_residual:.3e} "
                f"at {report.worst_point}")
    flag = system.tensor.symmetry
    asts = _symbolic_reduced(system, red)
    if asts is not None:
        tensor = LeibnizTensorField.from_asts(red.reduced_chart, asts, symmetry=flag,
                                              name=f"reduced({system.tensor.name})")
    else:
        sigmas, section = red.sigmas, red.section

        def matrix_fn(r):
            s = section.value(r)
            G = np.vstack([sig.gradient(s) for sig in sigmas])
            return G @ system.tensor.matrix(s) @ G.T

        tensor = LeibnizTensorField.from_callable(red.reduced_chart, matrix_fn,
                                                  symmetry=flag,
                                                  name=f"reduced({system.tensor.name})")
    if system.hamiltonian.ast is not None and all(
            c.ast is not None for c in red.section.components):
        h_ast = ex.substitute(system.hamiltonian.ast,
                              [c.ast for c in red.section.components])
        h_red = ScalarField.from_ast(red.reduced_chart, h_ast,
                                     name=f"reduced({system.hamiltonian.name})")
    else:
        section = red.section
        h_red = ScalarField.from_callable(
            red.reduced_chart, lambda r: system.hamiltonian.value(section.value(r)),
            name=f"reduced({system.hamiltonian.name})")

    def domain(r):
        try:
            s = red.section.value(r)
        except ex.DomainError:
            return False
        return system.in_domain(s)

    return LeibnizSystem(chart=red.reduced_chart, tensor=tensor, hamiltonian=h_red,
                         domain=domain, name=name or f"reduced({system.name})")


def welldefinedness_check(system: LeibnizSystem, red: InvariantReduction,
                          action: ActionSpec, samples, tol: float,
                          seed: int = 0, group_samples: int = 5) -> CheckReport:
    """Check that the reduction is constant on sampled group orbits.

    Verifies both that the invariants themselves are orbit-constant
    (|sigma_a(g.m) - sigma_a(m)| <= tol) and that the bracket values of the
    invariants are (|B(dsigma_a, dsigma_b)(g.m) - B(dsigma_a, dsigma_b)(m)|
    <= tol), which is the computable content of the quotient being
    well defined.
    """
    if action.group_map is None:
        raise ValueError("welldefinedness requires a group-element action map")
    rng = np.random.default_rng(seed)
    box = np.asarray(action.param_box, dtype=float)
    params = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((group_samples, len(box)))
    sigma_worst = 0.0
    bracket_worst = 0.0

    def bracket_values(m):
        G = np.vstack([sig.gradient(m) for sig in red.sigmas])
        return G @ system.tensor.matrix(m) @ G.T

    def residual(m):
        nonlocal sigma_worst, bracket_worst
        base_sigma = np.array([sig.value(m) for sig in red.sigmas])
        base_vals = bracket_values(m)
        worst = 0.0
        for g in params:
            m2 = np.asarray(action.group_map(g, m), dtype=float)
            if not system.in_domain(m2):
                raise OutOfDomainError(
                    f"orbit point {m2.tolist()} left the regular domain")
            ds = float(np.max(np.abs(
                np.array([sig.value(m2) for sig in red.sigmas]) - base_sigma)))
            dv = float(np.max(np.abs(bracket_values(m2) - base_vals)))
            sigma_worst = max(sigma_worst, ds)
            bracket_worst = max(bracket_worst, dv)
            worst = max(worst, ds, dv)
        return worst

    worst, point = _scan(samples, residual)
    return CheckReport(name="welldefinedness", passed=worst <= tol, tol=tol,
                       max_residual=worst, worst_point=point,
                       details={"sigma_invariance_max": sigma_worst,
                                "bracket_constancy_max": bracket_worst,
                                "group_samples": group_samples})


# === Pointwise reducibility ===

def _null_space(A: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of A (rows = covectors)."""
    if A.shape[0] == 0:
        return np.eye(A.shape[1])
    U, S, Vt = np.linalg.svd(A)
    rank = int(np.sum(S > max(A.shape) * np.finfo(float).eps * (S[0] if S.size else 0.0)))
    return Vt[rank:].T


def _sv_rank(A: np.ndarray, tol: float) -> int:
    if A.size == 0:
        return 0
    S = np.linalg.svd(A, compute_uv=False)
    if S.size == 0 or S[0] == 0.0:
        return 0
    return int(np.sum(S > tol * S[0]))


def pointwise_reducibility(B, m, pair: SubspacePair, tol: float = 1e-10) -> CheckReport:
    """Test B_L#(D°) + B_R#(D°) ⊆ TS + D at one point via rank comparison.

    D° is the annihilator of D (kernel of the matrix whose rows are the
    D-basis); its images under v -> Bv and v -> -B^T v must not enlarge the
    span of TS and D.  Ranks use singular values above tol * sigma_max.
    """
    tensor = B.tensor if isinstance(B, LeibnizSystem) else B
    M = tensor.matrix(m)
    n = tensor.chart.dim
    ts = pair.ts_basis.reshape(n, -1)
    d = pair.d_basis.reshape(n, -1)
    annihilator = _null_space(d.T)  # rows of d^T are the D-basis vectors
    images = []
    for v in annihilator.T:
        images.append(M @ v)          # right image
        images.append(-(M.T @ v))     # left image
    span = np.column_stack([ts, d]) if ts.size or d.size else np.zeros((n, 0))
    enlarged = np.column_stack([span, *images]) if images else span
    rank_before = _sv_rank(span, tol)
    rank_after = _sv_rank(enlarged, tol)
    passed = rank_before == rank_after
    return CheckReport(name="pointwise-reducibility", passed=passed, tol=tol,
                       max_residual=float(rank_after - rank_before),
                       worst_point=list(map(float, np.asarray(m, dtype=float))),
                       details={"rank_ts_d": rank_before,
                                "rank_with_images": rank_after,
                                "annihilator_dim": int(annihilator.shape[1])})
