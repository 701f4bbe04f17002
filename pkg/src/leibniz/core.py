"""Leibniz tensors and brackets on a coordinate chart.

A Leibniz tensor field B assigns to each point m an n x n matrix with
B^{ij}(m) = [x^i, x^j](m); the bracket of scalar fields is

    [f, g](m) = grad f(m)^T B(m) grad g(m)

and the two associated vector fields are X^R_h = B grad h (right) and
X^L_h = -B^T grad h (left).  For a skew tensor the two coincide; for a
symmetric tensor they are negatives of each other.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from . import expr as ex

__all__ = [
    "CoordinateChart",
    "ScalarField",
    "VectorField",
    "SmoothMap",
    "LeibnizTensorField",
    "LeibnizSystem",
    "CheckReport",
    "OutOfDomainError",
    "NondegeneracyError",
    "PreconditionError",
    "bracket_eval",
    "bracket_field",
    "leibniz_vector_field",
    "jacobiator",
    "decompose",
    "is_casimir",
    "characteristic_image",
    "leibniz_form",
    "equivalent_hamiltonians",
    "sample_points",
]


class OutOfDomainError(ValueError):
    """A point lies outside a system's regular domain."""


class NondegeneracyError(ArithmeticError):
    """A tensor matrix is singular where an inverse was required."""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition number {condition:.3e})")
        self.condition = condition


class PreconditionError(ValueError):
    """A stated precondition of an operation does not hold."""


# === Chart and fields ===

@dataclass(frozen=True)
class CoordinateChart:
    """Ordered, unique coordinate names for one global chart of R^n."""

    names: tuple

    def __init__(self, names: Sequence[str]):
        names = tuple(names)
        if len(names) < 1:
            raise ValueError("chart needs at least one coordinate")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate coordinate names in {names}")
        object.__setattr__(self, "names", names)

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)


def _check_point(chart: CoordinateChart, m: Sequence[float]) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (chart.dim,):
        raise ValueError(f"point shape {m.shape} does not match chart dimension {chart.dim}")
    return m


class ScalarField:
    """Scalar function on a chart with a gradient.

    The gradient is symbolic when the field is expression-backed, analytic
    when supplied by the caller, and otherwise central finite differences
    with per-coordinate step ``fd_step * (1 + |m_i|)``.
    """

    def __init__(self, chart: CoordinateChart, value_fn: Callable,
                 grad_fn: Callable, ast: Optional[ex.Expr] = None,
                 grad_asts: Optional[list] = None, name: str = ""):
        self.chart = chart
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self.ast = ast
        self.grad_asts = grad_asts
        self.name = name

    @classmethod
    def from_expression(cls, chart: CoordinateChart, source: str,
                        parameters: Optional[Mapping[str, float]] = None,
                        name: str = "") -> "ScalarField":
        ast = ex.parse(source, chart.names, parameters)
        return cls.from_ast(chart, ast, name=name or source)

    @classmethod
    def from_ast(cls, chart: CoordinateChart, ast: ex.Expr, name: str = "") -> "ScalarField":
        value = ex.compile_evaluator(ast)
        grad_asts = ex.gradient_asts(ast, chart.dim)
        grads = ex.compile_vector_evaluator(grad_asts)

        def grad_fn(m):
            return np.array(grads(m), dtype=float)

        return cls(chart, value, grad_fn, ast=ast, grad_asts=grad_asts,
                   name=name or ex.to_string(ast))

    @classmethod
    def from_callable(cls, chart: CoordinateChart, fn: Callable,
                      grad: Optional[Callable] = None, fd_step: float = 1e-6,
                      name: str = "") -> "ScalarField":
        if grad is None:
            def grad_fn(m):
                m = np.asarray(m, dtype=float)
                out = np.empty(chart.dim)
                for i in range(chart.dim):
                    h = fd_step * (1.0 + abs(m[i]))
                    ei = np.zeros(chart.dim)
                    ei[i] = h
                    out[i] = (fn(m + ei) - fn(m - ei)) / (2.0 * h)
                return out
            grad = grad_fn
        return cls(chart, fn, grad, name=name)

    def value(self, m) -> float:
        return float(self._value_fn(m))

    def gradient(self, m) -> np.ndarray:
        return np.asarray(self._grad_fn(m), dtype=float)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"ScalarField({self.name!r})"


class VectorField:
    """Vector-valued function on a chart (components in chart coordinates)."""

    def __init__(self, chart: CoordinateChart, fn: Callable,
                 component_asts: Optional[list] = None, name: str = ""):
        self.chart = chart
        self._fn = fn
        self.component_asts = component_asts
        self.name = name

    @classmethod
    def from_expressions(cls, chart: CoordinateChart, sources: Sequence[str],
                         parameters: Optional[Mapping[str, float]] = None,
                         name: str = "") -> "VectorField":
        if len(sources) != chart.dim:
            raise ValueError(f"expected {chart.dim} components, got {len(sources)}")
        asts = [ex.parse(s, chart.names, parameters) for s in sources]
        fns = ex.compile_vector_evaluator(asts)

        def fn(m):
            return np.array(fns(m), dtype=float)

        return cls(chart, fn, component_asts=asts, name=name)

    def value(self, m) -> np.ndarray:
        return np.asarray(self._fn(m), dtype=float)


class SmoothMap:
    """Map between charts with an analytic Jacobian (rows = component gradients)."""

    def __init__(self, chart_in: CoordinateChart, chart_out: CoordinateChart,
                 components: Sequence[ScalarField], name: str = ""):
        if len(components) != chart_out.dim:
            raise ValueError("one component per output coordinate required")
        self.chart_in = chart_in
        self.chart_out = chart_out
        self.components = list(components)
        self.name = name

    @classmethod
    def from_expressions(cls, chart_in: CoordinateChart, chart_out: CoordinateChart,
                         sources: Sequence[str],
                         parameters: Optional[Mapping[str, float]] = None,
                         name: str = "") -> "SmoothMap":
        comps = [ScalarField.from_expression(chart_in, s, parameters) for s in sources]
        return cls(chart_in, chart_out, comps, name=name)

    def value(self, m) -> np.ndarray:
        return np.array([c.value(m) for c in self.components], dtype=float)

    def jacobian(self, m) -> np.ndarray:
        return np.vstack([c.gradient(m) for c in self.components])


# === Tensor fields and systems ===

_SYMMETRIES = ("skew", "symmetric", "general")


class LeibnizTensorField:
    """Point-dependent n x n tensor B^{ij}(m) = [x^i, x^j](m)."""

    def __init__(self, chart: CoordinateChart, matrix_fn: Callable,
                 symmetry: str = "general", entries_ast: Optional[list] = None,
                 derivative_fn: Optional[Callable] = None, name: str = ""):
        if symmetry not in _SYMMETRIES:
            raise ValueError(f"symmetry must be one of {_SYMMETRIES}")
        self.chart = chart
        self._matrix_fn = matrix_fn
        self.symmetry = symmetry
        self.entries_ast = entries_ast
        self._derivative_fn = derivative_fn
        self.name = name

    @classmethod
    def from_expressions(cls, chart: CoordinateChart,
                         entries: Union[Sequence[Sequence[str]], Mapping],
                         symmetry: str = "general",
                         parameters: Optional[Mapping[str, float]] = None,
                         name: str = "") -> "LeibnizTensorField":
        """Build from an n x n table of expression strings, or a sparse
        mapping {(i, j): source} with missing entries defaulting to 0."""
        n = chart.dim
        table = [["0"] * n for _ in range(n)]
        if isinstance(entries, Mapping):
            for key, src in entries.items():
                i, j = key
                table[int(i)][int(j)] = src
        else:
            if len(entries) != n or any(len(row) != n for row in entries):
                raise ValueError(f"tensor table must be {n}x{n}")
            table = [list(row) for row in entries]
        asts = [[ex.parse(src, chart.names, parameters) for src in row] for row in table]
        return cls.from_asts(chart, asts, symmetry=symmetry, name=name)

    @classmethod
    def from_asts(cls, chart: CoordinateChart, asts: Sequence[Sequence[ex.Expr]],
                  symmetry: str = "general", name: str = "") -> "LeibnizTensorField":
        n = chart.dim
        if all(isinstance(a, ex.Num) for row in asts for a in row):
            constant = np.array([[a.value for a in row] for row in asts], dtype=float)
            constant.setflags(write=False)
            matrix_fn = lambda m: constant  # noqa: E731 - shared read-only array
        else:
            fns = ex.compile_matrix_evaluator(asts)

            def matrix_fn(m):
                return np.array(fns(m), dtype=float)

        deriv_asts = [[[ex.differentiate(asts[i][j], k) for j in range(n)]
                       for i in range(n)] for k in range(n)]
        deriv_fns = [ex.compile_matrix_evaluator(layer) for layer in deriv_asts]

        def derivative_fn(m):
            return np.array([fn(m) for fn in deriv_fns], dtype=float)

        return cls(chart, matrix_fn, symmetry=symmetry,
                   entries_ast=[list(row) for row in asts],
                   derivative_fn=derivative_fn, name=name)

    @classmethod
    def from_constant(cls, chart: CoordinateChart, matrix,
                      symmetry: str = "general", name: str = "") -> "LeibnizTensorField":
        matrix = np.asarray(matrix, dtype=float)
        n = chart.dim
        if matrix.shape != (n, n):
            raise ValueError(f"matrix shape {matrix.shape} does not match chart")
        asts = [[ex.Num(float(matrix[i, j])) for j in range(n)] for i in range(n)]
        return cls.from_asts(chart, asts, symmetry=symmetry, name=name)

    @classmethod
    def from_callable(cls, chart: CoordinateChart, fn: Callable,
                      symmetry: str = "general",
                      derivative_fn: Optional[Callable] = None,
                      name: str = "") -> "LeibnizTensorField":
        return cls(chart, fn, symmetry=symmetry, derivative_fn=derivative_fn, name=name)

    def matrix(self, m) -> np.ndarray:
        M = np.asarray(self._matrix_fn(m), dtype=float)
        n = self.chart.dim
        if M.shape != (n, n):
            raise ValueError(f"tensor matrix shape {M.shape} does not match chart")
        return M

    def derivative(self, m, fd_step: float = 1e-6) -> np.ndarray:
        """partial_k B^{ij}(m) as an (n, n, n) array, indexed [k, i, j]."""
        if self._derivative_fn is not None:
            return np.asarray(self._derivative_fn(m), dtype=float)
        m = np.asarray(m, dtype=float)
        n = self.chart.dim
        out = np.empty((n, n, n))
        for k in range(n):
            h = fd_step * (1.0 + abs(m[k]))
            ek = np.zeros(n)
            ek[k] = h
            out[k] = (self.matrix(m + ek) - self.matrix(m - ek)) / (2.0 * h)
        return out

    def validate_symmetry(self, samples, tol: float = 1e-12) -> None:
        """Raise if the declared symmetry flag fails at any sample point."""
        for m in np.atleast_2d(np.asarray(samples, dtype=float)):
            M = self.matrix(m)
            if self.symmetry == "skew" and np.max(np.abs(M + M.T)) > tol:
                raise ValueError(f"tensor {self.name!r} is not skew at {m.tolist()}")
            if self.symmetry == "symmetric" and np.max(np.abs(M - M.T)) > tol:
                raise ValueError(f"tensor {self.name!r} is not symmetric at {m.tolist()}")

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"LeibnizTensorField({self.name!r}, {self.symmetry})"


@dataclass
class LeibnizSystem:
    """A chart, a Leibniz tensor, a Hamiltonian, and an optional regular domain.

    The domain predicate excludes singular loci; when built from an
    expression it follows the value > 0 convention.
    """

    chart: CoordinateChart
    tensor: LeibnizTensorField
    hamiltonian: ScalarField
    domain: Optional[Callable] = None
    domain_expr: Optional[str] = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.tensor.chart is not self.chart and self.tensor.chart.names != self.chart.names:
            raise ValueError("tensor chart does not match system chart")
        if (self.hamiltonian.chart is not self.chart
                and self.hamiltonian.chart.names != self.chart.names):
            raise ValueError("Hamiltonian chart does not match system chart")

    @staticmethod
    def domain_from_expression(chart: CoordinateChart, source: str,
                               parameters: Optional[Mapping[str, float]] = None):
        """Predicate callable for 'expression value > 0' domains."""
        f = ScalarField.from_expression(chart, source, parameters)
        return lambda m: bool(f.value(m) > 0.0)

    def in_domain(self, m) -> bool:
        m = np.asarray(m, dtype=float)
        if not np.all(np.isfinite(m)):
            return False
        return True if self.domain is None else bool(self.domain(m))

    def require_in_domain(self, m) -> None:
        if not self.in_domain(m):
            raise OutOfDomainError(
                f"point {np.asarray(m, dtype=float).tolist()} is outside the regular domain"
                + (f" ({self.domain_expr} > 0)" if self.domain_expr else ""))

    def vector_field(self, m, side: str = "right") -> np.ndarray:
        return leibniz_vector_field(self.tensor, self.hamiltonian, m, side=side)


# === Reports ===

def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


@dataclass
class CheckReport:
    """Outcome of a sampled verification: residuals, worst point, pass flag."""

    name: str
    passed: bool
    tol: float
    max_residual: float
    worst_point: Optional[list] = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "passed": bool(self.passed),
            "tol": float(self.tol),
            "max_residual": _jsonable(float(self.max_residual)),
            "worst_point": _jsonable(self.worst_point),
            "details": _jsonable(self.details),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _scan(samples, residual_fn):
    """Max residual and its argmax point over a batch of sample points."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise ValueError("empty sample set")
    worst, worst_point = -1.0, None
    for m in samples:
        r = float(residual_fn(m))
        if r > worst:
            worst, worst_point = r, m
    return worst, list(map(float, worst_point))


def sample_points(box: Sequence, count: int, seed_or_rng=0) -> np.ndarray:
    """Uniform points from a per-coordinate box [(lo, hi), ...], seeded."""
    rng = (seed_or_rng if isinstance(seed_or_rng, np.random.Generator)
           else np.random.default_rng(seed_or_rng))
    box = np.asarray(box, dtype=float)
    lo, hi = box[:, 0], box[:, 1]
    return lo + (hi - lo) * rng.random((count, len(box)))


# === Bracket operations ===

def _resolve(B) -> LeibnizTensorField:
    if isinstance(B, LeibnizSystem):
        return B.tensor
    return B


def bracket_eval(B, f: ScalarField, g: ScalarField, m) -> float:
    """[f, g](m) = grad f(m)^T B(m) grad g(m)."""
    if isinstance(B, LeibnizSystem):
        B.require_in_domain(m)
    tensor = _resolve(B)
    m = _check_point(tensor.chart, m)
    return float(f.gradient(m) @ tensor.matrix(m) @ g.gradient(m))


def bracket_field(B, f: ScalarField, g: ScalarField, fd_step: float = 1e-5,
                  force_fd: bool = False, name: str = "") -> ScalarField:
    """The bracket [f, g] as a ScalarField.

    Expression-backed inputs give a symbolic field (exact gradients);
    otherwise the gradient falls back to central finite differences of the
    bracket value with step ``fd_step * (1 + |m_i|)``.
    """
    tensor = _resolve(B)
    name = name or f"[{f.name},{g.name}]"
    symbolic = (not force_fd and tensor.entries_ast is not None
                and f.grad_asts is not None and g.grad_asts is not None)
    if symbolic:
        n = tensor.chart.dim
        total = ex.Num(0.0)
        for i in range(n):
            for j in range(n):
                term = ex.c_mul(ex.c_mul(f.grad_asts[i], tensor.entries_ast[i][j]),
                                g.grad_asts[j])
                total = ex.c_add(total, term)
        return ScalarField.from_ast(tensor.chart, total, name=name)
    return ScalarField.from_callable(
        tensor.chart, lambda m: bracket_eval(tensor, f, g, m),
        fd_step=fd_step, name=name)


def leibniz_vector_field(B, h: ScalarField, m, side: str = "right") -> np.ndarray:
    """X^R_h = B grad h (side="right") or X^L_h = -B^T grad h (side="left")."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if isinstance(B, LeibnizSystem):
        B.require_in_domain(m)
    tensor = _resolve(B)
    m = _check_point(tensor.chart, m)
    grad = h.gradient(m)
    M = tensor.matrix(m)
    return M @ grad if side == "right" else -(M.T @ grad)


def jacobiator(B, f: ScalarField, g: ScalarField, h: ScalarField, m,
               force_fd: bool = False, fd_step: float = 1e-5) -> float:
    """[[f,g],h] + [[g,h],f] + [[h,f],g] at m.

    Inner brackets get symbolic gradients when everything is
    expression-backed; ``force_fd`` switches to central finite differences
    of the bracket values (step ``fd_step * (1 + |m_i|)``).
    """
    if isinstance(B, LeibnizSystem):
        B.require_in_domain(m)
    tensor = _resolve(B)
    total = 0.0
    for a, b, c in ((f, g, h), (g, h, f), (h, f, g)):
        inner = bracket_field(tensor, a, b, fd_step=fd_step, force_fd=force_fd)
        total += bracket_eval(tensor, inner, c, m)
    return total


def decompose(B: LeibnizTensorField):
    """Split B into (skew, symmetric) parts: (B - B^T)/2 and (B + B^T)/2."""
    chart = B.chart
    if B.entries_ast is not None:
        n = chart.dim
        half = ex.Num(0.5)
        skew_asts = [[ex.c_mul(half, ex.c_sub(B.entries_ast[i][j], B.entries_ast[j][i]))
                      for j in range(n)] for i in range(n)]
        sym_asts = [[ex.c_mul(half, ex.c_add(B.entries_ast[i][j], B.entries_ast[j][i]))
                     for j in range(n)] for i in range(n)]
        skew = LeibnizTensorField.from_asts(chart, skew_asts, symmetry="skew",
                                            name=f"{B.name}_skew")
        sym = LeibnizTensorField.from_asts(chart, sym_asts, symmetry="symmetric",
                                           name=f"{B.name}_sym")
        return skew, sym
    skew = LeibnizTensorField.from_callable(
        chart, lambda m: 0.5 * (B.matrix(m) - B.matrix(m).T), symmetry="skew",
        name=f"{B.name}_skew")
    sym = LeibnizTensorField.from_callable(
        chart, lambda m: 0.5 * (B.matrix(m) + B.matrix(m).T), symmetry="symmetric",
        name=f"{B.name}_sym")
    return skew, sym


def is_casimir(B, f: ScalarField, side: str, samples, tol: float) -> CheckReport:
    """Left: max ||grad f^T B||_inf over samples; right: max ||B grad f||_inf."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    tensor = _resolve(B)

    def residual(m):
        M = tensor.matrix(m)
        v = M.T @ f.gradient(m) if side == "left" else M @ f.gradient(m)
        return np.max(np.abs(v))

    worst, point = _scan(samples, residual)
    return CheckReport(name=f"casimir-{side}:{f.name}", passed=worst <= tol,
                       tol=tol, max_residual=worst, worst_point=point)


def characteristic_image(B, m, side: str = "right") -> np.ndarray:
    """Orthonormal basis (columns) of the image of B_R# (v -> Bv) or
    B_L# (v -> -B^T v), keeping singular values above n*eps*sigma_max."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    tensor = _resolve(B)
    M = tensor.matrix(m)
    A = M if side == "right" else -M.T
    U, S, _ = np.linalg.svd(A)
    if S.size == 0 or S[0] == 0.0:
        return np.zeros((tensor.chart.dim, 0))
    keep = S > tensor.chart.dim * np.finfo(float).eps * S[0]
    return U[:, keep]


def leibniz_form(B, m) -> np.ndarray:
    """W = (B(m)^T)^{-1}, satisfying X_f(m)^T W X_g(m) = [f, g](m)."""
    tensor = _resolve(B)
    M = tensor.matrix(m)
    S = np.linalg.svd(M, compute_uv=False)
    n = tensor.chart.dim
    if S[-1] <= n * np.finfo(float).eps * S[0]:
        cond = math.inf if S[-1] == 0.0 else float(S[0] / S[-1])
        raise NondegeneracyError(f"tensor is singular at {np.asarray(m).tolist()}", cond)
    return np.linalg.inv(M.T)


def equivalent_hamiltonians(B, h1: ScalarField, h2: ScalarField,
                            samples, tol: float) -> CheckReport:
    """Pass iff max over samples of ||B(m)(grad h1 - grad h2)||_inf <= tol."""
    tensor = _resolve(B)

    def residual(m):
        return np.max(np.abs(tensor.matrix(m) @ (h1.gradient(m) - h2.gradient(m))))

    worst, point = _scan(samples, residual)
    return CheckReport(name=f"equivalence:{h1.name}~{h2.name}", passed=worst <= tol,
                       tol=tol, max_residual=worst, worst_point=point)
