"""Built-in catalog of worked systems, plus a TOML definition-file loader.

Each entry builds a LeibnizSystem together with whatever associated data it
has: constraint specs, group actions, momentum maps, invariant reductions,
known Casimirs, stored closed-form matrices used as transcription oracles,
and a per-system sample box that avoids singular loci.  Symmetry flags are
verified by sampling at build time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .core import (CoordinateChart, LeibnizSystem, LeibnizTensorField,
                   ScalarField, SmoothMap, VectorField, sample_points)
from .nonholonomic import ConstraintSpec, constrained_tensor, projector_at
from .symmetry import ActionSpec, InvariantReduction, MomentumMapSpec

__all__ = [
    "ParamSpec",
    "CatalogEntry",
    "SystemBundle",
    "UnknownSystemError",
    "ParameterError",
    "catalog",
    "catalog_listing",
    "make_system",
    "load_system_file",
]


class UnknownSystemError(ValueError):
    """No catalog entry or definition file matches the requested name."""


class ParameterError(ValueError):
    """Supplied parameters violate an entry's schema."""


@dataclass(frozen=True)
class ParamSpec:
    default: object
    description: str


@dataclass
class SystemBundle:
    """A built system plus its associated specs and stored oracle data."""

    name: str
    params: dict
    system: LeibnizSystem
    sample_box: list
    x0_default: Optional[list] = None
    constraint: Optional[ConstraintSpec] = None
    action: Optional[ActionSpec] = None
    momentum: Optional[MomentumMapSpec] = None
    reduction: Optional[InvariantReduction] = None
    casimirs: list = field(default_factory=list)        # (side, ScalarField)
    equivalent_pair: Optional[tuple] = None             # (h1, h2) ScalarFields
    momentum_action: Optional[ActionSpec] = None        # when != quotient action
    stored: dict = field(default_factory=dict)          # label -> matrix fn
    reduction_expected: Optional[LeibnizTensorField] = None
    reduction_pattern: Optional[dict] = None            # pattern/prefactor tensors
    projection: Optional[SmoothMap] = None              # chart -> reduced chart
    reduced_system_name: Optional[str] = None
    notes: str = ""


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    params: dict
    builder: Callable
    notes: str

    def build(self, overrides: Optional[Mapping] = None) -> SystemBundle:
        values = {k: spec.default for k, spec in self.params.items()}
        overrides = dict(overrides or {})
        unknown = set(overrides) - set(values)
        if unknown:
            raise ParameterError(
                f"unknown parameters for {self.name!r}: {sorted(unknown)}")
        values.update(overrides)
        bundle = self.builder(values)
        bundle.notes = self.notes
        _verify_bundle(bundle)
        return bundle


def _verify_bundle(bundle: SystemBundle) -> None:
    """Build-time validation: symmetry flags sampled on the entry's box."""
    pts = sample_points(bundle.sample_box, 10, seed_or_rng=0)
    bundle.system.tensor.validate_symmetry(pts)


# === Shared helpers ===

def _canonical_tensor(chart: CoordinateChart) -> LeibnizTensorField:
    n = chart.dim // 2
    M = np.zeros((chart.dim, chart.dim))
    M[:n, n:] = np.eye(n)
    M[n:, :n] = -np.eye(n)
    return LeibnizTensorField.from_constant(chart, M, symmetry="skew",
                                            name="canonical")


def _canonical_chart(dim: int) -> CoordinateChart:
    if dim == 2:
        return CoordinateChart(("q", "p"))
    if dim == 6:
        return CoordinateChart(("x", "y", "z", "p_x", "p_y", "p_z"))
    n = dim // 2
    return CoordinateChart(tuple(f"q_{i+1}" for i in range(n))
                           + tuple(f"p_{i+1}" for i in range(n)))


def _translation_group(chart: CoordinateChart, indices: Sequence[int]):
    def group_map(g, m):
        out = np.array(m, dtype=float)
        for gi, idx in zip(np.atleast_1d(g), indices):
            out[idx] += gi
        return out
    return group_map


# === Builders ===

def _build_canonical(params) -> SystemBundle:
    dim = int(params["dim"])
    if dim < 2 or dim % 2:
        raise ParameterError("canonical dimension must be even and >= 2")
    chart = _canonical_chart(dim)
    tensor = _canonical_tensor(chart)
    if dim == 2:
        h = ScalarField.from_expression(chart, "(q^2 + p^2)/2", name="H")
        momentum = MomentumMapSpec(
            components=[ScalarField.from_expression(chart, "p", name="J")],
            factors=[ScalarField.from_expression(chart, "1", name="f")])
        action = ActionSpec(
            generators=[VectorField.from_expressions(chart, ["1", "0"], name="d/dq")],
            group_map=_translation_group(chart, [0]))
        x0 = [1.0, 0.0]
    else:
        n = dim // 2
        h_src = " + ".join(f"{name}^2" for name in chart.names[n:])
        h = ScalarField.from_expression(chart, f"({h_src})/2", name="H")
        momentum = action = None
        x0 = None
    system = LeibnizSystem(chart=chart, tensor=tensor, hamiltonian=h,
                           name=f"canonical{dim}")
    return SystemBundle(name="canonical", params=dict(params), system=system,
                        sample_box=[(-2.0, 2.0)] * dim, x0_default=x0,
                        momentum=momentum, action=action)


def _build_pseudometric(params) -> SystemBundle:
    names = tuple(params["coordinates"])
    chart = CoordinateChart(names)
    entries = params["entries"]
    if entries is None:
        entries = [["1" if i == j else "0" for j in range(chart.dim)]
                   for i in range(chart.dim)]
    tensor = LeibnizTensorField.from_expressions(chart, entries,
                                                 symmetry="symmetric",
                                                 name="pseudometric")
    h = ScalarField.from_expression(chart, params["hamiltonian"], name="H")
    system = LeibnizSystem(chart=chart, tensor=tensor, hamiltonian=h,
                           name="pseudometric")
    return SystemBundle(name="pseudometric", params=dict(params), system=system,
                        sample_box=[(-2.0, 2.0)] * chart.dim)


def _build_three_wave(params) -> SystemBundle:
    s = tuple(float(v) for v in params["s"])
    gamma = tuple(float(v) for v in params["gamma"])
    if len(s) != 3 or any(v not in (-1.0, 1.0) for v in s):
        raise ParameterError("s must be three signs, each -1 or 1")
    if len(gamma) != 3:
        raise ParameterError("gamma must have three components")
    if abs(sum(gamma)) > 1e-12:
        raise ParameterError(f"gamma must sum to zero, got sum {sum(gamma)!r}")
    if any(g == 0.0 for g in gamma):
        raise ParameterError("gamma components must be nonzero")
    chart = CoordinateChart(("x", "y", "z"))
    b = (s[0] * gamma[0], -s[1] * gamma[1], s[2] * gamma[2])
    tensor = LeibnizTensorField.from_constant(chart, np.diag(b),
                                              symmetry="symmetric",
                                              name="three-wave")
    h = ScalarField.from_expression(chart, "x*y*z", name="H")
    system = LeibnizSystem(chart=chart, tensor=tensor, hamiltonian=h,
                           name="three-wave")
    p = {"b1": b[0], "b2": b[1], "b3": b[2]}
    momentum = MomentumMapSpec(
        components=[
            ScalarField.from_expression(chart, "x^2/(2*b1) - z^2/(2*b3)", p, name="J1"),
            ScalarField.from_expression(chart, "y^2/(2*b2) - z^2/(2*b3)", p, name="J2"),
        ],
        factors=[ScalarField.from_expression(chart, "-1", name="f1"),
                 ScalarField.from_expression(chart, "-1", name="f2")])
    action = ActionSpec(
        generators=[VectorField.from_expressions(chart, ["x", "0", "-z"], name="xi1"),
                    VectorField.from_expressions(chart, ["0", "y", "-z"], name="xi2")],
        group_map=lambda g, m: np.array([m[0] * math.exp(g[0]),
                                         m[1] * math.exp(g[1]),
                                         m[2] * math.exp(-g[0] - g[1])]),
        param_box=[(-1.0, 1.0), (-1.0, 1.0)])
    return SystemBundle(name="three-wave", params=dict(params), system=system,
                        sample_box=[(-2.0, 2.0)] * 3, x0_default=[1.0, 1.0, 1.0],
                        momentum=momentum, action=action)


def _rotational_entries(c_coeff: str, c_value: float, scale_by_norm: bool):
    """Entries of hat(M) plus the symmetric double-bracket part.

    hat(M) v = M x v.  The symmetric part is -c (|M|^2 I - M M^T), divided by
    |M|^2 when ``scale_by_norm`` (so its right field is c M x (M x grad h)
    with |M|^2 absorbed) — c is bound as a literal named ``c_coeff``.
    """
    hat = [["0", "-M3", "M2"], ["M3", "0", "-M1"], ["-M2", "M1", "0"]]
    if c_value == 0.0:
        return hat, "skew"
    nn = "(M1^2 + M2^2 + M3^2)"
    rows = []
    for i in range(3):
        row = []
        for j in range(3):
            prod = f"M{i+1}*M{j+1}"
            sym = (f"{c_coeff}*{prod}/{nn}" if scale_by_norm else f"{c_coeff}*{prod}")
            if i == j:
                sym += f" - {c_coeff}" if scale_by_norm else f" - {c_coeff}*{nn}"
            row.append(sym if hat[i][j] == "0" else f"{hat[i][j]} + {sym}")
        rows.append(row)
    return rows, "general"


def _build_landau_lifschitz(params) -> SystemBundle:
    gamma = float(params["gamma"])
    lam = float(params["lambda"])
    b_field = tuple(float(v) for v in params["b_field"])
    if gamma == 0.0:
        raise ParameterError("gamma must be nonzero")
    if len(b_field) != 3:
        raise ParameterError("b_field must have three components")
    chart = CoordinateChart(("M1", "M2", "M3"))
    c = lam / gamma
    rows, flag = _rotational_entries("c", c, scale_by_norm=True)
    tensor = LeibnizTensorField.from_expressions(chart, rows, symmetry=flag,
                                                 parameters={"c": c},
                                                 name="landau-lifschitz")
    h = ScalarField.from_expression(
        chart, "g*(M1*b1 + M2*b2 + M3*b3)",
        {"g": gamma, "b1": b_field[0], "b2": b_field[1], "b3": b_field[2]}, name="H")
    system = LeibnizSystem(
        chart=chart, tensor=tensor, hamiltonian=h,
        domain=LeibnizSystem.domain_from_expression(chart, "M1^2 + M2^2 + M3^2"),
        domain_expr="M1^2 + M2^2 + M3^2", name="landau-lifschitz")

    reduced_chart = CoordinateChart(("sigma1", "sigma2"))
    sigmas = [ScalarField.from_expression(chart, "(M1^2 + M2^2)/2", name="sigma1"),
              ScalarField.from_expression(chart, "M3", name="sigma2")]
    section = SmoothMap.from_expressions(reduced_chart, chart,
                                         ["sqrt(2*sigma1)", "0", "sigma2"],
                                         name="section")
    reduction = InvariantReduction(sigmas=sigmas, section=section,
                                   reduced_chart=reduced_chart)
    action = ActionSpec(
        generators=[VectorField.from_expressions(chart, ["-M2", "M1", "0"],
                                                 name="rotation")],
        group_map=lambda g, m: np.array([
            math.cos(g[0]) * m[0] - math.sin(g[0]) * m[1],
            math.sin(g[0]) * m[0] + math.cos(g[0]) * m[1], m[2]]),
        param_box=[(-math.pi, math.pi)])
    pattern = LeibnizTensorField.from_expressions(
        reduced_chart,
        [["-2*sigma1*sigma2^2", "2*sigma1*sigma2"],
         ["2*sigma1*sigma2", "-2*sigma1"]],
        symmetry="symmetric", name="reduced-pattern")
    prefactor = ScalarField.from_expression(reduced_chart,
                                            "1/(2*sigma1 + sigma2^2)",
                                            name="prefactor")
    projection = SmoothMap.from_expressions(chart, reduced_chart,
                                            ["(M1^2 + M2^2)/2", "M3"],
                                            name="projection")
    return SystemBundle(name="landau-lifschitz", params=dict(params), system=system,
                        sample_box=[(0.25, 1.75)] * 3, x0_default=[1.0, 1.0, 1.0],
                        action=action, reduction=reduction,
                        reduction_pattern={"pattern": pattern,
                                           "prefactor": prefactor,
                                           "expected_factor": c,
                                           "reduced_box": [(0.2, 2.0), (-2.0, 2.0)]},
                        projection=projection)


def _build_rigid_body(params) -> SystemBundle:
    inertia = tuple(float(v) for v in params["inertia"])
    alpha = float(params["alpha"])
    if len(inertia) != 3 or any(v <= 0 for v in inertia):
        raise ParameterError("inertia must be three positive moments")
    if alpha < 0:
        raise ParameterError("alpha must be nonnegative")
    chart = CoordinateChart(("M1", "M2", "M3"))
    rows, flag = _rotational_entries("a", alpha, scale_by_norm=False)
    tensor = LeibnizTensorField.from_expressions(chart, rows, symmetry=flag,
                                                 parameters={"a": alpha},
                                                 name="rigid-body")
    h = ScalarField.from_expression(
        chart, "M1^2/(2*I1) + M2^2/(2*I2) + M3^2/(2*I3)",
        {"I1": inertia[0], "I2": inertia[1], "I3": inertia[2]}, name="H")
    system = LeibnizSystem(
        chart=chart, tensor=tensor, hamiltonian=h,
        domain=LeibnizSystem.domain_from_expression(chart, "M1^2 + M2^2 + M3^2"),
        domain_expr="M1^2 + M2^2 + M3^2", name="rigid-body-dissipative")
    return SystemBundle(name="rigid-body-dissipative", params=dict(params),
                        system=system, sample_box=[(0.25, 1.75)] * 3,
                        x0_default=[1.0, 1.0, 1.0])


def _build_noncanonical_r3(params) -> SystemBundle:
    chart = CoordinateChart(("x", "y", "z"))
    tensor = LeibnizTensorField.from_expressions(
        chart, [["0", "x", "y"], ["-x", "0", "x"], ["-y", "-x", "0"]],
        symmetry="skew", name="noncanonical-r3")
    h = ScalarField.from_expression(chart, "(x^2 + y^2)/2", name="H")
    system = LeibnizSystem(
        chart=chart, tensor=tensor, hamiltonian=h,
        domain=LeibnizSystem.domain_from_expression(chart, "z^2"),
        domain_expr="z^2", name="noncanonical-r3")
    reduced_chart = CoordinateChart(("x", "y"))
    sigmas = [ScalarField.from_expression(chart, "x", name="x"),
              ScalarField.from_expression(chart, "y", name="y")]
    section = SmoothMap.from_expressions(reduced_chart, chart, ["x", "y", "1"],
                                         name="section")
    reduction = InvariantReduction(sigmas=sigmas, section=section,
                                   reduced_chart=reduced_chart)
    action = ActionSpec(
        generators=[VectorField.from_expressions(chart, ["0", "0", "z"],
                                                 name="scaling")],
        group_map=lambda g, m: np.array([m[0], m[1], math.exp(g[0]) * m[2]]),
        param_box=[(-1.0, 1.0)])
    expected = LeibnizTensorField.from_expressions(
        reduced_chart, [["0", "x"], ["-x", "0"]], symmetry="skew",
        name="reduced-expected")
    projection = SmoothMap.from_expressions(chart, reduced_chart, ["x", "y"],
                                            name="projection")
    return SystemBundle(name="noncanonical-r3", params=dict(params), system=system,
                        sample_box=[(-2.0, 2.0), (-2.0, 2.0), (0.5, 2.0)],
                        x0_default=[1.0, 1.0, 1.0], action=action,
                        reduction=reduction, reduction_expected=expected,
                        projection=projection)


def _build_upper_half_plane(params) -> SystemBundle:
    xi = float(params["xi"])
    chart = CoordinateChart(("x", "y"))
    tensor = LeibnizTensorField.from_constant(chart, [[0.0, 1.0], [-1.0, 0.0]],
                                              symmetry="skew",
                                              name="upper-half-plane")
    h = ScalarField.from_expression(chart, "(x^2 + y^2)/2", name="H")
    system = LeibnizSystem(
        chart=chart, tensor=tensor, hamiltonian=h,
        domain=LeibnizSystem.domain_from_expression(chart, "y"),
        domain_expr="y", name="upper-half-plane")
    p = {"c": math.exp(xi), "xi": xi}
    action = ActionSpec(
        generators=[VectorField.from_expressions(chart, ["0", "c*y"], p, name="xi_P")],
        group_map=lambda g, m: np.array([m[0], math.exp(g[0]) * m[1]]),
        param_box=[(-1.0, 1.0)])
    momentum = MomentumMapSpec(
        components=[ScalarField.from_expression(chart, "xi*x", p, name="J")],
        factors=[ScalarField.from_expression(chart, "-xi/(c*y)", p, name="f")])
    return SystemBundle(name="upper-half-plane", params=dict(params), system=system,
                        sample_box=[(-2.0, 2.0), (0.5, 2.5)], x0_default=[1.0, 1.0],
                        action=action, momentum=momentum)


_PARTICLE_PI = [
    ["1", "0", "0", "0", "0", "0"],
    ["0", "1", "0", "0", "0", "0"],
    ["0", "0", "1", "0", "0", "0"],
    ["0", "-p_z/(1 + y^2)", "0", "y^2/(1 + y^2)", "0", "-y/(1 + y^2)"],
    ["0", "0", "0", "0", "1", "0"],
    ["0", "-y*p_z/(1 + y^2)", "0", "-y/(1 + y^2)", "0", "1/(1 + y^2)"],
]

_PARTICLE_BTILDE = [
    ["0", "0", "0", "1", "0", "0"],
    ["0", "0", "0", "0", "1", "0"],
    ["0", "0", "0", "0", "0", "1"],
    ["-y^2/(1 + y^2)", "0", "y/(1 + y^2)", "0", "-p_z/(1 + y^2)", "0"],
    ["0", "-1", "0", "0", "0", "0"],
    ["y/(1 + y^2)", "0", "-1/(1 + y^2)", "0", "-y*p_z/(1 + y^2)", "0"],
]

_PARTICLE_XR = ["p_x", "p_y", "p_z", "-p_z*p_y/(1 + y^2)", "0",
                "-y*p_z*p_y/(1 + y^2)"]

_REDUCED1_ROWS = [
    ["0", "0", "1", "0"],
    ["y/(1 + y^2)", "0", "-p_z/(1 + y^2)", "0"],
    ["0", "0", "0", "0"],
    ["-1/(1 + y^2)", "0", "-y*p_z/(1 + y^2)", "0"],
]


def _build_constrained_particle(params) -> SystemBundle:
    a = float(params["a"])
    chart = _canonical_chart(6)
    base = LeibnizSystem(
        chart=chart, tensor=_canonical_tensor(chart),
        hamiltonian=ScalarField.from_expression(
            chart, "(p_x^2 + p_y^2 + p_z^2)/2", name="H"),
        name="canonical6")
    phi = ScalarField.from_expression(chart, "p_x + y*p_z - a", {"a": a}, name="phi")
    w = VectorField.from_expressions(chart, ["0", "0", "0", "1", "0", "y"], name="w")
    constraint = ConstraintSpec(system=base, phis=[phi], ws=[w])
    tensor = constrained_tensor(constraint, name="constrained-particle")
    system = LeibnizSystem(chart=chart, tensor=tensor,
                           hamiltonian=base.hamiltonian,
                           name="constrained-particle")

    stored = {
        "pi": LeibnizTensorField.from_expressions(chart, _PARTICLE_PI,
                                                  name="stored-pi"),
        "btilde": LeibnizTensorField.from_expressions(chart, _PARTICLE_BTILDE,
                                                      name="stored-btilde"),
        "xr": VectorField.from_expressions(chart, _PARTICLE_XR, name="stored-xr"),
    }
    # Both construction routes must agree: the projector formula against the
    # stored closed-form matrices.
    for m in sample_points([(-2.0, 2.0)] * 6, 5, seed_or_rng=11):
        if np.max(np.abs(projector_at(constraint, m) - stored["pi"].matrix(m))) > 1e-12:
            raise RuntimeError("constrained-particle projector routes disagree")
        if np.max(np.abs(tensor.matrix(m) - stored["btilde"].matrix(m))) > 1e-12:
            raise RuntimeError("constrained-particle tensor routes disagree")

    momentum = MomentumMapSpec(
        components=[ScalarField.from_expression(chart, "p_y + p_x + y*p_z", name="J")],
        factors=[ScalarField.from_expression(chart, "1", name="f")])
    momentum_action = ActionSpec(
        generators=[VectorField.from_expressions(
            chart, ["0", "1", "0", "0", "0", "0"], name="d/dy")])

    reduced_chart = CoordinateChart(("y", "p_x", "p_y", "p_z"))
    sigmas = [ScalarField.from_expression(chart, name, name=name)
              for name in reduced_chart.names]
    section = SmoothMap.from_expressions(
        reduced_chart, chart, ["0", "y", "0", "p_x", "p_y", "p_z"], name="section")
    reduction = InvariantReduction(sigmas=sigmas, section=section,
                                   reduced_chart=reduced_chart)
    expected = LeibnizTensorField.from_expressions(reduced_chart, _REDUCED1_ROWS,
                                                   name="stored-reduced-1")
    projection = SmoothMap.from_expressions(chart, reduced_chart,
                                            ["y", "p_x", "p_y", "p_z"],
                                            name="projection")
    quotient_action = ActionSpec(
        generators=[VectorField.from_expressions(
            chart, ["1", "0", "0", "0", "0", "0"], name="d/dx"),
            VectorField.from_expressions(
            chart, ["0", "0", "1", "0", "0", "0"], name="d/dz")],
        group_map=_translation_group(chart, [0, 2]),
        param_box=[(-1.0, 1.0), (-1.0, 1.0)])
    x0 = [0.0, 1.0, 0.0, 1.0, 1.0, -1.0] if a == 0.0 else None
    return SystemBundle(name="constrained-particle", params=dict(params),
                        system=system, sample_box=[(-2.0, 2.0)] * 6,
                        x0_default=x0, constraint=constraint, momentum=momentum,
                        momentum_action=momentum_action, action=quotient_action,
                        reduction=reduction, reduction_expected=expected,
                        projection=projection,
                        reduced_system_name="constrained-particle-reduced-1",
                        stored=stored)


def _build_reduced_1(params) -> SystemBundle:
    chart = CoordinateChart(("y", "p_x", "p_y", "p_z"))
    tensor = LeibnizTensorField.from_expressions(chart, _REDUCED1_ROWS,
                                                 name="constrained-particle-reduced-1")
    h = ScalarField.from_expression(chart, "(p_x^2 + p_y^2 + p_z^2)/2", name="h")
    system = LeibnizSystem(chart=chart, tensor=tensor, hamiltonian=h,
                           name="constrained-particle-reduced-1")
    casimirs = [
        ("left", ScalarField.from_expression(chart, "p_y", name="p_y")),
        ("left", ScalarField.from_expression(chart, "p_x + y*p_z", name="p_x + y*p_z")),
        ("right", ScalarField.from_expression(chart, "p_x", name="p_x")),
        ("right", ScalarField.from_expression(chart, "p_z", name="p_z")),
    ]
    hbar = ScalarField.from_expression(chart, "p_y^2/2", name="hbar")
    reduced_chart = CoordinateChart(("y", "p_y"))
    sigmas = [ScalarField.from_expression(chart, "y", name="y"),
              ScalarField.from_expression(chart, "p_y", name="p_y")]
    section = SmoothMap.from_expressions(reduced_chart, chart,
                                         ["y", "0", "p_y", "0"], name="section")
    reduction = InvariantReduction(sigmas=sigmas, section=section,
                                   reduced_chart=reduced_chart)
    expected = LeibnizTensorField.from_expressions(reduced_chart,
                                                   [["0", "1"], ["0", "0"]],
                                                   name="stored-reduced-2")
    projection = SmoothMap.from_expressions(chart, reduced_chart, ["y", "p_y"],
                                            name="projection")
    quotient_action = ActionSpec(
        generators=[VectorField.from_expressions(chart, ["0", "1", "0", "0"],
                                                 name="d/dp_x"),
                    VectorField.from_expressions(chart, ["0", "0", "0", "1"],
                                                 name="d/dp_z")],
        group_map=_translation_group(chart, [1, 3]),
        param_box=[(-1.0, 1.0), (-1.0, 1.0)])
    return SystemBundle(name="constrained-particle-reduced-1", params=dict(params),
                        system=system, sample_box=[(-2.0, 2.0)] * 4,
                        x0_default=[1.0, 1.0, 1.0, -1.0],
                        casimirs=casimirs, equivalent_pair=(hbar, h),
                        action=quotient_action, reduction=reduction,
                        reduction_expected=expected, projection=projection,
                        reduced_system_name="constrained-particle-reduced-2")


def _build_reduced_2(params) -> SystemBundle:
    chart = CoordinateChart(("y", "p_y"))
    tensor = LeibnizTensorField.from_expressions(chart, [["0", "1"], ["0", "0"]],
                                                 name="constrained-particle-reduced-2")
    h = ScalarField.from_expression(chart, "p_y^2/2", name="h")
    system = LeibnizSystem(chart=chart, tensor=tensor, hamiltonian=h,
                           name="constrained-particle-reduced-2")
    return SystemBundle(name="constrained-particle-reduced-2", params=dict(params),
                        system=system, sample_box=[(-2.0, 2.0)] * 2,
                        x0_default=[0.0, 1.0])


# === Catalog ===

_CATALOG: dict = {}


def _register(name: str, params: dict, builder: Callable, notes: str) -> None:
    _CATALOG[name] = CatalogEntry(name=name, params=params, builder=builder,
                                  notes=notes)


_register(
    "canonical",
    {"dim": ParamSpec(2, "even chart dimension 2n")},
    _build_canonical,
    "Constant tensor [[0, I], [-I, 0]]; dimension 2 is the harmonic "
    "oscillator H = (q^2 + p^2)/2 with translation momentum J = p, higher "
    "dimensions carry the free Hamiltonian (sum of squared momenta)/2. "
    "'canonicalN' selects dimension N.")

_register(
    "pseudometric",
    {"coordinates": ParamSpec(("x", "y"), "chart coordinate names"),
     "entries": ParamSpec(None, "symmetric matrix of expressions (default identity)"),
     "hamiltonian": ParamSpec("(x^2 + y^2)/2", "Hamiltonian expression")},
    _build_pseudometric,
    "Symmetric bracket [f,g] = grad f . G grad g; with the identity matrix "
    "the right vector field is the plain gradient flow X_h = grad h.")

_register(
    "three-wave",
    {"s": ParamSpec((1, 1, 1), "three signs, each +1 or -1"),
     "gamma": ParamSpec((2.0, -1.0, -1.0), "three nonzero reals summing to 0")},
    _build_three_wave,
    "Constant diagonal symmetric tensor diag(s1*g1, -s2*g2, s3*g3) with "
    "H = xyz, so the right field is (s1 g1 yz, -s2 g2 xz, s3 g3 xy); the "
    "middle sign is fixed by conservation of the momentum components J1, J2 "
    "(integrating factors both -1).  Defaults keep trajectories from "
    "(1,1,1) bounded.")

_register(
    "landau-lifschitz",
    {"gamma": ParamSpec(1.0, "precession coefficient (nonzero)"),
     "lambda": ParamSpec(0.1, "damping coefficient"),
     "b_field": ParamSpec((0.0, 0.0, 1.0), "external field vector")},
    _build_landau_lifschitz,
    "Tensor hat(M) - (lambda/gamma)(I - M M^T/|M|^2) with H = gamma M.b; "
    "the overall sign is chosen so the right field is exactly "
    "gamma M x b + (lambda/|M|^2) M x (M x b).  Regular domain M != 0. "
    "Reduction by sigma1 = (M1^2+M2^2)/2, sigma2 = M3 matches the pattern "
    "[[-2 s1 s2^2, 2 s1 s2], [2 s1 s2, -2 s1]] / (2 s1 + s2^2) "
    "times the recorded global factor lambda/gamma.")

_register(
    "rigid-body-dissipative",
    {"inertia": ParamSpec((1.0, 2.0, 3.0), "positive principal moments"),
     "alpha": ParamSpec(0.1, "nonnegative dissipation coefficient")},
    _build_rigid_body,
    "Tensor hat(M) - alpha (|M|^2 I - M M^T) with the kinetic Hamiltonian; "
    "the right field is M x Omega + alpha M x (M x Omega), which decreases "
    "H monotonically (alpha = 0 gives the energy-conserving free body). "
    "Regular domain M != 0.")

_register(
    "noncanonical-r3",
    {},
    _build_noncanonical_r3,
    "Skew tensor [[0, x, y], [-x, 0, x], [-y, -x, 0]] on z != 0 with "
    "H = (x^2 + y^2)/2.  The coordinate-function Jacobiator equals the "
    "y coordinate (recorded; not zero), while the reduction by sigma = (x, y) "
    "with section (x, y, 1) is the skew tensor [[0, x], [-x, 0]], whose "
    "two-dimensional Jacobiator vanishes.")

_register(
    "upper-half-plane",
    {"xi": ParamSpec(1.0, "algebra element selecting the generator family")},
    _build_upper_half_plane,
    "Canonical area tensor on y > 0 with the scaling action (x, y) -> "
    "(x, e^a y); for each xi the generator (0, e^xi y) has momentum "
    "component J = xi*x with integrating factor -xi/(e^xi y).")

_register(
    "constrained-particle",
    {"a": ParamSpec(0.0, "constraint level in phi = p_x + y*p_z - a")},
    _build_constrained_particle,
    "Free particle on the canonical 6-dimensional chart constrained by "
    "phi = p_x + y*p_z - a with complement w = d/dp_x + y d/dp_z.  The "
    "projector and constrained tensor are stored in closed form and the "
    "formula-built route is asserted against them at build time; the tensor "
    "is independent of a.  J = p_y + p_x + y*p_z is exactly conserved. "
    "Invariants (y, p_x, p_y, p_z) quotient out translations in x and z.")

_register(
    "constrained-particle-reduced-1",
    {},
    _build_reduced_1,
    "Stored 4-dimensional tensor on (y, p_x, p_y, p_z) with left Casimirs "
    "p_y and p_x + y*p_z, right Casimirs p_x and p_z; hbar = p_y^2/2 is "
    "equivalent to the full reduced Hamiltonian.  Note: this stored matrix "
    "is the closed-form table recorded for this chart; the invariant-based "
    "quotient of the constrained-particle tensor differs from it in the "
    "first column (see README, Known discrepancies) while generating the "
    "same dynamics.")

_register(
    "constrained-particle-reduced-2",
    {},
    _build_reduced_2,
    "Two-dimensional tensor [[0, 1], [0, 0]] on (y, p_y) with h = p_y^2/2; "
    "the second-stage quotient of constrained-particle-reduced-1 by "
    "(y, p_y).")


def catalog() -> dict:
    """Name -> CatalogEntry for every built-in system."""
    return dict(_CATALOG)


def catalog_listing() -> list:
    """JSON-ready catalog listing (name, parameter schema, notes)."""
    out = []
    for name in sorted(_CATALOG):
        entry = _CATALOG[name]
        out.append({
            "name": name,
            "parameters": {k: {"default": _json_default(v.default),
                               "description": v.description}
                           for k, v in entry.params.items()},
            "notes": entry.notes,
        })
    return out


def _json_default(value):
    if isinstance(value, tuple):
        return list(value)
    return value


def make_system(name: str, params: Optional[Mapping] = None, **kwargs) -> SystemBundle:
    """Instantiate a catalog entry (or 'canonicalN' shorthand) with parameters."""
    overrides = dict(params or {})
    overrides.update(kwargs)
    if name not in _CATALOG and name.startswith("canonical"):
        suffix = name[len("canonical"):]
        if suffix.isdigit():
            overrides.setdefault("dim", int(suffix))
            name = "canonical"
    if name not in _CATALOG:
        raise UnknownSystemError(f"unknown system {name!r}; try one of "
                                 f"{sorted(_CATALOG)}")
    return _CATALOG[name].build(overrides)


# === Definition files ===

def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python 3.10
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _group_map_from_expressions(chart: CoordinateChart, param_names: Sequence[str],
                                sources: Sequence[str], params: Mapping):
    """Action map exprs over chart coordinates plus group parameter names."""
    extended = CoordinateChart(tuple(chart.names) + tuple(param_names))
    fields = [ScalarField.from_expression(extended, s, params) for s in sources]

    def group_map(g, m):
        point = np.concatenate([np.asarray(m, dtype=float),
                                np.atleast_1d(np.asarray(g, dtype=float))])
        return np.array([f.value(point) for f in fields])

    return group_map


def load_system_file(path: str) -> SystemBundle:
    """Build a SystemBundle from a TOML definition file.

    Sections: [system] (coordinates, hamiltonian, optional symmetry, domain,
    name), [tensor] (rows, or sparse entries {"i,j" = expr}), [parameters],
    [constraints] (phi), [complement] (w), [action] (generators, params, map,
    param_box), [momentum] (components, factors), [invariants] (sigma,
    section, reduced_coordinates), plus optional sample_box and x0.
    """
    data = _load_toml(path)
    try:
        sys_block = data["system"]
        names = tuple(sys_block["coordinates"])
        chart = CoordinateChart(names)
        params = {k: float(v) for k, v in data.get("parameters", {}).items()}
        tensor_block = data["tensor"]
        if "rows" in tensor_block:
            entries = tensor_block["rows"]
        else:
            entries = {tuple(int(p) for p in key.split(",")): src
                       for key, src in tensor_block["entries"].items()}
        tensor = LeibnizTensorField.from_expressions(
            chart, entries, symmetry=sys_block.get("symmetry", "general"),
            parameters=params, name=sys_block.get("name", path))
        h = ScalarField.from_expression(chart, sys_block["hamiltonian"], params,
                                        name="H")
        domain = domain_expr = None
        if "domain" in sys_block:
            domain_expr = sys_block["domain"]
            domain = LeibnizSystem.domain_from_expression(chart, domain_expr, params)
        system = LeibnizSystem(chart=chart, tensor=tensor, hamiltonian=h,
                               domain=domain, domain_expr=domain_expr,
                               name=sys_block.get("name", path))

        constraint = None
        if "constraints" in data:
            phis = [ScalarField.from_expression(chart, s, params, name=s)
                    for s in data["constraints"]["phi"]]
            ws = [VectorField.from_expressions(chart, comps, params)
                  for comps in data["complement"]["w"]]
            constraint = ConstraintSpec(system=system, phis=phis, ws=ws)

        action = None
        if "action" in data:
            block = data["action"]
            generators = [VectorField.from_expressions(chart, comps, params)
                          for comps in block["generators"]]
            group_map = None
            if "map" in block:
                group_map = _group_map_from_expressions(
                    chart, block.get("params", ["t"]), block["map"], params)
            action = ActionSpec(generators=generators, group_map=group_map,
                                param_box=[tuple(b) for b in
                                           block.get("param_box", [(-1.0, 1.0)])])

        momentum = None
        if "momentum" in data:
            block = data["momentum"]
            components = [ScalarField.from_expression(chart, s, params, name=s)
                          for s in block["components"]]
            factors = None
            if "factors" in block:
                factors = [ScalarField.from_expression(chart, s, params, name=s)
                           for s in block["factors"]]
            momentum = MomentumMapSpec(components=components, factors=factors)

        reduction = None
        if "invariants" in data:
            block = data["invariants"]
            reduced_chart = CoordinateChart(tuple(block["reduced_coordinates"]))
            sigmas = [ScalarField.from_expression(chart, s, params, name=s)
                      for s in block["sigma"]]
            section = SmoothMap.from_expressions(reduced_chart, chart,
                                                 block["section"], params,
                                                 name="section")
            reduction = InvariantReduction(sigmas=sigmas, section=section,
                                           reduced_chart=reduced_chart)

        box = [tuple(b) for b in data.get("sample_box", [(-2.0, 2.0)] * chart.dim)]
        x0 = list(data["x0"]) if "x0" in data else None
    except KeyError as err:
        raise ValueError(f"definition file {path} is missing key {err}") from err
    bundle = SystemBundle(name=sys_block.get("name", path), params=params,
                          system=system, sample_box=box, x0_default=x0,
                          constraint=constraint, action=action,
                          momentum=momentum, reduction=reduction)
    _verify_bundle(bundle)
    return bundle
