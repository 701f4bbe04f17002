"""Command-line front end: list, simulate, check, reduce, constrain.

Every command prints one deterministic JSON report to stdout (no timestamps,
sorted keys); errors are JSON objects on stderr.  Exit codes: 0 pass,
1 check failed, 2 usage/input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import expr as ex
from .core import (CheckReport, CoordinateChart, LeibnizSystem,
                   LeibnizTensorField, NondegeneracyError, OutOfDomainError,
                   PreconditionError, ScalarField, SmoothMap, VectorField,
                   equivalent_hamiltonians, is_casimir, jacobiator,
                   sample_points)
from .dynamics import (IntegratorConfig, StepUnderflowError,
                       TruncatedTrajectoryError, drift_report,
                       flow_commutation_check, integrate, relatedness_check)
from .nonholonomic import (ConstraintSpec, TransversalityError,
                           constrained_system, constrained_tensor,
                           constraint_drift, family_independence_check,
                           projector_at)
from .symmetry import (SubspacePair, momentum_map_check, noether_drift,
                       pointwise_reducibility, reduce_by_invariants,
                       welldefinedness_check)
from .systems import (ParameterError, SystemBundle, UnknownSystemError,
                      catalog_listing, load_system_file, make_system)

__all__ = ["run", "main"]

_USAGE_ERRORS = (UnknownSystemError, ParameterError, ex.ParseError, KeyError,
                 ValueError)
_NUMERICAL_ERRORS = (TransversalityError, NondegeneracyError,
                     OutOfDomainError, PreconditionError, StepUnderflowError,
                     TruncatedTrajectoryError, ex.DomainError,
                     ArithmeticError)

# Malformed-source corpus: (source, expected message, start, end).  The check
# command verifies the parser reports exactly these positions.
MALFORMED_CORPUS = [
    ("x +", "expected expression", 3, 3),
    ("(x + y", "expected ')'", 6, 6),
    ("x ^ y", "exponent must be an integer literal", 4, 5),
    ("foo(x)", "unknown function 'foo'", 0, 3),
    ("sin x", "function 'sin' requires an argument list", 0, 3),
    ("x + * y", "expected expression, found '*'", 4, 5),
    ("2 @ 3", "unexpected character '@'", 2, 3),
    ("", "empty expression", 0, 0),
    ("x y", "unexpected token 'y'", 2, 3),
    ("sqrt(,)", "unexpected character ','", 5, 6),
]


# === Helpers ===

def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2))


def _fail_json(kind: str, err: BaseException) -> None:
    obj = {"error": {"type": type(err).__name__, "kind": kind,
                     "message": str(err)}}
    print(json.dumps(obj, sort_keys=True), file=sys.stderr)


def _parse_param_value(text: str):
    parts = text.split(",")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        return tuple(parts) if len(parts) > 1 else text
    return tuple(values) if len(values) > 1 else values[0]


def _parse_params(items: Optional[Sequence[str]]) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"--param expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        out[key.strip()] = _parse_param_value(value.strip())
    return out


def _parse_floats(text: str) -> np.ndarray:
    return np.array([float(p) for p in text.split(",")], dtype=float)


def _load_bundle(args) -> SystemBundle:
    name = args.system
    if name is None:
        raise ValueError("--system is required")
    params = _parse_params(getattr(args, "param", None))
    if name.endswith(".toml"):
        if params:
            raise ValueError("definition files carry their own [parameters]")
        return load_system_file(name)
    return make_system(name, params)


def _samples_for(bundle: SystemBundle, count: int, seed: int) -> np.ndarray:
    if bundle.system.domain is None:
        return sample_points(bundle.sample_box, count, seed_or_rng=seed)
    rng = np.random.default_rng(seed)
    kept = []
    for _ in range(1000):
        batch = sample_points(bundle.sample_box, count, seed_or_rng=rng)
        kept.extend(m for m in batch if bundle.system.in_domain(m))
        if len(kept) >= count:
            return np.array(kept[:count])
    raise PreconditionError(f"sample box for {bundle.name!r} rarely meets "
                            "the regular domain")


def _x0_for(bundle: SystemBundle, args) -> np.ndarray:
    if getattr(args, "x0", None):
        return _parse_floats(args.x0)
    if bundle.x0_default is None:
        raise ValueError(f"system {bundle.name!r} has no default initial "
                         "state; pass --x0")
    return np.array(bundle.x0_default, dtype=float)


def _config_for(args, default_t1: float = 10.0) -> IntegratorConfig:
    dt = args.dt
    if dt is None and args.method == "rk4":
        dt = 1e-3
    return IntegratorConfig(
        t1=args.t1 if args.t1 is not None else default_t1,
        t0=args.t0, method=args.method, dt=dt,
        atol=args.atol, rtol=args.rtol)


def _report_payload(command: str, args, reports, passed: bool,
                    extra: Optional[dict] = None) -> dict:
    payload = {
        "command": command,
        "system": getattr(args, "system", None),
        "params": _parse_params(getattr(args, "param", None)),
        "seed": getattr(args, "seed", None),
        "passed": bool(passed),
        "reports": [r.to_dict() if isinstance(r, CheckReport) else r
                    for r in reports],
    }
    if extra:
        payload.update(extra)
    return payload


def _jacobiator_family(chart: CoordinateChart):
    """Deterministic test functions: coordinates plus adjacent products."""
    fields = [ScalarField.from_expression(chart, name, name=name)
              for name in chart.names]
    for a, b in zip(chart.names, chart.names[1:]):
        src = f"{a}*{b}"
        fields.append(ScalarField.from_expression(chart, src, name=src))
    triples = list(itertools.combinations(fields, 3))
    stride = max(1, len(triples) // 60)
    return triples[::stride]


def _project_to_constraint(spec: ConstraintSpec, m: np.ndarray,
                           iterations: int = 25) -> Optional[np.ndarray]:
    """Newton projection onto the joint zero set of the constraints."""
    point = np.array(m, dtype=float)
    for _ in range(iterations):
        residual = np.array([phi.value(point) for phi in spec.phis])
        if np.max(np.abs(residual)) <= 1e-12:
            return point
        J = np.vstack([phi.gradient(point) for phi in spec.phis])
        try:
            step = J.T @ np.linalg.solve(J @ J.T, residual)
        except np.linalg.LinAlgError:
            return None
        point = point - step
    return None


def _tangent_basis(spec: ConstraintSpec, m: np.ndarray) -> np.ndarray:
    J = np.vstack([phi.gradient(m) for phi in spec.phis])
    _, s, vt = np.linalg.svd(J)
    rank = int(np.sum(s > max(J.shape) * np.finfo(float).eps * (s[0] if len(s) else 1.0)))
    return vt[rank:].T


# === Commands ===

def _cmd_list(args) -> int:
    _emit({"command": "list", "systems": catalog_listing()})
    return 0


def _cmd_simulate(args) -> int:
    bundle = _load_bundle(args)
    system = bundle.system
    x0 = _x0_for(bundle, args)
    cfg = _config_for(args)
    monitors = {"energy": system.hamiltonian}
    for item in args.monitor or []:
        if "=" in item:
            name, _, src = item.partition("=")
        else:
            name = src = item
        monitors[name.strip()] = ScalarField.from_expression(
            system.chart, src, name=name.strip())
    traj = integrate(system, x0, cfg, monitors=monitors)
    drifts = {name: drift_report(traj, name).to_dict() for name in monitors}
    if args.out:
        text = traj.to_csv() if args.format == "csv" else traj.to_json()
        with open(args.out, "w") as fh:
            fh.write(text)
    _emit({
        "command": "simulate",
        "system": args.system,
        "params": _parse_params(args.param),
        "method": cfg.method,
        "steps": len(traj.times) - 1,
        "t_final": float(traj.times[-1]),
        "truncated": traj.truncated,
        "final_state": [float(v) for v in traj.states[-1]],
        "drift": drifts,
        "out": args.out,
    })
    return 0


def _check_casimir(args, bundle: SystemBundle, side: Optional[str]):
    samples = _samples_for(bundle, args.samples, args.seed)
    tol = args.tol if args.tol is not None else 1e-12
    reports = []
    if args.f:
        sides = [side] if side else ([args.side] if args.side else ["left", "right"])
        field = ScalarField.from_expression(bundle.system.chart, args.f,
                                            name=args.f)
        for s in sides:
            reports.append(is_casimir(bundle.system, field, s, samples, tol))
    else:
        wanted = [(s, f) for s, f in bundle.casimirs if side in (None, s)]
        if not wanted:
            raise ValueError(f"system {bundle.name!r} has no stored Casimirs "
                             "for this side; pass --f")
        for s, field in wanted:
            reports.append(is_casimir(bundle.system, field, s, samples, tol))
    return reports


def _check_jacobiator(args, bundle: SystemBundle):
    tol = args.tol if args.tol is not None else 1e-9
    system = bundle.system
    chart = system.chart
    if args.f or args.g or args.h:
        if not (args.f and args.g and args.h):
            raise ValueError("jacobiator needs all three of --f --g --h")
        triples = [tuple(ScalarField.from_expression(chart, s, name=s)
                         for s in (args.f, args.g, args.h))]
    else:
        triples = _jacobiator_family(chart)
    if args.point:
        points = [_parse_floats(args.point)]
    else:
        points = _samples_for(bundle, args.samples, args.seed)
    worst = 0.0
    worst_info = None
    for f, g, h in triples:
        for m in points:
            value = jacobiator(system.tensor, f, g, h, m, force_fd=args.fd)
            gap = abs(value - args.expect) if args.expect is not None else abs(value)
            if gap >= worst:
                worst = gap
                worst_info = {"f": f.name, "g": g.name, "h": h.name,
                              "point": [float(v) for v in m],
                              "value": value}
    report = CheckReport(
        name="jacobiator", passed=worst <= tol, tol=tol, max_residual=worst,
        worst_point=None if worst_info is None else worst_info["point"],
        details={"triples": len(triples), "points": len(points),
                 "fd": bool(args.fd), "expect": args.expect,
                 "worst": worst_info})
    return [report]


def _check_momentum(args, bundle: SystemBundle):
    tol = args.tol if args.tol is not None else 1e-12
    sweeps = _parse_params([args.sweep]) if args.sweep else {}
    reports = []
    if sweeps:
        (key, values), = sweeps.items()
        values = np.atleast_1d(values)
        base = _parse_params(args.param)
        for v in values:
            params = dict(base)
            params[key] = float(v)
            swept = make_system(args.system, params)
            action = swept.momentum_action or swept.action
            if swept.momentum is None or action is None:
                raise ValueError(f"system {swept.name!r} has no momentum map")
            samples = _samples_for(swept, args.samples, args.seed)
            rep = momentum_map_check(swept.system, action, swept.momentum,
                                     samples, tol)
            rep.details[key] = float(v)
            reports.append(rep)
    else:
        action = bundle.momentum_action or bundle.action
        if bundle.momentum is None or action is None:
            raise ValueError(f"system {bundle.name!r} has no momentum map")
        samples = _samples_for(bundle, args.samples, args.seed)
        reports.append(momentum_map_check(bundle.system, action,
                                          bundle.momentum, samples, tol))
    return reports


def _check_noether(args, bundle: SystemBundle):
    if bundle.momentum is None:
        raise ValueError(f"system {bundle.name!r} has no momentum map")
    tol = args.tol if args.tol is not None else 1e-6
    cfg = _config_for(args)
    x0 = _x0_for(bundle, args)
    return [noether_drift(bundle.system, bundle.momentum, x0, cfg,
                          action=bundle.momentum_action or bundle.action,
                          tol=tol)]


def _check_equivalence(args, bundle: SystemBundle):
    tol = args.tol if args.tol is not None else 1e-12
    chart = bundle.system.chart
    if args.f and args.g:
        h1 = ScalarField.from_expression(chart, args.f, name=args.f)
        h2 = ScalarField.from_expression(chart, args.g, name=args.g)
    elif bundle.equivalent_pair is not None:
        h1, h2 = bundle.equivalent_pair
    else:
        raise ValueError(f"system {bundle.name!r} stores no equivalent pair; "
                         "pass --f and --g")
    samples = _samples_for(bundle, args.samples, args.seed)
    return [equivalent_hamiltonians(bundle.system, h1, h2, samples, tol)]


def _check_reducibility(args, bundle: SystemBundle):
    tol = args.tol if args.tol is not None else 1e-10
    system = bundle.system
    n = system.chart.dim
    reports = []
    if bundle.constraint is None:
        # No constraint: S is the whole chart and D the full tangent space,
        # so the inclusion holds by construction.
        pair = SubspacePair(ts_basis=np.eye(n), d_basis=np.eye(n))
        for m in _samples_for(bundle, args.samples, args.seed):
            reports.append(pointwise_reducibility(system, m, pair, tol))
        return reports
    spec = bundle.constraint
    raw = _samples_for(bundle, args.samples, args.seed)
    kept = 0
    for m in raw:
        point = _project_to_constraint(spec, m)
        if point is None or not system.in_domain(point):
            continue
        ts = _tangent_basis(spec, point)
        d = np.column_stack([w.value(point) for w in spec.ws])
        reports.append(pointwise_reducibility(
            system, point, SubspacePair(ts_basis=ts, d_basis=d), tol))
        kept += 1
    if kept == 0:
        raise PreconditionError("no sample could be projected onto the "
                                "constraint set")
    return reports


def _check_relatedness(args, bundle: SystemBundle):
    tol = args.tol if args.tol is not None else 1e-9
    if bundle.projection is None or bundle.reduction is None:
        raise ValueError(f"system {bundle.name!r} has no stored reduction")
    target = reduce_by_invariants(bundle.system, bundle.reduction)
    samples = _samples_for(bundle, args.samples, args.seed)
    return [relatedness_check(bundle.projection, bundle.system, target,
                              samples, tol)]


def _check_energy(args, bundle: SystemBundle):
    tol = args.tol if args.tol is not None else 1e-8
    cfg = _config_for(args)
    x0 = _x0_for(bundle, args)
    traj = integrate(bundle.system, x0, cfg,
                     monitors={"energy": bundle.system.hamiltonian})
    rep = drift_report(traj, "energy")
    worst = abs(rep.max_drift)
    report = CheckReport(name="energy-drift", passed=worst <= tol and not traj.truncated,
                         tol=tol, max_residual=worst,
                         details={"drift": rep.to_dict(),
                                  "truncated": traj.truncated,
                                  "steps": len(traj.times) - 1})
    return [report]


def _check_dissipation(args, bundle: SystemBundle):
    step_tol = args.tol if args.tol is not None else 1e-10
    cfg = _config_for(args)
    x0 = _x0_for(bundle, args)
    traj = integrate(bundle.system, x0, cfg,
                     monitors={"energy": bundle.system.hamiltonian})
    values = traj.monitor("energy")
    increments = np.diff(values)
    max_increase = float(np.max(increments)) if len(increments) else 0.0
    total_decrease = float(values[0] - values[-1])
    passed = (max_increase <= step_tol and total_decrease > 0.0
              and not traj.truncated)
    report = CheckReport(
        name="dissipation", passed=passed, tol=step_tol,
        max_residual=max(max_increase, 0.0),
        details={"max_step_increase": max_increase,
                 "total_decrease": total_decrease,
                 "initial": float(values[0]), "final": float(values[-1]),
                 "truncated": traj.truncated})
    return [report]


def _check_order(args, bundle: SystemBundle):
    cfg_dt = args.dt if args.dt is not None else 0.02
    t1 = args.t1 if args.t1 is not None else 2.0
    x0 = _x0_for(bundle, args)
    lo, hi = (3.7, 4.3)

    def final_state(dt):
        cfg = IntegratorConfig(t1=t1, t0=args.t0, method="rk4", dt=dt)
        traj = integrate(bundle.system, x0, cfg)
        if traj.truncated:
            raise TruncatedTrajectoryError("order measurement left the domain")
        return traj.states[-1]

    reference = final_state(cfg_dt / 16.0)
    err_coarse = float(np.max(np.abs(final_state(cfg_dt) - reference)))
    err_fine = float(np.max(np.abs(final_state(cfg_dt / 2.0) - reference)))
    if err_fine == 0.0 or err_coarse == 0.0:
        raise ArithmeticError("order measurement degenerate: zero error")
    order = float(np.log2(err_coarse / err_fine))
    passed = lo <= order <= hi
    report = CheckReport(
        name="rk4-order", passed=passed, tol=hi, max_residual=order,
        details={"measured_order": order, "window": [lo, hi],
                 "err_coarse": err_coarse, "err_fine": err_fine,
                 "dt": cfg_dt, "t1": t1})
    return [report]


def _expression_fields(bundle: SystemBundle):
    """Every expression-backed scalar field a bundle carries."""
    fields = [bundle.system.hamiltonian]
    if bundle.constraint is not None:
        fields.extend(bundle.constraint.phis)
    if bundle.momentum is not None:
        fields.extend(bundle.momentum.components)
        if bundle.momentum.factors is not None:
            fields.extend(bundle.momentum.factors)
    if bundle.reduction is not None:
        fields.extend(bundle.reduction.sigmas)
    return [f for f in fields if f.ast is not None]


def _check_expressions(args, bundle_unused=None):
    from .systems import catalog
    tol = args.tol if args.tol is not None else 1e-6
    worst = 0.0
    worst_info = None
    checked = 0
    for name in sorted(catalog()):
        bundle = make_system(name)
        samples = _samples_for(bundle, args.samples, args.seed)
        chart = bundle.system.chart
        targets = _expression_fields(bundle)
        tensor = bundle.system.tensor
        entry_fields = []
        if tensor.entries_ast is not None:
            for i in range(chart.dim):
                for j in range(chart.dim):
                    node = tensor.entries_ast[i][j]
                    if not isinstance(node, ex.Num):
                        entry_fields.append(
                            ScalarField.from_ast(chart, node,
                                                 name=f"B[{i},{j}]"))
        for field in targets + entry_fields:
            checked += 1
            for m in samples:
                grad = field.gradient(m)
                fd = np.empty_like(grad)
                for i in range(chart.dim):
                    h = 1e-5 * (1.0 + abs(m[i]))
                    up = np.array(m, dtype=float)
                    dn = np.array(m, dtype=float)
                    up[i] += h
                    dn[i] -= h
                    fd[i] = (field.value(up) - field.value(dn)) / (2.0 * h)
                gap = float(np.max(np.abs(grad - fd)))
                if gap >= worst:
                    worst = gap
                    worst_info = {"system": name, "field": field.name,
                                  "point": [float(v) for v in m]}
    derivative_report = CheckReport(
        name="derivative-vs-fd", passed=worst <= tol, tol=tol,
        max_residual=worst,
        details={"fields_checked": checked, "worst": worst_info})

    failures = []
    for source, message, start, end in MALFORMED_CORPUS:
        try:
            ex.parse(source, ("x", "y"))
        except ex.ParseError as err:
            if (err.message != message or err.span.start != start
                    or err.span.end != end):
                failures.append({"source": source,
                                 "expected": {"message": message,
                                              "start": start, "end": end},
                                 "got": {"message": err.message,
                                         "start": err.span.start,
                                         "end": err.span.end}})
        else:
            failures.append({"source": source,
                             "expected": {"message": message, "start": start,
                                          "end": end},
                             "got": None})
    parser_report = CheckReport(
        name="parser-positions", passed=not failures, tol=0.0,
        max_residual=float(len(failures)),
        details={"cases": len(MALFORMED_CORPUS), "failures": failures})
    return [derivative_report, parser_report]


_CHECK_DISPATCH = {
    "casimir": lambda a, b: _check_casimir(a, b, None),
    "casimir-left": lambda a, b: _check_casimir(a, b, "left"),
    "casimir-right": lambda a, b: _check_casimir(a, b, "right"),
    "jacobiator": _check_jacobiator,
    "momentum": _check_momentum,
    "noether": _check_noether,
    "equivalence": _check_equivalence,
    "reducibility": _check_reducibility,
    "relatedness": _check_relatedness,
    "energy": _check_energy,
    "dissipation": _check_dissipation,
    "order": _check_order,
    "expressions": _check_expressions,
}


def _cmd_check(args) -> int:
    kind = args.kind
    if kind == "expressions":
        reports = _check_expressions(args)
    else:
        bundle = _load_bundle(args)
        reports = _CHECK_DISPATCH[kind](args, bundle)
    passed = all(r.passed for r in reports)
    _emit(_report_payload("check", args, reports, passed,
                          extra={"kind": kind, "samples": args.samples}))
    return 0 if passed else 1


def _tensor_rows_symbolic(tensor: LeibnizTensorField):
    if tensor.entries_ast is None:
        return None
    return [[ex.to_string(node) for node in row] for row in tensor.entries_ast]


def _matrix_samples(tensor: LeibnizTensorField, points) -> list:
    return [{"point": [float(v) for v in m],
             "matrix": [[float(x) for x in row] for row in tensor.matrix(m)]}
            for m in points]


def _cmd_reduce(args) -> int:
    bundle = _load_bundle(args)
    if bundle.reduction is None:
        raise ValueError(f"system {bundle.name!r} has no stored reduction")
    system = bundle.system
    red = bundle.reduction
    tol = args.tol if args.tol is not None else 1e-12
    samples = _samples_for(bundle, args.samples, args.seed)
    reduced_samples = np.array([[sig.value(m) for sig in red.sigmas]
                                for m in samples])
    reports = []

    if bundle.action is not None and bundle.action.group_map is not None:
        reports.append(welldefinedness_check(system, red, bundle.action,
                                             samples, args.wd_tol,
                                             seed=args.seed))

    reduced = reduce_by_invariants(system, red,
                                   section_samples=reduced_samples,
                                   name=f"{bundle.name}-reduced")
    emit_points = reduced_samples[:max(1, args.emit_points)]

    comparison = None
    if bundle.reduction_expected is not None:
        worst = 0.0
        worst_point = None
        for r in reduced_samples:
            gap = float(np.max(np.abs(reduced.tensor.matrix(r)
                                      - bundle.reduction_expected.matrix(r))))
            if gap >= worst:
                worst = gap
                worst_point = r
        comparison = CheckReport(
            name="reduced-vs-stored", passed=worst <= tol, tol=tol,
            max_residual=worst, worst_point=worst_point,
            details={"points": len(reduced_samples)})
        reports.append(comparison)

    if bundle.reduction_pattern is not None:
        pattern = bundle.reduction_pattern["pattern"]
        prefactor = bundle.reduction_pattern["prefactor"]
        num = 0.0
        den = 0.0
        entries = []
        for r in reduced_samples:
            expected_unit = pattern.matrix(r) * prefactor.value(r)
            computed = reduced.tensor.matrix(r)
            entries.append((computed, expected_unit))
            num += float(np.sum(computed * expected_unit))
            den += float(np.sum(expected_unit * expected_unit))
        if den == 0.0:
            raise ArithmeticError("pattern fit degenerate: zero pattern")
        factor = num / den
        worst = max(float(np.max(np.abs(c - factor * e))) for c, e in entries)
        scale = max(1.0, max(float(np.max(np.abs(c))) for c, _ in entries))
        fit_tol = args.pattern_tol
        reports.append(CheckReport(
            name="reduced-pattern-fit", passed=worst <= fit_tol * scale,
            tol=fit_tol, max_residual=worst,
            details={"global_factor": factor,
                     "expected_factor":
                         bundle.reduction_pattern.get("expected_factor"),
                     "points": len(reduced_samples)}))

    if reduced.chart.dim == 2 and reduced.tensor.symmetry == "skew":
        # Any skew bivector in dimension 2 satisfies Jacobi.
        worst = 0.0
        for f, g, h in _jacobiator_family(reduced.chart):
            for r in emit_points:
                worst = max(worst, abs(jacobiator(reduced.tensor, f, g, h, r)))
        reports.append(CheckReport(
            name="reduced-jacobiator", passed=worst <= 1e-9, tol=1e-9,
            max_residual=worst, details={"points": len(emit_points)}))

    if args.flow_x0:
        if bundle.projection is None:
            raise ValueError(f"system {bundle.name!r} stores no projection "
                             "map for flow comparison")
        x0 = _parse_floats(args.flow_x0)
        cfg = IntegratorConfig(t1=args.flow_t1, dt=args.flow_dt, method="rk4")
        reports.append(flow_commutation_check(bundle.projection, system,
                                              reduced, x0, cfg,
                                              tol=args.flow_tol))

    passed = all(r.passed for r in reports)
    payload = _report_payload("reduce", args, reports, passed, extra={
        "reduced_coordinates": list(reduced.chart.names),
        "reduced_tensor_symbolic": _tensor_rows_symbolic(reduced.tensor),
        "reduced_hamiltonian":
            ex.to_string(reduced.hamiltonian.ast)
            if reduced.hamiltonian.ast is not None else None,
        "reduced_tensor_samples": _matrix_samples(reduced.tensor, emit_points),
        "emit_points": [list(map(float, r)) for r in emit_points],
    })
    _emit(payload)
    return 0 if passed else 1


def _cmd_constrain(args) -> int:
    bundle = _load_bundle(args)
    system = bundle.system
    chart = system.chart
    tol = args.tol if args.tol is not None else 1e-12

    def build_spec(parameters):
        if args.phi:
            phis = [ScalarField.from_expression(chart, src, parameters,
                                                name=src)
                    for src in args.phi]
            ws = [VectorField.from_expressions(chart, src.split(","),
                                               parameters)
                  for src in args.w or []]
            if len(ws) != len(phis):
                raise ValueError("--phi and --w must be paired")
            return ConstraintSpec(system=system, phis=phis, ws=ws)
        if bundle.constraint is not None:
            return bundle.constraint
        raise ValueError(f"system {bundle.name!r} has no constraint; "
                         "pass --phi and --w")

    reports = []
    family_values = None
    if args.family:
        (key, values), = _parse_params([args.family]).items()
        family_values = [float(v) for v in np.atleast_1d(values)]
        if args.phi:
            family = [build_spec({key: v}) for v in family_values]
        else:
            family = [make_system(args.system,
                                  dict(_parse_params(args.param), **{key: v})).constraint
                      for v in family_values]
            if any(spec is None for spec in family):
                raise ValueError(f"system {args.system!r} has no constraint")
        samples = _samples_for(bundle, args.samples, args.seed)
        reports.append(family_independence_check(family, samples, tol))
        spec = family[0]
    else:
        spec = build_spec(None)

    tensor = constrained_tensor(spec, name=f"{bundle.name}-constrained")
    samples = _samples_for(bundle, args.samples, args.seed)

    if args.verify_stored:
        stored = bundle.stored
        if not stored:
            raise ValueError(f"system {bundle.name!r} stores no closed-form "
                             "matrices to verify against")
        worst = {"pi": 0.0, "btilde": 0.0, "xr": 0.0}
        csys = constrained_system(spec)
        for m in samples:
            worst["pi"] = max(worst["pi"], float(np.max(np.abs(
                projector_at(spec, m) - stored["pi"].matrix(m)))))
            worst["btilde"] = max(worst["btilde"], float(np.max(np.abs(
                tensor.matrix(m) - stored["btilde"].matrix(m)))))
            worst["xr"] = max(worst["xr"], float(np.max(np.abs(
                csys.vector_field(m, side="right") - stored["xr"].value(m)))))
        for label in ("pi", "btilde", "xr"):
            reports.append(CheckReport(
                name=f"stored-{label}", passed=worst[label] <= tol, tol=tol,
                max_residual=worst[label],
                details={"points": len(samples)}))

    if args.x0:
        cfg = IntegratorConfig(t1=args.t1 if args.t1 is not None else 10.0,
                               dt=args.dt, method=args.method)
        reports.append(constraint_drift(spec, _parse_floats(args.x0), cfg,
                                        tol=args.drift_tol))

    emit = samples[:max(1, args.emit_points)]
    passed = all(r.passed for r in reports)
    payload = _report_payload("constrain", args, reports, passed, extra={
        "phi": [phi.name for phi in spec.phis],
        "family": family_values,
        "projector_samples": [
            {"point": [float(v) for v in m],
             "matrix": [[float(x) for x in row]
                        for row in projector_at(spec, m)]}
            for m in emit],
        "tensor_symbolic": _tensor_rows_symbolic(tensor),
        "tensor_samples": _matrix_samples(tensor, emit),
    })
    _emit(payload)
    return 0 if passed else 1


# === Argument parsing ===

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--system", help="catalog name or .toml path")
    parser.add_argument("--param", action="append", metavar="KEY=VALUE",
                        help="system parameter override (repeatable)")
    parser.add_argument("--samples", type=int, default=100,
                        help="number of sample points")
    parser.add_argument("--seed", type=int, default=0, help="sampling seed")
    parser.add_argument("--tol", type=float, default=None,
                        help="tolerance (per-command default)")


def _add_integration(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--x0", help="initial state, comma-separated")
    parser.add_argument("--t0", type=float, default=0.0)
    parser.add_argument("--t1", type=float, default=None)
    parser.add_argument("--dt", type=float, default=None)
    parser.add_argument("--method", choices=("rk4", "rk45"), default="rk4")
    parser.add_argument("--atol", type=float, default=1e-10)
    parser.add_argument("--rtol", type=float, default=1e-10)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leibniz",
        description="Brackets, flows, constraints, and reductions on "
                    "coordinate charts.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="print the system catalog as JSON")

    sim = sub.add_parser("simulate", help="integrate a system's right flow")
    _add_common(sim)
    _add_integration(sim)
    sim.add_argument("--monitor", action="append", metavar="[NAME=]EXPR",
                     help="extra scalar monitor (repeatable)")
    sim.add_argument("--out", help="trajectory output path")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")

    chk = sub.add_parser("check", help="run a verification report")
    chk.add_argument("kind", choices=sorted(_CHECK_DISPATCH))
    _add_common(chk)
    _add_integration(chk)
    chk.add_argument("--side", choices=("left", "right"))
    chk.add_argument("--f", help="scalar expression")
    chk.add_argument("--g", help="scalar expression")
    chk.add_argument("--h", help="scalar expression")
    chk.add_argument("--point", help="single evaluation point")
    chk.add_argument("--fd", action="store_true",
                     help="force finite-difference inner gradients")
    chk.add_argument("--expect", type=float, default=None,
                     help="expected jacobiator value at --point")
    chk.add_argument("--sweep", metavar="KEY=V1,V2,...",
                     help="rerun the check for several parameter values")

    red = sub.add_parser("reduce", help="quotient by invariants and verify")
    _add_common(red)
    red.add_argument("--emit-points", type=int, default=5)
    red.add_argument("--wd-tol", type=float, default=1e-9,
                     help="welldefinedness tolerance")
    red.add_argument("--pattern-tol", type=float, default=1e-9,
                     help="relative tolerance for the pattern fit")
    red.add_argument("--flow-x0", help="run flow commutation from this state")
    red.add_argument("--flow-t1", type=float, default=1.0)
    red.add_argument("--flow-dt", type=float, default=1e-3)
    red.add_argument("--flow-tol", type=float, default=1e-6)

    con = sub.add_parser("constrain",
                         help="build the constrained tensor and verify")
    _add_common(con)
    con.add_argument("--phi", action="append", metavar="EXPR",
                     help="constraint expression (repeatable)")
    con.add_argument("--w", action="append", metavar="V1,...,VN",
                     help="complement vector field components (repeatable)")
    con.add_argument("--family", metavar="KEY=V1,V2,...",
                     help="family independence over parameter values")
    con.add_argument("--verify-stored", action="store_true",
                     help="compare against the entry's stored matrices")
    con.add_argument("--emit-points", type=int, default=3)
    con.add_argument("--x0", help="run constraint drift from this state")
    con.add_argument("--t1", type=float, default=None)
    con.add_argument("--dt", type=float, default=None)
    con.add_argument("--method", choices=("rk4", "rk45"), default="rk4")
    con.add_argument("--drift-tol", type=float, default=1e-8)

    return parser


_COMMANDS = {
    "list": _cmd_list,
    "simulate": _cmd_simulate,
    "check": _cmd_check,
    "reduce": _cmd_reduce,
    "constrain": _cmd_constrain,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    kind = getattr(args, "kind", args.command)
    try:
        return _COMMANDS[args.command](args)
    except _NUMERICAL_ERRORS as err:
        _fail_json(kind, err)
        return 3
    except _USAGE_ERRORS as err:
        _fail_json(kind, err)
        return 2
    except OSError as err:
        _fail_json(kind, err)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
