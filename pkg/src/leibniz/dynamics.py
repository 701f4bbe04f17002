"""Flows of right Leibniz vector fields and flow-based diagnostics.

The reference integrator is fixed-step RK4; an embedded Dormand-Prince 5(4)
pair is available for adaptive runs.  The regular-domain predicate is checked
at every stage point (singular loci can be grazed mid-step); monitors are
evaluated on accepted states only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import (CheckReport, LeibnizSystem, OutOfDomainError, ScalarField,
                   SmoothMap, _jsonable, _scan)

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "DriftReport",
    "StepUnderflowError",
    "TruncatedTrajectoryError",
    "integrate",
    "drift_report",
    "relatedness_check",
    "flow_commutation_check",
]


class StepUnderflowError(ArithmeticError):
    """The adaptive integrator could not take an acceptably small step."""


class TruncatedTrajectoryError(RuntimeError):
    """A computation required a full trajectory but got a truncated one."""


@dataclass
class IntegratorConfig:
    """Integration window and method parameters.

    method "rk4" uses the fixed step ``dt``; method "rk45" adapts the step to
    the tolerances ``atol``/``rtol``.
    """

    t1: float
    t0: float = 0.0
    method: str = "rk4"
    dt: Optional[float] = None
    atol: float = 1e-10
    rtol: float = 1e-10
    initial_step: Optional[float] = None

    def __post_init__(self) -> None:
        if self.method not in ("rk4", "rk45"):
            raise ValueError("method must be 'rk4' or 'rk45'")
        if self.t1 <= self.t0:
            raise ValueError("t1 must exceed t0")
        if self.method == "rk4":
            if self.dt is None or self.dt <= 0:
                raise ValueError("rk4 requires a positive step dt")
        else:
            if self.atol <= 0 or self.rtol <= 0:
                raise ValueError("rk45 requires positive tolerances")


@dataclass
class Trajectory:
    """Numerical flow: strictly increasing times, states, monitor values."""

    chart_names: tuple
    times: np.ndarray
    states: np.ndarray
    monitors: dict = field(default_factory=dict)
    truncated: bool = False
    method: str = "rk4"

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.shape != (self.times.size, len(self.chart_names)):
            raise ValueError("states shape does not match times and chart")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def monitor(self, name: str) -> np.ndarray:
        if name not in self.monitors:
            raise KeyError(f"unknown monitor {name!r}")
        return self.monitors[name]

    def to_csv(self) -> str:
        header = ",".join(["t", *self.chart_names, *self.monitors])
        lines = [header]
        columns = [self.times, *self.states.T, *self.monitors.values()]
        for row in zip(*columns):
            lines.append(",".join(format(v, ".17g") for v in row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "chart": list(self.chart_names),
            "method": self.method,
            "truncated": bool(self.truncated),
            "t": _jsonable(self.times),
            "states": _jsonable(self.states),
            "monitors": {k: _jsonable(v) for k, v in self.monitors.items()},
        }
        return json.dumps(payload, sort_keys=True, indent=2)


# === Integration ===

def _rhs(system: LeibnizSystem):
    tensor, ham = system.tensor, system.hamiltonian
    return lambda x: tensor.matrix(x) @ ham.gradient(x)


def _rk4_step(f, x, h, in_domain):
    """One RK4 step; returns None if any stage point leaves the domain."""
    k1 = f(x)
    s = x + 0.5 * h * k1
    if not in_domain(s):
        return None
    k2 = f(s)
    s = x + 0.5 * h * k2
    if not in_domain(s):
        return None
    k3 = f(s)
    s = x + h * k3
    if not in_domain(s):
        return None
    k4 = f(s)
    x_new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x_new if in_domain(x_new) else None


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)


def _dp_step(f, x, h, in_domain):
    """One Dormand-Prince step; returns (x5, err) or None on domain exit."""
    ks = [f(x)]
    for i in range(1, 7):
        s = x + h * sum(a * k for a, k in zip(_DP_A[i], ks))
        if not in_domain(s):
            return None
        ks.append(f(s))
    x5 = x + h * sum(b * k for b, k in zip(_DP_B5, ks))
    x4 = x + h * sum(b * k for b, k in zip(_DP_B4, ks))
    if not in_domain(x5):
        return None
    return x5, x5 - x4


def integrate(system: LeibnizSystem, x0, cfg: IntegratorConfig,
              monitors: Optional[Mapping[str, ScalarField]] = None) -> Trajectory:
    """Numerically flow X^R_h = B grad h from x0 over [t0, t1].

    Raises OutOfDomainError if x0 is outside the regular domain.  If the flow
    exits the domain mid-run the partial trajectory is returned with
    ``truncated=True``; it never contains an out-of-domain state.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.chart.dim,):
        raise ValueError(f"x0 shape {x0.shape} does not match chart dimension")
    system.require_in_domain(x0)
    monitors = dict(monitors or {})
    f = _rhs(system)
    in_domain = system.in_domain

    times, states = [cfg.t0], [x0]
    truncated = False
    if cfg.method == "rk4":
        h = float(cfg.dt)
        t, x = cfg.t0, x0
        tiny = 1e-12 * max(1.0, abs(cfg.t1))
        while t < cfg.t1 - tiny:
            step = min(h, cfg.t1 - t)
            x_new = _rk4_step(f, x, step, in_domain)
            if x_new is None:
                truncated = True
                break
            t, x = t + step, x_new
            times.append(t)
            states.append(x)
    else:
        t, x = cfg.t0, x0
        span = cfg.t1 - cfg.t0
        h = cfg.initial_step if cfg.initial_step else span / 100.0
        min_step = 1e-14 * max(1.0, abs(span))
        tiny = 1e-12 * max(1.0, abs(cfg.t1))
        while t < cfg.t1 - tiny:
            h = min(h, cfg.t1 - t)
            if h < min_step:
                raise StepUnderflowError(f"step {h:.3e} underflowed at t={t!r}")
            result = _dp_step(f, x, h, in_domain)
            if result is None:
                h *= 0.5  # domain exit mid-step: retry shorter before giving up
                if h < min_step:
                    truncated = True
                    break
                continue
            x5, err = result
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(x), np.abs(x5))
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
            if err_norm <= 1.0:
                t, x = t + h, x5
                times.append(t)
                states.append(x)
            factor = 0.9 * (err_norm ** -0.2) if err_norm > 0 else 5.0
            h *= min(5.0, max(0.2, factor))

    states_arr = np.vstack(states)
    monitor_values = {name: np.array([field.value(s) for s in states_arr])
                      for name, field in monitors.items()}
    return Trajectory(chart_names=system.chart.names, times=np.array(times),
                      states=states_arr, monitors=monitor_values,
                      truncated=truncated, method=cfg.method)


# === Flow diagnostics ===

@dataclass
class DriftReport:
    """Max departure of a recorded monitor from its initial value."""

    monitor: str
    max_drift: float
    t_at_max: float
    initial: float
    final: float

    def to_dict(self) -> dict:
        return {
            "monitor": self.monitor,
            "max_drift": float(self.max_drift),
            "t_at_max": float(self.t_at_max),
            "initial": float(self.initial),
            "final": float(self.final),
        }


def drift_report(traj: Trajectory, monitor: str) -> DriftReport:
    """Exact scan of |value(t) - value(t0)| over the recorded monitor."""
    values = traj.monitor(monitor)
    drift = np.abs(values - values[0])
    i = int(np.argmax(drift))
    return DriftReport(monitor=monitor, max_drift=float(drift[i]),
                       t_at_max=float(traj.times[i]), initial=float(values[0]),
                       final=float(values[-1]))


def relatedness_check(phi: SmoothMap, source: LeibnizSystem,
                      target: LeibnizSystem, samples, tol: float) -> CheckReport:
    """Pass iff max ||Dphi(m) X_src(m) - X_tgt(phi(m))||_inf <= tol over samples."""
    if phi.chart_in.dim != source.chart.dim or phi.chart_out.dim != target.chart.dim:
        raise ValueError("map charts do not match source/target systems")

    def residual(m):
        image = phi.value(m)
        target.require_in_domain(image)
        push = phi.jacobian(m) @ source.vector_field(m)
        return np.max(np.abs(push - target.vector_field(image)))

    worst, point = _scan(samples, residual)
    return CheckReport(name=f"relatedness:{phi.name or 'phi'}", passed=worst <= tol,
                       tol=tol, max_residual=worst, worst_point=point)


def flow_commutation_check(phi: SmoothMap, source: LeibnizSystem,
                           target: LeibnizSystem, x0, cfg: IntegratorConfig,
                           tol: float) -> CheckReport:
    """Compare phi(F_t(x0)) with F_t(phi(x0)) on the shared rk4 time grid."""
    if cfg.method != "rk4":
        raise ValueError("flow commutation comparison requires the fixed-grid rk4 method")
    source_traj = integrate(source, x0, cfg)
    target_traj = integrate(target, phi.value(np.asarray(x0, dtype=float)), cfg)
    if source_traj.truncated or target_traj.truncated:
        raise TruncatedTrajectoryError("a trajectory left the regular domain")
    gaps = np.array([np.max(np.abs(phi.value(s) - r))
                     for s, r in zip(source_traj.states, target_traj.states)])
    i = int(np.argmax(gaps))
    worst = float(gaps[i])
    return CheckReport(name=f"flow-commutation:{phi.name or 'phi'}",
                       passed=worst <= tol, tol=tol, max_residual=worst,
                       worst_point=list(map(float, source_traj.states[i])),
                       details={"t_at_max": float(source_traj.times[i])})
