#!/usr/bin/env python3
"""Double-bracket dissipation: a skew part that conserves, a symmetric
part that dissipates.

The dissipative rigid body uses the tensor B = skew + alpha * symmetric.
With alpha = 0 the flow is the free rigid body and conserves the energy;
with alpha > 0 the energy decreases monotonically while |M|^2 stays
exactly conserved, so the flow spirals on the sphere toward a stable
rotation axis.
"""

import numpy as np

from leibniz import IntegratorConfig, ScalarField, drift_report, integrate, make_system


def run(alpha: float):
    bundle = make_system("rigid-body-dissipative", {"alpha": alpha})
    system = bundle.system
    norm2 = ScalarField.from_expression(system.chart, "M1^2 + M2^2 + M3^2")
    cfg = IntegratorConfig(t1=10.0, dt=1e-3, method="rk4")
    traj = integrate(system, [1.0, 1.0, 1.0], cfg,
                     monitors={"energy": system.hamiltonian, "norm2": norm2})
    return traj


def main() -> None:
    print("free rigid body (alpha = 0, inertia I = (1, 2, 3)):")
    traj = run(0.0)
    print(f"  energy drift {drift_report(traj, 'energy').max_drift:.2e}")
    print(f"  |M|^2 drift  {drift_report(traj, 'norm2').max_drift:.2e}")

    print("\ndissipative rigid body (alpha = 0.1):")
    traj = run(0.1)
    energy = traj.monitor("energy")
    steps = np.diff(energy)
    print(f"  energy: {energy[0]:.6f} -> {energy[-1]:.6f}"
          f"  (total decrease {energy[0] - energy[-1]:.6f})")
    print(f"  largest per-step change {steps.max():+.2e}"
          "  (still negative: the decrease is monotone, step by step)")
    print(f"  |M|^2 drift  {drift_report(traj, 'norm2').max_drift:.2e}"
          "  (the sphere is preserved exactly)")

    # The limiting state is rotation about the largest-inertia axis: with
    # |M| fixed, the energy (M1^2/I1 + M2^2/I2 + M3^2/I3)/2 is smallest
    # when all of M sits on the I3 axis.
    m_final = traj.states[-1]
    print(f"  final M = {np.round(m_final, 4)}"
          f"  (|M| = {np.linalg.norm(m_final):.6f}, drifting toward the M3 axis)")


if __name__ == "__main__":
    main()
