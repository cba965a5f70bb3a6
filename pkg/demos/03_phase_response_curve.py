"""Phase response curve of an oscillator with a drifting frequency.

theta' = w(t) + Z(theta) u with w(t) = 0.1 t and
Z(theta) = -sin(theta) exp(3 (cos(theta - 0.9 pi) - 1)).

The frequency changes while we experiment, but each pair of experiments
starts at the same phase and time, so w(t) drops out of every difference.
"""
import numpy as np

from artifact import BasisSpec, build_plan, make_phase_oscillator, default_prc, recover_control_field

osc = make_phase_oscillator()
inputs = np.array([[0.0], [1.0], [-1.0]])
plan = build_plan(osc, 35, inputs=inputs, sampler="grid", t_s=1e-3, dt=1e-5, seed=0)

theta = np.linspace(0, 2 * np.pi, 10_000)
for L in (2, 4, 6, 8):
    g = recover_control_field(osc, plan, BasisSpec("fourier", L, osc.state_domain))
    err = np.abs(g(theta[:, None])[:, 0, 0] - default_prc(theta)).max()
    print(f"L = {L}: max |Z_hat - Z| = {err:.2e}")

# a coarse text plot of the order-6 fit
g = recover_control_field(osc, plan, BasisSpec("fourier", 6, osc.state_domain))
for t in np.linspace(0, 2 * np.pi, 13):
    z, zh = default_prc(t), g(np.array([t]))[0, 0]
    print(f"{t:5.2f} {z:+.3f} {zh:+.3f} " + " " * int(20 * (zh + 0.6)) + "*")
