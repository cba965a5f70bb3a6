"""Dynamic noise and the number of perturbation experiments.

Each integrator step adds amplitude * uniform[-1, 1] to the phase. More
perturbations per anchor average the noise down; the coefficient error
should fall roughly like 1/sqrt(N).
"""
import time

from artifact import BasisSpec, make_phase_oscillator
from artifact.experiment import build_plan
from artifact.recovery import noise_convergence_study

osc = make_phase_oscillator(noise_amplitude=1.0)
plan = build_plan(osc, 35, inputs=[[0.0], [1.0], [-1.0]], sampler="grid", t_s=1e-3, dt=1e-5, seed=0)
spec = BasisSpec("fourier", 6, osc.state_domain)

start = time.perf_counter()
study = noise_convergence_study(osc, plan, spec, n_values=(5, 25, 100), trials=8, seed=0, noise_amplitude=1.0)
print(f"{'N':>5} {'median':>9} {'q25':>9} {'q75':>9}")
for row in study.rows():
    print(f"{row['N']:>5} {row['median_error']:9.5f} {row['q25']:9.5f} {row['q75']:9.5f}")
print(f"({time.perf_counter() - start:.1f}s)")
