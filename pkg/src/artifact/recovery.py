"""End-to-end pipeline: plan -> experiments -> differences -> fitted fields."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .basis import BasisSpec, eval_basis, feature_count
from .dynamics import AffineSystem, evaluate_rhs, integrate_batch
from .errors import DegenerateDesignError, DimensionError, InvalidArgumentError
from .experiment import (
    DriftPlan,
    ExperimentPlan,
    differences_from_records,
    noise_stream,
    run_plan,
    symmetric_inputs,
)
from .regression import (
    LeastSquaresSolution,
    assemble_constant_b_lrp,
    assemble_control_lrp,
    assemble_drift_lrp,
    solve_least_squares,
)


@dataclass(frozen=True)
class RecoveredControlField:
    """Fitted ``g_hat``. ``coefficients[j]`` stacks the (s, k) coefficients of row j."""

    basis: BasisSpec
    coefficients: tuple
    diagnostics: tuple
    input_dim: int

    @property
    def state_dim(self) -> int:
        return len(self.coefficients)

    def entry_coefficients(self, j: int, s: int) -> np.ndarray:
        start = sum(feature_count(self.basis, (j, q)) for q in range(s))
        return self.coefficients[j][start : start + feature_count(self.basis, (j, s))]

    def coefficient_vector(self) -> np.ndarray:
        return np.concatenate(self.coefficients)

    def evaluate(self, x) -> np.ndarray:
        """``g_hat(x)`` with shape ``x.shape[:-1] + (n, m)``."""
        x = np.asarray(x, dtype=float)
        n, m = self.state_dim, self.input_dim
        out = np.empty(x.shape[:-1] + (n, m))
        for j in range(n):
            for s in range(m):
                out[..., j, s] = eval_basis(self.basis, x, (j, s)) @ self.entry_coefficients(j, s)
        return out

    __call__ = evaluate


@dataclass(frozen=True)
class RecoveredDriftField:
    basis: BasisSpec
    coefficients: np.ndarray  # (n, features)
    diagnostics: tuple
    num_samples: int = 0

    def evaluate(self, x) -> np.ndarray:
        return eval_basis(self.basis, x) @ self.coefficients.T

    __call__ = evaluate


@dataclass(frozen=True)
class ValidationReport:
    sample_points: np.ndarray
    true_values: np.ndarray
    recovered_values: np.ndarray
    rmse: np.ndarray
    max_abs: np.ndarray
    condition_numbers: tuple = ()

    @property
    def num_points(self) -> int:
        return self.sample_points.shape[0]

    def to_dict(self) -> dict:
        n, m = self.rmse.shape
        return {
            "num_points": int(self.num_points),
            "entries": [
                {"j": j + 1, "s": s + 1, "rmse": float(self.rmse[j, s]), "max_abs_error": float(self.max_abs[j, s])}
                for j in range(n)
                for s in range(m)
            ],
            "condition_numbers": [float(c) for c in self.condition_numbers],
        }


def fit_control_field(samples: Sequence, spec: BasisSpec, ridge: float = 0.0) -> RecoveredControlField:
    """Solve the n per-output problems for a set of difference samples."""
    if not samples:
        raise DegenerateDesignError("no difference samples")
    du = np.array([s.delta_u for s in samples])
    if not np.any(du):
        raise DegenerateDesignError("every input difference is zero; the design carries no information")
    n = len(samples[0].delta_xdot)
    sols = [solve_least_squares(assemble_control_lrp(samples, spec, j), ridge) for j in range(n)]
    return RecoveredControlField(spec, tuple(s.coefficients for s in sols), tuple(sols), du.shape[1])


def recover_control_field(
    system: AffineSystem,
    plan: ExperimentPlan,
    spec: BasisSpec,
    derivatives: str = "forward",
    ridge: float = 0.0,
) -> RecoveredControlField:
    if spec.dimension != system.state_dim:
        raise DimensionError(f"basis dimension {spec.dimension} != state_dim {system.state_dim}")
    records = run_plan(system, plan, derivatives)
    samples = differences_from_records(records, plan.reference_index)
    return fit_control_field(samples, spec, ridge)


def recover_constant_b(system: AffineSystem, plan: ExperimentPlan, derivatives: str = "forward") -> np.ndarray:
    """Constant control matrix from the stacked ``dU b_j = dxdot_j`` systems."""
    records = run_plan(system, plan, derivatives)
    samples = differences_from_records(records, plan.reference_index)
    B, _ = constant_b_from_samples(samples)
    return B


def constant_b_from_samples(samples: Sequence):
    du = np.array([s.delta_u for s in samples], dtype=float)
    m = du.shape[1]
    _, sv, vt = np.linalg.svd(du)
    rank = int(np.sum(sv > 1e-10 * sv[0])) if sv.size and sv[0] > 0 else 0
    if rank < m:
        null = vt[rank:]
        raise DegenerateDesignError(f"input differences have rank {rank} < m={m}; unexcited directions {np.round(null, 6).tolist()}")
    n = len(samples[0].delta_xdot)
    sols = [solve_least_squares(assemble_constant_b_lrp(samples, j)) for j in range(n)]
    return np.array([s.coefficients for s in sols]), sols


def drift_samples(system: AffineSystem, plan: DriftPlan, derivatives: str = "central") -> list:
    """``(x, xdot_estimate, u)`` triples from short free-run segments.

    ``central`` integrates each (anchor, input) pair over ``2 t_s`` and
    reports the midpoint state with ``(x(2 t_s) - x(0)) / (2 t_s)``. A free
    run needs no restart, so the backward sample exists. ``forward`` and
    ``exact`` report the anchor itself.
    """
    keys, X0, U = [], [], []
    for j, i, a, u in plan.experiments():
        keys.append((j, i))
        X0.append(a)
        U.append(u)
    X0, U = np.array(X0), np.array(U)
    ts, dt = plan.sampling_time, plan.integrator_step
    if derivatives == "exact":
        Xd = evaluate_rhs(system, X0, U, plan.t0)
        return [(X0[b], Xd[b], U[b]) for b in range(len(keys))]
    if derivatives not in ("forward", "central"):
        raise InvalidArgumentError(f"unknown derivative mode {derivatives!r}")
    segments = 2 if derivatives == "central" else 1
    per = int(round(ts / dt))
    noise = None
    if plan.noise_amplitude > 0:
        noise = np.empty((segments * per, len(keys), system.state_dim))
        for b, (j, i) in enumerate(keys):
            noise[:, b, :] = noise_stream(plan.seed, j, i, 1).uniform(-1, 1, size=(segments * per, system.state_dim))
    path = integrate_batch(system, X0, U, plan.t0, segments * ts, dt, plan.noise_amplitude, noise, record_every=per)
    if derivatives == "central":
        X, Xd = path[1], (path[2] - path[0]) / (2 * ts)
    else:
        X, Xd = path[0], (path[1] - path[0]) / ts
    return [(X[b], Xd[b], U[b]) for b in range(len(keys))]


def recover_drift_field(
    system: AffineSystem,
    plan: DriftPlan,
    recovered_g: Callable,
    spec: BasisSpec,
    derivatives: str = "central",
    ridge: float = 0.0,
) -> RecoveredDriftField:
    """Fit ``f_hat`` to ``xdot - g_hat(x) u`` over the drift plan's samples."""
    samples = drift_samples(system, plan, derivatives)
    sols = [solve_least_squares(assemble_drift_lrp(samples, recovered_g, spec, j), ridge) for j in range(system.state_dim)]
    return RecoveredDriftField(spec, np.array([s.coefficients for s in sols]), tuple(sols), len(samples))


def validate_field(recovered: Callable, truth: AffineSystem, num_points: int = 1000, seed: int = 0) -> ValidationReport:
    """Compare ``recovered(x)`` against ``truth.g(x)`` at fresh random states."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x7A11]))
    pts = truth.sample_states(rng, num_points)
    true = truth.g(pts)
    est = np.asarray(recovered(pts), dtype=float)
    if est.shape != true.shape:
        raise DimensionError(f"recovered field has shape {est.shape[1:]}, truth has {true.shape[1:]}")
    err = est - true
    conds = tuple(d.condition_number for d in getattr(recovered, "diagnostics", ()))
    return ValidationReport(pts, true, est, np.sqrt(np.mean(err**2, axis=0)), np.max(np.abs(err), axis=0), conds)


@dataclass(frozen=True)
class ConvergenceStudy:
    n_values: tuple
    errors: np.ndarray  # (len(n_values), trials)
    reference_coefficients: tuple = field(repr=False, default=())

    def rows(self) -> list:
        out = []
        for N, e in zip(self.n_values, self.errors):
            q25, med, q75 = np.percentile(e, [25, 50, 75])
            out.append({"N": int(N), "median_error": float(med), "q25": float(q25), "q75": float(q75),
                        "mean_error": float(np.mean(e)), "trials": int(e.size)})
        return out

    @property
    def medians(self) -> np.ndarray:
        return np.median(self.errors, axis=1)


def noise_convergence_study(
    system: AffineSystem,
    base_plan: ExperimentPlan,
    spec: BasisSpec,
    n_values: Sequence[int],
    trials: int,
    seed: int = 0,
    noise_amplitude: Optional[float] = None,
    input_amplitude: float = 1.0,
) -> ConvergenceStudy:
    """Coefficient error ``|theta - theta_hat|_2`` against the number of perturbations.

    For each N the anchors of ``base_plan`` receive a reference input 0 plus N
    inputs spread symmetrically over ``[-input_amplitude, input_amplitude]``.
    ``theta`` is the noise-free fit of that same plan; each trial reruns it
    with fresh noise streams.
    """
    n_values = tuple(int(v) for v in n_values)
    if list(n_values) != sorted(n_values) or not n_values:
        raise InvalidArgumentError("n_values must be a nonempty ascending sequence")
    if trials < 1:
        raise InvalidArgumentError("trials must be at least 1")
    amp = base_plan.noise_amplitude if noise_amplitude is None else noise_amplitude
    m = system.input_dim
    errors = np.empty((len(n_values), trials))
    refs = []
    for a, N in enumerate(n_values):
        levels = symmetric_inputs(N, input_amplitude)[:, 0]
        inputs = np.zeros((N + 1, m))
        for i in range(1, N + 1):
            inputs[i, (i - 1) % m] = levels[i]
        plan = replace(base_plan, input_sets=(inputs,), noise_amplitude=0.0, reference_index=0)
        theta = recover_control_field(system, plan, spec).coefficient_vector()
        refs.append(theta)
        for t in range(trials):
            trial_seed = int(np.random.SeedSequence([int(seed), N, t]).generate_state(1, np.uint64)[0])
            noisy = replace(plan, noise_amplitude=amp, seed=trial_seed)
            theta_hat = recover_control_field(system, noisy, spec).coefficient_vector()
            errors[a, t] = np.linalg.norm(theta - theta_hat)
    return ConvergenceStudy(n_values, errors, tuple(refs))
