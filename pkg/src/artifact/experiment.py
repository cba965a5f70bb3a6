"""Perturbation experiments restarted from identical initial conditions.

Every anchor state ``a_j`` is visited once per input vector ``u^(i)``. Because
all experiments at an anchor start from the same state at the same time, the
drift contributes the same amount to every derivative and cancels in the
differences ``reference - i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .dynamics import AffineSystem, evaluate_rhs, integrate_batch
from .errors import (
    DimensionError,
    DomainError,
    ExperimentError,
    InfeasibleDesignError,
    InsufficientDataError,
    IntegrationDivergedError,
    InvalidArgumentError,
    ProtocolViolationError,
)

DERIVATIVE_MODES = ("forward", "exact")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ExperimentPlan:
    """The ``(M+1) x (N+1)`` battery of experiments.

    ``input_sets[j]`` is an ``(N_j + 1, m)`` array of the input values applied
    at anchor ``j``; row ``reference_index`` is the reference experiment.
    """

    anchor_states: np.ndarray
    input_sets: tuple
    sampling_time: float
    integrator_step: float
    reference_index: int = 0
    noise_amplitude: float = 0.0
    seed: int = 0
    t0: float = 0.0

    def __post_init__(self):
        anchors = np.atleast_2d(_frozen(self.anchor_states))
        object.__setattr__(self, "anchor_states", anchors)
        sets = tuple(np.atleast_2d(_frozen(s)) for s in self.input_sets)
        if len(sets) == 1 and anchors.shape[0] > 1:
            sets = sets * anchors.shape[0]
        object.__setattr__(self, "input_sets", sets)
        if len(sets) != anchors.shape[0]:
            raise DimensionError(f"{len(sets)} input sets for {anchors.shape[0]} anchors")
        if not self.sampling_time > 0:
            raise InvalidArgumentError(f"sampling time must be positive, got {self.sampling_time}")
        if not 0 < self.integrator_step <= self.sampling_time * (1 + 1e-12):
            raise InvalidArgumentError("integrator step must satisfy 0 < dt <= t_s")
        if self.noise_amplitude < 0:
            raise InvalidArgumentError("noise_amplitude must be nonnegative")
        for j, s in enumerate(sets):
            if s.shape[0] < 2:
                raise InsufficientDataError(f"anchor {j} needs a reference and at least one perturbation")
            if not 0 <= self.reference_index < s.shape[0]:
                raise InvalidArgumentError(f"reference_index {self.reference_index} invalid for anchor {j}")
            if s.shape[1] != sets[0].shape[1]:
                raise DimensionError("all input sets must have the same input dimension")

    @property
    def num_anchors(self) -> int:
        return self.anchor_states.shape[0]

    @property
    def num_experiments(self) -> int:
        return sum(s.shape[0] for s in self.input_sets)

    def experiments(self):
        """Yield ``(anchor_index, input_index, anchor, u0)`` in plan order."""
        for j, (a, s) in enumerate(zip(self.anchor_states, self.input_sets)):
            for i, u in enumerate(s):
                yield j, i, a, u


@dataclass(frozen=True)
class ExperimentRecord:
    anchor_index: int
    input_index: int
    u0: np.ndarray
    x_t0: np.ndarray
    x_t0_plus_ts: np.ndarray
    derivative_estimate: Optional[np.ndarray] = None
    # (drift part, control part) when the derivative came from the exact oracle
    derivative_parts: Optional[tuple] = field(default=None, repr=False)


@dataclass(frozen=True)
class DifferenceSample:
    anchor_state: np.ndarray
    delta_u: np.ndarray
    delta_xdot: np.ndarray
    perturbation_index: int
    anchor_index: int = 0


def noise_stream(seed: int, anchor_index: int, input_index: int, *extra: int) -> np.random.Generator:
    """Independent generator for one experiment, keyed on its plan position."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(anchor_index), int(input_index), *map(int, extra)]))


def _run_batch(system, anchors, inputs, t_s, dt, t0, noise_amplitude, keys):
    steps = int(round(t_s / dt))
    noise = None
    if noise_amplitude > 0:
        noise = np.empty((steps, len(keys), system.state_dim))
        for b, key in enumerate(keys):
            noise[:, b, :] = noise_stream(*key).uniform(-1.0, 1.0, size=(steps, system.state_dim))
    out = integrate_batch(system, anchors, inputs, t0, t_s, dt, noise_amplitude, noise)
    return out[-1]


def _check_anchor(system: AffineSystem, anchor: np.ndarray, j=None):
    if anchor.shape != (system.state_dim,):
        raise DimensionError(f"anchor has shape {anchor.shape}, expected ({system.state_dim},)")
    if not system.contains(anchor):
        where = "" if j is None else f" {j}"
        raise DomainError(f"anchor{where} {anchor.tolist()} lies outside the state domain")


def run_experiment(
    system: AffineSystem,
    anchor,
    u0,
    t_s: float,
    dt: float,
    noise_amplitude: float = 0.0,
    seed: int = 0,
    t0: float = 0.0,
    anchor_index: int = 0,
    input_index: int = 0,
) -> ExperimentRecord:
    """Run one experiment from ``anchor`` with constant input ``u0`` for ``t_s`` seconds."""
    anchor = np.asarray(anchor, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    _check_anchor(system, anchor)
    if u0.shape != (system.input_dim,):
        raise DimensionError(f"u0 has shape {u0.shape}, expected ({system.input_dim},)")
    if not 0 < dt <= t_s * (1 + 1e-12):
        raise InvalidArgumentError("need 0 < dt <= t_s")
    try:
        xf = _run_batch(
            system, anchor[None], u0[None], t_s, dt, t0, noise_amplitude, [(seed, anchor_index, input_index)]
        )[0]
    except IntegrationDivergedError as exc:
        raise ExperimentError(str(exc), anchor_index, input_index) from exc
    return ExperimentRecord(anchor_index, input_index, _frozen(u0), _frozen(anchor), _frozen(xf))


def estimate_derivative(record: ExperimentRecord, t_s: float) -> np.ndarray:
    """Forward difference ``(x(t0 + t_s) - x(t0)) / t_s``."""
    if not t_s > 0:
        raise InvalidArgumentError(f"t_s must be positive, got {t_s}")
    return (np.asarray(record.x_t0_plus_ts) - np.asarray(record.x_t0)) / t_s


def run_plan(system: AffineSystem, plan: ExperimentPlan, derivatives: str = "forward") -> list:
    """Execute every experiment in ``plan`` and attach derivative estimates.

    ``derivatives="exact"`` replaces the forward difference with the analytic
    right-hand side at ``t0`` (noise is ignored). It exists to separate method
    error from sampling error in tests.
    """
    if derivatives not in DERIVATIVE_MODES:
        raise InvalidArgumentError(f"derivatives must be one of {DERIVATIVE_MODES}, got {derivatives!r}")
    if plan.input_sets[0].shape[1] != system.input_dim:
        raise DimensionError(f"plan inputs have length {plan.input_sets[0].shape[1]}, expected m={system.input_dim}")
    for j, a in enumerate(plan.anchor_states):
        _check_anchor(system, a, j)

    keys, anchors, inputs = [], [], []
    for j, i, a, u in plan.experiments():
        keys.append((j, i))
        anchors.append(a)
        inputs.append(u)
    anchors = np.array(anchors)
    inputs = np.array(inputs)

    records = []
    if derivatives == "exact":
        drift = system.f(anchors, plan.t0)
        ctrl = system.control_term(anchors, inputs)
        for b, (j, i) in enumerate(keys):
            d = _frozen(drift[b])
            c = _frozen(ctrl[b])
            records.append(
                ExperimentRecord(j, i, _frozen(inputs[b]), _frozen(anchors[b]), _frozen(anchors[b] + plan.sampling_time * (d + c)),
                                 derivative_estimate=_frozen(d + c), derivative_parts=(d, c))
            )
        return records

    try:
        final = _run_batch(
            system, anchors, inputs, plan.sampling_time, plan.integrator_step, plan.t0,
            plan.noise_amplitude, [(plan.seed, j, i) for j, i in keys],
        )
    except IntegrationDivergedError:
        # rerun one by one to name the failing experiment
        for b, (j, i) in enumerate(keys):
            run_experiment(system, anchors[b], inputs[b], plan.sampling_time, plan.integrator_step,
                           plan.noise_amplitude, plan.seed, plan.t0, j, i)
        raise
    for b, (j, i) in enumerate(keys):
        rec = ExperimentRecord(j, i, _frozen(inputs[b]), _frozen(anchors[b]), _frozen(final[b]))
        records.append(replace(rec, derivative_estimate=_frozen(estimate_derivative(rec, plan.sampling_time))))
    return records


def form_differences(records: Sequence[ExperimentRecord], reference_index: int = 0) -> list:
    """Differences reference-minus-i for every non-reference record of one anchor."""
    if len(records) < 2:
        raise InsufficientDataError(f"need at least 2 records per anchor, got {len(records)}")
    anchors = {r.anchor_index for r in records}
    if len(anchors) != 1:
        raise ProtocolViolationError(f"records mix anchors {sorted(anchors)}")
    if not 0 <= reference_index < len(records):
        raise InvalidArgumentError(f"reference_index {reference_index} out of range")
    ref = records[reference_index]
    for r in records:
        if r.derivative_estimate is None:
            raise InsufficientDataError(f"record (anchor {r.anchor_index}, input {r.input_index}) has no derivative")
        if not np.array_equal(r.x_t0, ref.x_t0):
            raise ProtocolViolationError(
                f"records (anchor {r.anchor_index}, inputs {ref.input_index}/{r.input_index}) start from different states"
            )

    out = []
    for r in records:
        if r is ref:
            continue
        if ref.derivative_parts is not None and r.derivative_parts is not None:
            # drift parts are evaluated at the same (state, time): they cancel to an exact 0
            dx = (ref.derivative_parts[0] - r.derivative_parts[0]) + (ref.derivative_parts[1] - r.derivative_parts[1])
        else:
            dx = ref.derivative_estimate - r.derivative_estimate
        out.append(DifferenceSample(ref.x_t0, _frozen(ref.u0 - r.u0), _frozen(dx), r.input_index, r.anchor_index))
    return out


def differences_from_records(records: Sequence[ExperimentRecord], reference_index: int = 0) -> list:
    """Group records by anchor and form differences for each group."""
    groups: dict = {}
    for r in records:
        groups.setdefault(r.anchor_index, []).append(r)
    samples = []
    for j in sorted(groups):
        group = sorted(groups[j], key=lambda r: r.input_index)
        samples.extend(form_differences(group, reference_index))
    return samples


def design_inputs(m: int, N: int, scale: float = 1.0) -> np.ndarray:
    """Reference plus ``N`` perturbations whose differences have full column rank.

    ``u^(0) = 0`` and ``u^(i) = -scale * (1 + (i-1)//m) * e_{(i-1) % m}``, so the
    first ``m`` difference rows form ``scale * I``.
    """
    if m < 1:
        raise InvalidArgumentError("m must be positive")
    if N < m:
        raise InfeasibleDesignError(f"rank {m} needs at least {m} perturbations, got N={N}")
    if not scale > 0:
        raise InvalidArgumentError("scale must be positive")
    U = np.zeros((N + 1, m))
    for i in range(1, N + 1):
        U[i, (i - 1) % m] = -scale * (1 + (i - 1) // m)
    return U


def symmetric_inputs(N: int, amplitude: float = 1.0) -> np.ndarray:
    """Reference 0 plus ``N`` scalar inputs at interval midpoints of ``[-amplitude, amplitude]``.

    The perturbations sum to zero, which keeps the reference experiment's
    noise from biasing the fit.
    """
    if N < 1:
        raise InfeasibleDesignError("need at least one perturbation")
    mids = -amplitude + amplitude * (2 * np.arange(N) + 1) / N
    return np.concatenate([[0.0], mids])[:, None]


def _sample_anchors(system, num, sampler, rng):
    if callable(sampler):
        return np.asarray(sampler(rng, num), dtype=float).reshape(num, system.state_dim)
    if isinstance(sampler, str) and sampler == "uniform":
        return system.sample_states(rng, num)
    if isinstance(sampler, str) and sampler == "grid":
        # equispaced along coordinate 0 with a random common offset
        if system.state_dim != 1:
            raise InvalidArgumentError("grid sampling is only defined for scalar states")
        lo, hi = system.state_domain[0]
        return (lo + (hi - lo) * (np.arange(num) + rng.uniform()) / num)[:, None]
    if isinstance(sampler, str):
        raise InvalidArgumentError(f"unknown sampler {sampler!r}")
    arr = np.asarray(sampler, dtype=float)
    return arr.reshape(-1, system.state_dim)


def build_plan(
    system: AffineSystem,
    num_anchors: int,
    inputs=None,
    t_s: float = 1e-3,
    dt: float = 1e-5,
    sampler: Union[str, Callable, np.ndarray] = "uniform",
    seed: int = 0,
    noise_amplitude: Optional[float] = None,
    num_perturbations: Optional[int] = None,
    input_scale: float = 1.0,
    reference_index: int = 0,
    t0: float = 0.0,
) -> ExperimentPlan:
    """Sample anchors and attach an input set.

    ``inputs`` is a single ``(N+1, m)`` array shared by every anchor, a list of
    per-anchor arrays, or ``None`` to use :func:`design_inputs` with
    ``num_perturbations`` (default ``m``). ``sampler`` is ``"uniform"`` (the
    system's own sampler), ``"grid"``, a callable ``(rng, k)``, or an explicit
    array of anchors.
    """
    if num_anchors < 1:
        raise InvalidArgumentError("need at least one anchor")
    dom = system.state_domain
    if np.any(dom[:, 1] <= dom[:, 0]):
        raise DomainError("state domain is empty")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xA5C0]))
    anchors = _sample_anchors(system, num_anchors, sampler, rng)
    if inputs is None:
        inputs = design_inputs(system.input_dim, num_perturbations or system.input_dim, input_scale)
    if isinstance(inputs, np.ndarray) or (isinstance(inputs, (list, tuple)) and np.ndim(inputs[0]) == 1):
        sets = (np.asarray(inputs, dtype=float),)
    else:
        sets = tuple(np.asarray(s, dtype=float) for s in inputs)
    amp = system.noise_amplitude if noise_amplitude is None else noise_amplitude
    return ExperimentPlan(anchors, sets, t_s, dt, reference_index, amp, int(seed), t0)


@dataclass(frozen=True)
class DriftPlan:
    """Free-run segments for the drift stage: every anchor under every input."""

    anchor_states: np.ndarray
    inputs: np.ndarray
    sampling_time: float
    integrator_step: float
    noise_amplitude: float = 0.0
    seed: int = 0
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "anchor_states", np.atleast_2d(_frozen(self.anchor_states)))
        object.__setattr__(self, "inputs", np.atleast_2d(_frozen(self.inputs)))
        if not 0 < self.integrator_step <= self.sampling_time * (1 + 1e-12):
            raise InvalidArgumentError("need 0 < dt <= t_s")

    def experiments(self):
        for j, a in enumerate(self.anchor_states):
            for i, u in enumerate(self.inputs):
                yield j, i, a, u


def build_drift_plan(
    system: AffineSystem,
    num_anchors: int,
    inputs=None,
    t_s: float = 1e-3,
    dt: float = 1e-5,
    sampler: Union[str, Callable, np.ndarray] = "uniform",
    seed: int = 0,
    noise_amplitude: Optional[float] = None,
    t0: float = 0.0,
    extra_anchors=None,
) -> DriftPlan:
    """Anchors for the drift stage; inputs default to the zero vector (pure free run)."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xD21F]))
    anchors = _sample_anchors(system, num_anchors, sampler, rng) if num_anchors > 0 else np.empty((0, system.state_dim))
    if extra_anchors is not None:
        anchors = np.vstack([np.asarray(extra_anchors, dtype=float).reshape(-1, system.state_dim), anchors])
    if anchors.shape[0] == 0:
        raise InsufficientDataError("drift plan has no anchors")
    if inputs is None:
        inputs = np.zeros((1, system.input_dim))
    amp = system.noise_amplitude if noise_amplitude is None else noise_amplitude
    return DriftPlan(anchors, np.asarray(inputs, dtype=float), t_s, dt, amp, int(seed), t0)
