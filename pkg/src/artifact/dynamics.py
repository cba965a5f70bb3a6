"""Input-affine ground-truth systems and a fixed-step RK4 integrator.

A system is ``xdot = f(x) + sum_k g_k(x) u_k``. Field callables take a state
array whose *last* axis has length ``n`` and must broadcast over leading axes,
so the same system can be integrated for a whole batch of experiments at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DimensionError,
    IntegrationDivergedError,
    InvalidArgumentError,
)

FieldFn = Callable[[np.ndarray], np.ndarray]


def _uniform_box(domain: np.ndarray):
    def sample(rng: np.random.Generator, k: int) -> np.ndarray:
        return rng.uniform(domain[:, 0], domain[:, 1], size=(k, domain.shape[0]))

    return sample


def _unit_sphere(rng: np.random.Generator, k: int) -> np.ndarray:
    z = rng.standard_normal((k, 3))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass(frozen=True)
class AffineSystem:
    """Ground-truth input-affine system.

    Parameters
    ----------
    drift : callable
        ``drift(x)`` or, when ``time_varying`` is set, ``drift(x, t)``.
    control_fields : sequence of callables
        ``g_k(x)`` for k = 1..m, each returning an array shaped like ``x``.
    state_domain : array_like, shape (n, 2)
        Lower/upper bound per coordinate. Used for anchor sampling and basis
        rescaling.
    time_varying : bool
        The drift depends on time. The integrator supplies the clock, so the
        learner never sees it.
    noise_amplitude : float
        Default amplitude of the additive per-step disturbance.
    sampler : callable, optional
        ``sampler(rng, k) -> (k, n)`` draws states from the natural domain
        (the unit sphere for Bloch). Defaults to uniform over ``state_domain``.
    """

    drift: Callable
    control_fields: tuple
    state_domain: np.ndarray
    time_varying: bool = False
    noise_amplitude: float = 0.0
    sampler: Optional[Callable] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        dom = np.asarray(self.state_domain, dtype=float)
        if dom.ndim != 2 or dom.shape[1] != 2:
            raise DimensionError(f"state_domain must have shape (n, 2), got {dom.shape}")
        object.__setattr__(self, "state_domain", dom)
        object.__setattr__(self, "control_fields", tuple(self.control_fields))
        if len(self.control_fields) == 0:
            raise DimensionError("input_dim must be at least 1")
        if self.noise_amplitude < 0:
            raise InvalidArgumentError("noise_amplitude must be nonnegative")

    @property
    def state_dim(self) -> int:
        return self.state_domain.shape[0]

    @property
    def input_dim(self) -> int:
        return len(self.control_fields)

    def f(self, x, t=0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.drift(x, t) if self.time_varying else self.drift(x)
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape)

    def g(self, x) -> np.ndarray:
        """Control matrix ``g(x)`` with shape ``x.shape + (m,)``."""
        x = np.asarray(x, dtype=float)
        cols = [np.broadcast_to(np.asarray(gk(x), dtype=float), x.shape) for gk in self.control_fields]
        return np.stack(cols, axis=-1)

    def control_term(self, x, u) -> np.ndarray:
        """``sum_k g_k(x) u_k`` accumulated column by column."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        acc = np.zeros(np.broadcast_shapes(x.shape, u.shape[:-1] + (x.shape[-1],)))
        for k, gk in enumerate(self.control_fields):
            acc = acc + np.asarray(gk(x), dtype=float) * u[..., k : k + 1]
        return acc

    def sample_states(self, rng: np.random.Generator, k: int) -> np.ndarray:
        sampler = self.sampler or _uniform_box(self.state_domain)
        return np.asarray(sampler(rng, k), dtype=float).reshape(k, self.state_dim)

    def contains(self, x, atol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        lo, hi = self.state_domain[:, 0], self.state_domain[:, 1]
        return bool(np.all(x >= lo - atol) and np.all(x <= hi + atol))

    def with_drift(self, drift: Callable, time_varying: bool = False) -> "AffineSystem":
        """Same control fields and domain, different drift."""
        return AffineSystem(
            drift=drift,
            control_fields=self.control_fields,
            state_domain=self.state_domain,
            time_varying=time_varying,
            noise_amplitude=self.noise_amplitude,
            sampler=self.sampler,
            name=self.name + "+drift",
            params=dict(self.params),
        )


def _check_dims(system: AffineSystem, x: np.ndarray, u: np.ndarray):
    if x.shape[-1] != system.state_dim:
        raise DimensionError(f"state has length {x.shape[-1]}, expected state_dim n={system.state_dim}")
    if u.shape[-1] != system.input_dim:
        raise DimensionError(f"input has length {u.shape[-1]}, expected input_dim m={system.input_dim}")


def evaluate_rhs(system: AffineSystem, x, u, t: float = 0.0) -> np.ndarray:
    """Return ``f(x) + sum_k g_k(x) u_k``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_dims(system, x, u)
    return system.f(x, t) + system.control_term(x, u)


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-constant input: row ``i`` holds on ``[t0 + i*T, t0 + (i+1)*T)``."""

    values: np.ndarray
    segment_duration: float
    t0: float = 0.0

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if v.ndim != 2:
            raise DimensionError(f"values must be (segments, m), got shape {v.shape}")
        if not self.segment_duration > 0:
            raise InvalidArgumentError("segment_duration must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, u, duration: float, t0: float = 0.0) -> "ControlSignal":
        return cls(np.asarray(u, dtype=float).reshape(1, -1), duration, t0)

    @property
    def input_dim(self) -> int:
        return self.values.shape[1]

    def value_at(self, t: float) -> np.ndarray:
        idx = int(np.floor((t - self.t0) / self.segment_duration + 1e-9))
        idx = min(max(idx, 0), self.values.shape[0] - 1)
        return self.values[idx]


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray


def _step_count(span: float, dt: float) -> int:
    if not dt > 0:
        raise InvalidArgumentError(f"integrator step dt must be positive, got {dt}")
    if not span > 0:
        raise InvalidArgumentError(f"horizon must be positive, got {span}")
    steps = int(round(span / dt))
    if steps < 1 or abs(steps * dt - span) > 1e-9 * max(1.0, span):
        raise InvalidArgumentError(f"dt={dt} does not divide the horizon {span}")
    return steps


def _rk4_step(system: AffineSystem, x: np.ndarray, u: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = evaluate_rhs(system, x, u, t)
    k2 = evaluate_rhs(system, x + 0.5 * dt * k1, u, t + 0.5 * dt)
    k3 = evaluate_rhs(system, x + 0.5 * dt * k2, u, t + 0.5 * dt)
    k4 = evaluate_rhs(system, x + dt * k3, u, t + dt)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    system: AffineSystem,
    x0,
    signal: ControlSignal,
    t0: float,
    tf: float,
    dt: float,
    noise_amplitude: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> Trajectory:
    """Classical fixed-step RK4 from ``t0`` to ``tf``.

    The input is sampled once per step at the step's left end. With
    ``noise_amplitude > 0`` a disturbance ``amplitude * xi`` (``xi`` uniform on
    ``[-1, 1]^n``, one draw per step) is added to the derivative; ``rng`` is
    then required.
    """
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (system.state_dim,):
        raise DimensionError(f"x0 has shape {x.shape}, expected ({system.state_dim},)")
    if signal.input_dim != system.input_dim:
        raise DimensionError(f"signal has {signal.input_dim} inputs, expected input_dim m={system.input_dim}")
    if dt > signal.segment_duration * (1 + 1e-12):
        raise InvalidArgumentError("dt must not exceed the signal's segment_duration")
    ratio = signal.segment_duration / dt
    if abs(ratio - round(ratio)) * dt > 1e-12:
        raise InvalidArgumentError("dt must divide the signal's segment_duration")
    steps = _step_count(tf - t0, dt)
    amp = system.noise_amplitude if noise_amplitude is None else noise_amplitude
    noise = None
    if amp > 0:
        if rng is None:
            raise InvalidArgumentError("a random generator is required when noise_amplitude > 0")
        noise = rng.uniform(-1.0, 1.0, size=(steps, system.state_dim))

    times = t0 + dt * np.arange(steps + 1)
    states = np.empty((steps + 1, system.state_dim))
    inputs = np.empty((steps + 1, system.input_dim))
    states[0] = x
    for i in range(steps):
        t = times[i]
        u = signal.value_at(t)
        inputs[i] = u
        x = _rk4_step(system, x, u, t, dt)
        if noise is not None:
            x = x + dt * amp * noise[i]
        if not np.all(np.isfinite(x)):
            raise IntegrationDivergedError("non-finite state during integration", float(t))
        states[i + 1] = x
    inputs[steps] = signal.value_at(times[steps])
    return Trajectory(times, states, inputs)


def integrate_batch(
    system: AffineSystem,
    X0: np.ndarray,
    U: np.ndarray,
    t0: float,
    span: float,
    dt: float,
    noise_amplitude: float = 0.0,
    noise: Optional[np.ndarray] = None,
    record_every: Optional[int] = None,
) -> np.ndarray:
    """Integrate many experiments with constant inputs in lockstep.

    ``X0`` is ``(B, n)`` and ``U`` is ``(B, m)``. ``noise`` (``(steps, B, n)``,
    uniform draws) is required when ``noise_amplitude > 0``. Returns the states
    at every ``record_every``-th step, shaped ``(records, B, n)``; by default
    only the initial and final states are returned.
    """
    X = np.array(X0, dtype=float, copy=True)
    U = np.asarray(U, dtype=float)
    _check_dims(system, X, U)
    steps = _step_count(span, dt)
    if noise_amplitude > 0 and noise is None:
        raise InvalidArgumentError("noise draws are required when noise_amplitude > 0")
    every = steps if record_every is None else record_every
    out = [X.copy()]
    for i in range(steps):
        t = t0 + i * dt
        X = _rk4_step(system, X, U, t, dt)
        if noise_amplitude > 0:
            X = X + dt * noise_amplitude * noise[i]
        if not np.all(np.isfinite(X)):
            raise IntegrationDivergedError("non-finite state during integration", float(t))
        if (i + 1) % every == 0:
            out.append(X.copy())
    return np.stack(out)


def make_linear_system(A, B, state_domain=None) -> AffineSystem:
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"A must be square, got shape {A.shape}")
    if B.ndim != 2 or B.shape[0] != A.shape[0]:
        raise DimensionError(f"B must have {A.shape[0]} rows, got shape {B.shape}")
    n = A.shape[0]
    if state_domain is None:
        state_domain = np.tile([-1.0, 1.0], (n, 1))
    A.setflags(write=False)
    B.setflags(write=False)

    def drift(x):
        return x @ A.T

    def column(k):
        b = B[:, k].copy()
        return lambda x: np.broadcast_to(b, np.shape(x))

    return AffineSystem(
        drift=drift,
        control_fields=[column(k) for k in range(B.shape[1])],
        state_domain=state_domain,
        name="linear",
        params={"A": A, "B": B},
    )


def make_bloch_system(epsilon: float, omega: float) -> AffineSystem:
    """Bloch equations on the unit sphere with two transverse controls."""

    def drift(x):
        return np.stack([-omega * x[..., 1], omega * x[..., 0], np.zeros_like(x[..., 2])], axis=-1)

    def g1(x):
        return np.stack([epsilon * x[..., 2], np.zeros_like(x[..., 0]), -epsilon * x[..., 0]], axis=-1)

    def g2(x):
        return np.stack([np.zeros_like(x[..., 0]), -epsilon * x[..., 2], epsilon * x[..., 1]], axis=-1)

    return AffineSystem(
        drift=drift,
        control_fields=[g1, g2],
        state_domain=np.tile([-1.0, 1.0], (3, 1)),
        sampler=_unit_sphere,
        name="bloch",
        params={"epsilon": epsilon, "omega": omega},
    )


def default_prc(theta):
    """``-sin(theta) * exp(3 (cos(theta - 0.9 pi) - 1))``."""
    theta = np.asarray(theta, dtype=float)
    return -np.sin(theta) * np.exp(3.0 * (np.cos(theta - 0.9 * np.pi) - 1.0))


def make_phase_oscillator(
    prc: Callable = default_prc,
    omega_fn: Callable = lambda t: 0.1 * t,
    noise_amplitude: float = 0.0,
) -> AffineSystem:
    """Scalar phase model ``theta' = omega(t) + prc(theta) u + eta``."""

    def drift(x, t):
        return np.full(np.shape(x), float(omega_fn(t)))

    return AffineSystem(
        drift=drift,
        control_fields=[lambda x: prc(x)],
        state_domain=np.array([[0.0, 2.0 * np.pi]]),
        time_varying=True,
        noise_amplitude=noise_amplitude,
        name="phase",
        params={"prc": prc, "omega_fn": omega_fn},
    )


def sphere_points(rng: np.random.Generator, k: int) -> np.ndarray:
    return _unit_sphere(rng, k)


__all__: Sequence[str] = [
    "AffineSystem",
    "ControlSignal",
    "Trajectory",
    "evaluate_rhs",
    "integrate",
    "integrate_batch",
    "make_linear_system",
    "make_bloch_system",
    "make_phase_oscillator",
    "default_prc",
    "sphere_points",
]
