"""Named configurations for the three numerical studies.

``linear_2x2``
    Two-state LTI system, one anchor, three experiments.
``bloch``
    Bloch equations, 20 anchors on the unit sphere, controls (k,0),(0,k).
``prc``
    Phase oscillator with a time-varying frequency, 35 anchors, three
    experiments each, order-6 Fourier fit.
``prc_noise``
    ``prc`` with dynamic noise of amplitude 1 and a sweep over the number of
    perturbation experiments.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Mapping, Optional

import numpy as np

from .basis import FAMILIES, BasisSpec
from .dynamics import AffineSystem, make_bloch_system, make_linear_system, make_phase_oscillator
from .errors import ConfigError
from .experiment import (
    DriftPlan,
    ExperimentPlan,
    build_drift_plan,
    build_plan,
    design_inputs,
    symmetric_inputs,
)

SCENARIO_NAMES = ("linear_2x2", "bloch", "prc", "prc_noise")

BLOCH_CONTROLS = ((0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (0.0, 0.0), (0.0, 1.0), (0.0, 2.0), (0.0, 3.0))


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    t_s: float
    dt: float
    num_anchors: int
    inputs: tuple
    basis: str
    order: int
    sampler: str = "uniform"
    seed: int = 0
    t0: float = 0.0
    noise: float = 0.0
    trials: int = 0
    n_values: tuple = ()
    validation_points: int = 1000
    oracle_derivatives: bool = False
    input_scale: float = 1.0
    constants: Mapping[str, Any] = field(default_factory=dict)
    drift_basis: str = "monomial"
    drift_order: int = 1
    drift_num_anchors: int = 0
    expected: Mapping[str, Any] = field(default_factory=dict)

    @property
    def derivatives(self) -> str:
        return "exact" if self.oracle_derivatives else "forward"

    def system(self) -> AffineSystem:
        c = self.constants
        if self.kind == "linear":
            return make_linear_system(c["A"], c["B"])
        if self.kind == "bloch":
            return make_bloch_system(c["epsilon"], c["omega"])
        slope = c["omega_slope"]
        return make_phase_oscillator(omega_fn=lambda t: slope * t, noise_amplitude=self.noise)

    def plan(self, system: Optional[AffineSystem] = None) -> ExperimentPlan:
        system = system or self.system()
        sampler = np.array([self.constants["x0"]]) if self.kind == "linear" else self.sampler
        return build_plan(
            system, self.num_anchors, inputs=np.array(self.inputs), t_s=self.t_s, dt=self.dt,
            sampler=sampler, seed=self.seed, noise_amplitude=self.noise, t0=self.t0,
        )

    def basis_spec(self, system: Optional[AffineSystem] = None) -> BasisSpec:
        system = system or self.system()
        return BasisSpec(self.basis, self.order, system.state_domain)

    def drift_basis_spec(self, system: Optional[AffineSystem] = None) -> BasisSpec:
        system = system or self.system()
        return BasisSpec(self.drift_basis, self.drift_order, system.state_domain)

    def drift_plan(self, system: Optional[AffineSystem] = None) -> Optional[DriftPlan]:
        if self.drift_num_anchors <= 0:
            return None
        system = system or self.system()
        return build_drift_plan(system, self.drift_num_anchors, t_s=self.t_s, dt=self.dt, seed=self.seed, t0=self.t0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["constants"] = {k: np.asarray(v).tolist() for k, v in self.constants.items()}
        d["inputs"] = [list(r) for r in self.inputs]
        d["n_values"] = list(self.n_values)
        d["expected"] = {k: np.asarray(v).tolist() for k, v in self.expected.items()}
        return d

    def overrides(self) -> dict:
        """Every overridable value as currently set; reloading these reproduces the scenario."""
        d = self.to_dict()
        out = {k: d[k] for k in OVERRIDE_KEYS if k in d}
        out.update({k: d["constants"][k] for k in CONSTANT_KEYS.get(self.kind, ())})
        return out

    def checksum(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _base(name: str) -> Scenario:
    if name == "linear_2x2":
        return Scenario(
            name=name, kind="linear", t_s=1e-3, dt=1e-5, num_anchors=1,
            inputs=((1.0, 2.0), (2.0, 4.0), (3.0, 8.0)), basis="monomial", order=0,
            constants={"A": ((1.0, 4.0), (5.0, -1.0)), "B": ((2.0, 1.0), (0.6, 1.0)), "x0": (0.0, -0.25)},
            drift_basis="monomial", drift_order=1, drift_num_anchors=10,
            expected={
                "delta_U": ((-1.0, -2.0), (-2.0, -6.0)),
                "delta_xdot_1": (-4.0007, -10.0018),
                "delta_xdot_2": (-2.6009, -7.2021),
                "B_hat": ((2.0002, 1.0003), (0.6005, 1.0002)),
            },
        )
    if name == "bloch":
        return Scenario(
            name=name, kind="bloch", t_s=1e-4, dt=1e-5, num_anchors=20, inputs=BLOCH_CONTROLS,
            basis="monomial", order=2, constants={"epsilon": 0.6, "omega": 1.4},
            drift_basis="monomial", drift_order=1, drift_num_anchors=20,
        )
    if name in ("prc", "prc_noise"):
        noisy = name == "prc_noise"
        return Scenario(
            name=name, kind="phase", t_s=1e-3, dt=1e-5, num_anchors=35, inputs=((0.0,), (1.0,), (-1.0,)),
            basis="fourier", order=6, sampler="grid", constants={"omega_slope": 0.1},
            noise=1.0 if noisy else 0.0, trials=20 if noisy else 0,
            n_values=(5, 25, 100, 200) if noisy else (),
        )
    raise ConfigError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")


OVERRIDE_KEYS = (
    "t_s", "dt", "num_anchors", "inputs", "basis", "order", "sampler", "seed", "t0", "noise", "trials",
    "n_values", "validation_points", "oracle_derivatives", "input_scale", "drift_basis", "drift_order",
    "drift_num_anchors",
)
CONSTANT_KEYS = {"linear": ("A", "B", "x0"), "bloch": ("epsilon", "omega"), "phase": ("omega_slope",)}
_DERIVED_KEYS = ("num_perturbations",)


def _positive(key, v, cast=float):
    try:
        v = cast(v)
    except (TypeError, ValueError):
        raise ConfigError(f"override {key!r}: cannot interpret {v!r} as {cast.__name__}") from None
    if not v > 0:
        raise ConfigError(f"override {key!r} must be positive, got {v!r}")
    return v


def _nonneg(key, v, cast=float):
    try:
        v = cast(v)
    except (TypeError, ValueError):
        raise ConfigError(f"override {key!r}: cannot interpret {v!r} as {cast.__name__}") from None
    if v < 0:
        raise ConfigError(f"override {key!r} must be nonnegative, got {v!r}")
    return v


def _as_bool(key, v):
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "1", "yes"):
        return True
    if isinstance(v, str) and v.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"override {key!r} must be a boolean, got {v!r}")


def _matrix(key, v, shape=None):
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"override {key!r} is not numeric") from None
    if shape is not None and a.shape != shape:
        raise ConfigError(f"override {key!r} must have shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(f"override {key!r} has non-finite entries")
    return tuple(map(tuple, a.tolist())) if a.ndim == 2 else tuple(a.tolist())


def load_scenario(name: str, overrides: Optional[Mapping[str, Any]] = None) -> Scenario:
    """Built-in scenario ``name`` with validated ``overrides`` applied."""
    sc = _base(name)
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(OVERRIDE_KEYS) - set(CONSTANT_KEYS[sc.kind]) - set(_DERIVED_KEYS)
    if unknown:
        raise ConfigError(f"unknown override key(s) {sorted(unknown)} for scenario {name!r}")

    changes: dict = {}
    constants = dict(sc.constants)
    for key, v in overrides.items():
        if v is None:
            continue
        if key in ("t_s", "dt", "input_scale"):
            changes[key] = _positive(key, v)
        elif key in ("num_anchors", "order", "trials", "validation_points", "drift_order", "drift_num_anchors"):
            changes[key] = (_positive if key in ("num_anchors", "validation_points") else _nonneg)(key, v, int)
        elif key in ("noise",):
            changes[key] = _nonneg(key, v)
        elif key == "t0":
            changes[key] = _nonneg(key, v)
        elif key == "seed":
            changes[key] = _nonneg(key, v, int)
            if changes[key] >= 2**64:
                raise ConfigError("seed must fit in 64 bits")
        elif key in ("basis", "drift_basis"):
            if v not in FAMILIES:
                raise ConfigError(f"override {key!r} must be one of {FAMILIES}, got {v!r}")
            changes[key] = v
        elif key == "sampler":
            if v not in ("uniform", "grid"):
                raise ConfigError(f"override 'sampler' must be 'uniform' or 'grid', got {v!r}")
            changes[key] = v
        elif key == "oracle_derivatives":
            changes[key] = _as_bool(key, v)
        elif key == "n_values":
            vals = tuple(_positive(key, x, int) for x in (v if isinstance(v, (list, tuple)) else str(v).split(",")))
            if list(vals) != sorted(vals):
                raise ConfigError("override 'n_values' must be ascending")
            changes[key] = vals
        elif key == "inputs":
            changes[key] = _matrix(key, v)
        elif key in ("A", "B", "x0"):
            constants[key] = _matrix(key, v)
        elif key in ("epsilon", "omega", "omega_slope"):
            try:
                constants[key] = float(v)
            except (TypeError, ValueError):
                raise ConfigError(f"override {key!r} must be a number, got {v!r}") from None

    if "num_perturbations" in overrides and overrides["num_perturbations"] is not None:
        N = _positive("num_perturbations", overrides["num_perturbations"], int)
        scale = changes.get("input_scale", sc.input_scale)
        m = len(sc.inputs[0])
        if sc.kind == "phase":
            U = symmetric_inputs(N, scale)
        else:
            if N < m:
                raise ConfigError(f"num_perturbations must be at least m={m}")
            U = design_inputs(m, N, scale)
        changes["inputs"] = tuple(map(tuple, U.tolist()))
    changes["constants"] = constants

    sc = replace(sc, **changes)
    _check_consistency(sc)
    return sc


def _check_consistency(sc: Scenario) -> None:
    if sc.dt > sc.t_s * (1 + 1e-12):
        raise ConfigError(f"dt={sc.dt} must not exceed t_s={sc.t_s}")
    ratio = sc.t_s / sc.dt
    if abs(ratio - round(ratio)) > 1e-6:
        raise ConfigError(f"dt={sc.dt} must divide t_s={sc.t_s}")
    if len(sc.inputs) < 2:
        raise ConfigError("need a reference input and at least one perturbation")
    c = sc.constants
    if sc.kind == "linear":
        A, B = np.array(c["A"]), np.array(c["B"])
        if A.ndim != 2 or A.shape[0] != A.shape[1] or B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise ConfigError(f"inconsistent shapes A{A.shape} B{B.shape}")
        if len(c["x0"]) != A.shape[0]:
            raise ConfigError("x0 length must match A")
        m = B.shape[1]
    else:
        m = 2 if sc.kind == "bloch" else 1
    if any(len(u) != m for u in sc.inputs):
        raise ConfigError(f"every input vector must have length m={m}")
    if sc.sampler == "grid" and sc.kind != "phase":
        raise ConfigError("grid sampling is only available for the scalar phase scenarios")
