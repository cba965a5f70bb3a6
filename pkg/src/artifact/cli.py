"""Command-line driver: ``python -m artifact run --scenario NAME --out DIR``.

Exit codes: 0 success, 1 runtime failure (partial artifacts plus
``error_report.json``), 2 configuration error (nothing written).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .basis import feature_labels
from .dynamics import ControlSignal, integrate
from .errors import ConfigError, ExperimentError
from .experiment import differences_from_records, run_plan
from .recovery import (
    constant_b_from_samples,
    fit_control_field,
    noise_convergence_study,
    recover_drift_field,
    validate_field,
)
from .reports import Table, emit_reports, render, write_atomic
from .scenarios import SCENARIO_NAMES, Scenario, load_scenario


class _Stage:
    name = "setup"


def _constant_field(B):
    B = np.asarray(B)
    return lambda x: np.broadcast_to(B, np.shape(x)[:-1] + B.shape)


def _drift_payload(drift, spec):
    labels = feature_labels(spec)
    return {
        "basis": spec.to_dict(),
        "feature_labels": labels,
        "coefficients": drift.coefficients,
        "num_samples": drift.num_samples,
    }


def _control_payload(g):
    entries = []
    for j in range(g.state_dim):
        for s in range(g.input_dim):
            entries.append({
                "j": j + 1, "s": s + 1,
                "feature_labels": feature_labels(g.basis, (j, s)),
                "coefficients": g.entry_coefficients(j, s),
            })
    return {"basis": g.basis.to_dict(), "entries": entries}


def _field_samples(report):
    pts, true, est = report.sample_points, report.true_values, report.recovered_values
    n, m = true.shape[1], true.shape[2]
    header = [f"x{d + 1}" for d in range(n)] + ["entry_id", "true_value", "recovered_value"]
    rows = []
    for p in range(pts.shape[0]):
        for j in range(n):
            for s in range(m):
                rows.append([*pts[p].tolist(), f"g{j + 1}_{s + 1}", true[p, j, s], est[p, j, s]])
    return Table(header, rows)


def _run_linear(sc: Scenario, stage: _Stage) -> dict:
    system = sc.system()
    plan = sc.plan(system)
    stage.name = "experiments"
    records = run_plan(system, plan, sc.derivatives)
    samples = differences_from_records(records, plan.reference_index)
    stage.name = "regression"
    B_hat, sols = constant_b_from_samples(samples)
    B = np.array(sc.constants["B"])
    out = {}
    out["recovered_B.json"] = {
        "B_hat": B_hat,
        "B_true": B,
        "abs_error": np.abs(B_hat - B),
        "delta_U": [s.delta_u for s in samples],
        "delta_xdot": {f"x{j + 1}": [s.delta_xdot[j] for s in samples] for j in range(system.state_dim)},
        "derivatives": sc.derivatives,
        "sampling_time": sc.t_s,
    }
    diagnostics = {"control": [dict(s.diagnostics(), output=j + 1) for j, s in enumerate(sols)]}

    drift_plan = sc.drift_plan(system)
    if drift_plan is not None:
        stage.name = "drift"
        spec = sc.drift_basis_spec(system)
        drift = recover_drift_field(system, drift_plan, _constant_field(B_hat), spec,
                                    "exact" if sc.oracle_derivatives else "central")
        payload = _drift_payload(drift, spec)
        A = np.array(sc.constants["A"])
        if sc.drift_basis == "monomial" and sc.drift_order == 1:
            payload["A_hat"] = drift.coefficients[:, 1:]
            payload["offset_hat"] = drift.coefficients[:, 0]
            payload["A_true"] = A
            payload["abs_error"] = np.abs(drift.coefficients[:, 1:] - A)
        out["recovered_A.json"] = payload
        diagnostics["drift"] = [dict(s.diagnostics(), output=j + 1) for j, s in enumerate(drift.diagnostics)]

    stage.name = "trajectories"
    rows = []
    n, m = system.state_dim, system.input_dim
    for j, i, a, u in plan.experiments():
        traj = integrate(system, a, ControlSignal.constant(u, sc.t_s, plan.t0), plan.t0, plan.t0 + sc.t_s, sc.dt)
        eid = f"a{j}_u{i}"
        for t, x, uu in zip(traj.times, traj.states, traj.inputs):
            rows.append([t, *x.tolist(), *uu.tolist(), eid])
    header = ["t"] + [f"x{k + 1}" for k in range(n)] + [f"u{k + 1}" for k in range(m)] + ["experiment_id"]
    out["trajectories.csv"] = Table(header, rows)
    out["diagnostics.json"] = diagnostics
    return out


def _run_field(sc: Scenario, stage: _Stage) -> dict:
    system = sc.system()
    plan = sc.plan(system)
    spec = sc.basis_spec(system)
    stage.name = "experiments"
    records = run_plan(system, plan, sc.derivatives)
    samples = differences_from_records(records, plan.reference_index)
    stage.name = "regression"
    g = fit_control_field(samples, spec)
    stage.name = "validation"
    report = validate_field(g, system, sc.validation_points, seed=sc.seed + 1)
    out = {
        "coefficients.json": _control_payload(g),
        "validation_report.json": report.to_dict(),
        "field_samples.csv": _field_samples(report),
    }
    diagnostics = {
        "control": [dict(s.diagnostics(), output=j + 1) for j, s in enumerate(g.diagnostics)],
        "num_experiments": plan.num_experiments,
        "num_differences": len(samples),
    }

    drift_plan = sc.drift_plan(system)
    if drift_plan is not None:
        stage.name = "drift"
        dspec = sc.drift_basis_spec(system)
        drift = recover_drift_field(system, drift_plan, g, dspec, "exact" if sc.oracle_derivatives else "central")
        out["recovered_drift.json"] = _drift_payload(drift, dspec)
        diagnostics["drift"] = [dict(s.diagnostics(), output=j + 1) for j, s in enumerate(drift.diagnostics)]

    if sc.n_values:
        stage.name = "noise_study"
        study = noise_convergence_study(system, plan, spec, sc.n_values, sc.trials, seed=sc.seed, noise_amplitude=sc.noise)
        out["convergence.csv"] = Table(
            ["N", "median_error", "q25", "q75", "trials"],
            [[r["N"], r["median_error"], r["q25"], r["q75"], r["trials"]] for r in study.rows()],
        )
    out["diagnostics.json"] = diagnostics
    return out


def execute(sc: Scenario, stage: _Stage | None = None) -> dict:
    """Run a scenario and return ``{filename: payload}`` (nothing is written)."""
    stage = stage or _Stage()
    if sc.kind == "linear":
        return _run_linear(sc, stage)
    return _run_field(sc, stage)


def effective_config(sc: Scenario) -> dict:
    return {"scenario": sc.name, "overrides": sc.overrides(), "checksum": sc.checksum()}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="artifact", description="Drift-free identification of control vector fields.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a built-in scenario or a JSON config")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", choices=SCENARIO_NAMES, help="built-in scenario name")
    src.add_argument("--config", type=Path, help="JSON file with 'scenario' and 'overrides' (e.g. an effective_config.json)")
    r.add_argument("--out", type=Path, required=True, help="output directory")
    r.add_argument("--seed", type=int, help="master seed for anchors, validation points and noise")
    r.add_argument("--ts", type=float, dest="t_s", help="sampling time t_s in seconds")
    r.add_argument("--dt", type=float, help="RK4 integrator step in seconds")
    r.add_argument("--basis", choices=("fourier", "legendre", "monomial"), help="basis family for the control field")
    r.add_argument("--order", type=int, help="truncation order L")
    r.add_argument("--num-anchors", type=int, dest="num_anchors", help="number of anchor states M+1")
    r.add_argument("--num-perturbations", type=int, dest="num_perturbations",
                   help="number of perturbation experiments N per anchor (replaces the input set)")
    r.add_argument("--noise", type=float, help="dynamic noise amplitude")
    r.add_argument("--trials", type=int, help="Monte-Carlo trials for the noise study")
    r.add_argument("--n-values", dest="n_values", help="comma-separated N values for the noise study")
    r.add_argument("--validation-points", type=int, dest="validation_points", help="held-out validation states")
    r.add_argument("--oracle-derivatives", action="store_true", default=None, dest="oracle_derivatives",
                   help="test mode: use the analytic derivative instead of forward differences")
    return p


_FLAG_KEYS = ("seed", "t_s", "dt", "basis", "order", "num_anchors", "num_perturbations", "noise", "trials",
              "n_values", "validation_points", "oracle_derivatives")


def _resolve(args) -> Scenario:
    overrides = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict) or "scenario" not in cfg:
            raise ConfigError("config must be a JSON object with a 'scenario' key")
        name = cfg["scenario"]
        overrides.update(cfg.get("overrides", {}))
    else:
        name = args.scenario
    for key in _FLAG_KEYS:
        v = getattr(args, key)
        if v is not None:
            overrides[key] = v
    return load_scenario(name, overrides)


def _check_out_dir(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        sc = _resolve(args)
        _check_out_dir(args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    stage = _Stage()
    try:
        write_atomic(args.out / "effective_config.json", render(effective_config(sc)))
        results = execute(sc, stage)
        stage.name = "reports"
        written = emit_reports(results, args.out)
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error report
        report = {
            "stage": stage.name,
            "error_type": type(exc).__name__,
            "message": str(exc),
            "anchor_index": getattr(exc, "anchor_index", None),
            "input_index": getattr(exc, "input_index", None),
        }
        try:
            write_atomic(args.out / "error_report.json", render(report))
        except OSError:
            pass
        print(f"error in stage {stage.name}: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
