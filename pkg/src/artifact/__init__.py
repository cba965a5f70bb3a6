"""Drift-free identification of control vector fields in input-affine systems.

Repeated short experiments from one initial state, differing only in the
applied input, cancel the drift in their derivative differences. The control
field is then a linear regression on those differences; the drift follows as a
second regression once the control field is known.
"""
from .basis import BasisSpec, eval_basis, expand, feature_count, feature_labels
from .dynamics import (
    AffineSystem,
    ControlSignal,
    Trajectory,
    evaluate_rhs,
    integrate,
    make_bloch_system,
    make_linear_system,
    make_phase_oscillator,
    default_prc,
)
from .experiment import (
    DifferenceSample,
    DriftPlan,
    ExperimentPlan,
    ExperimentRecord,
    build_drift_plan,
    build_plan,
    design_inputs,
    differences_from_records,
    estimate_derivative,
    form_differences,
    run_experiment,
    run_plan,
)
from .recovery import (
    RecoveredControlField,
    RecoveredDriftField,
    ValidationReport,
    noise_convergence_study,
    recover_constant_b,
    recover_control_field,
    recover_drift_field,
    validate_field,
)
from .regression import (
    LeastSquaresSolution,
    RegressionProblem,
    assemble_constant_b_lrp,
    assemble_control_lrp,
    assemble_drift_lrp,
    solve_least_squares,
)
from .scenarios import Scenario, load_scenario

__version__ = "0.1.0"
