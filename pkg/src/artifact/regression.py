"""Linear regression problems for the control field, constant B, and drift."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .basis import BasisSpec, eval_basis, feature_count
from .errors import DimensionError, InsufficientDataError, InvalidArgumentError

RCOND = 1e-10


@dataclass(frozen=True)
class RegressionProblem:
    """One least-squares system ``design @ c ~ target``.

    ``row_provenance`` holds ``(anchor_index, perturbation_index)`` per row and
    ``column_labels`` holds ``(output_dim, input_dim, basis_index)`` per column
    (``input_dim`` is ``-1`` for drift columns).
    """

    design: np.ndarray
    target: np.ndarray
    row_provenance: tuple
    column_labels: tuple

    def __post_init__(self):
        D = np.array(self.design, dtype=float)
        y = np.array(self.target, dtype=float)
        if D.ndim != 2 or y.shape != (D.shape[0],):
            raise DimensionError(f"design {D.shape} and target {y.shape} disagree")
        if not (np.all(np.isfinite(D)) and np.all(np.isfinite(y))):
            raise InvalidArgumentError("regression problem has non-finite entries")
        D.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "design", D)
        object.__setattr__(self, "target", y)

    @property
    def shape(self):
        return self.design.shape

    def scaled(self, factor: float) -> "RegressionProblem":
        return RegressionProblem(self.design * factor, self.target * factor, self.row_provenance, self.column_labels)


@dataclass(frozen=True)
class LeastSquaresSolution:
    coefficients: np.ndarray
    residual_norm: float
    condition_number: float
    rank: int
    singular_values: np.ndarray

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.coefficients.shape[0]

    def diagnostics(self) -> dict:
        return {
            "rank": int(self.rank),
            "unknowns": int(self.coefficients.shape[0]),
            "condition_number": float(self.condition_number),
            "residual_norm": float(self.residual_norm),
        }


def assemble_control_lrp(samples: Sequence, spec: BasisSpec, output_dim: int) -> RegressionProblem:
    """Rows ``phi_k(a_p) * du_s`` over (s, k); target ``dxdot_j``.

    ``output_dim`` is zero-based. Columns are grouped by input ``s`` and then
    basis index ``k``.
    """
    if len(samples) == 0:
        raise InsufficientDataError("no difference samples")
    anchors = np.array([s.anchor_state for s in samples], dtype=float)
    du = np.array([s.delta_u for s in samples], dtype=float)
    dx = np.array([s.delta_xdot for s in samples], dtype=float)
    n, m = dx.shape[1], du.shape[1]
    if anchors.shape[1] != spec.dimension:
        raise DimensionError(f"anchors have length {anchors.shape[1]}, basis dimension is {spec.dimension}")
    if not 0 <= output_dim < n:
        raise InvalidArgumentError(f"output_dim {output_dim} outside [0, {n})")
    blocks, labels = [], []
    for s in range(m):
        phi = eval_basis(spec, anchors, (output_dim, s))
        blocks.append(phi * du[:, s : s + 1])
        labels += [(output_dim, s, k) for k in range(phi.shape[1])]
    prov = tuple((smp.anchor_index, smp.perturbation_index) for smp in samples)
    return RegressionProblem(np.hstack(blocks), dx[:, output_dim], prov, tuple(labels))


def assemble_constant_b_lrp(samples: Sequence, output_dim: int) -> RegressionProblem:
    """Stacked ``du`` rows against ``dxdot_j``; the unknowns are row ``j`` of B."""
    if len(samples) == 0:
        raise InsufficientDataError("no difference samples")
    du = np.array([s.delta_u for s in samples], dtype=float)
    dx = np.array([s.delta_xdot for s in samples], dtype=float)
    if not 0 <= output_dim < dx.shape[1]:
        raise InvalidArgumentError(f"output_dim {output_dim} outside [0, {dx.shape[1]})")
    prov = tuple((s.anchor_index, s.perturbation_index) for s in samples)
    return RegressionProblem(du, dx[:, output_dim], prov, tuple((output_dim, s, 0) for s in range(du.shape[1])))


def assemble_drift_lrp(samples: Sequence, recovered_g: Callable, spec: BasisSpec, output_dim: int) -> RegressionProblem:
    """Drift regression with the control contribution removed from the target.

    ``samples`` are ``(x, xdot_estimate, u)`` triples and ``recovered_g(x)``
    returns the ``n x m`` control matrix (batched over leading axes).
    """
    if len(samples) == 0:
        raise InsufficientDataError("no drift samples")
    X = np.array([s[0] for s in samples], dtype=float)
    Xd = np.array([s[1] for s in samples], dtype=float)
    U = np.array([s[2] for s in samples], dtype=float)
    if not 0 <= output_dim < X.shape[1]:
        raise InvalidArgumentError(f"output_dim {output_dim} outside [0, {X.shape[1]})")
    G = np.asarray(recovered_g(X), dtype=float)
    target = Xd[:, output_dim] - np.einsum("bs,bs->b", G[:, output_dim, :], U)
    phi = eval_basis(spec, X)
    prov = tuple((i, -1) for i in range(len(samples)))
    return RegressionProblem(phi, target, prov, tuple((output_dim, -1, k) for k in range(phi.shape[1])))


def solve_least_squares(problem: RegressionProblem, ridge: float = 0.0, rcond: float = RCOND) -> LeastSquaresSolution:
    """Minimum-norm least squares through an SVD.

    Singular values below ``rcond * s_max`` count as zero. A rank-deficient
    design is not an error; check ``rank`` on the result. ``ridge > 0`` adds a
    Tikhonov penalty ``ridge * |c|^2``.
    """
    if ridge < 0:
        raise InvalidArgumentError("ridge must be nonnegative")
    D, y = problem.design, problem.target
    sv = np.linalg.svd(D, compute_uv=False) if D.size else np.zeros(0)
    if ridge > 0:
        k = D.shape[1]
        Da = np.vstack([D, np.sqrt(ridge) * np.eye(k)])
        ya = np.concatenate([y, np.zeros(k)])
        coef, _, rank, _ = np.linalg.lstsq(Da, ya, rcond=rcond)
    else:
        coef, _, rank, _ = np.linalg.lstsq(D, y, rcond=rcond)
    resid = float(np.linalg.norm(D @ coef - y))
    if sv.size == 0 or sv[-1] == 0 or min(D.shape) < D.shape[1]:
        cond = float("inf")
    else:
        cond = float(sv[0] / sv[-1])
    if ridge == 0:
        rank = int(np.sum(sv > rcond * sv[0])) if sv.size and sv[0] > 0 else 0
    return LeastSquaresSolution(coef, resid, cond, int(rank), sv)
