"""Dense Lyapunov kernel: Hurwitz test, Lyapunov solve and the reformulated cost.

For a Hurwitz ``A`` the infinite-horizon quadratic cost of ``Xdot = A X``
equals ``tr(P X0)`` where ``A^T P + P A + Qtilde = 0``. The solve uses the
Bartels-Stewart scheme (real Schur form of ``A`` followed by quasi-triangular
back-substitution) as implemented by LAPACK through scipy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .discretization import DiscreteSystem, GridConfig, assemble
from .exceptions import SolverError, wrap_exception
from .logger import get_logger
from .model import (
    DesignPoint,
    FeasibilityReport,
    FloatArray,
    Weights,
    theorem1_margins,
)

logger = get_logger(__name__)

HURWITZ_THRESHOLD = -1.0e-12
RESIDUAL_RTOL = 1.0e-9


@dataclass(frozen=True, slots=True)
class LyapunovSolution:
    """Solution of ``A^T P + P A + Qtilde = 0``.

    Attributes:
        P: Symmetric solution.
        residual_norm: Frobenius norm of the equation residual.
        positive_definite: Whether a Cholesky factorization of ``P`` succeeded.
    """

    P: FloatArray
    residual_norm: float
    positive_definite: bool


def max_real_eig(a_mat: FloatArray) -> float:
    """Largest real part over the eigenvalues of ``a_mat``."""
    if not np.all(np.isfinite(a_mat)):
        raise SolverError("matrix has non-finite entries")
    try:
        eigenvalues = scipy.linalg.eigvals(a_mat, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise wrap_exception(
            exc,
            SolverError,
            "eigenvalue iteration did not converge",
            context={"size": a_mat.shape[0]},
        ) from exc
    return float(np.max(eigenvalues.real))


def is_hurwitz(a_mat: FloatArray) -> bool:
    """``max Re(lambda) < -1e-12``; marginal matrices are rejected."""
    return max_real_eig(a_mat) < HURWITZ_THRESHOLD


def lyapunov_residual(a_mat: FloatArray, p_mat: FloatArray, q_mat: FloatArray) -> float:
    """Frobenius norm of ``A^T P + P A + Q``."""
    return float(np.linalg.norm(a_mat.T @ p_mat + p_mat @ a_mat + q_mat, "fro"))


def solve_lyapunov(a_mat: FloatArray, q_tilde: FloatArray) -> LyapunovSolution:
    """Solve ``A^T P + P A + Qtilde = 0`` for a Hurwitz ``A``.

    Raises:
        SolverError: ``A`` is not Hurwitz, or the Schur-based solve failed.
    """
    max_re = max_real_eig(a_mat)
    if not max_re < HURWITZ_THRESHOLD:
        raise SolverError(
            "Lyapunov solve requires a Hurwitz matrix",
            context={"max_re_eig": max_re},
        )

    p_mat = _solve_unchecked(a_mat, q_tilde)
    residual = lyapunov_residual(a_mat, p_mat, q_tilde)
    scale = float(
        np.linalg.norm(a_mat, "fro") * np.linalg.norm(p_mat, "fro")
        + np.linalg.norm(q_tilde, "fro")
    )
    if residual > RESIDUAL_RTOL * max(scale, np.finfo(float).tiny):
        logger.warning(
            "Lyapunov residual above tolerance",
            extra={"residual": residual, "scale": scale},
        )

    return LyapunovSolution(
        P=p_mat,
        residual_norm=residual,
        positive_definite=_is_positive_definite(p_mat),
    )


def _solve_unchecked(a_mat: FloatArray, q_mat: FloatArray) -> FloatArray:
    # scipy solves A X + X A^H = Q, hence the transpose and sign flip.
    try:
        p_mat = scipy.linalg.solve_continuous_lyapunov(a_mat.T, -q_mat)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise wrap_exception(
            exc,
            SolverError,
            "Schur back-substitution failed",
            context={"size": a_mat.shape[0]},
        ) from exc
    if not np.all(np.isfinite(p_mat)):
        raise SolverError("Lyapunov solution is not finite")
    return 0.5 * (p_mat + p_mat.T)


def solve_sensitivity(a_mat: FloatArray, forcing: FloatArray) -> FloatArray:
    """Solve ``A^T S + S A + F = 0`` reusing the kernel (``A`` already checked)."""
    return _solve_unchecked(a_mat, forcing)


def _is_positive_definite(p_mat: FloatArray) -> bool:
    try:
        scipy.linalg.cholesky(p_mat, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return False
    return True


def cost_jf(
    system: DiscreteSystem, point: DesignPoint, weights: Weights
) -> tuple[float, LyapunovSolution]:
    """Reformulated cost ``Jf = f_d(d) + tr(P X0)``."""
    solution = solve_lyapunov(system.A, system.q_tilde)
    jf = weights.objective.value(point) + float(np.trace(solution.P @ system.X0))
    return jf, solution


def assess_feasibility(point: DesignPoint, grid: GridConfig) -> FeasibilityReport:
    """Margins plus Hurwitz test: full membership test for D."""
    report = theorem1_margins(point)
    # Weights do not enter A; unit weights keep assemble cheap and valid.
    system = assemble(point, Weights(q=1.0, r=1.0), grid)
    max_re = max_real_eig(system.A)
    return report.with_hurwitz(max_re, max_re < HURWITZ_THRESHOLD)
