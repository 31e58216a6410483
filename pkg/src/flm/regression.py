"""Coefficient solvers: plain least squares, sequential thresholded least
squares (hard-thresholding realization of the L1-penalized objective), and
ridge-regularized normal equations via Jacobi-preconditioned conjugate
gradients.

Thresholding operates in column-normalized space by default so one threshold
is meaningful across kernels whose raw magnitudes differ by orders; the raw
mode reproduces the objective literally. The bias column, when identified,
is exempt from thresholding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_finite
from .errors import DataFormatError

_EMPTY_WARNING = "all terms thresholded away; returning bias-only model"


@dataclass(frozen=True)
class StlsqConfig:
    threshold: float = 0.1
    max_sweeps: int = 20
    inner_ridge: float = 0.0
    normalize_columns: bool = True

    def __post_init__(self):
        if self.threshold < 0:
            raise DataFormatError("threshold must be >= 0")
        if self.max_sweeps < 1:
            raise DataFormatError("max_sweeps must be >= 1")
        if self.inner_ridge < 0:
            raise DataFormatError("inner_ridge must be >= 0")


@dataclass(frozen=True)
class RidgeCgConfig:
    lam: float = 1e-9
    tol: float = 1e-10
    max_iter: int | None = None  # defaults to 10 * P

    def __post_init__(self):
        if not (self.lam > 0):
            raise DataFormatError("ridge lambda must be > 0")
        if not (self.tol > 0):
            raise DataFormatError("cg tolerance must be > 0")


@dataclass
class FitReport:
    active_count: int
    sweeps: int
    train_residual_rms: float
    column_condition_estimate: float
    cg_iterations: int | None = None
    converged: bool = True
    warning: str | None = None
    dropped_terms: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "active_count": self.active_count,
            "sweeps": self.sweeps,
            "train_residual_rms": self.train_residual_rms,
            "column_condition_estimate": self.column_condition_estimate,
            "cg_iterations": self.cg_iterations,
            "converged": self.converged,
            "warning": self.warning,
            "dropped_terms": self.dropped_terms,
        }


def _as_system(F, U) -> tuple[np.ndarray, np.ndarray]:
    Fv = F.values if hasattr(F, "values") else np.asarray(F, dtype=np.float64)
    Uv = U.values if hasattr(U, "values") else np.asarray(U, dtype=np.float64)
    Uv = Uv.reshape(-1)
    if Fv.ndim != 2:
        raise DataFormatError("design matrix must be 2D")
    if Fv.shape[0] != Uv.shape[0]:
        raise DataFormatError(
            f"{Fv.shape[0]} rows in F but {Uv.shape[0]} targets"
        )
    check_finite(Fv, "design matrix")
    check_finite(Uv, "targets")
    return Fv, Uv


def _lstsq(F: np.ndarray, U: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    if ridge > 0.0:
        p = F.shape[1]
        F = np.vstack([F, np.sqrt(ridge) * np.eye(p)])
        U = np.concatenate([U, np.zeros(p)])
    return np.linalg.lstsq(F, U, rcond=None)[0]


def least_squares(F, U) -> np.ndarray:
    """Minimum-norm least-squares solution via SVD."""
    Fv, Uv = _as_system(F, U)
    return _lstsq(Fv, Uv)


def _column_scales(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scales = np.linalg.norm(F, axis=0)
    zero = scales == 0.0
    safe = scales.copy()
    safe[zero] = 1.0
    return safe, zero


def _condition_estimate(scales: np.ndarray, zero: np.ndarray) -> float:
    live = scales[~zero]
    if live.size == 0:
        return float("inf")
    return float(live.max() / live.min())


def stlsq(F, U, cfg: StlsqConfig = StlsqConfig(),
          bias_index: int | None = None) -> tuple[np.ndarray, FitReport]:
    """Alternate least-squares refits with hard thresholding of small
    coefficients until the active set is fixed. Returns coefficients in the
    original (unscaled) column coordinates."""
    Fv, Uv = _as_system(F, U)
    p = Fv.shape[1]
    if bias_index is not None and not (0 <= bias_index < p):
        raise DataFormatError(f"bias index {bias_index} out of range")
    scales, zero = _column_scales(Fv)
    if cfg.normalize_columns:
        Fs = Fv / scales
    else:
        Fs = Fv
    active = ~zero
    w = np.zeros(p)
    warning = None
    sweeps = 0
    settled = False
    for _ in range(cfg.max_sweeps):
        sweeps += 1
        w = np.zeros(p)
        w[active] = _lstsq(Fs[:, active], Uv, cfg.inner_ridge)
        # w already lives in the space the system was solved in, so the
        # threshold compares against normalized or raw magnitudes directly
        small = active & (np.abs(w) < cfg.threshold)
        if bias_index is not None:
            small[bias_index] = False
        if not small.any():
            settled = True
            break
        new_active = active & ~small
        if not new_active.any():
            if bias_index is not None and not zero[bias_index]:
                new_active[bias_index] = True
            warning = _EMPTY_WARNING
            active = new_active
            w = np.zeros(p)
            if active.any():
                w[active] = _lstsq(Fs[:, active], Uv, cfg.inner_ridge)
            settled = True
            break
        active = new_active
    if not settled:
        # sweep budget exhausted mid-shrink: make w consistent with the
        # final active set
        w = np.zeros(p)
        if active.any():
            w[active] = _lstsq(Fs[:, active], Uv, cfg.inner_ridge)
        warning = "max_sweeps reached before the active set stabilized"
    if cfg.normalize_columns:
        w = w / scales
    residual = Uv - Fv @ w
    rms = float(np.sqrt(np.mean(residual**2))) if Uv.size else 0.0
    nonzero = np.flatnonzero(w != 0.0)
    report = FitReport(
        active_count=int(nonzero.size),
        sweeps=sweeps,
        train_residual_rms=rms,
        column_condition_estimate=_condition_estimate(scales, zero),
        warning=warning,
        dropped_terms=[int(j) for j in range(p) if w[j] == 0.0],
    )
    return w, report


def ridge_normal_cg(F, U, cfg: RidgeCgConfig = RidgeCgConfig()
                    ) -> tuple[np.ndarray, FitReport]:
    """Solve (F^T F + lam I) W = F^T U by conjugate gradients with a Jacobi
    (diagonal) preconditioner. Stops at relative residual <= tol; on hitting
    max_iter the best iterate is returned with converged=False."""
    Fv, Uv = _as_system(F, U)
    p = Fv.shape[1]
    A = Fv.T @ Fv
    A[np.diag_indices_from(A)] += cfg.lam
    b = Fv.T @ Uv
    inv_diag = 1.0 / np.diag(A)
    max_iter = cfg.max_iter if cfg.max_iter is not None else 10 * p
    b_norm = float(np.linalg.norm(b))
    x = np.zeros(p)
    if b_norm == 0.0:
        scales, zero = _column_scales(Fv)
        return x, FitReport(
            active_count=0, sweeps=0, train_residual_rms=0.0,
            column_condition_estimate=_condition_estimate(scales, zero),
            cg_iterations=0,
        )
    r = b.copy()
    z = inv_diag * r
    d = z.copy()
    rz = float(r @ z)
    iterations = 0
    converged = False
    best_x = x.copy()
    best_res = float(np.linalg.norm(r))
    for _ in range(max_iter):
        iterations += 1
        Ad = A @ d
        denom = float(d @ Ad)
        if denom <= 0.0:
            break
        alpha = rz / denom
        x = x + alpha * d
        r = r - alpha * Ad
        res = float(np.linalg.norm(r))
        if res < best_res:
            best_res = res
            best_x = x.copy()
        if res <= cfg.tol * b_norm:
            converged = True
            break
        z = inv_diag * r
        rz_new = float(r @ z)
        d = z + (rz_new / rz) * d
        rz = rz_new
    if not converged:
        x = best_x
    residual = Uv - Fv @ x
    rms = float(np.sqrt(np.mean(residual**2))) if Uv.size else 0.0
    scales, zero = _column_scales(Fv)
    report = FitReport(
        active_count=int(np.count_nonzero(x)),
        sweeps=0,
        train_residual_rms=rms,
        column_condition_estimate=_condition_estimate(scales, zero),
        cg_iterations=iterations,
        converged=converged,
        warning=None if converged else "cg hit max_iter before tolerance",
        dropped_terms=[],
    )
    return x, report
