"""Scikit-learn style front end: fit/predict over plain arrays.

FunctionalOperatorRegressor wraps the full pipeline (normalization, design
matrix assembly, sparse solve, model binding) behind the usual estimator API
so it composes with pipelines and model selection tooling. The same
fit_dataset helper backs the command-line `fit`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_float_array, check_finite
from .assembly import DEFAULT_MEMORY_CAP, assemble
from .errors import DataFormatError
from .fields import Dataset, Grid2D, TaskKind, apply_normalization, fit_normalization
from .library import resolve_library
from .model import (
    PROVENANCE_DATA,
    FunctionalLinearModel,
    from_solution,
    predict_batch,
    render_equation,
)
from .regression import (
    FitReport,
    RidgeCgConfig,
    StlsqConfig,
    least_squares,
    ridge_normal_cg,
    stlsq,
)

SOLVERS = ("stlsq", "ridge-cg", "ols")


def _center_columns(F, U, bias_col: int | None):
    """Mean-center non-bias columns and targets; returns the fold-back data.

    Centering is absorbed into the bias coefficient after the solve, so it
    never needs to be stored with the model."""
    col_means = F.mean(axis=0)
    if bias_col is not None:
        col_means[bias_col] = 0.0
    u_mean = float(U.mean())
    return F - col_means, U - u_mean, col_means, u_mean


def fit_dataset(dataset: Dataset, library, *, solver: str = "stlsq",
                threshold: float = 0.1, max_sweeps: int = 20,
                inner_ridge: float = 0.0, normalize_columns: bool = True,
                ridge_lambda: float = 1e-9, cg_tol: float = 1e-10,
                cg_max_iter: int | None = None, normalize: bool = True,
                center: bool = False, provenance: str = PROVENANCE_DATA,
                library_name: str | None = None,
                memory_cap_bytes: int = DEFAULT_MEMORY_CAP,
                ) -> tuple[FunctionalLinearModel, FitReport]:
    """Assemble the regression system for a dataset and solve for the sparse
    coefficient vector; returns the bound model plus the fit report."""
    if solver not in SOLVERS:
        raise DataFormatError(f"unknown solver {solver!r}; known: {SOLVERS}")
    terms = resolve_library(library)
    norm = None
    fit_ds = dataset
    if normalize:
        norm = dataset.norm or fit_normalization(dataset)
        if dataset.norm is None:
            fit_ds = apply_normalization(dataset, norm)
    F, U = assemble(fit_ds, terms, memory_cap_bytes=memory_cap_bytes)
    bias_candidates = [j for j, t in enumerate(terms) if t.is_bias]
    bias_index = bias_candidates[0] if bias_candidates else None

    Fv, Uv = F.values, U.values
    col_means = None
    u_mean = 0.0
    if center:
        Fv, Uv, col_means, u_mean = _center_columns(Fv, Uv, bias_index)

    if solver == "stlsq":
        cfg = StlsqConfig(
            threshold=threshold,
            max_sweeps=max_sweeps,
            inner_ridge=inner_ridge,
            normalize_columns=normalize_columns,
        )
        w, report = stlsq(Fv, Uv, cfg, bias_index=bias_index)
    elif solver == "ridge-cg":
        cfg = RidgeCgConfig(lam=ridge_lambda, tol=cg_tol, max_iter=cg_max_iter)
        w, report = ridge_normal_cg(Fv, Uv, cfg)
    else:
        w = least_squares(Fv, Uv)
        residual = Uv - Fv @ w
        report = FitReport(
            active_count=int(np.count_nonzero(w)),
            sweeps=0,
            train_residual_rms=float(np.sqrt(np.mean(residual**2))),
            column_condition_estimate=float("nan"),
        )

    if center:
        # fold the removed means back into the bias coefficient
        shift = u_mean - float(col_means @ w)
        if bias_index is not None:
            w = w.copy()
            w[bias_index] += shift
        elif abs(shift) > 0:
            raise DataFormatError(
                "center=True needs a bias term to absorb the means"
            )
        report.active_count = int(np.count_nonzero(w))

    lam = {"stlsq": threshold, "ridge-cg": ridge_lambda, "ols": 0.0}[solver]
    fit_meta = {
        "solver": solver,
        "lambda": lam,
        "library": library_name or (library if isinstance(library, str) else "custom"),
        "normalize_columns": normalize_columns,
        "center": center,
        "row_order": F.row_order,
    }
    if dataset.task is TaskKind.IMAGE_TO_LINE:
        fit_meta["out_n"] = dataset.out_n
    model = from_solution(
        terms, w, dataset.grid, norm=norm, provenance=provenance,
        fit_meta=fit_meta,
    )
    return model, report


def _coerce_fields(X, grid: Grid2D | None) -> tuple[np.ndarray, Grid2D]:
    arr = as_float_array(X, "X")
    if arr.ndim == 3:
        q, ny, nx = arr.shape
        inferred = Grid2D(nx, ny)
        if grid is not None and (grid.nx, grid.ny) != (nx, ny):
            raise DataFormatError(
                f"X shape {arr.shape} does not match grid {grid.nx}x{grid.ny}"
            )
        return arr.reshape(q, nx * ny), inferred
    if arr.ndim == 2:
        if grid is None:
            side = int(round(np.sqrt(arr.shape[1])))
            if side * side != arr.shape[1]:
                raise DataFormatError(
                    "cannot infer the grid from flattened non-square fields; "
                    "pass grid=(nx, ny)"
                )
            grid = Grid2D(side, side)
        if arr.shape[1] != grid.size:
            raise DataFormatError(
                f"X has {arr.shape[1]} features, grid needs {grid.size}"
            )
        return arr, grid
    raise DataFormatError("X must be (q, ny, nx) fields or (q, nx*ny) rows")


class FunctionalOperatorRegressor(BaseEstimator):
    """Sparse integral-equation surrogate with a fit/predict interface.

    Parameters mirror the pipeline: a library preset (or LibrarySpec / term
    list), the solver and its knobs, and data normalization switches. After
    fit, the interpretable model is available as `model_` and its rendered
    form via `equation_`.
    """

    def __init__(self, library="case1-mnist", grid=None, solver="stlsq",
                 threshold=0.1, max_sweeps=20, inner_ridge=0.0,
                 normalize_columns=True, ridge_lambda=1e-9, cg_tol=1e-10,
                 cg_max_iter=None, normalize=True, center=False):
        self.library = library
        self.grid = grid
        self.solver = solver
        self.threshold = threshold
        self.max_sweeps = max_sweeps
        self.inner_ridge = inner_ridge
        self.normalize_columns = normalize_columns
        self.ridge_lambda = ridge_lambda
        self.cg_tol = cg_tol
        self.cg_max_iter = cg_max_iter
        self.normalize = normalize
        self.center = center

    def _grid(self) -> Grid2D | None:
        if self.grid is None:
            return None
        if isinstance(self.grid, Grid2D):
            return self.grid
        nx, ny = self.grid
        return Grid2D(int(nx), int(ny))

    def fit(self, X, y):
        terms = resolve_library(self.library)
        task = terms[0].task
        inputs, grid = _coerce_fields(X, self._grid())
        y = as_float_array(y, "y")
        if task is TaskKind.IMAGE_TO_SCALAR:
            outputs = y.reshape(inputs.shape[0], 1)
        elif task is TaskKind.IMAGE_TO_IMAGE and y.ndim == 3:
            outputs = y.reshape(inputs.shape[0], -1)
        else:
            outputs = y.reshape(inputs.shape[0], -1)
        check_finite(outputs, "y")
        dataset = Dataset(task=task, grid=grid, inputs=inputs, outputs=outputs)
        self.model_, self.report_ = fit_dataset(
            dataset,
            terms,
            solver=self.solver,
            threshold=self.threshold,
            max_sweeps=self.max_sweeps,
            inner_ridge=self.inner_ridge,
            normalize_columns=self.normalize_columns,
            ridge_lambda=self.ridge_lambda,
            cg_tol=self.cg_tol,
            cg_max_iter=self.cg_max_iter,
            normalize=self.normalize,
            center=self.center,
            library_name=self.library if isinstance(self.library, str) else "custom",
        )
        self.task_ = task
        self.grid_ = grid
        self.n_features_in_ = grid.size
        return self

    def predict(self, X, out_shape=None):
        if not hasattr(self, "model_"):
            raise DataFormatError("estimator is not fitted; call fit first")
        inputs, grid = _coerce_fields(X, self.grid_)
        raw = predict_batch(self.model_, inputs, grid, out_shape)
        if self.task_ is TaskKind.IMAGE_TO_SCALAR:
            return raw[:, 0]
        return raw

    @property
    def equation_(self) -> str:
        if not hasattr(self, "model_"):
            raise DataFormatError("estimator is not fitted; call fit first")
        return render_equation(self.model_)
