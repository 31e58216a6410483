"""Evaluate a term library on a dataset to form the linear system U = F W.

Row ordering contract (written into exported models): rows are sample-major;
within a sample, output collocation points run row-major (y-major, x-minor)
for image tasks and in ascending x for line tasks. Assembly is deterministic
and bit-identical across runs; each column is evaluated independently.

The dense matrix costs rows * cols * 8 bytes; jobs above the configurable
cap (8 GiB by default) are refused up front with a clear error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ResourceCapError, TaskMismatchError
from .fields import Dataset, TaskKind, quadrature_weights
from .library import TermSpec, eval_term_columns, out_points

ROW_ORDER_CONTRACT = (
    "sample-major; image collocation row-major (y-major, x-minor); "
    "line collocation ascending x"
)

DEFAULT_MEMORY_CAP = 8 * 2**30  # bytes


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray  # (rows, P)
    task: TaskKind
    row_order: str = ROW_ORDER_CONTRACT

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TargetVector:
    values: np.ndarray  # (rows,)


@dataclass(frozen=True)
class ColumnScaling:
    scales: np.ndarray  # (P,) column l2 norms; 1.0 recorded for zero columns
    zero_columns: list[int] = field(default_factory=list)


def assemble(dataset: Dataset, library: list[TermSpec], *,
             memory_cap_bytes: int = DEFAULT_MEMORY_CAP
             ) -> tuple[DesignMatrix, TargetVector]:
    if not library:
        raise TaskMismatchError("empty term library")
    task = library[0].task
    if any(t.task is not task for t in library):
        raise TaskMismatchError("library mixes tasks")
    if dataset.task is not task:
        raise TaskMismatchError(
            f"dataset task {dataset.task.value} != library task {task.value}"
        )
    if task is TaskKind.IMAGE_TO_LINE:
        xy = out_points(task, out_n=dataset.out_n)
    else:
        xy = out_points(task, grid=dataset.grid)
    n_colloc = xy.shape[0]
    rows = dataset.q * n_colloc
    cols = len(library)
    need = rows * cols * 8
    if need > memory_cap_bytes:
        raise ResourceCapError(
            f"design matrix needs {need} bytes "
            f"({rows} rows x {cols} cols x 8), cap is {memory_cap_bytes}; "
            "raise the cap or shrink the job"
        )
    weights = quadrature_weights(dataset.grid)
    F = np.empty((rows, cols))
    for j, term in enumerate(library):
        cols_j = eval_term_columns(term, dataset.inputs, dataset.grid, weights, xy)
        bad = ~np.isfinite(cols_j)
        if bad.any():
            point, sample = np.argwhere(bad)[0]
            raise NumericalError(
                f"non-finite feature: term {term.identity} on sample {sample} "
                f"(collocation point {point})"
            )
        # (N', Q) -> sample-major rows
        F[:, j] = cols_j.T.reshape(rows)
    U = dataset.outputs.reshape(rows)
    return DesignMatrix(values=F, task=task), TargetVector(values=U)


def column_normalize(F: DesignMatrix) -> tuple[DesignMatrix, ColumnScaling]:
    """Scale each column to unit l2 norm. Zero columns are left untouched,
    recorded with scale 1, and reported for exclusion from the solve."""
    scales = np.linalg.norm(F.values, axis=0)
    zero = np.flatnonzero(scales == 0.0)
    safe = scales.copy()
    safe[zero] = 1.0
    scaled = F.values / safe
    return (
        DesignMatrix(values=scaled, task=F.task, row_order=F.row_order),
        ColumnScaling(scales=safe, zero_columns=list(map(int, zero))),
    )
