"""Grids, discretized fields, quadrature, and min-max normalization.

Fields live on uniform cell-center grids over the unit square: column i has
x = (i + 0.5)/nx and row j has y = (j + 0.5)/ny. Values are stored row-major
(y-major, x-minor). The quadrature is the 2D midpoint rule with uniform
weights 1/(nx*ny); it is exact for constants and for integrands linear in
x or y, and second-order accurate for smooth integrands.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from ._validation import as_float_array, check_finite, check_positive_int, frozen
from .errors import DataFormatError


class TaskKind(enum.Enum):
    IMAGE_TO_SCALAR = "image_to_scalar"
    IMAGE_TO_LINE = "image_to_line"
    IMAGE_TO_IMAGE = "image_to_image"

    @property
    def code(self) -> int:
        return _TASK_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "TaskKind":
        for task, c in _TASK_CODES.items():
            if c == code:
                return task
        raise DataFormatError(f"unknown task code {code}")

    @classmethod
    def from_name(cls, name: str) -> "TaskKind":
        for task in cls:
            if task.value == name:
                return task
        raise DataFormatError(f"unknown task name {name!r}")


_TASK_CODES = {
    TaskKind.IMAGE_TO_SCALAR: 0,
    TaskKind.IMAGE_TO_LINE: 1,
    TaskKind.IMAGE_TO_IMAGE: 2,
}


def cell_centers(n: int) -> np.ndarray:
    """Cell-center coordinates (i + 0.5)/n on the unit interval."""
    return (np.arange(n, dtype=np.float64) + 0.5) / n


@dataclass(frozen=True)
class Grid2D:
    """Uniform cell-center grid on [0,1] x [0,1]."""

    nx: int
    ny: int

    def __post_init__(self):
        check_positive_int(self.nx, "nx", minimum=2)
        check_positive_int(self.ny, "ny", minimum=2)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def x_nodes(self) -> np.ndarray:
        return cell_centers(self.nx)

    @property
    def y_nodes(self) -> np.ndarray:
        return cell_centers(self.ny)

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """(zeta, eta) coordinates of all nodes in row-major order."""
        zeta = np.tile(self.x_nodes, self.ny)
        eta = np.repeat(self.y_nodes, self.nx)
        return zeta, eta


@dataclass(frozen=True)
class Field2D:
    """A discretized function on a Grid2D, values row-major (y-major)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        vals = as_float_array(self.values, "field values", ndim=1)
        if vals.shape[0] != self.grid.size:
            raise DataFormatError(
                f"field has {vals.shape[0]} values, grid needs {self.grid.size}"
            )
        check_finite(vals, "field values")
        object.__setattr__(self, "values", frozen(vals))

    @classmethod
    def from_matrix(cls, matrix) -> "Field2D":
        m = as_float_array(matrix, "field matrix", ndim=2)
        ny, nx = m.shape
        return cls(Grid2D(nx, ny), m.reshape(-1))

    def as_matrix(self) -> np.ndarray:
        return self.values.reshape(self.grid.ny, self.grid.nx)


@dataclass(frozen=True)
class Field1D:
    """A discretized function on the unit interval, x_i = (i + 0.5)/n."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        check_positive_int(self.n, "n")
        vals = as_float_array(self.values, "line values", ndim=1)
        if vals.shape[0] != self.n:
            raise DataFormatError(f"line has {vals.shape[0]} values, expected {self.n}")
        check_finite(vals, "line values")
        object.__setattr__(self, "values", frozen(vals))

    @property
    def x_nodes(self) -> np.ndarray:
        return cell_centers(self.n)


@dataclass(frozen=True)
class Sample:
    """One training pair: input field and its scalar/line/image output."""

    input: Field2D
    output: object  # float | Field1D | Field2D, per the owning dataset's task


@dataclass(frozen=True)
class NormStats:
    """Min-max statistics fitted on a training split."""

    input_min: float
    input_max: float
    output_min: float
    output_max: float

    def __post_init__(self):
        if not (self.input_max > self.input_min):
            raise DataFormatError("degenerate input statistics: max must exceed min")
        if not (self.output_max > self.output_min):
            raise DataFormatError("degenerate output statistics: max must exceed min")

    def normalize_input(self, values: np.ndarray) -> np.ndarray:
        return (values - self.input_min) / (self.input_max - self.input_min)

    def normalize_output(self, values: np.ndarray) -> np.ndarray:
        return (values - self.output_min) / (self.output_max - self.output_min)

    def denormalize_output(self, values: np.ndarray) -> np.ndarray:
        return values * (self.output_max - self.output_min) + self.output_min

    def to_json(self) -> dict:
        return {
            "input_min": self.input_min,
            "input_max": self.input_max,
            "output_min": self.output_min,
            "output_max": self.output_max,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NormStats":
        try:
            return cls(
                float(obj["input_min"]),
                float(obj["input_max"]),
                float(obj["output_min"]),
                float(obj["output_max"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"invalid normalization block: {exc}") from exc


@dataclass(frozen=True)
class Dataset:
    """Q training pairs sharing one input grid and one output shape.

    inputs:  (q, nx*ny) row-major field values
    outputs: (q, out_n) with out_n = 1 (scalar), n (line), or nx*ny (image)
    """

    task: TaskKind
    grid: Grid2D
    inputs: np.ndarray
    outputs: np.ndarray
    norm: NormStats | None = None

    def __post_init__(self):
        inputs = as_float_array(self.inputs, "inputs", ndim=2)
        outputs = as_float_array(self.outputs, "outputs", ndim=2)
        if inputs.shape[0] < 1:
            raise DataFormatError("dataset needs at least one sample")
        if inputs.shape[0] != outputs.shape[0]:
            raise DataFormatError(
                f"{inputs.shape[0]} inputs but {outputs.shape[0]} outputs"
            )
        if inputs.shape[1] != self.grid.size:
            raise DataFormatError(
                f"inputs have {inputs.shape[1]} values per sample, "
                f"grid needs {self.grid.size}"
            )
        out_n = outputs.shape[1]
        if self.task is TaskKind.IMAGE_TO_SCALAR and out_n != 1:
            raise DataFormatError(f"scalar task needs out_n=1, got {out_n}")
        if self.task is TaskKind.IMAGE_TO_IMAGE and out_n != self.grid.size:
            raise DataFormatError(
                f"image task needs out_n={self.grid.size}, got {out_n}"
            )
        if out_n < 1:
            raise DataFormatError("outputs must have at least one value per sample")
        check_finite(inputs, "inputs")
        check_finite(outputs, "outputs")
        object.__setattr__(self, "inputs", frozen(inputs))
        object.__setattr__(self, "outputs", frozen(outputs))

    @property
    def q(self) -> int:
        return self.inputs.shape[0]

    @property
    def out_n(self) -> int:
        return self.outputs.shape[1]

    @property
    def samples(self) -> list[Sample]:
        out = []
        for i in range(self.q):
            inp = Field2D(self.grid, self.inputs[i])
            if self.task is TaskKind.IMAGE_TO_SCALAR:
                output = float(self.outputs[i, 0])
            elif self.task is TaskKind.IMAGE_TO_LINE:
                output = Field1D(self.out_n, self.outputs[i])
            else:
                output = Field2D(self.grid, self.outputs[i])
            out.append(Sample(input=inp, output=output))
        return out


def quadrature_weights(grid: Grid2D) -> np.ndarray:
    """Uniform midpoint weights; they sum to the unit-square area 1."""
    return np.full(grid.size, 1.0 / grid.size)


def integrate(f: Field2D, weights: np.ndarray) -> float:
    w = as_float_array(weights, "weights", ndim=1)
    if w.shape[0] != f.values.shape[0]:
        raise DataFormatError(
            f"weights length {w.shape[0]} does not match field length "
            f"{f.values.shape[0]}"
        )
    return float(np.dot(f.values, w))


def fit_normalization(dataset: Dataset) -> NormStats:
    """Fit min-max statistics over all values of a training split."""
    return NormStats(
        input_min=float(dataset.inputs.min()),
        input_max=float(dataset.inputs.max()),
        output_min=float(dataset.outputs.min()),
        output_max=float(dataset.outputs.max()),
    )


def apply_normalization(dataset: Dataset, stats: NormStats) -> Dataset:
    """Map values with training statistics. OOD data may leave [0,1]; it is
    deliberately not clamped."""
    return replace(
        dataset,
        inputs=stats.normalize_input(dataset.inputs),
        outputs=stats.normalize_output(dataset.outputs),
        norm=stats,
    )


def invert_normalization(output_values: np.ndarray, stats: NormStats) -> np.ndarray:
    return stats.denormalize_output(as_float_array(output_values, "outputs"))
