"""The fitted interpretable surrogate: a sparse coefficient vector bound to
its term library and normalization statistics.

Prediction applies the stored input normalization, evaluates the coefficient-
weighted term sum at every requested output point, and inverts the output
normalization. Terms are analytic in the output coordinates, so an image or
line model may be evaluated at any output resolution; input quadrature runs
on whatever grid the field arrives on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._validation import as_float_array, check_finite
from .errors import DataFormatError, NumericalError, TaskMismatchError
from .fields import (
    Dataset,
    Field1D,
    Field2D,
    Grid2D,
    NormStats,
    TaskKind,
    quadrature_weights,
)
from .library import (
    INDICATOR_LOCAL,
    TermSpec,
    eval_term_columns,
    out_points,
    render_term,
    term_from_json,
    term_to_json,
)

MODEL_SCHEMA_VERSION = 1

PROVENANCE_DATA = "data-driven"
PROVENANCE_NN = "nn-driven"
_PROVENANCES = (PROVENANCE_DATA, PROVENANCE_NN)


def _canonical_order(pairs):
    """|coefficient| descending; the unique (family_index, beta) identity
    breaks ties deterministically."""
    return sorted(
        pairs,
        key=lambda tc: (-abs(tc[1]), tc[0].family_index, tc[0].beta or 0.0),
    )


@dataclass(frozen=True)
class FunctionalLinearModel:
    task: TaskKind
    terms: tuple[tuple[TermSpec, float], ...]
    grid: Grid2D  # grid shape used in training
    norm: NormStats | None = None
    provenance: str = PROVENANCE_DATA
    fit_meta: dict | None = None

    def __post_init__(self):
        if self.provenance not in _PROVENANCES:
            raise DataFormatError(f"unknown provenance {self.provenance!r}")
        terms = tuple(self.terms)
        if not terms:
            raise DataFormatError("a model needs at least one term")
        seen = set()
        bias_count = 0
        for term, coeff in terms:
            if term.task is not self.task:
                raise TaskMismatchError(
                    f"term {term.identity} does not match model task "
                    f"{self.task.value}"
                )
            if coeff == 0.0 or not np.isfinite(coeff):
                raise DataFormatError(
                    f"term {term.identity} carries invalid coefficient {coeff}"
                )
            if term.identity in seen:
                raise DataFormatError(f"duplicate term {term.identity}")
            seen.add(term.identity)
            bias_count += term.is_bias
        if bias_count > 1:
            raise DataFormatError("a model may carry at most one bias term")
        # canonical order = export order (|coefficient| descending), so the
        # prediction summation order survives export/import bit-exactly
        object.__setattr__(self, "terms", tuple(_canonical_order(terms)))

    @property
    def indicator(self) -> str:
        modes = {t.indicator for t, _ in self.terms}
        if len(modes) > 1:
            raise DataFormatError("model mixes indicator modes")
        return modes.pop()


def from_solution(library: list[TermSpec], coefficients: np.ndarray,
                  grid: Grid2D, *, norm: NormStats | None = None,
                  provenance: str = PROVENANCE_DATA,
                  fit_meta: dict | None = None) -> FunctionalLinearModel:
    """Bind a solver coefficient vector to its library, keeping only the
    nonzero terms."""
    coeffs = as_float_array(coefficients, "coefficients", ndim=1)
    if coeffs.shape[0] != len(library):
        raise DataFormatError(
            f"{coeffs.shape[0]} coefficients for {len(library)} terms"
        )
    pairs = tuple(
        (term, float(c)) for term, c in zip(library, coeffs) if c != 0.0
    )
    if not pairs:
        raise DataFormatError("solver returned the zero model; nothing to bind")
    task = library[0].task
    return FunctionalLinearModel(
        task=task, terms=pairs, grid=grid, norm=norm,
        provenance=provenance, fit_meta=dict(fit_meta or {}),
    )


def _resolve_out(model: FunctionalLinearModel, grid: Grid2D,
                 out_shape) -> tuple[np.ndarray, tuple]:
    """Output points plus a shape descriptor for wrapping results."""
    task = model.task
    if task is TaskKind.IMAGE_TO_SCALAR:
        return out_points(task), ()
    if task is TaskKind.IMAGE_TO_LINE:
        if out_shape is None:
            meta = model.fit_meta or {}
            out_shape = int(meta.get("out_n") or grid.nx)
        n = int(out_shape)
        return out_points(task, out_n=n), (n,)
    if out_shape is None:
        onx, ony = grid.nx, grid.ny
    else:
        onx, ony = int(out_shape[0]), int(out_shape[1])
    return out_points(task, out_shape=(onx, ony)), (onx, ony)


def predict_batch(model: FunctionalLinearModel, inputs: np.ndarray,
                  grid: Grid2D, out_shape=None) -> np.ndarray:
    """Predict raw outputs for a batch of raw input fields: (Q, N')."""
    inputs = as_float_array(inputs, "inputs", ndim=2)
    if inputs.shape[1] != grid.size:
        raise DataFormatError(
            f"inputs have {inputs.shape[1]} values, grid needs {grid.size}"
        )
    check_finite(inputs, "inputs")
    xy, _ = _resolve_out(model, grid, out_shape)
    if model.norm is not None:
        inputs = model.norm.normalize_input(inputs)
    weights = quadrature_weights(grid)
    acc = np.zeros((xy.shape[0], inputs.shape[0]))
    for term, coeff in model.terms:
        acc += coeff * eval_term_columns(term, inputs, grid, weights, xy)
    if not np.all(np.isfinite(acc)):
        raise NumericalError("prediction produced non-finite values")
    out = acc.T
    if model.norm is not None:
        out = model.norm.denormalize_output(out)
    return out


def predict(model: FunctionalLinearModel, f: Field2D, out_shape=None):
    """Predict for one field; returns a scalar, Field1D, or Field2D."""
    raw = predict_batch(model, f.values[None, :], f.grid, out_shape)[0]
    _, shape = _resolve_out(model, f.grid, out_shape)
    if model.task is TaskKind.IMAGE_TO_SCALAR:
        return float(raw[0])
    if model.task is TaskKind.IMAGE_TO_LINE:
        return Field1D(shape[0], raw)
    onx, ony = shape
    return Field2D(Grid2D(onx, ony), raw)


def predict_dataset(model: FunctionalLinearModel, dataset: Dataset,
                    out_shape=None) -> np.ndarray:
    """Predict raw outputs for every input of a dataset. The dataset must
    hold raw (unnormalized) inputs; the model applies its own statistics."""
    if dataset.task is not model.task:
        raise TaskMismatchError(
            f"dataset task {dataset.task.value} != model task {model.task.value}"
        )
    return predict_batch(model, dataset.inputs, dataset.grid, out_shape)


def prune(model: FunctionalLinearModel, tol: float) -> FunctionalLinearModel:
    """Drop terms with |coefficient| < tol; the bias term is exempt."""
    if not (tol > 0):
        raise DataFormatError("prune tolerance must be positive")
    kept = tuple(
        (t, c) for t, c in model.terms if t.is_bias or abs(c) >= tol
    )
    if not kept:
        raise DataFormatError("pruning removed every term")
    return replace(model, terms=kept)


def _sorted_terms(model: FunctionalLinearModel):
    return _canonical_order(model.terms)


def render_equation(model: FunctionalLinearModel) -> str:
    parts = []
    for term, coeff in _sorted_terms(model):
        mag = format(abs(coeff), "#.6g")
        body = mag if term.is_bias else f"{mag} · {render_term(term)}"
        if not parts:
            parts.append(body if coeff >= 0 else f"-{body}")
        else:
            parts.append(f"{'+' if coeff >= 0 else '-'} {body}")
    return "u = " + " ".join(parts)


def render_equation_lines(model: FunctionalLinearModel) -> list[str]:
    """One summand per line, for the exported equation text."""
    lines = []
    for i, (term, coeff) in enumerate(_sorted_terms(model)):
        mag = format(abs(coeff), "#.6g")
        body = mag if term.is_bias else f"{mag} · {render_term(term)}"
        if i == 0:
            prefix = "u = " if coeff >= 0 else "u = -"
        else:
            prefix = "  + " if coeff >= 0 else "  - "
        lines.append(prefix + body)
    return lines


def _norm_to_json(norm: NormStats | None) -> dict | None:
    if norm is None:
        return None
    doc = norm.to_json()
    doc.update(
        {
            "input_min_hex": norm.input_min.hex(),
            "input_max_hex": norm.input_max.hex(),
            "output_min_hex": norm.output_min.hex(),
            "output_max_hex": norm.output_max.hex(),
        }
    )
    return doc


def _norm_from_json(obj: dict | None) -> NormStats | None:
    if obj is None:
        return None
    if "input_min_hex" in obj:
        try:
            return NormStats(
                float.fromhex(obj["input_min_hex"]),
                float.fromhex(obj["input_max_hex"]),
                float.fromhex(obj["output_min_hex"]),
                float.fromhex(obj["output_max_hex"]),
            )
        except (KeyError, ValueError) as exc:
            raise DataFormatError(f"invalid normalization block: {exc}") from exc
    return NormStats.from_json(obj)


def model_to_json(model: FunctionalLinearModel) -> dict:
    solver = dict((model.fit_meta or {}))
    solver.setdefault("indicator", model.indicator)
    terms = []
    for term, coeff in _sorted_terms(model):
        rec = term_to_json(term)
        rec["coeff_hex"] = coeff.hex()
        rec["coeff"] = coeff
        rec["rendered"] = render_term(term)
        terms.append(rec)
    return {
        "flm_version": MODEL_SCHEMA_VERSION,
        "task": model.task.value,
        "grid": {"nx": model.grid.nx, "ny": model.grid.ny},
        "normalization": _norm_to_json(model.norm),
        "provenance": model.provenance,
        "solver": solver,
        "terms": terms,
    }


def model_from_json(doc: dict) -> FunctionalLinearModel:
    if not isinstance(doc, dict):
        raise DataFormatError("model document must be a JSON object")
    version = doc.get("flm_version")
    if version != MODEL_SCHEMA_VERSION:
        raise DataFormatError(
            f"unsupported model schema version {version!r}, "
            f"expected {MODEL_SCHEMA_VERSION}"
        )
    try:
        task = TaskKind.from_name(doc["task"])
        grid = Grid2D(int(doc["grid"]["nx"]), int(doc["grid"]["ny"]))
        provenance = doc["provenance"]
        solver = dict(doc.get("solver") or {})
        term_docs = doc["terms"]
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"model document missing field: {exc}") from exc
    indicator = solver.get("indicator", INDICATOR_LOCAL)
    pairs = []
    for rec in term_docs:
        term = term_from_json(rec, task, indicator)
        try:
            coeff = float.fromhex(rec["coeff_hex"])
        except (KeyError, TypeError, ValueError):
            coeff = rec.get("coeff")
            if coeff is None:
                raise DataFormatError("term record lacks a coefficient")
            coeff = float(coeff)
        pairs.append((term, coeff))
    return FunctionalLinearModel(
        task=task,
        terms=tuple(pairs),
        grid=grid,
        norm=_norm_from_json(doc.get("normalization")),
        provenance=provenance,
        fit_meta=solver,
    )


def export_model(model: FunctionalLinearModel, path) -> None:
    Path(path).write_text(
        json.dumps(model_to_json(model), indent=2, sort_keys=True) + "\n"
    )


def import_model(path) -> FunctionalLinearModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid model JSON {path}: {exc}") from exc
    return model_from_json(doc)
