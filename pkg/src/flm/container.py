"""Bit-exact binary IO for datasets: the "FLM1" field container format.

Layout (little-endian throughout):
    bytes 0-3   magic "FLM1"
    u32         version = 1
    u32         task code (0 scalar, 1 line, 2 image; 3 = raw matrix dump)
    u32         Q (sample count)            | rows  for matrix dumps
    u32         nx                          | cols  for matrix dumps
    u32         ny
    u32         out_n (1, n, or nx*ny per task)
    Q records, each nx*ny f64 input values (row-major) then out_n f64
    output values.

A JSON sidecar at "<path>.json" optionally stores normalization statistics
and generation parameters; read_fields picks it up automatically.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .fields import Dataset, Grid2D, NormStats, TaskKind

MAGIC = b"FLM1"
VERSION = 1
MATRIX_TASK_CODE = 3

_HEADER = struct.Struct("<4sIIIIII")


def manifest_path(path) -> Path:
    return Path(str(path) + ".json")


def write_fields(path, dataset: Dataset, manifest: dict | None = None) -> None:
    """Write a dataset; the round trip is bit-exact for all values."""
    path = Path(path)
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        dataset.task.code,
        dataset.q,
        dataset.grid.nx,
        dataset.grid.ny,
        dataset.out_n,
    )
    records = np.hstack([dataset.inputs, dataset.outputs]).astype("<f8")
    path.write_bytes(header + records.tobytes())
    if manifest is not None or dataset.norm is not None:
        doc = dict(manifest or {})
        doc.setdefault(
            "normalization", dataset.norm.to_json() if dataset.norm else None
        )
        write_manifest(path, doc)


def write_manifest(path, manifest: dict) -> None:
    manifest_path(path).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def read_manifest(path) -> dict | None:
    mp = manifest_path(path)
    if not mp.exists():
        return None
    try:
        return json.loads(mp.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid manifest {mp}: {exc}") from exc


def read_fields(path) -> Dataset:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise DataFormatError(f"{path}: file shorter than the header")
    magic, version, code, q, nx, ny, out_n = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    task = TaskKind.from_code(code)
    if q < 1:
        raise DataFormatError(f"{path}: declared Q={q} is invalid")
    grid = Grid2D(nx, ny)
    expected = {
        TaskKind.IMAGE_TO_SCALAR: 1,
        TaskKind.IMAGE_TO_IMAGE: grid.size,
    }.get(task)
    if expected is not None and out_n != expected:
        raise DataFormatError(
            f"{path}: out_n={out_n} inconsistent with task {task.value}"
        )
    if task is TaskKind.IMAGE_TO_LINE and out_n < 1:
        raise DataFormatError(f"{path}: out_n must be positive for line tasks")
    record_len = grid.size + out_n
    payload = blob[_HEADER.size :]
    need = q * record_len * 8
    if len(payload) != need:
        raise DataFormatError(
            f"{path}: payload holds {len(payload)} bytes, header declares {need}"
        )
    records = np.frombuffer(payload, dtype="<f8").reshape(q, record_len)
    values = records.astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise DataFormatError(f"{path}: payload contains non-finite values")
    norm = None
    manifest = read_manifest(path)
    if manifest and manifest.get("normalization"):
        norm = NormStats.from_json(manifest["normalization"])
    return Dataset(
        task=task,
        grid=grid,
        inputs=values[:, : grid.size],
        outputs=values[:, grid.size :],
        norm=norm,
    )


def write_matrix(path, matrix: np.ndarray) -> None:
    """Debug dump of a dense matrix in the same container framing."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise DataFormatError("matrix dump needs a 2D array")
    rows, cols = arr.shape
    header = _HEADER.pack(MAGIC, VERSION, MATRIX_TASK_CODE, rows, cols, 0, 0)
    Path(path).write_bytes(header + arr.astype("<f8").tobytes())


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise DataFormatError(f"{path}: file shorter than the header")
    magic, version, code, rows, cols, _, _ = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    if code != MATRIX_TASK_CODE:
        raise DataFormatError(f"{path}: not a matrix dump (task code {code})")
    payload = blob[_HEADER.size :]
    if len(payload) != rows * cols * 8:
        raise DataFormatError(f"{path}: truncated matrix payload")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)
