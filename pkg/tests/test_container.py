import struct

import numpy as np
import pytest

import flm
from flm.container import (
    manifest_path,
    read_fields,
    read_manifest,
    read_matrix,
    write_fields,
    write_matrix,
)
from flm.errors import DataFormatError


def _dataset(task, grid, q, out_n, seed=0, norm=None):
    rng = np.random.default_rng(seed)
    return flm.Dataset(
        task=task,
        grid=grid,
        inputs=rng.uniform(-3, 3, size=(q, grid.size)),
        outputs=rng.uniform(-1, 5, size=(q, out_n)),
        norm=norm,
    )


def test_round_trip_bit_exact(tmp_path):
    g = flm.Grid2D(7, 5)
    ds = _dataset(flm.TaskKind.IMAGE_TO_SCALAR, g, 3, 1, seed=11)
    path = tmp_path / "scalar.flm"
    write_fields(path, ds)
    back = read_fields(path)
    assert back.task is ds.task
    assert back.grid == ds.grid
    assert back.inputs.tobytes() == ds.inputs.tobytes()
    assert back.outputs.tobytes() == ds.outputs.tobytes()


@pytest.mark.parametrize(
    "task,out_n",
    [
        (flm.TaskKind.IMAGE_TO_SCALAR, 1),
        (flm.TaskKind.IMAGE_TO_LINE, 9),
        (flm.TaskKind.IMAGE_TO_IMAGE, 12),
    ],
)
def test_round_trip_all_tasks(tmp_path, task, out_n):
    g = flm.Grid2D(4, 3)
    ds = _dataset(task, g, 4, out_n, seed=3)
    path = tmp_path / "d.flm"
    write_fields(path, ds)
    back = read_fields(path)
    assert back.out_n == out_n
    assert np.array_equal(back.inputs, ds.inputs)
    assert np.array_equal(back.outputs, ds.outputs)


def test_bad_magic(tmp_path):
    g = flm.Grid2D(2, 2)
    ds = _dataset(flm.TaskKind.IMAGE_TO_SCALAR, g, 1, 1)
    path = tmp_path / "d.flm"
    write_fields(path, ds)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"XXXX"
    path.write_bytes(bytes(blob))
    with pytest.raises(DataFormatError, match="magic"):
        read_fields(path)


def test_version_mismatch(tmp_path):
    g = flm.Grid2D(2, 2)
    ds = _dataset(flm.TaskKind.IMAGE_TO_SCALAR, g, 1, 1)
    path = tmp_path / "d.flm"
    write_fields(path, ds)
    blob = bytearray(path.read_bytes())
    blob[4:8] = struct.pack("<I", 9)
    path.write_bytes(bytes(blob))
    with pytest.raises(DataFormatError, match="version"):
        read_fields(path)


def test_truncated_payload(tmp_path):
    g = flm.Grid2D(3, 3)
    ds = _dataset(flm.TaskKind.IMAGE_TO_SCALAR, g, 4, 1)
    path = tmp_path / "d.flm"
    write_fields(path, ds)
    blob = bytearray(path.read_bytes())
    # declare Q=5 while the payload holds 4 records
    blob[12:16] = struct.pack("<I", 5)
    path.write_bytes(bytes(blob))
    with pytest.raises(DataFormatError, match="payload"):
        read_fields(path)


def test_nonfinite_payload_rejected(tmp_path):
    g = flm.Grid2D(2, 2)
    ds = _dataset(flm.TaskKind.IMAGE_TO_SCALAR, g, 1, 1)
    path = tmp_path / "d.flm"
    write_fields(path, ds)
    blob = bytearray(path.read_bytes())
    blob[28:36] = struct.pack("<d", float("nan"))
    path.write_bytes(bytes(blob))
    with pytest.raises(DataFormatError, match="non-finite"):
        read_fields(path)


def test_manifest_round_trip(tmp_path):
    g = flm.Grid2D(3, 3)
    norm = flm.NormStats(0.0, 2.0, -1.0, 4.0)
    rng = np.random.default_rng(5)
    ds = flm.Dataset(
        task=flm.TaskKind.IMAGE_TO_SCALAR,
        grid=g,
        inputs=rng.uniform(0, 2, (2, 9)),
        outputs=rng.uniform(-1, 4, (2, 1)),
        norm=norm,
    )
    path = tmp_path / "d.flm"
    write_fields(path, ds, manifest={"seed": 5, "family": "unit-test"})
    assert manifest_path(path).exists()
    doc = read_manifest(path)
    assert doc["seed"] == 5
    back = read_fields(path)
    assert back.norm == norm


def test_matrix_dump_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    m = rng.normal(size=(6, 4))
    path = tmp_path / "f.mat"
    write_matrix(path, m)
    back = read_matrix(path)
    assert back.tobytes() == m.tobytes()
    with pytest.raises(DataFormatError, match="matrix"):
        g = flm.Grid2D(2, 2)
        ds = _dataset(flm.TaskKind.IMAGE_TO_SCALAR, g, 1, 1)
        p2 = tmp_path / "d.flm"
        write_fields(p2, ds)
        read_matrix(p2)
