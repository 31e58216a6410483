import numpy as np
import pytest

import flm
from flm.assembly import assemble, column_normalize
from flm.errors import NumericalError, ResourceCapError, TaskMismatchError
from flm.library import KernelFamily, Lifting, OuterNonlinearity

SCALAR = flm.TaskKind.IMAGE_TO_SCALAR
IMAGE = flm.TaskKind.IMAGE_TO_IMAGE


def _scalar_dataset(q, grid, seed=0, positive=False):
    rng = np.random.default_rng(seed)
    lo = 0.0 if positive else -2.0
    return flm.Dataset(
        task=SCALAR,
        grid=grid,
        inputs=rng.uniform(lo, 2.0, size=(q, grid.size)),
        outputs=rng.uniform(-1.0, 1.0, size=(q, 1)),
    )


def test_case1_shape_and_bias_column():
    g = flm.Grid2D(14, 14)
    ds = _scalar_dataset(1, g, positive=True)
    terms = flm.build_library(flm.PRESETS["case1-mnist"])
    F, U = assemble(ds, terms)
    assert F.values.shape == (1, 58)
    assert U.values.shape == (1,)
    assert np.all(F.values[:, -1] == 1.0)  # bias declared last


def test_image_dimension_arithmetic():
    g = flm.Grid2D(14, 14)
    rng = np.random.default_rng(1)
    ds = flm.Dataset(
        task=IMAGE,
        grid=g,
        inputs=rng.uniform(0, 1, size=(3, g.size)),
        outputs=rng.uniform(0, 1, size=(3, g.size)),
    )
    spec = flm.LibrarySpec(IMAGE, 0.3, 1.0, 2, families=(0, 1), indicator="local")
    terms = flm.build_library(spec)  # domain avg + 2 gaussians + bias = 5...
    assert len(terms) == 4
    terms = flm.build_library(
        flm.LibrarySpec(IMAGE, 0.3, 1.0, 2, families=(0, 1, 2))
    )
    assert len(terms) == 6
    F, _ = assemble(ds, terms[:5])
    assert F.values.shape == (3 * 196, 5)


def test_zero_field_columns():
    g = flm.Grid2D(8, 8)
    ds = flm.Dataset(
        task=SCALAR,
        grid=g,
        inputs=np.zeros((2, g.size)),
        outputs=np.ones((2, 1)),
    )
    terms = flm.build_library(flm.PRESETS["case1-mnist"])
    F, _ = assemble(ds, terms)
    for j, t in enumerate(terms):
        col = F.values[:, j]
        if t.is_bias:
            assert np.all(col == 1.0)
        elif t.lifting in (Lifting.IDENTITY, Lifting.ZETA, Lifting.ETA,
                           Lifting.ZETA2, Lifting.ETA2, Lifting.ZETA_ETA,
                           Lifting.SQUARE):
            assert np.all(col == 0.0), t
        elif t.lifting is Lifting.EXP_NEG_OVER_BETA:
            assert np.all(col > 0.0)  # exp(0) integrates to 1


def test_assemble_deterministic():
    g = flm.Grid2D(10, 10)
    ds = _scalar_dataset(5, g, seed=9, positive=True)
    terms = flm.build_library(flm.PRESETS["case1-mnist"])
    F1, U1 = assemble(ds, terms)
    F2, U2 = assemble(ds, terms)
    assert F1.values.tobytes() == F2.values.tobytes()
    assert U1.values.tobytes() == U2.values.tobytes()


def test_fw_matches_model_prediction():
    """Row-ordering consistency: F @ W equals the model module's prediction
    on the same dataset."""
    g = flm.Grid2D(9, 9)
    rng = np.random.default_rng(4)
    ds = flm.Dataset(
        task=IMAGE,
        grid=g,
        inputs=rng.uniform(0, 1, size=(4, g.size)),
        outputs=rng.uniform(0, 1, size=(4, g.size)),
    )
    terms = flm.build_library(flm.LibrarySpec(IMAGE, 0.3, 1.2, 3))
    F, _ = assemble(ds, terms)
    w = rng.normal(size=len(terms))
    w[w == 0] = 1.0
    model = flm.from_solution(terms, w, g)
    preds = flm.predict_dataset(model, ds)  # (Q, N')
    lhs = (F.values @ w).reshape(4, -1)
    assert np.max(np.abs(lhs - preds)) < 1e-12


def test_task_mismatch():
    g = flm.Grid2D(8, 8)
    ds = _scalar_dataset(2, g)
    terms = flm.build_library(flm.LibrarySpec(IMAGE, 0.3, 1.0, 2))
    with pytest.raises(TaskMismatchError):
        assemble(ds, terms)


def test_memory_cap_refusal():
    g = flm.Grid2D(14, 14)
    ds = _scalar_dataset(10, g)
    terms = flm.build_library(flm.PRESETS["case1-mnist"])
    with pytest.raises(ResourceCapError, match="cap"):
        assemble(ds, terms, memory_cap_bytes=100)


def test_nonfinite_feature_identifies_term_and_sample():
    g = flm.Grid2D(8, 8)
    inputs = np.zeros((3, g.size))
    inputs[2, :] = 900.0  # exp lifting overflows on sample 2
    ds = flm.Dataset(task=SCALAR, grid=g, inputs=inputs, outputs=np.ones((3, 1)))
    term = flm.TermSpec(SCALAR, 11, Lifting.EXP_NEG_OVER_BETA, KernelFamily.UNIT,
                        OuterNonlinearity.IDENTITY, beta=1.0)
    bias = flm.TermSpec(SCALAR, 13, Lifting.IDENTITY, KernelFamily.UNIT,
                        OuterNonlinearity.IDENTITY, is_bias=True)
    with pytest.raises(NumericalError, match="sample 2"):
        assemble(ds, [term, bias])


def test_column_normalize():
    F = flm.DesignMatrix(
        values=np.array([[3.0, 1.0, 0.0], [4.0, 1.0, 0.0]]), task=SCALAR
    )
    Fn, scaling = column_normalize(F)
    assert np.allclose(Fn.values[:, 0], [0.6, 0.8])
    assert scaling.scales[0] == pytest.approx(5.0)
    # bias-like column of length m scales by sqrt(m)
    assert scaling.scales[1] == pytest.approx(np.sqrt(2.0))
    # zero column untouched, scale recorded as 1, and reported
    assert scaling.zero_columns == [2]
    assert scaling.scales[2] == 1.0
    assert np.all(Fn.values[:, 2] == 0.0)
