import math

import numpy as np
import pytest

import flm
from flm.errors import DataFormatError, TaskMismatchError
from flm.fields import TaskKind
from flm.library import (
    CONV_FAMILIES,
    INDICATOR_AS_PRINTED,
    KernelFamily,
    Lifting,
    OuterNonlinearity,
    eval_term_columns,
    out_points,
)

SCALAR = TaskKind.IMAGE_TO_SCALAR
LINE = TaskKind.IMAGE_TO_LINE
IMAGE = TaskKind.IMAGE_TO_IMAGE

# closed forms used as independent oracles
GAUSS_BETA1 = (0.5 * math.sqrt(math.pi) * math.erf(1.0)) ** 2  # 0.55774...
SEPX_HALF_BETA1 = math.exp(0.5) * (1.0 - math.exp(-1.0))  # 1.04219...
ETA_EXP_BETA1 = 1.0 - math.exp(-1.0)  # 0.63212...


def smooth_f(z, e):
    return 1.0 + 0.4 * np.sin(2 * np.pi * z) * np.cos(np.pi * e) + 0.3 * e


def sampled_field(fn, n):
    g = flm.Grid2D(n, n)
    zeta, eta = g.node_coords()
    return flm.Field2D(g, fn(zeta, eta))


def oracle_integral(integrand, n=512):
    """Independent continuum quadrature: meshgrid + mean, not the library's
    tile/repeat + dot path."""
    c = (np.arange(n) + 0.5) / n
    Z, E = np.meshgrid(c, c)
    return float(np.mean(integrand(Z, E)))


# ---------------------------------------------------------------------------
# Cardinality and grids


PAPER_PRESET_SIZES = {
    "case1-mnist": 58,
    "case2-porous-scalar": 128,
    "case3-porous-image": 2162,
    "case4-superres": 128,
    "case5-wss-line": 2162,
    "case6-local": 362,
}


def test_preset_term_counts():
    for name, expected in PAPER_PRESET_SIZES.items():
        terms = flm.build_library(flm.PRESETS[name])
        assert len(terms) == expected, name
        # exactly one bias term, declared last
        assert terms[-1].is_bias
        assert sum(t.is_bias for t in terms) == 1


def test_term_identities_unique_per_preset():
    for name in PAPER_PRESET_SIZES:
        terms = flm.build_library(flm.PRESETS[name])
        ids = {t.identity for t in terms}
        assert len(ids) == len(terms), name


def test_bandwidth_grid_examples():
    g = flm.bandwidth_grid(0.1, 10.0, 10)
    assert len(g) == 10
    assert g[0] == pytest.approx(0.1)
    assert g[-1] == pytest.approx(10.0)
    assert np.allclose(np.diff(g), 1.1)

    g2 = flm.bandwidth_grid(0.2, 0.4, 7)
    assert np.allclose(np.diff(g2), 0.2 / 6)

    assert flm.bandwidth_grid(1.0, 2.0, 1) == pytest.approx([1.5])

    with pytest.raises(DataFormatError):
        flm.bandwidth_grid(2.0, 1.0, 4)


def test_plugin_bandwidth():
    assert flm.plugin_bandwidth(28) == pytest.approx(28.0**-0.3)
    assert abs(flm.plugin_bandwidth(28) - 0.37) < 0.01
    assert flm.plugin_bandwidth(1024) == pytest.approx(1024.0**-0.3)
    assert flm.plugin_bandwidth(1024) == pytest.approx(0.125, abs=1e-3)
    with pytest.raises(DataFormatError):
        flm.plugin_bandwidth(1)


def test_beta_requirements_enforced():
    with pytest.raises(DataFormatError):
        flm.TermSpec(SCALAR, 7, Lifting.IDENTITY, KernelFamily.GAUSSIAN,
                     OuterNonlinearity.IDENTITY)  # missing beta
    with pytest.raises(DataFormatError):
        flm.TermSpec(SCALAR, 0, Lifting.IDENTITY, KernelFamily.UNIT,
                     OuterNonlinearity.IDENTITY, beta=1.0)  # spurious beta
    with pytest.raises(DataFormatError):
        flm.TermSpec(SCALAR, 11, Lifting.EXP_NEG_OVER_BETA, KernelFamily.UNIT,
                     OuterNonlinearity.IDENTITY)  # lifting needs beta


# ---------------------------------------------------------------------------
# Scalar-task golden values


def _scalar_term(family, lifting, kernel, outer, beta=None):
    return flm.TermSpec(SCALAR, family, lifting, kernel, outer, beta=beta)


def test_eval_scalar_coordinate_lifting():
    g = flm.Grid2D(28, 28)
    w = flm.quadrature_weights(g)
    ones = flm.Field2D(g, np.ones(g.size))
    t = _scalar_term(1, Lifting.ZETA, KernelFamily.UNIT, OuterNonlinearity.IDENTITY)
    assert flm.eval_term_scalar(t, ones, w) == pytest.approx(0.5, abs=1e-14)


def test_eval_scalar_square_lifting():
    g = flm.Grid2D(14, 14)
    w = flm.quadrature_weights(g)
    two = flm.Field2D(g, np.full(g.size, 2.0))
    t = _scalar_term(6, Lifting.SQUARE, KernelFamily.UNIT, OuterNonlinearity.IDENTITY)
    assert flm.eval_term_scalar(t, two, w) == pytest.approx(4.0, abs=1e-13)


def test_eval_scalar_gaussian_against_closed_form():
    g = flm.Grid2D(28, 28)
    w = flm.quadrature_weights(g)
    ones = flm.Field2D(g, np.ones(g.size))
    t = _scalar_term(7, Lifting.IDENTITY, KernelFamily.GAUSSIAN,
                     OuterNonlinearity.IDENTITY, beta=1.0)
    assert abs(flm.eval_term_scalar(t, ones, w) - GAUSS_BETA1) < 1e-3


def test_eval_scalar_bias():
    g = flm.Grid2D(4, 4)
    w = flm.quadrature_weights(g)
    f = flm.Field2D(g, np.arange(16.0))
    bias = flm.TermSpec(SCALAR, 13, Lifting.IDENTITY, KernelFamily.UNIT,
                        OuterNonlinearity.IDENTITY, is_bias=True)
    assert flm.eval_term_scalar(bias, f, w) == 1.0


def test_eval_scalar_task_guard():
    g = flm.Grid2D(4, 4)
    w = flm.quadrature_weights(g)
    f = flm.Field2D(g, np.ones(16))
    t = flm.TermSpec(IMAGE, 1, Lifting.IDENTITY, KernelFamily.GAUSSIAN,
                     OuterNonlinearity.IDENTITY, beta=1.0)
    with pytest.raises(TaskMismatchError):
        flm.eval_term_scalar(t, f, w)


# ---------------------------------------------------------------------------
# Image / line golden values


def test_eval_image_domain_average_constant():
    g = flm.Grid2D(14, 14)
    w = flm.quadrature_weights(g)
    c = flm.Field2D(g, np.full(g.size, 2.75))
    t = flm.TermSpec(IMAGE, 0, Lifting.IDENTITY, KernelFamily.DOMAIN_AVERAGE,
                     OuterNonlinearity.IDENTITY)
    for (x, y) in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.9)]:
        assert flm.eval_term_image(t, c, w, x, y) == pytest.approx(2.75, abs=1e-13)


def test_eval_image_gaussian_zero_field():
    g = flm.Grid2D(14, 14)
    w = flm.quadrature_weights(g)
    z = flm.Field2D(g, np.zeros(g.size))
    t = flm.TermSpec(IMAGE, 1, Lifting.IDENTITY, KernelFamily.GAUSSIAN,
                     OuterNonlinearity.IDENTITY, beta=0.7)
    assert flm.eval_term_image(t, z, w, 0.3, 0.6) == 0.0


def test_eval_image_sep_exp_closed_form():
    g = flm.Grid2D(28, 28)
    w = flm.quadrature_weights(g)
    ones = flm.Field2D(g, np.ones(g.size))
    t = flm.TermSpec(IMAGE, 7, Lifting.IDENTITY, KernelFamily.SEP_EXP_X,
                     OuterNonlinearity.IDENTITY, beta=1.0)
    assert abs(flm.eval_term_image(t, ones, w, 0.5, 0.5) - SEPX_HALF_BETA1) < 1e-3


def test_eval_line_golden():
    g = flm.Grid2D(28, 28)
    w = flm.quadrature_weights(g)
    ones = flm.Field2D(g, np.ones(g.size))
    t = flm.TermSpec(LINE, 8, Lifting.IDENTITY, KernelFamily.SEP_EXP_Y,
                     OuterNonlinearity.IDENTITY, beta=1.0)
    # e^{-eta/beta} has no x dependence
    for x in (0.1, 0.5, 0.95):
        assert abs(flm.eval_term_line(t, ones, w, x) - ETA_EXP_BETA1) < 1e-3

    zeros = flm.Field2D(g, np.zeros(g.size))
    t_tanh = flm.TermSpec(LINE, 10, Lifting.IDENTITY, KernelFamily.SEP_EXP_Y,
                          OuterNonlinearity.TANH, beta=1.0)
    assert flm.eval_term_line(t_tanh, zeros, w, 0.5) == 0.0

    da = flm.TermSpec(LINE, 0, Lifting.IDENTITY, KernelFamily.DOMAIN_AVERAGE,
                      OuterNonlinearity.IDENTITY)
    c = flm.Field2D(g, np.full(g.size, 1.25))
    assert flm.eval_term_line(da, c, w, 0.77) == pytest.approx(1.25, abs=1e-13)


def test_out_point_domain_guard():
    g = flm.Grid2D(8, 8)
    w = flm.quadrature_weights(g)
    f = flm.Field2D(g, np.ones(64))
    t = flm.TermSpec(IMAGE, 1, Lifting.IDENTITY, KernelFamily.GAUSSIAN,
                     OuterNonlinearity.IDENTITY, beta=1.0)
    with pytest.raises(DataFormatError):
        flm.eval_term_image(t, f, w, 1.5, 0.5)


# ---------------------------------------------------------------------------
# Brute-force oracle agreement (the continuum integral at 512x512 vs the
# library evaluation on coarse grids)


def _kernel_fn(term, x, y):
    beta = term.beta
    if term.kernel is KernelFamily.GAUSSIAN:
        return lambda z, e: np.exp(-((x - z) ** 2 + (y - e) ** 2) / beta)
    if term.kernel is KernelFamily.EXP_DISTANCE:
        return lambda z, e: np.exp(-np.sqrt((x - z) ** 2 + (y - e) ** 2) / beta)
    if term.kernel is KernelFamily.INDICATOR_DISK:
        return lambda z, e: (
            2.0 * np.sqrt((x - z) ** 2 + (y - e) ** 2) / beta <= 1.0
        ).astype(float)
    if term.kernel is KernelFamily.SEP_EXP_X:
        return lambda z, e: np.exp((x - z) / beta)
    if term.kernel is KernelFamily.SEP_EXP_Y:
        return lambda z, e: np.exp((y - e) / beta)
    raise AssertionError(term.kernel)


@pytest.mark.parametrize(
    "kernel,beta",
    [
        (KernelFamily.GAUSSIAN, 0.2),
        (KernelFamily.GAUSSIAN, 1.0),
        (KernelFamily.EXP_DISTANCE, 0.5),
        (KernelFamily.INDICATOR_DISK, 0.9),
        (KernelFamily.SEP_EXP_X, 0.4),
        (KernelFamily.SEP_EXP_Y, 0.4),
    ],
)
def test_image_kernels_match_bruteforce_oracle(kernel, beta):
    t = flm.TermSpec(IMAGE, 1, Lifting.IDENTITY, kernel,
                     OuterNonlinearity.IDENTITY, beta=beta)
    points = [(0.5, 0.5), (0.25, 0.75)]
    for n, tol in ((28, 2e-2), (56, 5e-3)):
        f = sampled_field(smooth_f, n)
        w = flm.quadrature_weights(f.grid)
        for (x, y) in points:
            kfn = _kernel_fn(t, x, y)
            want = oracle_integral(lambda z, e: kfn(z, e) * smooth_f(z, e))
            got = flm.eval_term_image(t, f, w, x, y)
            assert abs(got - want) < tol, (kernel, beta, n, x, y)


def test_scalar_beta_kernels_match_bruteforce_oracle():
    cases = [
        (7, Lifting.IDENTITY, KernelFamily.GAUSSIAN, 0.5,
         lambda z, e: np.exp(-(z**2 + e**2) / 0.5) * smooth_f(z, e)),
        (8, Lifting.SQUARE, KernelFamily.GAUSSIAN, 1.3,
         lambda z, e: np.exp(-(z**2 + e**2) / 1.3) * smooth_f(z, e) ** 2),
        (9, Lifting.IDENTITY, KernelFamily.SEP_EXP_X, 0.7,
         lambda z, e: np.exp(-z / 0.7) * smooth_f(z, e)),
        (10, Lifting.IDENTITY, KernelFamily.SEP_EXP_Y, 2.0,
         lambda z, e: np.exp(-e / 2.0) * smooth_f(z, e)),
        (11, Lifting.EXP_NEG_OVER_BETA, KernelFamily.UNIT, 1.5,
         lambda z, e: np.exp(-smooth_f(z, e) / 1.5)),
    ]
    for family, lifting, kernel, beta, integrand in cases:
        t = _scalar_term(family, lifting, kernel, OuterNonlinearity.IDENTITY, beta)
        want = oracle_integral(integrand)
        for n, tol in ((28, 2e-2), (56, 5e-3)):
            f = sampled_field(smooth_f, n)
            got = flm.eval_term_scalar(t, f, flm.quadrature_weights(f.grid))
            assert abs(got - want) < tol, (family, n)


def test_line_kernels_match_bruteforce_oracle():
    x = 0.4
    cases = [
        (1, KernelFamily.GAUSSIAN, 0.8,
         lambda z, e: np.exp(-((x - z) ** 2 + e**2) / 0.8) * smooth_f(z, e)),
        (2, KernelFamily.EXP_DISTANCE, 0.6,
         lambda z, e: np.exp(-np.sqrt((x - z) ** 2 + e**2) / 0.6) * smooth_f(z, e)),
        (3, KernelFamily.INDICATOR_DISK, 1.0,
         lambda z, e: (2.0 * np.sqrt((x - z) ** 2 + e**2) <= 1.0) * smooth_f(z, e)),
    ]
    for family, kernel, beta, integrand in cases:
        t = flm.TermSpec(LINE, family, Lifting.IDENTITY, kernel,
                         OuterNonlinearity.IDENTITY, beta=beta)
        want = oracle_integral(integrand)
        for n, tol in ((28, 2e-2), (56, 5e-3)):
            f = sampled_field(smooth_f, n)
            got = flm.eval_term_line(t, f, flm.quadrature_weights(f.grid), x)
            assert abs(got - want) < tol, (family, n)


# ---------------------------------------------------------------------------
# Structural properties


def _is_linear(term):
    return (
        not term.is_bias
        and term.outer is OuterNonlinearity.IDENTITY
        and term.lifting in (Lifting.IDENTITY, Lifting.ZETA, Lifting.ETA,
                             Lifting.ZETA2, Lifting.ETA2, Lifting.ZETA_ETA)
    )


def test_linear_terms_superpose():
    rng = np.random.default_rng(42)
    g = flm.Grid2D(10, 10)
    w = flm.quadrature_weights(g)
    xy = out_points(IMAGE, grid=g)
    f1 = rng.normal(size=(1, g.size))
    f2 = rng.normal(size=(1, g.size))
    a, b = 1.7, -0.6
    combo = a * f1 + b * f2
    spec = flm.LibrarySpec(IMAGE, 0.3, 1.2, 3)
    checked = 0
    for term in flm.build_library(spec):
        if not _is_linear(term):
            continue
        v1 = eval_term_columns(term, f1, g, w, xy)
        v2 = eval_term_columns(term, f2, g, w, xy)
        vc = eval_term_columns(term, combo, g, w, xy)
        assert np.max(np.abs(vc - (a * v1 + b * v2))) < 1e-12
        checked += 1
    assert checked >= 4


def test_gaussian_translation_consistency():
    """Shifting the input one cell right equals sampling the unshifted
    response one cell to the right, away from the boundary. The comparison
    margin is 3*sqrt(beta), the length scale of exp(-d^2/beta) tails."""
    n = 28
    beta = 0.01
    g = flm.Grid2D(n, n)
    w = flm.quadrature_weights(g)
    zeta, eta = g.node_coords()
    f_vals = smooth_f(zeta, eta)
    shifted = np.roll(f_vals.reshape(n, n), 1, axis=1).reshape(-1)
    t = flm.TermSpec(IMAGE, 1, Lifting.IDENTITY, KernelFamily.GAUSSIAN,
                     OuterNonlinearity.IDENTITY, beta=beta)
    f = flm.Field2D(g, f_vals)
    fs = flm.Field2D(g, shifted)
    h = 1.0 / n
    margin = 3.0 * math.sqrt(beta)
    xs = [c for c in g.x_nodes if margin < c < 1 - margin]
    ys = [c for c in g.y_nodes if margin < c < 1 - margin]
    assert xs and ys
    worst = 0.0
    for x in xs[::4]:
        for y in ys[::4]:
            v_shift = flm.eval_term_image(t, fs, w, x, y)
            v_moved = flm.eval_term_image(t, f, w, x - h, y)
            worst = max(worst, abs(v_shift - v_moved))
    assert worst < 1e-4


def test_indicator_modes_complementary():
    g = flm.Grid2D(16, 16)
    w = flm.quadrature_weights(g)
    rng = np.random.default_rng(3)
    f = flm.Field2D(g, rng.uniform(0, 1, g.size))
    full = flm.eval_term_scalar(
        flm.TermSpec(SCALAR, 0, Lifting.IDENTITY, KernelFamily.UNIT,
                     OuterNonlinearity.IDENTITY), f, w)
    local = flm.TermSpec(IMAGE, 3, Lifting.IDENTITY, KernelFamily.INDICATOR_DISK,
                         OuterNonlinearity.IDENTITY, beta=0.8)
    printed = flm.TermSpec(IMAGE, 3, Lifting.IDENTITY, KernelFamily.INDICATOR_DISK,
                           OuterNonlinearity.IDENTITY, beta=0.8,
                           indicator=INDICATOR_AS_PRINTED)
    x, y = 0.5, 0.5
    a = flm.eval_term_image(local, f, w, x, y)
    b = flm.eval_term_image(printed, f, w, x, y)
    assert a + b == pytest.approx(full, abs=1e-12)
    # the local window shrinks with beta
    smaller = flm.TermSpec(IMAGE, 3, Lifting.IDENTITY, KernelFamily.INDICATOR_DISK,
                           OuterNonlinearity.IDENTITY, beta=0.2)
    assert flm.eval_term_image(smaller, f, w, x, y) < a


def test_image_indicator_varies_with_output_point():
    g = flm.Grid2D(16, 16)
    w = flm.quadrature_weights(g)
    zeta, eta = g.node_coords()
    f = flm.Field2D(g, zeta)  # mass increases to the right
    t = flm.TermSpec(IMAGE, 3, Lifting.IDENTITY, KernelFamily.INDICATOR_DISK,
                     OuterNonlinearity.IDENTITY, beta=0.5)
    left = flm.eval_term_image(t, f, w, 0.2, 0.5)
    right = flm.eval_term_image(t, f, w, 0.8, 0.5)
    assert right > left


def test_batch_eval_matches_pointwise():
    rng = np.random.default_rng(11)
    g = flm.Grid2D(9, 7)
    w = flm.quadrature_weights(g)
    inputs = rng.normal(size=(3, g.size))
    xy = out_points(IMAGE, grid=g)
    spec = flm.LibrarySpec(IMAGE, 0.25, 1.1, 2)
    for term in flm.build_library(spec)[::5]:
        cols = eval_term_columns(term, inputs, g, w, xy)
        for qi in (0, 2):
            f = flm.Field2D(g, inputs[qi])
            for pt in (0, 13, xy.shape[0] - 1):
                x, y = xy[pt]
                v = flm.eval_term_image(term, f, w, x, y)
                assert v == pytest.approx(cols[pt, qi], rel=1e-12, abs=1e-14)


# ---------------------------------------------------------------------------
# Rendering


def test_render_bias_and_coord_terms():
    bias = flm.TermSpec(SCALAR, 13, Lifting.IDENTITY, KernelFamily.UNIT,
                        OuterNonlinearity.IDENTITY, is_bias=True)
    assert flm.render_term(bias) == "1"
    zeta_term = flm.TermSpec(SCALAR, 1, Lifting.ZETA, KernelFamily.UNIT,
                             OuterNonlinearity.IDENTITY)
    assert flm.render_term(zeta_term) == "∬ ζ f(ζ,η) dζdη"


def test_rendered_strings_unique_within_presets():
    for name in PAPER_PRESET_SIZES:
        terms = flm.build_library(flm.PRESETS[name])
        rendered = [flm.render_term(t) for t in terms]
        assert len(set(rendered)) == len(rendered), name


def test_render_includes_beta_value():
    t = flm.TermSpec(IMAGE, 1, Lifting.IDENTITY, KernelFamily.GAUSSIAN,
                     OuterNonlinearity.IDENTITY, beta=0.35)
    s = flm.render_term(t)
    assert "0.35" in s and "(x-ζ)" in s and "(y-η)" in s
