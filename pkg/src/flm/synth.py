"""Desk-scale dataset generation.

Three ingredients: the permeability families used by the porous-media
problems, a pure-Darcy finite-volume flow oracle (pressure driven left to
right, no-flux top and bottom), and exact-sparse generators whose targets are
term superpositions realizable inside a fitting library.

The flow oracle is a desk-scale analog: it keeps the permeability-to-velocity
structure of the reference problems but drops the diffusion coupling, so it
is not a reproduction of their physics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array, check_positive_int
from .errors import DataFormatError, NumericalError
from .fields import Dataset, Field2D, Grid2D, TaskKind, quadrature_weights
from .library import TermSpec, eval_term_columns, out_points

SPLIT_TAGS = ("train", "validation", "ood")

DEFAULT_VISCOSITY = 10.0
# permeability added outside the porous disk so the solve stays elliptic
DEFAULT_BACKGROUND_K = 1.0


# ---------------------------------------------------------------------------
# Permeability families


def gen_permeability_case2(A: float, Y: float, R: float, grid: Grid2D) -> Field2D:
    """Exponential-in-x permeability switched on inside a disk of radius R
    centered at (0.5, Y); zero outside."""
    if not (R > 0):
        raise DataFormatError("disk radius must be positive")
    zeta, eta = grid.node_coords()
    inside = np.sqrt((zeta - 0.5) ** 2 + (eta - Y) ** 2) <= R
    values = np.where(inside, 0.1 * np.exp(A * zeta) + 1.0, 0.0)
    return Field2D(grid, values)


def gen_permeability_case3(A: float, B: float, grid: Grid2D) -> Field2D:
    """Striped permeability exp(-4Ax)|sin(2 pi x) cos(2 pi B y)| + 1."""
    zeta, eta = grid.node_coords()
    values = (
        np.exp(-4.0 * A * zeta)
        * np.abs(np.sin(2.0 * np.pi * zeta) * np.cos(2.0 * np.pi * B * eta))
        + 1.0
    )
    return Field2D(grid, values)


# ---------------------------------------------------------------------------
# Darcy finite-volume oracle


@dataclass(frozen=True)
class DarcyProblem:
    """Pressure-driven Darcy flow: p=1 at x=0, p=0 at x=1, no-flux walls."""

    k: Field2D
    mu: float = DEFAULT_VISCOSITY

    def __post_init__(self):
        if not (self.mu > 0):
            raise DataFormatError("viscosity must be positive")
        if np.any(self.k.values <= 0):
            raise DataFormatError("permeability must be positive everywhere")
        if self.k.grid.nx < 8 or self.k.grid.ny < 8:
            raise DataFormatError("darcy oracle needs a grid of at least 8x8")


@dataclass(frozen=True)
class DarcySolution:
    p: Field2D
    speed: Field2D
    vmax: float
    residual: float
    iterations: int


def _harmonic(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 2.0 * a * b / (a + b)


def darcy_solve(problem: DarcyProblem, *, tol: float = 1e-12,
                max_iter: int | None = None) -> DarcySolution:
    """Five-point finite volumes with harmonic-mean face transmissibilities;
    the SPD system is solved by Jacobi-preconditioned conjugate gradients."""
    grid = problem.k.grid
    nx, ny = grid.nx, grid.ny
    hx, hy = 1.0 / nx, 1.0 / ny
    m = (problem.k.values / problem.mu).reshape(ny, nx)

    tx = _harmonic(m[:, :-1], m[:, 1:]) * (hy / hx)  # (ny, nx-1)
    ty = _harmonic(m[:-1, :], m[1:, :]) * (hx / hy)  # (ny-1, nx)
    tb_left = 2.0 * m[:, 0] * (hy / hx)
    tb_right = 2.0 * m[:, -1] * (hy / hx)

    diag = np.zeros((ny, nx))
    diag[:, 1:] += tx
    diag[:, :-1] += tx
    diag[1:, :] += ty
    diag[:-1, :] += ty
    diag[:, 0] += tb_left
    diag[:, -1] += tb_right

    def apply_op(p: np.ndarray) -> np.ndarray:
        out = diag * p
        out[:, 1:] -= tx * p[:, :-1]
        out[:, :-1] -= tx * p[:, 1:]
        out[1:, :] -= ty * p[:-1, :]
        out[:-1, :] -= ty * p[1:, :]
        return out

    b = np.zeros((ny, nx))
    b[:, 0] = tb_left * 1.0  # inlet pressure 1; outlet contributes 0

    inv_diag = 1.0 / diag
    n_iter_cap = max_iter if max_iter is not None else 40 * max(nx, ny) + 2000
    p = np.zeros((ny, nx))
    r = b - apply_op(p)
    z = inv_diag * r
    d = z.copy()
    rz = float((r * z).sum())
    b_norm = float(np.linalg.norm(b))
    iterations = 0
    res = float(np.linalg.norm(r))
    while res > tol * b_norm and iterations < n_iter_cap:
        iterations += 1
        ad = apply_op(d)
        alpha = rz / float((d * ad).sum())
        p += alpha * d
        r -= alpha * ad
        res = float(np.linalg.norm(r))
        if res <= tol * b_norm:
            break
        z = inv_diag * r
        rz_new = float((r * z).sum())
        d = z + (rz_new / rz) * d
        rz = rz_new
    if res > tol * b_norm:
        raise NumericalError(
            f"darcy CG stalled at relative residual {res / b_norm:.3e} "
            f"after {iterations} iterations"
        )

    px = np.gradient(p, hx, axis=1, edge_order=2)
    py = np.gradient(p, hy, axis=0, edge_order=2)
    speed = m * np.hypot(px, py)
    return DarcySolution(
        p=Field2D(grid, p.reshape(-1)),
        speed=Field2D(grid, speed.reshape(-1)),
        vmax=float(speed.max()),
        residual=float(res / b_norm),
        iterations=iterations,
    )


def boundary_fluxes(problem: DarcyProblem, p: Field2D) -> tuple[float, float]:
    """Discrete flux into the domain at x=0 and out of it at x=1."""
    grid = problem.k.grid
    nx, ny = grid.nx, grid.ny
    hx, hy = 1.0 / nx, 1.0 / ny
    m = (problem.k.values / problem.mu).reshape(ny, nx)
    pm = p.values.reshape(ny, nx)
    tb_left = 2.0 * m[:, 0] * (hy / hx)
    tb_right = 2.0 * m[:, -1] * (hy / hx)
    inflow = float((tb_left * (1.0 - pm[:, 0])).sum())
    outflow = float((tb_right * (pm[:, -1] - 0.0)).sum())
    return inflow, outflow


def cut_flux(problem: DarcyProblem, p: Field2D, i_face: int) -> float:
    """Net flux across the vertical interior face between columns i_face-1
    and i_face."""
    grid = problem.k.grid
    nx, ny = grid.nx, grid.ny
    if not (1 <= i_face <= nx - 1):
        raise DataFormatError(f"face index {i_face} outside 1..{nx - 1}")
    hx, hy = 1.0 / nx, 1.0 / ny
    m = (problem.k.values / problem.mu).reshape(ny, nx)
    pm = p.values.reshape(ny, nx)
    t = _harmonic(m[:, i_face - 1], m[:, i_face]) * (hy / hx)
    return float((t * (pm[:, i_face - 1] - pm[:, i_face])).sum())


# ---------------------------------------------------------------------------
# Parameterized splits


@dataclass(frozen=True)
class ParamSplit:
    """Parameter ranges plus a sample count, seed, and split tag. An OOD
    split must be disjoint from the training ranges in at least one
    parameter; pass the training ranges as disjoint_from to enforce it."""

    ranges: dict
    count: int
    seed: int
    tag: str = "train"
    disjoint_from: dict | None = None

    def __post_init__(self):
        if self.tag not in SPLIT_TAGS:
            raise DataFormatError(f"split tag must be one of {SPLIT_TAGS}")
        check_positive_int(self.count, "count")
        for name, rng in self.ranges.items():
            lo, hi = float(rng[0]), float(rng[1])
            if not (lo <= hi):
                raise DataFormatError(f"range for {name!r} has lo > hi")
        if self.tag == "ood" and self.disjoint_from is not None:
            ensure_ood_disjoint(self.disjoint_from, self.ranges)


def ensure_ood_disjoint(train_ranges: dict, ood_ranges: dict) -> str:
    """Require at least one shared parameter whose OOD interval does not
    overlap the training interval's interior. Returns the parameter name."""
    for name in sorted(ood_ranges):
        if name not in train_ranges:
            continue
        t_lo, t_hi = map(float, train_ranges[name])
        o_lo, o_hi = map(float, ood_ranges[name])
        if o_lo >= t_hi or o_hi <= t_lo:
            return name
    raise DataFormatError(
        "OOD ranges overlap the training ranges in every parameter; "
        "shift at least one"
    )


def _draw_params(split: ParamSplit) -> list[dict]:
    rng = np.random.default_rng(split.seed)
    names = sorted(split.ranges)
    draws = []
    for _ in range(split.count):
        draws.append(
            {n: float(rng.uniform(*map(float, split.ranges[n]))) for n in names}
        )
    return draws


PERMEABILITY_FAMILIES = ("case2", "case3", "constant")

# training / OOD parameter ranges of the porous-media problems
DEFAULT_RANGES = {
    "case2": {
        "train": {"A": (0.0, 2.0), "Y": (-0.1, 0.15), "R": (0.09, 0.16)},
        "ood": {"A": (0.0, 2.0), "Y": (0.2, 0.3), "R": (0.1225, 0.2025)},
    },
    "case3": {
        "train": {"A": (0.0, 1.0), "B": (0.0, 4.0)},
        "ood": {"A": (1.0, 2.0), "B": (4.2, 6.0)},
    },
    "constant": {
        "train": {"c": (0.5, 2.0)},
        "ood": {"c": (2.5, 4.0)},
    },
}


def _permeability(family: str, params: dict, grid: Grid2D) -> Field2D:
    if family == "case2":
        return gen_permeability_case2(params["A"], params["Y"], params["R"], grid)
    if family == "case3":
        return gen_permeability_case3(params["A"], params["B"], grid)
    if family == "constant":
        return Field2D(grid, np.full(grid.size, params["c"]))
    raise DataFormatError(
        f"unknown permeability family {family!r}; known: {PERMEABILITY_FAMILIES}"
    )


def gen_darcy_dataset(split: ParamSplit, task: TaskKind, grid: Grid2D, *,
                      family: str = "case3", mu: float = DEFAULT_VISCOSITY,
                      background_k: float = DEFAULT_BACKGROUND_K,
                      threads: int = 1) -> tuple[Dataset, dict]:
    """Permeability inputs with flow-oracle outputs: the peak speed (scalar
    task), the speed field (image task), or the bottom-row speed profile
    (line task). Returns the dataset and its manifest."""
    draws = _draw_params(split)
    inputs = np.empty((split.count, grid.size))
    residuals = []

    def solve_one(i: int):
        field = _permeability(family, draws[i], grid)
        k_solve = field.values
        if family == "case2":
            # the stored input is the switched-on permeability; the solve
            # needs a strictly positive field, so add unit background
            k_solve = field.values + background_k
        problem = DarcyProblem(k=Field2D(grid, k_solve), mu=mu)
        return field, darcy_solve(problem)

    results = [None] * split.count
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, res in enumerate(pool.map(solve_one, range(split.count))):
                results[i] = res
    else:
        for i in range(split.count):
            results[i] = solve_one(i)

    if task is TaskKind.IMAGE_TO_SCALAR:
        out_n = 1
    elif task is TaskKind.IMAGE_TO_LINE:
        out_n = grid.nx
    else:
        out_n = grid.size
    outputs = np.empty((split.count, out_n))
    for i, (field, sol) in enumerate(results):
        inputs[i] = field.values
        residuals.append(sol.residual)
        if task is TaskKind.IMAGE_TO_SCALAR:
            outputs[i, 0] = sol.vmax
        elif task is TaskKind.IMAGE_TO_LINE:
            outputs[i] = sol.speed.as_matrix()[0, :]  # bottom row of cells
        else:
            outputs[i] = sol.speed.values
    dataset = Dataset(task=task, grid=grid, inputs=inputs, outputs=outputs)
    manifest = {
        "generator": "darcy",
        "family": family,
        "task": task.value,
        "split": split.tag,
        "seed": split.seed,
        "count": split.count,
        "ranges": {k: list(map(float, v)) for k, v in split.ranges.items()},
        "grid": [grid.nx, grid.ny],
        "mu": mu,
        "background_k": background_k if family == "case2" else None,
        "max_solver_residual": max(residuals),
    }
    return dataset, manifest


# ---------------------------------------------------------------------------
# Exact-sparse generators


def random_smooth_field(seed: int, max_modes: int, offset, grid: Grid2D,
                        rng: np.random.Generator | None = None) -> Field2D:
    """Truncated 2D Fourier series with seeded coefficients in [-1, 1].
    offset="auto" shifts by the coefficient-sum bound so values stay >= 0."""
    if max_modes > 6 or max_modes < 0:
        raise DataFormatError("max_modes must lie in 0..6")
    if rng is None:
        rng = np.random.default_rng(seed)
    zeta, eta = grid.node_coords()
    values = np.zeros(grid.size)
    bound = 0.0
    for p in range(max_modes + 1):
        for q in range(max_modes + 1):
            if p == 0 and q == 0:
                continue
            a = float(rng.uniform(-1.0, 1.0))
            b = float(rng.uniform(-1.0, 1.0))
            phase = 2.0 * np.pi * (p * zeta + q * eta)
            values += a * np.cos(phase) + b * np.sin(phase)
            bound += abs(a) + abs(b)
    shift = bound if offset == "auto" else float(offset)
    return Field2D(grid, values + shift)


@dataclass(frozen=True)
class SamplerSpec:
    """Input sampler for probing and exact-sparse generation."""

    kind: str  # "smooth" | "case2" | "case3" | "constant"
    params: dict | None = None

    def __post_init__(self):
        if self.kind not in ("smooth",) + PERMEABILITY_FAMILIES:
            raise DataFormatError(f"unknown sampler kind {self.kind!r}")

    def draw(self, rng: np.random.Generator, grid: Grid2D) -> Field2D:
        params = dict(self.params or {})
        if self.kind == "smooth":
            max_modes = int(params.get("max_modes", 3))
            offset = params.get("offset", "auto")
            return random_smooth_field(0, max_modes, offset, grid, rng=rng)
        ranges = params.get("ranges") or DEFAULT_RANGES[self.kind]["train"]
        draw = {n: float(rng.uniform(*map(float, ranges[n]))) for n in sorted(ranges)}
        return _permeability(self.kind, draw, grid)

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params or {}}


def gen_from_library(terms: list[TermSpec], coeffs, sampler: SamplerSpec,
                     q: int, seed: int, grid: Grid2D,
                     out_n: int | None = None) -> Dataset:
    """Outputs computed by exact term superposition on sampled inputs, so the
    ground truth lies inside the fitting library by construction."""
    coeffs = as_float_array(coeffs, "coefficients", ndim=1)
    if len(terms) != coeffs.shape[0]:
        raise DataFormatError(f"{coeffs.shape[0]} coefficients for {len(terms)} terms")
    if not terms:
        raise DataFormatError("need at least one term")
    task = terms[0].task
    if any(t.task is not task for t in terms):
        raise DataFormatError("terms mix tasks")
    check_positive_int(q, "q")
    rng = np.random.default_rng(seed)
    inputs = np.stack([sampler.draw(rng, grid).values for _ in range(q)])
    weights = quadrature_weights(grid)
    if task is TaskKind.IMAGE_TO_LINE:
        xy = out_points(task, out_n=out_n or grid.nx)
    elif task is TaskKind.IMAGE_TO_IMAGE:
        xy = out_points(task, grid=grid)
    else:
        xy = out_points(task)
    acc = np.zeros((xy.shape[0], q))
    for term, coeff in zip(terms, coeffs):
        acc += coeff * eval_term_columns(term, inputs, grid, weights, xy)
    return Dataset(task=task, grid=grid, inputs=inputs, outputs=acc.T)
