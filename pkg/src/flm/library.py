"""The candidate integral-equation term library.

Each term is ``outer( sum_k  psi(x - zeta_k, y - eta_k) * lift(f)_k * w_k )``:
a pointwise lifting of the input field, a kernel factor, the midpoint
quadrature, and an optional outer nonlinearity. The three task shapes share
one evaluation core and differ only in where the output point sits:

    image -> scalar : single output point (0, 0)
    image -> line   : output points (x, 0) along the unit interval
    image -> image  : output points on a 2D cell-center grid

Distance-truncated (indicator) kernels default to local influence, i.e. the
window where the scaled distance 2*D/beta is at most 1. The alternative
``indicator="as-printed"`` integrates the complement instead.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int
from .errors import DataFormatError, NumericalError, TaskMismatchError
from .fields import Field2D, Grid2D, TaskKind, cell_centers

# exp() overflows double precision just above this exponent
_EXP_ARG_LIMIT = 700.0

INDICATOR_LOCAL = "local"
INDICATOR_AS_PRINTED = "as-printed"
_INDICATOR_MODES = (INDICATOR_LOCAL, INDICATOR_AS_PRINTED)


class Lifting(enum.Enum):
    IDENTITY = "identity"
    ZETA = "zeta"
    ETA = "eta"
    ZETA2 = "zeta2"
    ETA2 = "eta2"
    ZETA_ETA = "zeta_eta"
    SQUARE = "square"
    TANH = "tanh"
    EXP = "exp"
    EXP_NEG_OVER_BETA = "exp_neg_over_beta"


class KernelFamily(enum.Enum):
    UNIT = "unit"
    GAUSSIAN = "gaussian"
    EXP_DISTANCE = "exp_distance"
    INDICATOR_DISK = "indicator_disk"
    SEP_EXP_X = "sep_exp_x"
    SEP_EXP_Y = "sep_exp_y"
    DOMAIN_AVERAGE = "domain_average"


class OuterNonlinearity(enum.Enum):
    IDENTITY = "identity"
    SQUARE = "square"
    TANH = "tanh"
    EXP = "exp"


_KERNELS_NEEDING_BETA = {
    KernelFamily.GAUSSIAN,
    KernelFamily.EXP_DISTANCE,
    KernelFamily.INDICATOR_DISK,
    KernelFamily.SEP_EXP_X,
    KernelFamily.SEP_EXP_Y,
}


def _needs_beta(lifting: Lifting, kernel: KernelFamily) -> bool:
    return kernel in _KERNELS_NEEDING_BETA or lifting is Lifting.EXP_NEG_OVER_BETA


@dataclass(frozen=True)
class TermSpec:
    """One candidate term: a column of the regression library."""

    task: TaskKind
    family_index: int
    lifting: Lifting
    kernel: KernelFamily
    outer: OuterNonlinearity
    beta: float | None = None
    is_bias: bool = False
    indicator: str = INDICATOR_LOCAL

    def __post_init__(self):
        if self.indicator not in _INDICATOR_MODES:
            raise DataFormatError(f"unknown indicator mode {self.indicator!r}")
        if self.is_bias:
            if self.beta is not None:
                raise DataFormatError("bias terms carry no bandwidth")
            return
        if _needs_beta(self.lifting, self.kernel):
            if self.beta is None or not (self.beta > 0):
                raise DataFormatError(
                    f"term family {self.family_index} requires a bandwidth > 0"
                )
        elif self.beta is not None:
            raise DataFormatError(
                f"term family {self.family_index} takes no bandwidth"
            )

    @property
    def identity(self) -> tuple:
        """(task, family_index, beta): unique within a library."""
        return (self.task.value, self.family_index, self.beta)


# Family tables in the top-to-bottom, left-to-right reading order of the
# per-task term listings: (lifting, kernel, outer).

SCALAR_FAMILIES: tuple[tuple[Lifting, KernelFamily, OuterNonlinearity], ...] = (
    (Lifting.IDENTITY, KernelFamily.UNIT, OuterNonlinearity.IDENTITY),
    (Lifting.ZETA, KernelFamily.UNIT, OuterNonlinearity.IDENTITY),
    (Lifting.ETA, KernelFamily.UNIT, OuterNonlinearity.IDENTITY),
    (Lifting.ZETA2, KernelFamily.UNIT, OuterNonlinearity.IDENTITY),
    (Lifting.ETA2, KernelFamily.UNIT, OuterNonlinearity.IDENTITY),
    (Lifting.ZETA_ETA, KernelFamily.UNIT, OuterNonlinearity.IDENTITY),
    (Lifting.SQUARE, KernelFamily.UNIT, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.GAUSSIAN, OuterNonlinearity.IDENTITY),
    (Lifting.SQUARE, KernelFamily.GAUSSIAN, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.SEP_EXP_X, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.SEP_EXP_Y, OuterNonlinearity.IDENTITY),
    (Lifting.EXP_NEG_OVER_BETA, KernelFamily.UNIT, OuterNonlinearity.IDENTITY),
    # squared Gaussian response; only enabled for the porous-scalar preset
    (Lifting.IDENTITY, KernelFamily.GAUSSIAN, OuterNonlinearity.SQUARE),
)
SCALAR_BIAS_INDEX = len(SCALAR_FAMILIES)  # 13
SCALAR_SQUARED_GAUSSIAN = 12

CONV_FAMILIES: tuple[tuple[Lifting, KernelFamily, OuterNonlinearity], ...] = (
    (Lifting.IDENTITY, KernelFamily.DOMAIN_AVERAGE, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.GAUSSIAN, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.EXP_DISTANCE, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.INDICATOR_DISK, OuterNonlinearity.IDENTITY),
    (Lifting.SQUARE, KernelFamily.INDICATOR_DISK, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.INDICATOR_DISK, OuterNonlinearity.EXP),
    (Lifting.EXP, KernelFamily.INDICATOR_DISK, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.SEP_EXP_X, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.SEP_EXP_Y, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.SEP_EXP_X, OuterNonlinearity.TANH),
    (Lifting.IDENTITY, KernelFamily.SEP_EXP_Y, OuterNonlinearity.TANH),
    (Lifting.TANH, KernelFamily.SEP_EXP_X, OuterNonlinearity.IDENTITY),
    (Lifting.TANH, KernelFamily.SEP_EXP_Y, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.SEP_EXP_X, OuterNonlinearity.SQUARE),
    (Lifting.IDENTITY, KernelFamily.SEP_EXP_Y, OuterNonlinearity.SQUARE),
    (Lifting.SQUARE, KernelFamily.SEP_EXP_X, OuterNonlinearity.IDENTITY),
    (Lifting.SQUARE, KernelFamily.SEP_EXP_Y, OuterNonlinearity.IDENTITY),
    (Lifting.IDENTITY, KernelFamily.GAUSSIAN, OuterNonlinearity.SQUARE),
    (Lifting.IDENTITY, KernelFamily.GAUSSIAN, OuterNonlinearity.TANH),
)
CONV_BIAS_INDEX = len(CONV_FAMILIES)  # 19


def families_for_task(task: TaskKind):
    if task is TaskKind.IMAGE_TO_SCALAR:
        return SCALAR_FAMILIES
    return CONV_FAMILIES


def bias_index_for_task(task: TaskKind) -> int:
    if task is TaskKind.IMAGE_TO_SCALAR:
        return SCALAR_BIAS_INDEX
    return CONV_BIAS_INDEX


def default_families(task: TaskKind) -> tuple[int, ...]:
    """Default family selection: the full per-task list, except the squared
    Gaussian scalar response which only one preset enables."""
    if task is TaskKind.IMAGE_TO_SCALAR:
        return tuple(i for i in range(len(SCALAR_FAMILIES)) if i != SCALAR_SQUARED_GAUSSIAN)
    return tuple(range(len(CONV_FAMILIES)))


@dataclass(frozen=True)
class LibrarySpec:
    """Recipe for one term library: task, bandwidth grid, family subset."""

    task: TaskKind
    beta_min: float
    beta_max: float
    m_beta: int
    families: tuple[int, ...] | None = None
    indicator: str = INDICATOR_LOCAL

    def __post_init__(self):
        if not (self.beta_min < self.beta_max):
            raise DataFormatError("need beta_min < beta_max")
        if not (self.beta_min > 0):
            raise DataFormatError("bandwidths must be positive")
        check_positive_int(self.m_beta, "m_beta")
        if self.indicator not in _INDICATOR_MODES:
            raise DataFormatError(f"unknown indicator mode {self.indicator!r}")
        if self.families is not None:
            fams = families_for_task(self.task)
            bad = [i for i in self.families if not (0 <= i < len(fams))]
            if bad:
                raise DataFormatError(f"unknown family indices {bad}")

    def resolved_families(self) -> tuple[int, ...]:
        if self.families is None:
            return default_families(self.task)
        return tuple(self.families)

    def to_json(self) -> dict:
        return {
            "task": self.task.value,
            "beta_min": self.beta_min,
            "beta_max": self.beta_max,
            "m_beta": self.m_beta,
            "families": list(self.resolved_families()),
            "indicator": self.indicator,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LibrarySpec":
        try:
            return cls(
                task=TaskKind.from_name(obj["task"]),
                beta_min=float(obj["beta_min"]),
                beta_max=float(obj["beta_max"]),
                m_beta=int(obj["m_beta"]),
                families=tuple(obj["families"]) if obj.get("families") else None,
                indicator=obj.get("indicator", INDICATOR_LOCAL),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"invalid library spec: {exc}") from exc


# The six problem presets: (task, bandwidth range, grid size, family subset).
PRESETS: dict[str, LibrarySpec] = {
    "case1-mnist": LibrarySpec(TaskKind.IMAGE_TO_SCALAR, 0.1, 10.0, 10),
    "case2-porous-scalar": LibrarySpec(
        TaskKind.IMAGE_TO_SCALAR, 0.1, 10.0, 20,
        families=tuple(range(len(SCALAR_FAMILIES))),
    ),
    "case3-porous-image": LibrarySpec(TaskKind.IMAGE_TO_IMAGE, 0.2, 1.5, 120),
    "case4-superres": LibrarySpec(TaskKind.IMAGE_TO_IMAGE, 0.2, 0.4, 7),
    "case5-wss-line": LibrarySpec(TaskKind.IMAGE_TO_LINE, 0.1, 1.9, 120),
    "case6-local": LibrarySpec(TaskKind.IMAGE_TO_IMAGE, 0.2, 1.5, 20),
}


def resolve_library(spec) -> list[TermSpec]:
    """Accept a preset name, a LibrarySpec, or an explicit term list."""
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise DataFormatError(
                f"unknown library preset {spec!r}; known: {sorted(PRESETS)}"
            )
        return build_library(PRESETS[spec])
    if isinstance(spec, LibrarySpec):
        return build_library(spec)
    terms = list(spec)
    if not terms or not all(isinstance(t, TermSpec) for t in terms):
        raise DataFormatError("expected a preset name, LibrarySpec, or TermSpec list")
    return terms


def bandwidth_grid(beta_min: float, beta_max: float, m_beta: int) -> np.ndarray:
    """Uniformly spaced bandwidths including both endpoints; the midpoint
    for a single-candidate grid."""
    if not (beta_min < beta_max):
        raise DataFormatError("need beta_min < beta_max")
    check_positive_int(m_beta, "m_beta")
    if m_beta == 1:
        return np.array([0.5 * (beta_min + beta_max)])
    return np.linspace(beta_min, beta_max, m_beta)


def build_library(spec: LibrarySpec) -> list[TermSpec]:
    """Enumerate the term list: beta-free families once, beta-dependent
    families once per bandwidth, one trailing bias term."""
    fams = families_for_task(spec.task)
    selected = spec.resolved_families()
    if not selected:
        raise DataFormatError("empty family selection")
    betas = bandwidth_grid(spec.beta_min, spec.beta_max, spec.m_beta)
    terms: list[TermSpec] = []
    for idx in selected:
        lifting, kernel, outer = fams[idx]
        if _needs_beta(lifting, kernel):
            for beta in betas:
                terms.append(
                    TermSpec(spec.task, idx, lifting, kernel, outer,
                             beta=float(beta), indicator=spec.indicator)
                )
        else:
            terms.append(
                TermSpec(spec.task, idx, lifting, kernel, outer,
                         indicator=spec.indicator)
            )
    terms.append(
        TermSpec(
            spec.task,
            bias_index_for_task(spec.task),
            Lifting.IDENTITY,
            KernelFamily.UNIT,
            OuterNonlinearity.IDENTITY,
            is_bias=True,
            indicator=spec.indicator,
        )
    )
    return terms


def plugin_bandwidth(n: int) -> float:
    """Plug-in Gaussian bandwidth heuristic n**-0.3 for an n-per-axis grid."""
    check_positive_int(n, "n", minimum=2)
    return float(n) ** -0.3


# ---------------------------------------------------------------------------
# Evaluation


def _apply_lifting(term: TermSpec, values: np.ndarray,
                   zeta: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Lift field values; `values` is (..., K) with node coords (K,)."""
    lf = term.lifting
    if lf is Lifting.IDENTITY:
        return values
    if lf is Lifting.ZETA:
        return values * zeta
    if lf is Lifting.ETA:
        return values * eta
    if lf is Lifting.ZETA2:
        return values * zeta**2
    if lf is Lifting.ETA2:
        return values * eta**2
    if lf is Lifting.ZETA_ETA:
        return values * (zeta * eta)
    if lf is Lifting.SQUARE:
        return values**2
    if lf is Lifting.TANH:
        return np.tanh(values)
    if lf is Lifting.EXP:
        _guard_exp_arg(term, values, sample_axis=0)
        return np.exp(values)
    if lf is Lifting.EXP_NEG_OVER_BETA:
        arg = -values / term.beta
        _guard_exp_arg(term, arg, sample_axis=0)
        return np.exp(arg)
    raise DataFormatError(f"unknown lifting {lf}")


def _guard_exp_arg(term: TermSpec, arg: np.ndarray, sample_axis: int) -> None:
    """Refuse exponent magnitudes that would overflow, naming the term and
    the offending sample."""
    over = np.abs(arg) > _EXP_ARG_LIMIT
    if over.any():
        where = np.argwhere(over)[0]
        sample = int(where[sample_axis]) if arg.ndim > sample_axis else 0
        raise NumericalError(
            f"exp overflow in term {term.identity} on sample {sample} "
            f"(|exponent| > {_EXP_ARG_LIMIT:g}); normalize inputs before "
            "assembling"
        )


def _apply_outer(term: TermSpec, values: np.ndarray) -> np.ndarray:
    outer = term.outer
    if outer is OuterNonlinearity.IDENTITY:
        return values
    if outer is OuterNonlinearity.SQUARE:
        return values**2
    if outer is OuterNonlinearity.TANH:
        return np.tanh(values)
    if outer is OuterNonlinearity.EXP:
        # integral values arrive as (N', Q): samples along the last axis
        _guard_exp_arg(term, values, sample_axis=values.ndim - 1)
        return np.exp(values)
    raise DataFormatError(f"unknown outer nonlinearity {outer}")


def _kernel_matrix(term: TermSpec, out_xy: np.ndarray,
                   zeta: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """psi(x - zeta, y - eta) for every (output point, node): (N', K)."""
    dx = out_xy[:, 0][:, None] - zeta[None, :]
    dy = out_xy[:, 1][:, None] - eta[None, :]
    kern = term.kernel
    if kern is KernelFamily.GAUSSIAN:
        return np.exp(-(dx**2 + dy**2) / term.beta)
    if kern is KernelFamily.EXP_DISTANCE:
        return np.exp(-np.sqrt(dx**2 + dy**2) / term.beta)
    if kern is KernelFamily.INDICATOR_DISK:
        scaled = 2.0 * np.sqrt(dx**2 + dy**2) / term.beta
        if term.indicator == INDICATOR_LOCAL:
            return (scaled <= 1.0).astype(np.float64)
        return (scaled > 1.0).astype(np.float64)
    if kern is KernelFamily.SEP_EXP_X:
        return np.exp(dx / term.beta)
    if kern is KernelFamily.SEP_EXP_Y:
        return np.exp(dy / term.beta)
    raise DataFormatError(f"kernel {kern} has no output-point dependence")


def out_points(task: TaskKind, grid: Grid2D | None = None,
               out_n: int | None = None,
               out_shape: tuple[int, int] | None = None) -> np.ndarray:
    """Output collocation points, (N', 2), in the row-ordering contract:
    scalar tasks use the single point (0, 0); line tasks ascend in x;
    image tasks run row-major (y-major, x-minor) over cell centers."""
    if task is TaskKind.IMAGE_TO_SCALAR:
        return np.zeros((1, 2))
    if task is TaskKind.IMAGE_TO_LINE:
        if out_n is None:
            raise DataFormatError("line task needs an output length")
        x = cell_centers(out_n)
        return np.column_stack([x, np.zeros_like(x)])
    if out_shape is not None:
        onx, ony = out_shape
    elif grid is not None:
        onx, ony = grid.nx, grid.ny
    else:
        raise DataFormatError("image task needs a grid or an output shape")
    x = np.tile(cell_centers(onx), ony)
    y = np.repeat(cell_centers(ony), onx)
    return np.column_stack([x, y])


def eval_term_columns(term: TermSpec, inputs: np.ndarray, grid: Grid2D,
                      weights: np.ndarray, out_xy: np.ndarray) -> np.ndarray:
    """Evaluate one term for a batch of fields at a batch of output points.

    inputs: (Q, K) row-major field values; returns (N', Q).
    """
    n_out = out_xy.shape[0]
    n_samples = inputs.shape[0]
    if term.is_bias:
        return np.ones((n_out, n_samples))
    zeta, eta = grid.node_coords()
    lifted = _apply_lifting(term, inputs, zeta, eta)  # (Q, K)
    if term.kernel is KernelFamily.DOMAIN_AVERAGE:
        # raw f in the numerator; denominator is the discrete measure of
        # the domain (equal to 1 under the midpoint rule)
        vals = (inputs @ weights) / float(weights.sum())
        integral = np.broadcast_to(vals[None, :], (n_out, n_samples))
    elif term.kernel is KernelFamily.UNIT:
        vals = lifted @ weights
        integral = np.broadcast_to(vals[None, :], (n_out, n_samples))
    else:
        kmat = _kernel_matrix(term, out_xy, zeta, eta)  # (N', K)
        integral = kmat @ (lifted * weights).T  # (N', Q)
    return _apply_outer(term, np.ascontiguousarray(integral))


def _eval_single(term: TermSpec, f: Field2D, weights: np.ndarray,
                 out_xy: np.ndarray) -> float:
    col = eval_term_columns(term, f.values[None, :], f.grid, np.asarray(weights), out_xy)
    value = float(col[0, 0])
    if not np.isfinite(value):
        raise NumericalError(f"non-finite evaluation of term {term.identity}")
    return value


def eval_term_scalar(term: TermSpec, f: Field2D, weights: np.ndarray) -> float:
    if term.task is not TaskKind.IMAGE_TO_SCALAR:
        raise TaskMismatchError(f"term {term.identity} is not a scalar-task term")
    return _eval_single(term, f, weights, np.zeros((1, 2)))


def eval_term_image(term: TermSpec, f: Field2D, weights: np.ndarray,
                    out_x: float, out_y: float) -> float:
    if term.task is not TaskKind.IMAGE_TO_IMAGE:
        raise TaskMismatchError(f"term {term.identity} is not an image-task term")
    if not (0.0 <= out_x <= 1.0 and 0.0 <= out_y <= 1.0):
        raise DataFormatError("output point must lie in the unit square")
    return _eval_single(term, f, weights, np.array([[out_x, out_y]]))


def eval_term_line(term: TermSpec, f: Field2D, weights: np.ndarray,
                   out_x: float) -> float:
    if term.task is not TaskKind.IMAGE_TO_LINE:
        raise TaskMismatchError(f"term {term.identity} is not a line-task term")
    if not (0.0 <= out_x <= 1.0):
        raise DataFormatError("output coordinate must lie in [0, 1]")
    return _eval_single(term, f, weights, np.array([[out_x, 0.0]]))


# ---------------------------------------------------------------------------
# Rendering


def _fmt_beta(beta: float) -> str:
    return format(beta, "g")


def _lift_expr(term: TermSpec) -> str:
    lf = term.lifting
    if lf is Lifting.IDENTITY:
        return "f(ζ,η)"
    if lf is Lifting.ZETA:
        return "ζ f(ζ,η)"
    if lf is Lifting.ETA:
        return "η f(ζ,η)"
    if lf is Lifting.ZETA2:
        return "ζ^2 f(ζ,η)"
    if lf is Lifting.ETA2:
        return "η^2 f(ζ,η)"
    if lf is Lifting.ZETA_ETA:
        return "ζη f(ζ,η)"
    if lf is Lifting.SQUARE:
        return "f^2(ζ,η)"
    if lf is Lifting.TANH:
        return "tanh f(ζ,η)"
    if lf is Lifting.EXP:
        return "exp(f(ζ,η))"
    return f"exp(-f(ζ,η)/{_fmt_beta(term.beta)})"


def _kernel_expr(term: TermSpec) -> str | None:
    kern = term.kernel
    b = _fmt_beta(term.beta) if term.beta is not None else None
    convolved = term.task is not TaskKind.IMAGE_TO_SCALAR
    xarg = "(x-ζ)" if convolved else "ζ"
    if term.task is TaskKind.IMAGE_TO_IMAGE:
        yarg, r2 = "(y-η)", "(x-ζ)^2+(y-η)^2"
        dist = "D"
    elif term.task is TaskKind.IMAGE_TO_LINE:
        yarg, r2 = "-η", "(x-ζ)^2+η^2"
        dist = "D_wss"
    else:
        yarg, r2 = "η", "ζ^2+η^2"
        dist = "D"
    if kern is KernelFamily.UNIT:
        return None
    if kern is KernelFamily.GAUSSIAN:
        return f"exp(-({r2})/{b})"
    if kern is KernelFamily.EXP_DISTANCE:
        return f"exp(-sqrt({r2})/{b})"
    if kern is KernelFamily.INDICATOR_DISK:
        op = "<=" if term.indicator == INDICATOR_LOCAL else ">"
        return f"I(2{dist}/{b} {op} 1)"
    if kern is KernelFamily.SEP_EXP_X:
        return f"exp({xarg}/{b})" if convolved else f"exp(-ζ/{b})"
    if kern is KernelFamily.SEP_EXP_Y:
        if term.task is TaskKind.IMAGE_TO_IMAGE:
            return f"exp({yarg}/{b})"
        return f"exp(-η/{b})"
    return None


def render_term(term: TermSpec) -> str:
    """Deterministic human-readable integral expression for one term."""
    if term.is_bias:
        return "1"
    if term.kernel is KernelFamily.DOMAIN_AVERAGE:
        return "∬ f(ζ,η) dζdη / ∬ dζdη"
    kernel = _kernel_expr(term)
    pieces = [p for p in (kernel, _lift_expr(term)) if p]
    body = f"∬ {' '.join(pieces)} dζdη"
    outer = term.outer
    if outer is OuterNonlinearity.IDENTITY:
        return body
    if outer is OuterNonlinearity.SQUARE:
        return f"({body})^2"
    if outer is OuterNonlinearity.TANH:
        return f"tanh({body})"
    return f"exp({body})"


def term_to_json(term: TermSpec) -> dict:
    return {
        "family_index": term.family_index,
        "lifting": term.lifting.value,
        "kernel": term.kernel.value,
        "outer": term.outer.value,
        "beta": term.beta,
        "bias": term.is_bias,
    }


def term_from_json(obj: dict, task: TaskKind, indicator: str) -> TermSpec:
    def _enum(cls, key):
        raw = obj.get(key)
        for member in cls:
            if member.value == raw:
                return member
        raise DataFormatError(f"unknown {key} tag {raw!r}")

    try:
        beta = obj.get("beta")
        return TermSpec(
            task=task,
            family_index=int(obj["family_index"]),
            lifting=_enum(Lifting, "lifting"),
            kernel=_enum(KernelFamily, "kernel"),
            outer=_enum(OuterNonlinearity, "outer"),
            beta=float(beta) if beta is not None else None,
            is_bias=bool(obj.get("bias", False)),
            indicator=indicator,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"invalid term record: {exc}") from exc
