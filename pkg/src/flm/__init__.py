"""Interpretable surrogate operators as sparse sums of analytic integral
equations, fitted by sequential thresholded least squares on a kernel term
library, from raw training data or from a probed black-box predictor."""

from .assembly import ColumnScaling, DesignMatrix, TargetVector, assemble, column_normalize
from .container import read_fields, read_manifest, write_fields, write_manifest
from .errors import (
    DataFormatError,
    FlmError,
    NumericalError,
    ProbeError,
    ResourceCapError,
    TaskMismatchError,
)
from .estimator import FunctionalOperatorRegressor, fit_dataset
from .fields import (
    Dataset,
    Field1D,
    Field2D,
    Grid2D,
    NormStats,
    Sample,
    TaskKind,
    apply_normalization,
    fit_normalization,
    integrate,
    invert_normalization,
    quadrature_weights,
)
from .library import (
    PRESETS,
    KernelFamily,
    LibrarySpec,
    Lifting,
    OuterNonlinearity,
    TermSpec,
    bandwidth_grid,
    build_library,
    eval_term_image,
    eval_term_line,
    eval_term_scalar,
    plugin_bandwidth,
    render_term,
)
from .metrics import MetricsReport, image_based_errors, pointwise_errors, summarize
from .model import (
    FunctionalLinearModel,
    export_model,
    from_solution,
    import_model,
    predict,
    predict_batch,
    predict_dataset,
    prune,
    render_equation,
)
from .probe import (
    ExternalProcess,
    InProcessAnalytic,
    ProbePlan,
    builtin_analytic_predictor,
    handshake,
    probe,
)
from .regression import (
    FitReport,
    RidgeCgConfig,
    StlsqConfig,
    least_squares,
    ridge_normal_cg,
    stlsq,
)
from .synth import (
    DarcyProblem,
    DarcySolution,
    ParamSplit,
    SamplerSpec,
    darcy_solve,
    gen_darcy_dataset,
    gen_from_library,
    gen_permeability_case2,
    gen_permeability_case3,
    random_smooth_field,
)

__version__ = "0.1.0"
