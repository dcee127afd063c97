"""Kernelized Stahel-Donoho outlyingness, trimmed SVM, and outlier maps."""

from .data import (
    Dataset,
    SimulationSpec,
    gen_simulation,
    gen_toy,
    load_csv,
    load_fasta,
    run_simulation,
    save_csv,
)
from .errors import SdsvmError
from .kernels import KernelMatrix, KernelSpec, Sample, eval_kernel, kernel_cross, kernel_matrix
from .outliermap import (
    MapStyle,
    OutlierMapPoint,
    build_map,
    emit_csv,
    emit_svg,
    parse_csv,
)
from .outlyingness import (
    DirectionPolicy,
    OutlyingnessReport,
    ProjectionVector,
    default_policy,
    enumerate_directions,
    outlyingness,
    projection_vector,
    robust_location,
    robust_scale,
)
from .pipeline import (
    CvConfig,
    FitResult,
    TrimPlan,
    fit_from_text,
    fit_sdsvm,
    fit_to_text,
    select_C,
    trim,
)
from .svm import (
    LabeledSet,
    SvmModel,
    decision_value,
    decision_values,
    dual_objective,
    model_from_text,
    model_to_text,
    predict,
    solve_dual,
)

__version__ = "0.1.0"

__all__ = [
    "CvConfig",
    "Dataset",
    "DirectionPolicy",
    "FitResult",
    "KernelMatrix",
    "KernelSpec",
    "LabeledSet",
    "MapStyle",
    "OutlierMapPoint",
    "OutlyingnessReport",
    "ProjectionVector",
    "Sample",
    "SdsvmError",
    "SimulationSpec",
    "SvmModel",
    "TrimPlan",
    "build_map",
    "decision_value",
    "decision_values",
    "default_policy",
    "dual_objective",
    "emit_csv",
    "emit_svg",
    "enumerate_directions",
    "eval_kernel",
    "fit_from_text",
    "fit_sdsvm",
    "fit_to_text",
    "gen_simulation",
    "gen_toy",
    "kernel_cross",
    "kernel_matrix",
    "load_csv",
    "load_fasta",
    "model_from_text",
    "model_to_text",
    "outlyingness",
    "parse_csv",
    "predict",
    "projection_vector",
    "robust_location",
    "robust_scale",
    "run_simulation",
    "save_csv",
    "select_C",
    "solve_dual",
    "trim",
]
