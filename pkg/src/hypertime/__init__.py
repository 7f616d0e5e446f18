"""Spatio-temporal models built on circular projections of time.

Timestamps are wrapped onto one circle per discovered period, so a
Gaussian mixture fitted over the extended vectors captures periodic
structure without binning time.  The package covers the full loop:
loading measurement CSVs, fitting mixtures over hypertime vectors,
discovering periods from residual spectra, and comparing the resulting
predictors against simple baselines on held-out data.
"""

from .baselines import (
    BaselineConfig,
    FremenPredictor,
    HistPredictor,
    MeanPredictor,
    fremen_predictor,
    hist_predictor,
    make_baseline,
    mean_predictor,
)
from .clustering import (
    FitConfig,
    FitLog,
    GaussianComponent,
    MixtureModel,
    detect_instability,
    em_fit,
    em_fit_stable,
    km_fit,
    kmeans_init,
    mixed_distance,
)
from .dataset import (
    EVENT,
    VALUED,
    Dataset,
    Measurement,
    SpatialStats,
    load_csv,
    save_csv,
    split_by_time,
    standardize,
)
from .evaluation import (
    ComparisonReport,
    EvaluationGrid,
    GridSpec,
    PairResult,
    SweepResult,
    grid_count,
    histogram_l1,
    pairwise_ttests,
    per_cell_baseline,
    rmse,
    sweep,
)
from .model import (
    BuildConfig,
    BuildStep,
    ClusterCountSelection,
    HypertimeModel,
    TrainingWindow,
    build,
    build_event,
    calibrate_gamma,
    density,
    event_residual_grid,
    load_model,
    model_error,
    model_from_dict,
    model_to_dict,
    predict_cell_count,
    predict_counts,
    predict_mean,
    residuals,
    save_model,
    select_cluster_count,
)
from .projection import (
    DimensionLayout,
    HypertimeProjection,
    assemble,
    extend_vectors,
    project_time,
    project_times,
)
from .spectral import (
    DAY_SECONDS,
    WEEK_SECONDS,
    ResidualSeries,
    SpectrumResult,
    amplitude,
    default_candidates,
    prominent_period,
    spectral_sum,
    spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineConfig",
    "BuildConfig",
    "BuildStep",
    "ClusterCountSelection",
    "ComparisonReport",
    "DAY_SECONDS",
    "Dataset",
    "DimensionLayout",
    "EVENT",
    "EvaluationGrid",
    "FitConfig",
    "FitLog",
    "FremenPredictor",
    "GaussianComponent",
    "GridSpec",
    "HistPredictor",
    "HypertimeModel",
    "HypertimeProjection",
    "Measurement",
    "MeanPredictor",
    "MixtureModel",
    "PairResult",
    "ResidualSeries",
    "SpatialStats",
    "SpectrumResult",
    "SweepResult",
    "TrainingWindow",
    "VALUED",
    "WEEK_SECONDS",
    "amplitude",
    "assemble",
    "build",
    "build_event",
    "calibrate_gamma",
    "default_candidates",
    "density",
    "detect_instability",
    "em_fit",
    "em_fit_stable",
    "event_residual_grid",
    "extend_vectors",
    "fremen_predictor",
    "grid_count",
    "hist_predictor",
    "histogram_l1",
    "km_fit",
    "kmeans_init",
    "load_csv",
    "load_model",
    "make_baseline",
    "mean_predictor",
    "mixed_distance",
    "model_error",
    "model_from_dict",
    "model_to_dict",
    "pairwise_ttests",
    "per_cell_baseline",
    "predict_cell_count",
    "predict_counts",
    "predict_mean",
    "project_time",
    "project_times",
    "prominent_period",
    "residuals",
    "rmse",
    "save_csv",
    "save_model",
    "select_cluster_count",
    "spectral_sum",
    "spectrum",
    "split_by_time",
    "standardize",
    "sweep",
    "__version__",
]
