"""Spatio-temporal mixture models over value, space, and circular time.

A model is a Gaussian mixture fitted to vectors ``(a, x, cos/sin ...)``
(value omitted for event data) together with a scaling factor gamma.
Periods enter one at a time: starting from a time-blind mixture, the
residual series is scanned for its most prominent period, the vectors
gain that period's circular pair, and the mixture is refitted.  The
loop keeps going while the training error drops and returns the last
model that improved.

Queries never integrate numerically: the expected reading marginalizes
the mixture in closed form over everything but the value dimension, and
gamma is calibrated so the training-set mean of those expectations
equals the mean observed reading exactly.  Event models instead
calibrate gamma so the predicted count over the training volume equals
the number of training events.
"""

import json
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import (FitConfig, FitLog, GaussianComponent, MixtureModel,
                         em_fit_stable, km_fit)
from .dataset import EVENT, VALUED, Dataset, SpatialStats, standardize
from .evaluation import EvaluationGrid, GridSpec, grid_count
from .projection import (DimensionLayout, HypertimeProjection, assemble,
                         project_times)
from .spectral import (WEEK_SECONDS, ResidualSeries, default_candidates,
                       prominent_period, spectral_sum)

MODEL_FORMAT = "hypertime-model"
MODEL_VERSION = 1


@dataclass
class BuildConfig:
    """Everything the build loop needs besides the data."""

    fit: FitConfig = field(default_factory=FitConfig)
    max_h: int = 5
    longest_period: float = WEEK_SECONDS
    n_candidates: int = 168
    standardize: bool = True
    # None resolves per backend: the km route picks its cluster count
    # automatically, the em route takes it from `fit.n_clusters`.
    auto_clusters: bool | None = None
    cluster_cap: int = 10
    event_spatial_bin: float = 0.5
    event_temporal_bin: float = 1800.0
    calibration_refine: int = 2

    def __post_init__(self):
        if self.max_h < 0:
            raise ValueError("max_h must be >= 0")
        if self.longest_period <= 0:
            raise ValueError("longest_period must be positive")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if self.cluster_cap < 1:
            raise ValueError("cluster_cap must be >= 1")
        if self.event_spatial_bin <= 0 or self.event_temporal_bin <= 0:
            raise ValueError("event grid bins must be positive")
        if self.calibration_refine < 1:
            raise ValueError("calibration_refine must be >= 1")


@dataclass(frozen=True)
class TrainingWindow:
    """Bounding box of the training data (space and time)."""

    spatial_lo: np.ndarray
    spatial_hi: np.ndarray
    t_lo: float
    t_hi: float

    def __post_init__(self):
        object.__setattr__(self, "spatial_lo",
                           np.atleast_1d(np.asarray(self.spatial_lo, float)))
        object.__setattr__(self, "spatial_hi",
                           np.atleast_1d(np.asarray(self.spatial_hi, float)))


@dataclass(frozen=True)
class BuildStep:
    """One build-loop iteration: error level and the period it added."""

    h: int
    error: float
    period: float | None
    kept: bool


@dataclass
class HypertimeModel:
    """Fitted mixture, its period set, and the calibration scale."""

    mixture: MixtureModel
    projection: HypertimeProjection
    layout: DimensionLayout
    gamma: float
    gamma_fallback: bool
    spatial_stats: SpatialStats
    mode: str
    window: TrainingWindow
    training_error: float = float("nan")
    build_log: list[BuildStep] = field(default_factory=list)

    @property
    def periods(self) -> tuple[float, ...]:
        return self.projection.periods

    def predict(self, x, t):
        """Expected reading; valued models only (see `predict_mean`)."""
        return predict_mean(self, x, t)


# ---------------------------------------------------------------------------
# queries


def _as_queries(model: HypertimeModel, x, t):
    times = np.atleast_1d(np.asarray(t, dtype=float))
    n = times.shape[0]
    d = model.layout.spatial_dim
    if d == 0:
        return np.empty((n, 0)), times
    if x is None:
        raise ValueError("model has spatial dimensions; x is required")
    coords = np.asarray(x, dtype=float)
    if np.ndim(t) == 0:
        if coords.size != d:
            raise ValueError(f"expected {d} spatial coordinates")
        coords = coords.reshape(1, d)
    else:
        if coords.ndim == 1 and d == 1:
            coords = coords.reshape(-1, 1)
        if coords.shape != (n, d):
            raise ValueError("coordinate array does not match query times")
    return coords, times


def _rest_points(model: HypertimeModel, coords, times) -> np.ndarray:
    std = (coords - model.spatial_stats.mean) / model.spatial_stats.std
    return np.hstack([std, project_times(times, model.projection)])


def _mean_terms(model: HypertimeModel, rest_pts):
    """Per row: (sum_j w_j q_j c_j, sum_j w_j q_j) where q_j is the
    component's marginal density over the non-value dimensions and c_j
    the conditional mean of the value given them."""
    rest_idx = model.layout.rest_indices
    unscaled = np.zeros(rest_pts.shape[0])
    mass = np.zeros(rest_pts.shape[0])
    for comp in model.mixture.components:
        q = np.exp(comp.marginal(rest_idx).logpdf(rest_pts))
        if rest_idx.size:
            s_rr = comp.covariance[np.ix_(rest_idx, rest_idx)]
            s_ra = comp.covariance[rest_idx, 0]
            beta = np.linalg.solve(s_rr, s_ra)
            c = comp.mean[0] + (rest_pts - comp.mean[rest_idx]) @ beta
        else:
            c = np.full(rest_pts.shape[0], comp.mean[0])
        unscaled += comp.weight * q * c
        mass += comp.weight * q
    return unscaled, mass


def _require_mode(model: HypertimeModel, mode: str):
    if model.mode != mode:
        raise ValueError(f"operation requires a {mode} model, got {model.mode}")


def density(model: HypertimeModel, a=None, x=None, t=0.0):
    """Scaled density gamma * sum_j w_j u_j at the query point(s).

    Valued models take (a, x, t); event models take (x, t) only.
    """
    coords, times = _as_queries(model, x, t)
    rest = _rest_points(model, coords, times)
    if model.mode == VALUED:
        if a is None:
            raise ValueError("valued models require the value a")
        av = np.atleast_1d(np.asarray(a, dtype=float))
        if av.shape != times.shape:
            raise ValueError("a does not match the query times")
        pts = np.hstack([av.reshape(-1, 1), rest])
    else:
        if a is not None:
            raise ValueError("event models take no value argument")
        pts = rest
    out = model.gamma * model.mixture.pdf(pts)
    return float(out[0]) if np.ndim(t) == 0 else out


def predict_mean(model: HypertimeModel, x, t):
    """Expected reading at (x, t): gamma * sum_j w_j q_j(x,t) c_j(x,t)."""
    _require_mode(model, VALUED)
    coords, times = _as_queries(model, x, t)
    unscaled, _ = _mean_terms(model, _rest_points(model, coords, times))
    out = model.gamma * unscaled
    return float(out[0]) if np.ndim(t) == 0 else out


def residuals(model: HypertimeModel, data: Dataset) -> ResidualSeries:
    """Prediction-minus-observation series, order preserving."""
    _require_mode(model, VALUED)
    if data.mode != VALUED:
        raise ValueError("residuals need valued data")
    coords = data.coords if data.spatial_dim else None
    preds = np.atleast_1d(predict_mean(model, coords, data.times))
    return ResidualSeries(data.times.copy(), preds - data.values)


def model_error(model: HypertimeModel, data: Dataset) -> float:
    """Root mean squared residual over `data`."""
    eps = residuals(model, data).values
    return float(np.sqrt(np.mean(eps * eps)))


# ---------------------------------------------------------------------------
# gamma calibration


def _calibrate_valued(model: HypertimeModel, train: Dataset):
    rest = _rest_points(model, train.coords, train.times)
    unscaled, _ = _mean_terms(model, rest)
    denom = float(unscaled.sum())
    num = float(train.values.sum())
    if num == 0.0 and not np.any(train.values):
        warnings.warn("all training values are zero; gamma fixed to 1")
        return 1.0, True
    gamma = num / denom if denom != 0.0 else np.inf
    if not np.isfinite(gamma) or gamma <= 0.0:
        warnings.warn("degenerate calibration ratio; gamma fixed to 1")
        return 1.0, True
    return gamma, False


def _calibration_spec(model: HypertimeModel, cfg: BuildConfig) -> GridSpec:
    w = model.window
    hi = np.where(w.spatial_hi > w.spatial_lo, w.spatial_hi,
                  w.spatial_lo + cfg.event_spatial_bin)
    r = cfg.calibration_refine
    return GridSpec.from_cell_size(
        w.spatial_lo, hi, w.t_lo, w.t_hi,
        cfg.event_spatial_bin / r, cfg.event_temporal_bin / r, expand=False,
    )


def _calibrate_event(model: HypertimeModel, n_events: int, cfg: BuildConfig):
    spec = _calibration_spec(model, cfg)
    mass = float(_event_cell_means(model, spec).sum()) * spec.cell_volume
    if not np.isfinite(mass) or mass <= 0.0:
        warnings.warn("degenerate event mass; gamma fixed to 1")
        return 1.0, True
    return n_events / mass, False


def calibrate_gamma(model: HypertimeModel, train: Dataset,
                    cfg: BuildConfig | None = None) -> float:
    """Recompute the calibration scale of `model` against `train`.

    Valued: gamma matches the training-set mean expected reading to the
    mean observed reading.  Event: gamma matches the predicted count
    over the training window to the number of events.  Degenerate data
    (e.g. all-zero readings) falls back to gamma = 1 with a warning.
    """
    if model.mode == VALUED:
        if train.mode != VALUED:
            raise ValueError("model and data modes differ")
        gamma, _ = _calibrate_valued(model, train)
    else:
        if train.mode != EVENT:
            raise ValueError("model and data modes differ")
        gamma, _ = _calibrate_event(model, len(train), cfg or BuildConfig())
    return gamma


# ---------------------------------------------------------------------------
# event grids


def _event_cell_means(model: HypertimeModel, spec: GridSpec,
                      subsample: int = 1) -> np.ndarray:
    """Mean (unscaled) mixture density per cell via midpoint subsampling."""
    _require_mode(model, EVENT)
    s = int(subsample)
    if s < 1:
        raise ValueError("subsample must be >= 1")
    d = spec.spatial_dim
    if d != model.layout.spatial_dim:
        raise ValueError("grid dimensionality does not match model")
    axes = [
        spec.spatial_lo[dim]
        + (np.arange(spec.n_spatial[dim] * s) + 0.5) * (spec.spatial_edges[dim] / s)
        for dim in range(d)
    ]
    if d:
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.reshape(-1) for m in mesh], axis=1)
    else:
        coords = np.empty((1, 0))
    coords_std = (coords - model.spatial_stats.mean) / model.spatial_stats.std
    t_axis = spec.t_lo + (np.arange(spec.n_temporal * s) + 0.5) * (spec.temporal_edge / s)
    ht = project_times(t_axis, model.projection)
    m_sp = coords_std.shape[0]
    dens = np.empty((m_sp, t_axis.shape[0]))
    chunk = max(1, 500_000 // max(m_sp, 1))
    for start in range(0, t_axis.shape[0], chunk):
        stop = min(start + chunk, t_axis.shape[0])
        block = np.empty(((stop - start) * m_sp, model.layout.width))
        block[:, :d] = np.tile(coords_std, (stop - start, 1))
        block[:, d:] = np.repeat(ht[start:stop], m_sp, axis=0)
        dens[:, start:stop] = (
            model.mixture.pdf(block).reshape(stop - start, m_sp).T
        )
    shape = []
    for dim in range(d):
        shape += [spec.n_spatial[dim], s]
    shape += [spec.n_temporal, s]
    arr = dens.reshape(shape)
    sub_axes = tuple(range(1, 2 * (d + 1), 2))
    return arr.mean(axis=sub_axes)


def predict_counts(model: HypertimeModel, spec: GridSpec,
                   subsample: int = 1) -> np.ndarray:
    """Predicted event count per grid cell (shape ``spec.shape``)."""
    return model.gamma * _event_cell_means(model, spec, subsample) * spec.cell_volume


def predict_cell_count(model: HypertimeModel, spatial_bounds, t_bounds,
                       subsample: int = 1) -> float:
    """Predicted number of events inside one spatio-temporal cell.

    `spatial_bounds` is a sequence of (lo, hi) per spatial dimension,
    `t_bounds` the (start, end) of the time slice.  Zero-extent cells
    are rejected.
    """
    _require_mode(model, EVENT)
    bounds = [(float(lo), float(hi)) for lo, hi in spatial_bounds]
    if len(bounds) != model.layout.spatial_dim:
        raise ValueError("cell dimensionality does not match model")
    t0, t1 = float(t_bounds[0]), float(t_bounds[1])
    if t1 <= t0 or any(hi <= lo for lo, hi in bounds):
        raise ValueError("cell has zero or negative extent")
    spec = GridSpec(
        np.array([lo for lo, _ in bounds]),
        np.array([hi for _, hi in bounds]),
        (1,) * len(bounds), t0, t1, 1,
    )
    return float(predict_counts(model, spec, subsample).reshape(-1)[0])


def event_residual_grid(model: HypertimeModel, events: Dataset,
                        spec: GridSpec, subsample: int = 1):
    """Counts vs predictions on a grid, plus the flattened residual series.

    The series holds ``predicted - observed`` per cell on the temporal
    bin-center timestamps (every spatial cell contributes one entry per
    bin, so timestamps repeat).
    """
    grid = grid_count(events, spec)
    grid.predicted = predict_counts(model, spec, subsample)
    eps = grid.predicted - grid.observed
    reps = int(np.prod(spec.n_spatial)) if spec.spatial_dim else 1
    times = np.tile(spec.temporal_centers, reps)
    return grid, ResidualSeries(times, eps.reshape(-1))


# ---------------------------------------------------------------------------
# build loop


def _resolve_stats(train: Dataset, cfg: BuildConfig) -> SpatialStats:
    if cfg.standardize and train.spatial_dim:
        return SpatialStats.from_dataset(train)
    return SpatialStats.identity(train.spatial_dim)


def _window_of(train: Dataset) -> TrainingWindow:
    if train.spatial_dim:
        lo, hi = train.coords.min(axis=0), train.coords.max(axis=0)
    else:
        lo = hi = np.empty(0)
    return TrainingWindow(lo, hi, float(train.times.min()),
                          float(train.times.max()))


def _reference_spec(window: TrainingWindow, cfg: BuildConfig) -> GridSpec:
    hi = np.where(window.spatial_hi > window.spatial_lo, window.spatial_hi,
                  window.spatial_lo + cfg.event_spatial_bin)
    return GridSpec.from_cell_size(
        window.spatial_lo, hi, window.t_lo, window.t_hi,
        cfg.event_spatial_bin, cfg.event_temporal_bin, expand=False,
    )


def _fit_mixture(vectors, layout, fitcfg: FitConfig) -> MixtureModel:
    if fitcfg.backend == "km":
        return km_fit(vectors, layout, fitcfg)
    return em_fit_stable(vectors, layout, fitcfg)


def _run_build(train: Dataset, cfg: BuildConfig,
               fitcfg: FitConfig) -> HypertimeModel:
    mode = train.mode
    stats = _resolve_stats(train, cfg)
    ds = standardize(train, stats)
    window = _window_of(train)
    try:
        candidates = default_candidates(train.duration, cfg.longest_period,
                                        cfg.n_candidates)
    except ValueError:
        # Data shorter than every candidate period: nothing periodic is
        # resolvable, so the search stops at h = 0.
        candidates = []
    if mode == EVENT:
        ref_spec = _reference_spec(window, cfg)
        observed = grid_count(train, ref_spec).observed
    proj = HypertimeProjection()
    best = None
    log: list[BuildStep] = []
    period_added = None
    while True:
        vectors, layout = assemble(ds, proj)
        mixture = _fit_mixture(vectors, layout, fitcfg)
        cand = HypertimeModel(mixture, proj, layout, 1.0, False, stats,
                              mode, window)
        if mode == VALUED:
            cand.gamma, cand.gamma_fallback = _calibrate_valued(cand, train)
            series = residuals(cand, train)
        else:
            cand.gamma, cand.gamma_fallback = _calibrate_event(
                cand, len(train), cfg)
            predicted = predict_counts(cand, ref_spec)
            eps = (predicted - observed).reshape(-1)
            reps = int(np.prod(ref_spec.n_spatial)) if ref_spec.spatial_dim else 1
            series = ResidualSeries(
                np.tile(ref_spec.temporal_centers, reps), eps)
        err = float(np.sqrt(np.mean(series.values ** 2)))
        if best is not None and err >= best.training_error:
            log.append(BuildStep(proj.h, err, period_added, kept=False))
            break
        cand.training_error = err
        log.append(BuildStep(proj.h, err, period_added, kept=True))
        best = cand
        if proj.h >= cfg.max_h or not candidates:
            break
        try:
            period_added = prominent_period(series, candidates,
                                            exclude=proj.periods)
        except ValueError:
            break
        proj = proj.extended(period_added)
    best.build_log = log
    return best


def build(train: Dataset, cfg: BuildConfig | None = None) -> HypertimeModel:
    """Fit a valued model, discovering periods from the residual spectrum."""
    cfg = cfg or BuildConfig()
    if train.mode != VALUED:
        raise ValueError("build expects valued data; use build_event")
    if len(train) < 2:
        raise ValueError("need at least two records")
    fitcfg = cfg.fit
    auto = cfg.auto_clusters
    if auto is None:
        auto = fitcfg.backend == "km"
    if auto:
        selection = select_cluster_count(train, cfg)
        fitcfg = replace(fitcfg, n_clusters=selection.chosen)
    return _run_build(train, cfg, fitcfg)


def build_event(train: Dataset, cfg: BuildConfig | None = None) -> HypertimeModel:
    """Fit an event-count model; the same loop on grid residuals."""
    cfg = cfg or BuildConfig()
    if train.mode != EVENT:
        raise ValueError("build_event expects event data; use build")
    if len(train) < 2:
        raise ValueError("need at least two records")
    if train.duration <= 0:
        raise ValueError("events span zero time")
    return _run_build(train, cfg, cfg.fit)


@dataclass(frozen=True)
class ClusterCountSelection:
    """Scores of the tried cluster counts and the accepted one."""

    pairs: list[tuple[int, float]]
    chosen: int


def select_cluster_count(train: Dataset,
                         cfg: BuildConfig | None = None) -> ClusterCountSelection:
    """Pick the mixture size for the k-means route at h = 0.

    Grows n while the residual spectral sum keeps strictly falling,
    i.e. while an extra cluster removes temporal structure (or overall
    magnitude) from the residuals; stops at the first non-improvement
    or at ``cfg.cluster_cap``.
    """
    cfg = cfg or BuildConfig()
    if train.mode != VALUED:
        raise ValueError("cluster-count selection needs valued data")
    cap = min(cfg.cluster_cap, len(train))
    stats = _resolve_stats(train, cfg)
    ds = standardize(train, stats)
    window = _window_of(train)
    vectors, layout = assemble(ds, HypertimeProjection())
    try:
        candidates = default_candidates(train.duration, cfg.longest_period,
                                        cfg.n_candidates)
    except ValueError:
        candidates = []

    def score(n: int) -> float:
        fitcfg = replace(cfg.fit, n_clusters=n, backend="km")
        mixture = km_fit(vectors, layout, fitcfg)
        model = HypertimeModel(mixture, HypertimeProjection(), layout, 1.0,
                               False, stats, VALUED, window)
        model.gamma, model.gamma_fallback = _calibrate_valued(model, train)
        return spectral_sum(residuals(model, train), candidates)

    pairs = [(1, score(1))]
    chosen = 1
    for m in range(2, cap + 1):
        pairs.append((m, score(m)))
        if pairs[-2][1] > pairs[-1][1]:
            chosen = m
        else:
            break
    return ClusterCountSelection(pairs, chosen)


# ---------------------------------------------------------------------------
# serialization


def model_to_dict(model: HypertimeModel) -> dict:
    log = model.mixture.fit_log
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mode": model.mode,
        "gamma": model.gamma,
        "gamma_fallback": model.gamma_fallback,
        "periods": [float(p) for p in model.projection.periods],
        "layout": {
            "has_value": model.layout.has_value,
            "spatial_dim": model.layout.spatial_dim,
            "n_periods": model.layout.n_periods,
        },
        "spatial_stats": {
            "mean": model.spatial_stats.mean.tolist(),
            "std": model.spatial_stats.std.tolist(),
        },
        "window": {
            "spatial_lo": model.window.spatial_lo.tolist(),
            "spatial_hi": model.window.spatial_hi.tolist(),
            "t_lo": model.window.t_lo,
            "t_hi": model.window.t_hi,
        },
        "training_error": model.training_error,
        "components": [
            {
                "weight": c.weight,
                "mean": c.mean.tolist(),
                "covariance": c.covariance.tolist(),
            }
            for c in model.mixture.components
        ],
        "fit": None if log is None else {
            "iterations": log.iterations,
            "log_likelihood": log.log_likelihood,
            "ll_trace": list(log.ll_trace),
            "restarts": log.restarts,
            "diagonal_fallback": log.diagonal_fallback,
            "raw_eigenvalues": log.raw_eigenvalues,
        },
        "build_log": [
            {"h": s.h, "error": s.error, "period": s.period, "kept": s.kept}
            for s in model.build_log
        ],
    }


def model_from_dict(payload: dict) -> HypertimeModel:
    try:
        if payload["format"] != MODEL_FORMAT:
            raise ValueError(f"unrecognized format {payload['format']!r}")
        if payload["version"] != MODEL_VERSION:
            raise ValueError(f"unsupported version {payload['version']!r}")
        layout = DimensionLayout(**payload["layout"])
        comps = [
            GaussianComponent(c["weight"], np.asarray(c["mean"]),
                              np.asarray(c["covariance"]))
            for c in payload["components"]
        ]
        fit = payload.get("fit")
        fit_log = None
        if fit is not None:
            raw = fit.get("raw_eigenvalues")
            fit_log = FitLog(
                iterations=fit["iterations"],
                log_likelihood=fit["log_likelihood"],
                ll_trace=list(fit["ll_trace"]),
                restarts=fit["restarts"],
                diagonal_fallback=fit["diagonal_fallback"],
                raw_eigenvalues=None if raw is None else
                [(float(lo), float(hi)) for lo, hi in raw],
            )
        mixture = MixtureModel(comps, layout, fit_log)
        stats = SpatialStats(np.asarray(payload["spatial_stats"]["mean"]),
                             np.asarray(payload["spatial_stats"]["std"]))
        window = TrainingWindow(
            np.asarray(payload["window"]["spatial_lo"]),
            np.asarray(payload["window"]["spatial_hi"]),
            payload["window"]["t_lo"], payload["window"]["t_hi"],
        )
        gamma = float(payload["gamma"])
        if not np.isfinite(gamma) or gamma <= 0:
            raise ValueError("gamma must be finite and positive")
        model = HypertimeModel(
            mixture,
            HypertimeProjection(tuple(payload["periods"])),
            layout, gamma, bool(payload["gamma_fallback"]), stats,
            payload["mode"], window,
            training_error=float(payload["training_error"]),
            build_log=[
                BuildStep(s["h"], s["error"], s["period"], s["kept"])
                for s in payload["build_log"]
            ],
        )
    except KeyError as exc:
        raise ValueError(f"model payload missing key {exc}") from None
    if model.mode not in (VALUED, EVENT):
        raise ValueError(f"unknown mode {model.mode!r}")
    if model.layout.n_periods != len(model.projection.periods):
        raise ValueError("layout and period list disagree")
    return model


def save_model(model: HypertimeModel, path) -> None:
    """Write the model as versioned JSON (write-then-rename)."""
    text = json.dumps(model_to_dict(model), indent=2, sort_keys=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


def load_model(path) -> HypertimeModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
