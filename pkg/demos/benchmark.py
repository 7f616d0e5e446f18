"""Benchmark the hypertime models against the classic baselines.

Trains on four weeks of a daily+weekly rhythm, evaluates on five
held-out weeks, and runs paired t-tests over the per-fold errors to
find which methods dominate which.
"""

import numpy as np

from hypertime import (BuildConfig, Dataset, FitConfig, build,
                       default_candidates, fremen_predictor, hist_predictor,
                       mean_predictor, pairwise_ttests, rmse)

DAY = 86400.0
WEEK = 604800.0


def generate(n_days, seed, noise=0.05, step=600.0):
    t = np.arange(0.0, n_days * DAY, step)
    a = (0.6 + 0.25 * np.cos(2 * np.pi * t / DAY)
         + 0.15 * np.cos(2 * np.pi * t / WEEK))
    rng = np.random.default_rng(seed)
    return Dataset(t, np.empty((t.size, 0)), a + rng.normal(0, noise, t.size))


def main():
    print("== training data: four weeks, daily + weekly cosine ==")
    train = generate(28, seed=11)
    candidates = default_candidates(train.duration)

    print()
    print("== fitting the contestants ==")
    em_model = build(train, BuildConfig(
        fit=FitConfig(n_clusters=1, seed=42), max_h=5, auto_clusters=False))
    km_model = build(train, BuildConfig(
        fit=FitConfig(seed=42, backend="km"), max_h=5))
    predictors = {
        "HyT-EM_1": em_model,
        "HyT-KM": km_model,
        "Mean": mean_predictor(train),
        "Hist_24": hist_predictor(train, 24),
        "FreMEn_2": fremen_predictor(train, 2, candidates),
    }
    print(f"HyT-EM periods: {[f'{p:.0f}' for p in em_model.projection.periods]}")
    print(f"HyT-KM clusters: {km_model.mixture.n}")

    print()
    print("== per-fold RMSE on five held-out weeks ==")
    per_fold = {name: [] for name in predictors}
    for seed in (101, 102, 103, 104, 105):
        fold = generate(7, seed=seed)
        for name, predictor in predictors.items():
            preds = predictor.predict(None, fold.times)
            per_fold[name].append(rmse(preds, fold.values))
    width = max(len(n) for n in per_fold)
    print(f"{'method':{width}s}  " + "  ".join(f"fold{i}" for i in range(5)))
    for name, errs in per_fold.items():
        print(f"{name:{width}s}  " + "  ".join(f"{e:.4f}" for e in errs))

    print()
    print("== paired t-tests (alpha = 0.05) ==")
    report = pairwise_ttests(per_fold, alpha=0.05)
    for name, err in sorted(report.mean_errors.items(), key=lambda kv: kv[1]):
        print(f"mean error  {name:{width}s}  {err:.4f}")
    print()
    if report.edges:
        for a, b in report.edges:
            print(f"dominance: {a} beats {b}")
    else:
        print("no statistically significant ordering")


if __name__ == "__main__":
    main()
