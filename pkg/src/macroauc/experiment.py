"""Fit/evaluate helpers and the cross-validated lambda search used by the CLI."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import MultiLabelDataset, Preprocessor, kfold, split
from .evaluation import macro_auc
from .optim import TrainConfig, TrainingDivergedError, train
from .risk import Objective

LAMBDA_GRID = tuple(10.0 ** e for e in range(-6, 3))


def fit_model(ds: MultiLabelDataset, algorithm, loss, lam, config: TrainConfig, scale="standardize"):
    """Fit the preprocessor on ``ds``, then train; the returned model carries the preprocessor."""
    pre = Preprocessor.fit(ds, scale)
    obj = Objective(algorithm, lam, loss, pre.transform(ds))
    report = train(obj, config)
    report.model.preprocess = pre
    return report


def score(model, ds: MultiLabelDataset) -> np.ndarray:
    if model.preprocess is not None:
        ds = model.preprocess.transform(ds)
    return model.scores(ds)


def evaluate(model, ds: MultiLabelDataset):
    return macro_auc(score(model, ds), ds)


def _fold_task(args):
    (rep, algo, lam, fold, tr, va, loss, config, scale) = args
    try:
        model = fit_model(tr, algo, loss, lam, config, scale).model
        auc = evaluate(model, va).macro_auc
    except (TrainingDivergedError, ValueError):
        auc = math.nan
    return (rep, algo, lam, fold), auc


def _map(fn, tasks, jobs):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks, chunksize=1))


def select_lambda(mean_scores: dict) -> float:
    """Largest mean validation score; ties go to the larger lambda. NaN entries are ignored."""
    finite = {lam: s for lam, s in mean_scores.items() if math.isfinite(s)}
    if not finite:
        raise ValueError("every lambda failed on every fold")
    best = max(finite.values())
    return max(lam for lam, s in finite.items() if s == best)


@dataclass
class CvResult:
    fold_scores: dict      # (rep, algo, lam, fold) -> validation Macro-AUC
    best_lambda: dict      # (rep, algo) -> lambda
    test_auc: dict         # (rep, algo) -> test Macro-AUC
    models: dict           # (rep, algo) -> LinearModel

    def summary(self, algorithms):
        out = {}
        for algo in algorithms:
            vals = np.array([v for (r, a), v in sorted(self.test_auc.items()) if a == algo])
            out[algo] = (float(vals.mean()), float(vals.std()), vals.size)
        return out


def cross_validate(ds: MultiLabelDataset, algorithms=("pa", "u1", "u2"), loss="logistic2",
                   grid=LAMBDA_GRID, folds=3, reps=5, test_frac=1 / 3, seed=0,
                   config: TrainConfig = TrainConfig(), scale="standardize", jobs=1) -> CvResult:
    """Repeated (split, k-fold lambda search, retrain, test) protocol.

    Repetition ``r`` uses seed ``seed + r`` for the split, the folds and the
    optimizer, so the whole run is deterministic.
    """
    grid = tuple(sorted(set(float(g) for g in grid)))
    if not grid:
        raise ValueError("lambda grid is empty")
    splits = {}
    tasks = []
    for r in range(reps):
        s = seed + r
        train_ds, test_ds = split(ds, test_frac, s)
        splits[r] = (train_ds, test_ds)
        cfg = TrainConfig(**{**config.__dict__, "seed": s})
        for f, (tr, va) in enumerate(kfold(train_ds, folds, s)):
            for algo in algorithms:
                for lam in grid:
                    tasks.append((r, algo, lam, f, tr, va, loss, cfg, scale))
    fold_scores = dict(_map(_fold_task, tasks, jobs))

    best, test_auc, models = {}, {}, {}
    final = []
    for r in range(reps):
        for algo in algorithms:
            means = {lam: float(np.mean([fold_scores[(r, algo, lam, f)] for f in range(folds)]))
                     for lam in grid}
            best[(r, algo)] = select_lambda(means)
            final.append((r, algo))
    for r, algo in final:
        train_ds, test_ds = splits[r]
        cfg = TrainConfig(**{**config.__dict__, "seed": seed + r})
        model = fit_model(train_ds, algo, loss, best[(r, algo)], cfg, scale).model
        models[(r, algo)] = model
        test_auc[(r, algo)] = evaluate(model, test_ds).macro_auc
    return CvResult(fold_scores, best, test_auc, models)
