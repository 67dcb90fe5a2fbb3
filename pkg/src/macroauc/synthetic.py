"""Synthetic multi-label data with controlled per-label positive counts."""
from __future__ import annotations

import math

import numpy as np

from .dataset import MultiLabelDataset


def make_multilabel(n, d, pos_counts, noise=0.5, seed=0, shared=0.0, correlation=0.0,
                    name=None) -> MultiLabelDataset:
    """Linear-latent multi-label data.

    Each label ``k`` ranks instances by ``w_k . x + noise * e`` and marks the
    top ``pos_counts[k]`` as positive, so label frequencies are exact.

    Parameters
    ----------
    n, d : int
    pos_counts : sequence of int
        Positives per label, each in ``[0, n]``.
    noise : float
        Standard deviation of the latent label noise.
    shared : float
        Weight in ``[0, 1)`` of a direction common to all labels.
    correlation : float
        Pairwise feature correlation in ``[0, 1)`` (equicorrelated Gaussian).
    """
    pos_counts = np.asarray(pos_counts, dtype=np.int64)
    if pos_counts.ndim != 1 or np.any(pos_counts < 0) or np.any(pos_counts > n):
        raise ValueError("pos_counts must be integers in [0, n]")
    rng = np.random.default_rng(seed)
    K = pos_counts.size
    X = rng.standard_normal((n, d))
    if correlation:
        if not 0.0 <= correlation < 1.0:
            raise ValueError("correlation must lie in [0, 1)")
        X = math.sqrt(1.0 - correlation) * X + math.sqrt(correlation) * rng.standard_normal((n, 1))
    common = rng.standard_normal(d)
    W = rng.standard_normal((K, d))
    W = (1.0 - shared) * W + shared * common
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    latent = X @ W.T + noise * rng.standard_normal((n, K))
    Y = -np.ones((n, K), dtype=np.int8)
    order = np.argsort(-latent, axis=0, kind="stable")
    for k, p in enumerate(pos_counts):
        Y[order[:p, k], k] = 1
    return MultiLabelDataset(X, Y, name=name or f"synthetic-n{n}-K{K}")


def balanced(n=200, d=5, K=3, noise=0.5, seed=0, correlation=0.0) -> MultiLabelDataset:
    """Every label has exactly ``n // 2`` positives (``tau = 1/2`` for even ``n``)."""
    return make_multilabel(n, d, [n // 2] * K, noise=noise, seed=seed, correlation=correlation,
                           name=f"balanced-n{n}")


def imbalanced(n=2000, d=10, K=20, tau_min=None, tau_max=0.05, noise=0.5, seed=0,
               correlation=0.0) -> MultiLabelDataset:
    """Positive counts spread geometrically from ``n * tau_min`` to ``n * tau_max``.

    ``tau_min`` defaults to ``1 / n`` (a single positive).
    """
    lo = 1.0 if tau_min is None else max(1.0, tau_min * n)
    hi = max(lo, tau_max * n)
    counts = np.unique(np.round(np.geomspace(lo, hi, K)).astype(np.int64))
    if counts.size < K:
        counts = np.round(np.geomspace(lo, hi, K)).astype(np.int64)
    return make_multilabel(n, d, counts, noise=noise, seed=seed, correlation=correlation,
                           name=f"imbalanced-n{n}")


def random_counts_dataset(rng: np.random.Generator, n_max=60, d_max=5, K_max=3) -> MultiLabelDataset:
    """Small random dataset with every label non-degenerate (for property tests)."""
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    K = int(rng.integers(1, K_max + 1))
    X = rng.standard_normal((n, d))
    Y = -np.ones((n, K), dtype=np.int8)
    for k in range(K):
        p = int(rng.integers(1, n))
        Y[rng.choice(n, size=p, replace=False), k] = 1
    return MultiLabelDataset(X, Y)


def bag_of_words(n, d, pos_counts, density=0.05, noise=0.5, seed=0, name=None) -> MultiLabelDataset:
    """Sparse non-negative count features, as in text-like benchmarks.

    Each entry is nonzero with probability ``density`` and then Poisson-
    distributed (shifted by one). Labels come from a linear latent score on
    the raw counts, top ``pos_counts[k]`` positive.
    """
    pos_counts = np.asarray(pos_counts, dtype=np.int64)
    if pos_counts.ndim != 1 or np.any(pos_counts < 0) or np.any(pos_counts > n):
        raise ValueError("pos_counts must be integers in [0, n]")
    rng = np.random.default_rng(seed)
    K = pos_counts.size
    mask = rng.random((n, d)) < density
    X = mask * (1.0 + rng.poisson(1.0, size=(n, d)))
    W = rng.standard_normal((K, d))
    latent = X @ W.T
    latent = latent / latent.std(axis=0) + noise * rng.standard_normal((n, K))
    Y = -np.ones((n, K), dtype=np.int8)
    order = np.argsort(-latent, axis=0, kind="stable")
    for k, p in enumerate(pos_counts):
        Y[order[:p, k], k] = 1
    return MultiLabelDataset(X, Y, name=name or f"bow-n{n}-K{K}")


def geometric_counts(n, K, tau_min=None, tau_max=0.05) -> np.ndarray:
    """``K`` positive counts spaced geometrically between ``n * tau_min`` (default 1) and ``n * tau_max``."""
    lo = 1.0 if tau_min is None else max(1.0, tau_min * n)
    hi = max(lo, tau_max * n)
    return np.round(np.geomspace(lo, hi, K)).astype(np.int64)
