"""Pair sets, fractional independent covers and Monte-Carlo fractional Rademacher estimates.

For one label the transformed sample is every (positive, negative) pair.
Two pairs are dependent when they share an instance, so an independent set
is a partial matching between positives and negatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import DegenerateLabelsError, MultiLabelDataset


@dataclass(frozen=True)
class PairSet:
    """All positive/negative pairs of one label, enumerated row-major.

    Pair ``i * q + j`` is ``(pos_index[i], neg_index[j])``.
    """

    label: int
    pos_index: np.ndarray
    neg_index: np.ndarray

    @property
    def p(self) -> int:
        return int(self.pos_index.size)

    @property
    def q(self) -> int:
        return int(self.neg_index.size)

    @property
    def m(self) -> int:
        return self.p * self.q

    @property
    def pairs(self) -> np.ndarray:
        """``m x 2`` array of instance indices."""
        P, N = np.meshgrid(self.pos_index, self.neg_index, indexing="ij")
        return np.column_stack([P.ravel(), N.ravel()])


def build_pairs(ds: MultiLabelDataset, k: int) -> PairSet:
    if not 0 <= k < ds.K:
        raise IndexError(f"label {k} out of range for K={ds.K}")
    pos = np.flatnonzero(ds.labels[:, k] == 1)
    neg = np.flatnonzero(ds.labels[:, k] == -1)
    if pos.size == 0 or neg.size == 0:
        raise DegenerateLabelsError(f"label {k} has no positives or no negatives")
    return PairSet(int(k), pos, neg)


@dataclass(frozen=True)
class FractionalCover:
    """Weighted family of pair-index sets over a ``p x q`` pair grid."""

    p: int
    q: int
    sets: tuple
    weights: np.ndarray

    @property
    def J(self) -> int:
        return len(self.sets)

    @property
    def chromatic(self) -> float:
        return float(np.sum(self.weights)) if self.J else 0.0

    def as_arrays(self):
        """``(pos, neg)`` index matrices of shape ``J x size`` when all sets share a size."""
        sizes = {len(s) for s in self.sets}
        if len(sizes) != 1:
            raise ValueError("sets have different sizes")
        idx = np.array([np.asarray(s) for s in self.sets], dtype=np.int64)
        return idx // self.q, idx % self.q


def fractional_cover(p: int, q: int) -> FractionalCover:
    """Modular-shift cover with ``max(p, q)`` unit-weight matchings.

    For ``p <= q`` set ``j`` pairs positive ``i`` with negative ``(i + j) mod q``;
    for ``p > q`` the roles swap.
    """
    p, q = int(p), int(q)
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    if p <= q:
        i = np.arange(p)
        sets = tuple(i * q + (i + j) % q for j in range(q))
    else:
        b = np.arange(q)
        sets = tuple(((b + j) % p) * q + b for j in range(p))
    return FractionalCover(p, q, sets, np.ones(len(sets)))


@dataclass
class CoverCheck:
    ok: bool
    dependent_sets: list = field(default_factory=list)
    uncovered: list = field(default_factory=list)
    miscovered: list = field(default_factory=list)

    def __bool__(self):
        return self.ok

    @property
    def message(self) -> str:
        if self.ok:
            return "valid cover"
        parts = []
        if self.dependent_sets:
            parts.append(f"dependent set(s) {self.dependent_sets[:5]}")
        if self.uncovered:
            parts.append(f"uncovered vertex {self.uncovered[:5]}")
        if self.miscovered:
            parts.append(f"cover weight != 1 at {self.miscovered[:5]}")
        return "; ".join(parts)


def verify_cover(cover: FractionalCover, pairs=None, atol: float = 1e-12) -> CoverCheck:
    """Check independence of every set and unit total weight on every pair.

    ``pairs`` may be a :class:`PairSet` or ``(p, q)``; it defaults to the
    cover's own grid.
    """
    if pairs is None:
        p, q = cover.p, cover.q
    elif isinstance(pairs, PairSet):
        p, q = pairs.p, pairs.q
    else:
        p, q = pairs
    m = p * q
    if len(cover.weights) != cover.J:
        raise ValueError("one weight per set required")
    weight = np.zeros(m)
    dependent = []
    for j, (members, w) in enumerate(zip(cover.sets, cover.weights)):
        members = np.asarray(members, dtype=np.int64)
        if members.size and (members.min() < 0 or members.max() >= m):
            raise IndexError(f"set {j} has a pair index outside [0, {m})")
        pos, neg = members // q, members % q
        if np.unique(pos).size != pos.size or np.unique(neg).size != neg.size:
            dependent.append(j)
        np.add.at(weight, members, w)
    uncovered = [int(i) for i in np.flatnonzero(weight == 0)]
    miscovered = [int(i) for i in np.flatnonzero((weight != 0) & (np.abs(weight - 1.0) > atol))]
    ok = not (dependent or uncovered or miscovered)
    return CoverCheck(ok, dependent, uncovered, miscovered)


def janson_decompose(values, cover: FractionalCover) -> float:
    """Weighted sum over cover sets; equals ``sum(values)`` for a valid cover."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size != cover.p * cover.q:
        raise ValueError(f"expected {cover.p * cover.q} values, got {values.size}")
    total = 0.0
    for members, w in zip(cover.sets, cover.weights):
        total += float(w) * float(values[np.asarray(members, dtype=np.int64)].sum())
    return total


@dataclass(frozen=True)
class RademacherEstimate:
    draws: int
    mean: float
    standard_error: float
    seed: int
    values: np.ndarray = field(repr=False, default=None)


# elements of the per-label difference tensor held in memory at once
_CHUNK = 1 << 22


def _label_terms(ds: MultiLabelDataset, k: int):
    ps = build_pairs(ds, k)
    X = ds.dense_features()
    cover = fractional_cover(ps.p, ps.q)
    pos, neg = cover.as_arrays()
    D = X[ps.pos_index][pos] - X[ps.neg_index][neg]  # J x size x d
    return ps, cover, pos, neg, D


def mc_fractional_rademacher(ds: MultiLabelDataset, labels=None, Lambda: float = 1.0,
                             draws: int = 2000, seed: int = 0) -> RademacherEstimate:
    """Monte-Carlo fractional Rademacher complexity of ``{x -> w.x : ||w|| <= Lambda}`` on the pairs.

    Each draw uses ``numpy.random.default_rng([seed, draw])`` and one sign per
    pair, shared by every cover set containing it. The supremum over the ball
    is ``Lambda`` times the norm of the signed sum of difference vectors.
    """
    if draws < 2:
        raise ValueError("draws must be >= 2")
    if not (math.isfinite(Lambda) and Lambda >= 0):
        raise ValueError("Lambda must be finite and >= 0")
    labels = list(range(ds.K)) if labels is None else [int(k) for k in labels]
    if not labels:
        raise ValueError("need at least one label")
    terms = [_label_terms(ds, k) for k in labels]
    for ps, _, _, _, D in terms:
        if D.size > _CHUNK * 8:
            raise ValueError(f"label {ps.label}: {ps.m} pairs is too many for Monte-Carlo estimation")
    vals = np.empty(draws)
    for t in range(draws):
        rng = np.random.default_rng([seed, t])
        acc = 0.0
        for ps, cover, pos, neg, D in terms:
            sigma = rng.integers(0, 2, size=(ps.p, ps.q)) * 2.0 - 1.0
            S = sigma[pos, neg]  # J x size
            sums = np.einsum("js,jsd->jd", S, D)
            norms = np.sqrt(np.einsum("jd,jd->j", sums, sums))
            acc += float(cover.weights @ norms) / ps.m
        vals[t] = acc / len(terms)
    vals = Lambda * vals
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(draws))
    return RademacherEstimate(draws, mean, se, seed, vals)
