"""Generalization-bound formulas for the three learning algorithms.

Every bound is ``risk + complexity + deviation`` where the complexity term
scales with ``rho * r * Lambda / sqrt(n)`` times Imb1 and the deviation term
with ``M * sqrt(log(2/delta) / (2n))`` times Imb2 (or Imb1, see ``variant``).
Logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import DegenerateLabelsError, LabelStats, MultiLabelDataset
from .loss import get_loss
from .risk import AlgorithmKind

VARIANTS = ("imb2", "imb1")


@dataclass(frozen=True)
class ModelConstants:
    """``Lambda`` (max weight-row norm), ``r`` (max feature norm), ``rho``, and ``B = l(-Lambda r)``."""

    Lambda: float
    r: float
    rho: float
    B: float

    def __post_init__(self):
        for name in ("Lambda", "r", "rho", "B"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def estimate_model_constants(model, ds: MultiLabelDataset, base=None) -> ModelConstants:
    base = get_loss(base or model.loss)
    W = np.asarray(model.weights, dtype=np.float64)
    Lam = float(np.linalg.norm(W, axis=1).max()) if W.size else 0.0
    X = ds.features
    if hasattr(X, "multiply"):
        sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    else:
        sq = np.einsum("ij,ij->i", X, X)
    r = float(math.sqrt(sq.max())) if sq.size else 0.0
    return ModelConstants(Lambda=Lam, r=r, rho=base.lipschitz, B=base.bound_on(Lam * r))


@dataclass(frozen=True)
class BoundQuery:
    algorithm: AlgorithmKind
    delta: float
    n: int
    stats: LabelStats
    constants: ModelConstants
    risk: float
    variant: str = "imb2"

    def __post_init__(self):
        object.__setattr__(self, "algorithm", AlgorithmKind(str(self.algorithm)))
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not (math.isfinite(self.risk) and self.risk >= 0):
            raise ValueError(f"risk term must be finite and >= 0, got {self.risk}")
        if self.stats.usable.size == 0:
            raise DegenerateLabelsError("no usable labels")


@dataclass(frozen=True)
class BoundReport:
    algorithm: str
    risk_term: float
    complexity_term: float
    deviation_term: float
    total: float
    loss_bound: float
    variant: str
    delta: float
    constants: ModelConstants
    case: str = "general"

    CSV_HEADER = "dataset,algorithm,case,variant,risk,complexity,deviation,total,Lambda,r,B,M,delta"

    def csv_row(self, dataset="") -> str:
        c = self.constants
        vals = (self.risk_term, self.complexity_term, self.deviation_term, self.total,
                c.Lambda, c.r, c.B, self.loss_bound, self.delta)
        return ",".join([dataset, self.algorithm, self.case, self.variant] + [repr(float(v)) for v in vals])


def write_bounds_csv(rows, path, comment: str | None = None) -> None:
    """``rows`` is a sequence of ``(dataset_name, BoundReport)``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(BoundReport.CSV_HEADER + "\n")
        for name, rep in rows:
            fh.write(rep.csv_row(name) + "\n")


def _dev_root(delta, n):
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def _report(q: BoundQuery, risk, complexity, deviation, M, case="general"):
    return BoundReport(q.algorithm.value, float(risk), float(complexity), float(deviation),
                       float(risk + complexity + deviation), float(M), q.variant, q.delta,
                       q.constants, case)


def _check(q: BoundQuery, algo: AlgorithmKind):
    if q.algorithm is not algo:
        raise ValueError(f"query is for {q.algorithm.value}, not {algo.value}")


def bound_pa(q: BoundQuery) -> BoundReport:
    _check(q, AlgorithmKind.PA)
    c, s = q.constants, q.stats
    complexity = 4.0 * c.rho * c.r * c.Lambda / math.sqrt(q.n) * s.imb1
    deviation = 3.0 * c.B * _dev_root(q.delta, q.n) * s.imb2
    return _report(q, q.risk, complexity, deviation, c.B)


def bound_u1(q: BoundQuery) -> BoundReport:
    """Bound for the class-frequency-weighted univariate loss, scaled by ``1 / tau_min``.

    ``q.variant`` picks the deviation factor: ``"imb2"`` (default) or ``"imb1"``.
    """
    _check(q, AlgorithmKind.U1)
    c, s = q.constants, q.stats
    t = s.tau_min
    F = s.imb2 if q.variant == "imb2" else s.imb1
    complexity = 4.0 * c.rho * c.r * c.Lambda / (t * math.sqrt(q.n)) * s.imb1
    deviation = 3.0 * c.B / t * _dev_root(q.delta, q.n) * F
    return _report(q, q.risk / t, complexity, deviation, c.B / t)


def bound_u2(q: BoundQuery) -> BoundReport:
    _check(q, AlgorithmKind.U2)
    c, s = q.constants, q.stats
    complexity = 8.0 * c.rho * c.r * c.Lambda / math.sqrt(q.n) * s.imb1
    deviation = 6.0 * c.B * _dev_root(q.delta, q.n) * s.imb2
    return _report(q, q.risk, complexity, deviation, 2.0 * c.B)


BOUNDS = {AlgorithmKind.PA: bound_pa, AlgorithmKind.U1: bound_u1, AlgorithmKind.U2: bound_u2}


def bound(q: BoundQuery) -> BoundReport:
    return BOUNDS[q.algorithm](q)


def bound_corollary(case: str, algorithm, q: BoundQuery) -> BoundReport:
    """Closed-form bound for a balanced (every ``tau = 1/2``) or extreme (every ``tau = 1/n``) sample.

    Raises ``ValueError`` if ``q.stats`` is not exactly in the declared case.
    The risk term is taken as given for the algorithm (``R_u1`` for u1).
    """
    algo = AlgorithmKind(str(algorithm))
    _check(q, algo)
    s, c, n = q.stats, q.constants, q.n
    if s.degenerate_labels:
        raise ValueError("corollaries need every label usable")
    L = math.log(2.0 / q.delta)
    crl = c.rho * c.r * c.Lambda
    if case == "balanced":
        if not np.all(2 * np.minimum(s.pos_count, s.neg_count) == n):
            raise ValueError("stats are not balanced (every tau must equal 1/2)")
        root2, root = math.sqrt(2.0), math.sqrt(L / (2.0 * n))
        if algo is AlgorithmKind.PA:
            return _report(q, q.risk, 4.0 * root2 * crl / math.sqrt(n), 3.0 * root2 * c.B * root, c.B, case)
        risk = 2.0 * q.risk if algo is AlgorithmKind.U1 else q.risk
        M = 2.0 * c.B
        return _report(q, risk, 8.0 * root2 * crl / math.sqrt(n), 6.0 * root2 * c.B * root, M, case)
    if case == "extreme":
        if not np.all(np.minimum(s.pos_count, s.neg_count) == 1):
            raise ValueError("stats are not extremely imbalanced (every tau must equal 1/n)")
        root = math.sqrt(L / 2.0)
        if algo is AlgorithmKind.PA:
            # theorem at tau = 1/n; keeps the 1/2 under the root
            return _report(q, q.risk, 4.0 * crl, 3.0 * c.B * root, c.B, case)
        if algo is AlgorithmKind.U1:
            # Imb1 and Imb2 coincide at tau = 1/n, so the variant is irrelevant
            return _report(q, n * q.risk, 4.0 * n * crl, 3.0 * c.B * n * root, n * c.B, case)
        return _report(q, q.risk, 8.0 * crl, 6.0 * c.B * root, 2.0 * c.B, case)
    raise ValueError(f"unknown case {case!r}; expected 'balanced' or 'extreme'")


def analytic_rademacher_bound(algorithm, stats: LabelStats, constants: ModelConstants, n: int) -> float:
    """Upper bound on the hypothesis-space fractional Rademacher complexity of a linear class."""
    algo = AlgorithmKind(str(algorithm))
    if stats.usable.size == 0:
        raise DegenerateLabelsError("no usable labels")
    base = constants.Lambda * constants.r / math.sqrt(n) * stats.imb1
    return base if algo is AlgorithmKind.U1 else 2.0 * base
