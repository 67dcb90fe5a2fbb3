"""Base margin losses and the pointwise ranking losses built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)

# integer codes shared with the compiled kernels
HINGE, LOGISTIC_BASE2, LOGISTIC_NATURAL = 0, 1, 2

_ALIASES = {
    "hinge": "hinge",
    "logistic-base2": "logistic-base2",
    "logistic2": "logistic-base2",
    "logistic": "logistic-base2",
    "logistic-natural": "logistic-natural",
    "logistic-e": "logistic-natural",
}

_CODES = {"hinge": HINGE, "logistic-base2": LOGISTIC_BASE2, "logistic-natural": LOGISTIC_NATURAL}

# short names used in files and on the command line
CLI_NAMES = {"hinge": "hinge", "logistic-base2": "logistic2", "logistic-natural": "logistic-e"}


@dataclass(frozen=True)
class BaseLoss:
    """A convex, nonincreasing margin loss ``l(t)`` with ``l(t) >= [t <= 0]``.

    ``lipschitz`` is the global Lipschitz constant; ``curvature`` bounds
    ``l''`` for the smooth variants (used only to pick safe step sizes).
    """

    kind: str

    def __post_init__(self):
        if self.kind not in _CODES:
            raise ValueError(f"unknown base loss {self.kind!r}")

    @property
    def code(self) -> int:
        return _CODES[self.kind]

    @property
    def cli_name(self) -> str:
        return CLI_NAMES[self.kind]

    @property
    def lipschitz(self) -> float:
        if self.kind == "logistic-base2":
            return 1.0 / LN2
        return 1.0

    @property
    def smooth(self) -> bool:
        return self.kind != "hinge"

    @property
    def curvature(self) -> float:
        if self.kind == "logistic-base2":
            return 0.25 / LN2
        if self.kind == "logistic-natural":
            return 0.25
        # hinge is not smooth; 1 is a working scale for step-size heuristics
        return 1.0

    def value(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "hinge":
            return np.maximum(0.0, 1.0 - t)
        out = np.logaddexp(0.0, -t)
        if self.kind == "logistic-base2":
            out = out / LN2
        return out

    def deriv(self, t):
        """Derivative; for hinge the subgradient ``-1`` for ``t < 1`` and ``0`` from ``t = 1`` on."""
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "hinge":
            return np.where(t < 1.0, -1.0, 0.0)
        # -1 / (1 + e^t), written to avoid overflow
        out = -0.5 * (1.0 - np.tanh(0.5 * t))
        if self.kind == "logistic-base2":
            out = out / LN2
        return out

    def bound_on(self, radius: float) -> float:
        """Largest loss value on scores in ``[-radius, radius]``."""
        if radius < 0 or not math.isfinite(radius):
            raise ValueError(f"radius must be finite and >= 0, got {radius}")
        return float(self.value(-radius))


def get_loss(name: str | BaseLoss) -> BaseLoss:
    if isinstance(name, BaseLoss):
        return name
    try:
        return BaseLoss(_ALIASES[name])
    except KeyError:
        raise ValueError(f"unknown base loss {name!r}; choose from {sorted(_ALIASES)}") from None


def _check_finite(*xs):
    for x in xs:
        if not math.isfinite(x):
            raise ValueError(f"expected a finite real, got {x!r}")


def eval_base(loss: BaseLoss, t: float) -> float:
    _check_finite(t)
    return float(loss.value(t))


def loss_01(s_pos: float, s_neg: float) -> int:
    """Pairwise 0/1 loss; a tie counts as an error."""
    _check_finite(s_pos, s_neg)
    return int(s_pos <= s_neg)


def loss_pa(loss: BaseLoss, s_pos: float, s_neg: float) -> float:
    _check_finite(s_pos, s_neg)
    return float(loss.value(s_pos - s_neg))


def _check_counts(pos_count, neg_count, n):
    if pos_count < 1 or neg_count < 1 or pos_count + neg_count != n:
        raise ValueError(
            f"need pos_count, neg_count >= 1 with pos_count + neg_count = n; "
            f"got ({pos_count}, {neg_count}, {n})"
        )


def loss_u1(loss: BaseLoss, s_pos, s_neg, pos_count: int, neg_count: int, n: int) -> float:
    """Univariate loss with the label's class-frequency weights."""
    _check_finite(s_pos, s_neg)
    _check_counts(pos_count, neg_count, n)
    return float(pos_count / n * loss.value(s_pos) + neg_count / n * loss.value(-s_neg))


def loss_u2(loss: BaseLoss, s_pos: float, s_neg: float) -> float:
    """Reweighted univariate loss (unit weight on each side)."""
    _check_finite(s_pos, s_neg)
    return float(loss.value(s_pos) + loss.value(-s_neg))


@dataclass(frozen=True)
class ChainViolation:
    index: int
    inequality: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


CHAIN_TOL = 1e-12

CHAIN_INEQUALITIES = (
    "L01 <= Lpa",
    "L01 <= Lu2",
    "Lu2 <= Lu1/tau",
    "Lu1/tau <= (1-tau)/tau*Lu2",
)


def chain_terms(loss: BaseLoss, s_pos, s_neg, pos_count, neg_count, n):
    """The five quantities compared by :func:`check_loss_chain` for one sample."""
    tau = min(pos_count, neg_count) / n
    l01 = loss_01(s_pos, s_neg)
    lpa = loss_pa(loss, s_pos, s_neg)
    lu1 = loss_u1(loss, s_pos, s_neg, pos_count, neg_count, n)
    lu2 = loss_u2(loss, s_pos, s_neg)
    return l01, lpa, lu2, lu1 / tau, (1.0 - tau) / tau * lu2


def check_loss_chain(loss: BaseLoss, samples, tol: float = CHAIN_TOL, _flip: str | None = None):
    """Check the pointwise chain relating the 0/1, pairwise and univariate losses.

    ``samples`` holds ``(s_pos, s_neg, pos_count, neg_count, n)`` tuples.
    Returns the list of :class:`ChainViolation`; empty means every
    inequality held within ``tol``. ``_flip`` names an inequality to test in
    reverse (self-test hook for the verify command).
    """
    violations = []
    for idx, (sp_, sn, pc, nc, n) in enumerate(samples):
        l01, lpa, lu2, lu1_tau, lu2_scaled = chain_terms(loss, sp_, sn, pc, nc, n)
        pairs = zip(CHAIN_INEQUALITIES, ((l01, lpa), (l01, lu2), (lu2, lu1_tau), (lu1_tau, lu2_scaled)))
        for name, (lhs, rhs) in pairs:
            if name == _flip:
                lhs, rhs = rhs, lhs
            if lhs > rhs + tol:
                violations.append(ChainViolation(idx, name, float(lhs), float(rhs)))
    return violations
