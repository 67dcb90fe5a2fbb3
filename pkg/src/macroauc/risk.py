"""Empirical risks, regularized objectives and their gradients for linear models.

All risks average over the *usable* labels (those with both positives and
negatives); ``K'`` below is their count.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import DegenerateLabelsError, MultiLabelDataset, Preprocessor, Standardizer
from .loss import BaseLoss, get_loss

# pair blocks larger than this are processed in row chunks
_PAIR_CHUNK = 1 << 22


class AlgorithmKind(str, enum.Enum):
    PA = "pa"
    U1 = "u1"
    U2 = "u2"

    def __str__(self):
        return self.value


class ShapeMismatchError(ValueError):
    pass


def _usable(ds: MultiLabelDataset) -> np.ndarray:
    u = ds.usable_labels
    if u.size == 0:
        raise DegenerateLabelsError("no usable labels")
    return u


@dataclass
class LinearModel:
    """Score function ``f(x) = W x`` with one weight row per label."""

    weights: np.ndarray
    loss: str = "logistic-base2"
    algorithm: str = "u2"
    lam: float = 0.0
    preprocess: Preprocessor | None = None

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64, order="C")
        if self.weights.ndim != 2:
            raise ValueError("weights must be a K x d matrix")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        self.algorithm = str(AlgorithmKind(str(self.algorithm)))
        self.loss = get_loss(self.loss).kind

    @classmethod
    def zeros(cls, K, d, **kw) -> "LinearModel":
        return cls(np.zeros((K, d)), **kw)

    @property
    def K(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    def check_shape(self, ds: MultiLabelDataset):
        if self.K != ds.K or self.d != ds.d:
            raise ShapeMismatchError(
                f"model is {self.K} x {self.d} but dataset has K={ds.K}, d={ds.d}"
            )

    def scores(self, X) -> np.ndarray:
        """``n x K`` score matrix for a feature matrix or dataset."""
        if isinstance(X, MultiLabelDataset):
            self.check_shape(X)
            X = X.features
        S = X @ self.weights.T
        return np.asarray(S)

    # -- text serialization ------------------------------------------------

    def save(self, path, comment: str | None = None) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if comment:
                for line in comment.splitlines():
                    fh.write(f"# {line}\n")
            pre = self.preprocess.kind if self.preprocess is not None else "none"
            fh.write(
                f"K={self.K} d={self.d} algorithm={self.algorithm} "
                f"loss={get_loss(self.loss).cli_name} lambda={self.lam!r} scale={pre}\n"
            )
            for row in self.weights:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
            if pre == "standardize":
                st = self.preprocess.standardizer
                fh.write("mean " + " ".join(f"{v:.17g}" for v in st.mean) + "\n")
                fh.write("std " + " ".join(f"{v:.17g}" for v in st.scale) + "\n")

    @classmethod
    def load(cls, path) -> "LinearModel":
        with open(path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            raise ValueError(f"{path}: empty model file")
        try:
            meta = dict(tok.split("=", 1) for tok in lines[0].split())
            K, d = int(meta["K"]), int(meta["d"])
        except (KeyError, ValueError):
            raise ValueError(f"{path}: malformed model header {lines[0]!r}") from None
        extra = {}
        body = []
        for ln in lines[1:]:
            head = ln.split(None, 1)[0]
            if head in ("mean", "std"):
                extra[head] = np.array(ln.split()[1:], dtype=np.float64)
            else:
                body.append(ln)
        try:
            rows = [np.array(ln.split(), dtype=np.float64) for ln in body]
        except ValueError:
            raise ValueError(f"{path}: non-numeric weight") from None
        if len(rows) != K or any(r.size != d for r in rows):
            raise ValueError(f"{path}: expected {K} rows of {d} weights")
        W = np.vstack(rows) if rows else np.zeros((0, d))
        kind = meta.get("scale", "none")
        if kind == "standardize":
            if "mean" not in extra or "std" not in extra:
                raise ValueError(f"{path}: standardize scaling needs mean and std lines")
            pre = Preprocessor(kind, Standardizer(extra["mean"], extra["std"]))
        else:
            pre = Preprocessor(kind)
        return cls(W, loss=meta.get("loss", "logistic2"), algorithm=meta.get("algorithm", "u2"),
                   lam=float(meta.get("lambda", 0.0)), preprocess=pre)


# ---------------------------------------------------------------------------
# empirical risks


def _pair_blocks(s_pos, s_neg):
    """Yield ``s_pos[a:b, None] - s_neg[None, :]`` in memory-bounded chunks."""
    q = max(s_neg.size, 1)
    step = max(1, _PAIR_CHUNK // q)
    for a in range(0, s_pos.size, step):
        yield a, s_pos[a:a + step, None] - s_neg[None, :]


def _label_scores(S, Y, k):
    col = S[:, k]
    pos = Y[:, k] == 1
    return col[pos], col[~pos]


def empirical_risk_pa(model: LinearModel, ds: MultiLabelDataset, base=None) -> float:
    base = get_loss(base or model.loss)
    usable = _usable(ds)
    S = model.scores(ds)
    total = 0.0
    for k in usable:
        s_pos, s_neg = _label_scores(S, ds.labels, k)
        acc = 0.0
        for _, block in _pair_blocks(s_pos, s_neg):
            acc += float(base.value(block).sum())
        total += acc / (s_pos.size * s_neg.size)
    return total / usable.size


def empirical_risk_u1(model: LinearModel, ds: MultiLabelDataset, base=None) -> float:
    base = get_loss(base or model.loss)
    usable = _usable(ds)
    S = model.scores(ds)[:, usable]
    Y = ds.labels[:, usable]
    return float(base.value(Y * S).mean(axis=0).mean())


def empirical_risk_u2(model: LinearModel, ds: MultiLabelDataset, base=None) -> float:
    base = get_loss(base or model.loss)
    usable = _usable(ds)
    S = model.scores(ds)
    total = 0.0
    for k in usable:
        s_pos, s_neg = _label_scores(S, ds.labels, k)
        total += float(base.value(s_pos).mean() + base.value(-s_neg).mean())
    return total / usable.size


def pairwise_surrogate_risk(model: LinearModel, ds: MultiLabelDataset, kind: str, base=None) -> float:
    """Pair-averaged risk of ``L_pa``, ``L_u1`` or ``L_u2`` by explicit pair enumeration.

    This is the defining form of every surrogate risk; the instance-sum
    functions above must agree with it.
    """
    base = get_loss(base or model.loss)
    usable = _usable(ds)
    S = model.scores(ds)
    total = 0.0
    for k in usable:
        s_pos, s_neg = _label_scores(S, ds.labels, k)
        p, q = s_pos.size, s_neg.size
        if kind == "pa":
            M = base.value(s_pos[:, None] - s_neg[None, :])
        elif kind == "u1":
            M = (p / ds.n) * base.value(s_pos)[:, None] + (q / ds.n) * base.value(-s_neg)[None, :]
        elif kind == "u2":
            M = base.value(s_pos)[:, None] + base.value(-s_neg)[None, :]
        else:
            raise ValueError(f"unknown loss kind {kind!r}")
        total += float(M.sum()) / (p * q)
    return total / usable.size


def pairwise_auc_bruteforce(pos_scores, neg_scores) -> float:
    """Fraction of (positive, negative) pairs ranked strictly correctly, by enumeration."""
    pos_scores = np.asarray(pos_scores, dtype=np.float64)
    neg_scores = np.asarray(neg_scores, dtype=np.float64)
    if pos_scores.size == 0 or neg_scores.size == 0:
        raise ValueError("both score sets must be non-empty")
    wins = 0
    for _, block in _pair_blocks(pos_scores, neg_scores):
        wins += int(np.count_nonzero(block > 0))
    return wins / (pos_scores.size * neg_scores.size)


def empirical_risk_01(model, ds: MultiLabelDataset) -> float:
    """One minus Macro-AUC, by direct pair counting (ties count as errors)."""
    usable = _usable(ds)
    S = model.scores(ds) if isinstance(model, LinearModel) else np.asarray(model)
    aucs = [pairwise_auc_bruteforce(*_label_scores(S, ds.labels, k)) for k in usable]
    return 1.0 - float(np.mean(aucs))


# ---------------------------------------------------------------------------
# objectives and gradients


@dataclass
class Objective:
    """Regularized empirical risk ``R(W) + lam * ||W||_F^2`` for one algorithm."""

    algorithm: AlgorithmKind
    lam: float
    base: BaseLoss
    data: MultiLabelDataset = field(repr=False)

    def __post_init__(self):
        self.algorithm = AlgorithmKind(str(self.algorithm))
        self.base = get_loss(self.base)
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        self.usable = _usable(self.data)
        self._X = self.data.dense_features()
        self._Y = self.data.labels.astype(np.float64)
        self._pos_idx = [np.flatnonzero(self.data.labels[:, k] == 1) for k in range(self.data.K)]
        self._neg_idx = [np.flatnonzero(self.data.labels[:, k] == -1) for k in range(self.data.K)]

    @property
    def K_used(self) -> int:
        return self.usable.size

    def new_model(self) -> LinearModel:
        return LinearModel.zeros(self.data.K, self.data.d, loss=self.base.kind,
                                 algorithm=self.algorithm.value, lam=self.lam)

    def instance_weights(self) -> np.ndarray:
        """``n x K`` weights ``c_ik`` with risk ``= sum_ik c_ik l(y_ik s_ik)`` (univariate kinds).

        Degenerate labels get weight zero.
        """
        n, K = self.data.n, self.data.K
        C = np.zeros((n, K))
        Kp = self.K_used
        for k in self.usable:
            if self.algorithm is AlgorithmKind.U1:
                C[:, k] = 1.0 / (Kp * n)
            else:
                C[self._pos_idx[k], k] = 1.0 / (Kp * self._pos_idx[k].size)
                C[self._neg_idx[k], k] = 1.0 / (Kp * self._neg_idx[k].size)
        return C

    def risk(self, W) -> float:
        model = LinearModel(W, loss=self.base.kind, algorithm=self.algorithm.value)
        if self.algorithm is AlgorithmKind.PA:
            return empirical_risk_pa(model, self.data, self.base)
        if self.algorithm is AlgorithmKind.U1:
            return empirical_risk_u1(model, self.data, self.base)
        return empirical_risk_u2(model, self.data, self.base)

    def value(self, W) -> float:
        W = np.asarray(W, dtype=np.float64)
        return self.risk(W) + self.lam * float(np.sum(W * W))

    def risk_gradient(self, W) -> np.ndarray:
        W = np.asarray(W, dtype=np.float64)
        X, base = self._X, self.base
        S = X @ W.T
        if self.algorithm is not AlgorithmKind.PA:
            if not hasattr(self, "_C"):
                self._C = self.instance_weights()
            G = self._C * self._Y * base.deriv(self._Y * S)
            return G.T @ X
        grad = np.zeros_like(W)
        Kp = self.K_used
        for k in self.usable:
            pi, ni = self._pos_idx[k], self._neg_idx[k]
            s_pos, s_neg = S[pi, k], S[ni, k]
            a = np.zeros(pi.size)
            b = np.zeros(ni.size)
            for start, block in _pair_blocks(s_pos, s_neg):
                D = base.deriv(block)
                a[start:start + D.shape[0]] += D.sum(axis=1)
                b += D.sum(axis=0)
            grad[k] = (a @ X[pi] - b @ X[ni]) / (Kp * pi.size * ni.size)
        return grad

    def value_and_gradient(self, W):
        W = np.asarray(W, dtype=np.float64)
        return self.value(W), self.risk_gradient(W) + 2.0 * self.lam * W

    # -- stochastic pieces -------------------------------------------------

    def sample(self, m: int, rng: np.random.Generator):
        """Draw ``m`` samples from the estimator's sampling distribution.

        Univariate kinds: instance indices, uniform over ``[n]``.
        Pairwise: ``(k, p, q)`` arrays with ``k`` uniform over usable labels,
        then ``p`` and ``q`` uniform over that label's positives/negatives.
        """
        if self.algorithm is not AlgorithmKind.PA:
            return rng.integers(0, self.data.n, size=m)
        ks = self.usable[rng.integers(0, self.K_used, size=m)]
        if not hasattr(self, "_pair_tables"):
            pos_len = np.array([len(self._pos_idx[k]) for k in range(self.data.K)])
            neg_len = np.array([len(self._neg_idx[k]) for k in range(self.data.K)])
            pos_off = np.concatenate([[0], np.cumsum(pos_len)[:-1]])
            neg_off = np.concatenate([[0], np.cumsum(neg_len)[:-1]])
            self._pair_tables = (np.concatenate(self._pos_idx), pos_len, pos_off,
                                 np.concatenate(self._neg_idx), neg_len, neg_off)
        pos_cat, pos_len, pos_off, neg_cat, neg_len, neg_off = self._pair_tables
        ps = pos_cat[pos_off[ks] + rng.integers(0, pos_len[ks])]
        qs = neg_cat[neg_off[ks] + rng.integers(0, neg_len[ks])]
        return ks, ps, qs

    def stochastic_gradient(self, W, sample) -> np.ndarray:
        """Unbiased single-sample estimate of :meth:`risk_gradient` (no regularizer)."""
        W = np.asarray(W, dtype=np.float64)
        X, base = self._X, self.base
        g = np.zeros_like(W)
        if self.algorithm is AlgorithmKind.PA:
            k, p, q = (int(v) for v in sample)
            if k not in set(self.usable.tolist()):
                raise ValueError(f"label {k} is not usable")
            if self.data.labels[p, k] != 1 or self.data.labels[q, k] != -1:
                raise ValueError(f"({k}, {p}, {q}) is not a positive/negative pair")
            diff = X[p] - X[q]
            g[k] = base.deriv(W[k] @ diff) * diff
            return g
        i = int(sample)
        if not 0 <= i < self.data.n:
            raise ValueError(f"instance index {i} out of range")
        if not hasattr(self, "_C"):
            self._C = self.instance_weights()
        y = self._Y[i]
        coef = self.data.n * self._C[i] * y * base.deriv(y * (W @ X[i]))
        return coef[:, None] * X[i][None, :]

    def max_sample_smoothness(self) -> float:
        """Upper bound on the smoothness constant of any single-sample term."""
        X = self._X
        sq = np.einsum("ij,ij->i", X, X)
        if self.algorithm is AlgorithmKind.PA:
            # ||x_p - x_q||^2 <= 4 max ||x||^2
            return self.base.curvature * 4.0 * float(sq.max())
        if not hasattr(self, "_C"):
            self._C = self.instance_weights()
        per_row = self.data.n * self._C.max(axis=1)
        return self.base.curvature * float((per_row * sq).max())


def objective_value_and_gradient(obj: Objective, model: LinearModel):
    model.check_shape(obj.data)
    return obj.value_and_gradient(model.weights)


def stochastic_gradient(obj: Objective, model: LinearModel, sample, rng=None):
    """Single-sample gradient contribution; ``rng`` is unused when a sample is given."""
    model.check_shape(obj.data)
    if sample is None:
        if rng is None:
            raise ValueError("need a sample or an rng to draw one")
        drawn = obj.sample(1, rng)
        sample = tuple(int(a[0]) for a in drawn) if isinstance(drawn, tuple) else int(drawn[0])
    return obj.stochastic_gradient(model.weights, sample)
