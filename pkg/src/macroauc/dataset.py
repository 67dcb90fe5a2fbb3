"""Multi-label datasets: loading, validation, splits and label-wise imbalance.

Labels are stored internally as an ``n x K`` ``int8`` matrix in ``{-1, +1}``.
Features are a dense ``float64`` array, or a CSR matrix when the feature
dimension is large.
"""
from __future__ import annotations

import csv
import io
import math
import os
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp

SPARSE_THRESHOLD = 10_000

FORMATS = ("svmlight-multilabel", "dense-csv")


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid dataset contents."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateLabelsError(ValueError):
    """Raised when every label lacks positives or negatives."""


class DegenerateLabelWarning(UserWarning):
    pass


def _freeze(a):
    if sp.issparse(a):
        for arr in (a.data, a.indices, a.indptr):
            arr.setflags(write=False)
    else:
        a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MultiLabelDataset:
    """The sample ``S``: features ``X`` (n x d) and labels ``Y`` (n x K)."""

    features: np.ndarray | sp.csr_matrix
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        X = self.features
        if sp.issparse(X):
            X = sp.csr_matrix(X, dtype=np.float64)
            X.sort_indices()
            values = X.data
        else:
            X = np.array(X, dtype=np.float64, order="C")
            if X.ndim != 2:
                raise DatasetError(f"features must be 2-D, got shape {X.shape}")
            values = X
        Y = np.asarray(self.labels)
        if Y.ndim != 2:
            raise DatasetError(f"labels must be 2-D, got shape {Y.shape}")
        if not np.all((Y == 1) | (Y == -1)):
            raise DatasetError("label entries must be -1 or +1")
        Y = np.array(Y, dtype=np.int8)
        n, d = X.shape
        if n < 1 or d < 1 or Y.shape[1] < 1:
            raise DatasetError(f"empty dataset (n={n}, d={d}, K={Y.shape[1]})")
        if Y.shape[0] != n:
            raise DatasetError(f"features have {n} rows but labels have {Y.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise DatasetError("feature values must be finite")
        object.__setattr__(self, "features", _freeze(X))
        object.__setattr__(self, "labels", _freeze(Y))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def K(self) -> int:
        return self.labels.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.features)

    def dense_features(self) -> np.ndarray:
        if self.is_sparse:
            return np.ascontiguousarray(self.features.toarray())
        return self.features

    @cached_property
    def pos_counts(self) -> np.ndarray:
        return (self.labels == 1).sum(axis=0).astype(np.int64)

    @cached_property
    def neg_counts(self) -> np.ndarray:
        return self.n - self.pos_counts

    @cached_property
    def usable_labels(self) -> np.ndarray:
        """Indices of labels with at least one positive and one negative."""
        return np.flatnonzero((self.pos_counts > 0) & (self.neg_counts > 0))

    def subset(self, rows, name=None) -> "MultiLabelDataset":
        rows = np.asarray(rows)
        return MultiLabelDataset(self.features[rows], self.labels[rows], name or self.name)

    def with_features(self, features, name=None) -> "MultiLabelDataset":
        return MultiLabelDataset(features, self.labels, name or self.name)

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"MultiLabelDataset(name={self.name!r}, n={self.n}, d={self.d}, K={self.K}, {kind})"


# ---------------------------------------------------------------------------
# loading / saving


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def _parse_svmlight(lines: Iterator[str], n_labels=None, n_features=None):
    label_sets: list[list[int]] = []
    rows, cols, vals = [], [], []
    header = None
    first = True
    for lineno, raw in enumerate(lines, start=1):
        line = _strip_comment(raw.rstrip("\r\n"))
        if not line.strip():
            # a bare empty line is skipped; a line with only whitespace too
            continue
        tokens = line.split()
        # optional "n d K" header (extreme-classification repository style)
        if first and len(tokens) == 3 and ":" not in line and "," not in line and not line[0].isspace():
            if all(t.isdigit() for t in tokens):
                header = tuple(int(t) for t in tokens)
                first = False
                continue
        first = False
        if line[0].isspace() or ":" in tokens[0]:
            label_tok, feat_toks = "", tokens
        else:
            label_tok, feat_toks = tokens[0], tokens[1:]
        labs = []
        if label_tok:
            for t in label_tok.split(","):
                if not t:
                    continue
                try:
                    v = int(t)
                except ValueError:
                    raise DatasetError(f"bad label index {t!r}", lineno) from None
                if v < 1:
                    raise DatasetError(f"label index {v} out of range (labels are 1-based)", lineno)
                labs.append(v)
        i = len(label_sets)
        label_sets.append(labs)
        for tok in feat_toks:
            idx, sep, val = tok.partition(":")
            if not sep:
                raise DatasetError(f"bad feature token {tok!r}", lineno)
            try:
                j = int(idx)
                x = float(val)
            except ValueError:
                raise DatasetError(f"bad feature token {tok!r}", lineno) from None
            if j < 1:
                raise DatasetError(f"feature index {j} out of range (features are 1-based)", lineno)
            if not math.isfinite(x):
                raise DatasetError(f"non-finite feature value {val!r}", lineno)
            rows.append(i)
            cols.append(j - 1)
            vals.append(x)
        if n_labels is not None and labs and max(labs) > n_labels:
            raise DatasetError(f"label index {max(labs)} out of range [1, {n_labels}]", lineno)
    if not label_sets:
        raise DatasetError("no instances")
    if header is not None:
        n_features = n_features or header[1]
        n_labels = n_labels or header[2]
    max_label = max((max(l) for l in label_sets if l), default=0)
    K = n_labels if n_labels is not None else max(max_label, 1)
    if max_label > K:
        raise DatasetError(f"label index {max_label} out of range [1, {K}]")
    max_feat = (max(cols) + 1) if cols else 1
    d = n_features if n_features is not None else max_feat
    if max_feat > d:
        raise DatasetError(f"feature index {max_feat} exceeds declared dimension {d}")
    n = len(label_sets)
    Y = -np.ones((n, K), dtype=np.int8)
    for i, labs in enumerate(label_sets):
        if labs:
            Y[i, np.asarray(labs) - 1] = 1
    X = sp.csr_matrix((vals, (rows, cols)), shape=(n, d), dtype=np.float64)
    X.sum_duplicates()
    return X, Y


def _parse_dense_csv(text: str):
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DatasetError("no instances")
    header = [h.strip() for h in rows[0]]
    ycols = [c for c, h in enumerate(header) if h.lower().startswith("y")]
    xcols = [c for c, h in enumerate(header) if h.lower().startswith("x")]
    if not ycols or not xcols or len(ycols) + len(xcols) != len(header):
        raise DatasetError("header must name label columns y1..yK and feature columns x1..xd", 1)
    body = rows[1:]
    if not body:
        raise DatasetError("no instances")
    n = len(body)
    Y = np.empty((n, len(ycols)), dtype=np.int8)
    X = np.empty((n, len(xcols)), dtype=np.float64)
    for i, r in enumerate(body):
        lineno = i + 2
        if len(r) != len(header):
            raise DatasetError(f"expected {len(header)} fields, got {len(r)}", lineno)
        for k, c in enumerate(ycols):
            v = r[c].strip()
            if v in ("1", "+1", "1.0"):
                Y[i, k] = 1
            elif v in ("-1", "0", "-1.0", "0.0"):
                Y[i, k] = -1
            else:
                raise DatasetError(f"bad label value {v!r}", lineno)
        for j, c in enumerate(xcols):
            try:
                x = float(r[c])
            except ValueError:
                raise DatasetError(f"bad feature value {r[c]!r}", lineno) from None
            if not math.isfinite(x):
                raise DatasetError(f"non-finite feature value {r[c]!r}", lineno)
            X[i, j] = x
    return X, Y


def load_dataset(path, format="svmlight-multilabel", n_labels=None, n_features=None, name=None):
    """Read a dataset file.

    Parameters
    ----------
    path : str or path-like
    format : {"svmlight-multilabel", "dense-csv"}
    n_labels, n_features : int, optional
        Declared K and d for the sparse format. Inferred from the largest
        index seen when omitted (or taken from an ``n d K`` header line).
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    name = name or os.path.splitext(os.path.basename(str(path)))[0]
    with open(path, encoding="utf-8") as fh:
        if format == "svmlight-multilabel":
            X, Y = _parse_svmlight(fh, n_labels, n_features)
            if X.shape[1] <= SPARSE_THRESHOLD:
                X = X.toarray()
        else:
            X, Y = _parse_dense_csv(fh.read())
    return MultiLabelDataset(X, Y, name)


def save_svmlight(ds: MultiLabelDataset, path) -> None:
    """Write ``ds`` in the svmlight-multilabel format (shortest round-trip floats)."""
    X = sp.csr_matrix(ds.features)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        # the "n d K" header pins d and K so trailing all-zero columns survive
        fh.write(f"{ds.n} {ds.d} {ds.K}\n")
        for i in range(ds.n):
            labs = ",".join(str(k + 1) for k in np.flatnonzero(ds.labels[i] == 1))
            lo, hi = X.indptr[i], X.indptr[i + 1]
            feats = " ".join(
                f"{j + 1}:{float(v)!r}" for j, v in zip(X.indices[lo:hi], X.data[lo:hi]) if v != 0.0
            )
            if not labs and not feats:
                feats = "1:0.0"
            fh.write(f"{labs} {feats}".rstrip() + "\n")


# ---------------------------------------------------------------------------
# label-wise imbalance


@dataclass(frozen=True)
class LabelStats:
    """Per-label counts and the imbalance factors Imb1..Imb4.

    ``tau[k]`` is ``nan`` for degenerate labels; those are left out of
    ``tau_min`` and of every Imb average.
    """

    n: int
    pos_count: np.ndarray
    neg_count: np.ndarray
    tau: np.ndarray
    tau_min: float
    degenerate_labels: tuple
    imb1: float
    imb2: float
    imb3: float
    imb4: float

    @property
    def K(self) -> int:
        return len(self.pos_count)

    @property
    def usable(self) -> np.ndarray:
        return np.flatnonzero(np.isfinite(self.tau))

    @property
    def usable_tau(self) -> np.ndarray:
        return self.tau[self.usable]


def stats_from_counts(pos_count, n) -> LabelStats:
    """Build :class:`LabelStats` from positive counts alone."""
    pos = np.asarray(pos_count, dtype=np.int64)
    neg = n - pos
    if np.any(pos < 0) or np.any(neg < 0):
        raise ValueError("counts must lie in [0, n]")
    degenerate = tuple(int(k) for k in np.flatnonzero((pos == 0) | (neg == 0)))
    tau = np.minimum(pos, neg) / n
    tau = tau.astype(np.float64)
    tau[list(degenerate)] = np.nan
    good = tau[np.isfinite(tau)]
    if good.size == 0:
        raise DegenerateLabelsError("no usable labels")
    if degenerate:
        warnings.warn(
            f"labels {[k + 1 for k in degenerate]} have no positives or no negatives; excluded",
            DegenerateLabelWarning,
            stacklevel=3,
        )
    inv = 1.0 / good
    imb2 = math.sqrt(math.fsum(inv) / inv.size)
    # mean(sqrt) <= sqrt(mean) by Jensen; clamp away rounding excess (equal taus)
    imb1 = min(math.fsum(np.sqrt(inv)) / inv.size, imb2)
    tau_min = float(good.min())
    imb3 = 1.0 / tau_min
    return LabelStats(
        n=int(n),
        pos_count=pos,
        neg_count=neg,
        tau=tau,
        tau_min=tau_min,
        degenerate_labels=degenerate,
        imb1=imb1,
        imb2=imb2,
        imb3=imb3,
        imb4=imb3 * imb1,
    )


def label_stats(ds: MultiLabelDataset) -> LabelStats:
    return stats_from_counts(ds.pos_counts, ds.n)


def emit_imbalance_profile(stats: LabelStats, path, comment: str | None = None) -> None:
    """Write ``label,tau,flag`` rows (1-based labels) for external plotting."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write("label,tau,flag\n")
        for k in range(stats.K):
            t = stats.tau[k]
            if np.isfinite(t):
                fh.write(f"{k + 1},{float(t)!r},\n")
            else:
                fh.write(f"{k + 1},,degenerate\n")


# ---------------------------------------------------------------------------
# splitting


def split(ds: MultiLabelDataset, test_fraction: float, seed: int):
    """Uniform random train/test partition of the rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n_test = int(round(ds.n * test_fraction))
    if n_test < 1 or n_test >= ds.n:
        raise ValueError(f"test_fraction {test_fraction} leaves an empty side for n={ds.n}")
    perm = np.random.default_rng(seed).permutation(ds.n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return ds.subset(train_idx, f"{ds.name}-train"), ds.subset(test_idx, f"{ds.name}-test")


def kfold_indices(n: int, folds: int, seed: int) -> list:
    """Validation index blocks; the first ``n % folds`` blocks get one extra row."""
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if folds > n:
        raise ValueError(f"folds ({folds}) exceeds number of instances ({n})")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(b) for b in np.array_split(perm, folds)]


def kfold(ds: MultiLabelDataset, folds: int, seed: int):
    blocks = kfold_indices(ds.n, folds, seed)
    out = []
    for f, val_idx in enumerate(blocks):
        mask = np.ones(ds.n, dtype=bool)
        mask[val_idx] = False
        out.append(
            (
                ds.subset(np.flatnonzero(mask), f"{ds.name}-fold{f}-train"),
                ds.subset(val_idx, f"{ds.name}-fold{f}-val"),
            )
        )
    return out


# ---------------------------------------------------------------------------
# preprocessing


@dataclass(frozen=True)
class Standardizer:
    """Column centering/scaling fitted on a training set.

    Constant columns keep scale 1. Sparse inputs are only scaled, never
    centered, so they stay sparse.
    """

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, ds: MultiLabelDataset) -> "Standardizer":
        if ds.is_sparse:
            X = ds.features
            mean = np.zeros(ds.d)
            sq = np.asarray(X.multiply(X).mean(axis=0)).ravel()
            scale = np.sqrt(sq)
        else:
            mean = ds.features.mean(axis=0)
            scale = ds.features.std(axis=0)
        scale = np.where(scale > 1e-12, scale, 1.0)
        return cls(mean, scale)

    def transform(self, ds: MultiLabelDataset) -> MultiLabelDataset:
        if ds.is_sparse:
            X = ds.features @ sp.diags(1.0 / self.scale)
        else:
            X = (ds.features - self.mean) / self.scale
        return ds.with_features(X)


def concat_rows(parts: Sequence[MultiLabelDataset], name=None) -> MultiLabelDataset:
    if any(p.is_sparse for p in parts):
        X = sp.vstack([sp.csr_matrix(p.features) for p in parts], format="csr")
    else:
        X = np.vstack([p.features for p in parts])
    Y = np.vstack([p.labels for p in parts])
    return MultiLabelDataset(X, Y, name or parts[0].name)


SCALINGS = ("standardize", "unit", "none")


@dataclass(frozen=True)
class Preprocessor:
    """Feature scaling applied before scoring.

    ``standardize`` uses a fitted :class:`Standardizer`; ``unit`` rescales each
    row to unit Euclidean norm (zero rows stay zero); ``none`` is the identity.
    """

    kind: str = "none"
    standardizer: Standardizer | None = None

    def __post_init__(self):
        if self.kind not in SCALINGS:
            raise ValueError(f"unknown scaling {self.kind!r}; choose from {SCALINGS}")
        if self.kind == "standardize" and self.standardizer is None:
            raise ValueError("standardize needs a fitted Standardizer")

    @classmethod
    def fit(cls, ds: MultiLabelDataset, kind: str) -> "Preprocessor":
        if kind == "standardize":
            return cls(kind, Standardizer.fit(ds))
        return cls(kind)

    def transform(self, ds: MultiLabelDataset) -> MultiLabelDataset:
        if self.kind == "standardize":
            if self.standardizer.mean.size != ds.d:
                raise ValueError(f"scaler fitted on d={self.standardizer.mean.size}, data has d={ds.d}")
            return self.standardizer.transform(ds)
        if self.kind == "unit":
            if ds.is_sparse:
                X = ds.features
                norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
                norms = np.where(norms > 0, norms, 1.0)
                return ds.with_features(sp.diags(1.0 / norms) @ X)
            norms = np.linalg.norm(ds.features, axis=1, keepdims=True)
            return ds.with_features(ds.features / np.where(norms > 0, norms, 1.0))
        return ds
