"""Per-label AUC and Macro-AUC under the strict (ties lose) convention."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DegenerateLabelsError, MultiLabelDataset


@dataclass(frozen=True)
class LabelAuc:
    label: int
    auc: float
    pos_count: int
    neg_count: int


@dataclass(frozen=True)
class AucReport:
    macro_auc: float
    per_label: tuple
    skipped: tuple = ()

    def to_csv(self, path, comment: str | None = None) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if comment:
                for line in comment.splitlines():
                    fh.write(f"# {line}\n")
            fh.write("label,auc,pos_count,neg_count\n")
            for row in self.per_label:
                fh.write(f"{row.label},{row.auc!r},{row.pos_count},{row.neg_count}\n")
            fh.write(f"macro,{self.macro_auc!r},,\n")


def _count_wins(pos, neg) -> int:
    """Number of pairs with ``pos > neg``; O((p + q) log q)."""
    neg_sorted = np.sort(neg)
    # negatives strictly below each positive
    return int(np.searchsorted(neg_sorted, pos, side="left").sum())


def per_label_auc(pos_scores, neg_scores) -> float:
    """Fraction of positive/negative pairs in which the positive scores strictly higher.

    Equal scores count as misranked.
    """
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("per_label_auc needs at least one positive and one negative score")
    if np.isnan(pos).any() or np.isnan(neg).any():
        raise ValueError("scores contain NaN")
    return _count_wins(pos, neg) / (pos.size * neg.size)


def macro_auc(model_or_scores, ds: MultiLabelDataset) -> AucReport:
    """Macro-AUC over the dataset's non-degenerate labels.

    Parameters
    ----------
    model_or_scores : LinearModel or array_like
        Anything with a ``scores(ds)`` method, or an ``n x K`` score matrix.
    ds : MultiLabelDataset
    """
    if hasattr(model_or_scores, "scores"):
        S = model_or_scores.scores(ds)
    else:
        S = np.asarray(model_or_scores, dtype=np.float64)
    if S.shape != (ds.n, ds.K):
        raise ValueError(f"score matrix has shape {S.shape}, expected {(ds.n, ds.K)}")
    usable = ds.usable_labels
    if usable.size == 0:
        raise DegenerateLabelsError("all labels are degenerate; Macro-AUC is undefined")
    rows = []
    for k in usable:
        pos = ds.labels[:, k] == 1
        auc = per_label_auc(S[pos, k], S[~pos, k])
        rows.append(LabelAuc(int(k), auc, int(pos.sum()), int((~pos).sum())))
    skipped = tuple(int(k) for k in np.setdiff1d(np.arange(ds.K), usable))
    macro = float(np.mean([r.auc for r in rows]))
    return AucReport(macro, tuple(rows), skipped)
