"""Confusion matrix, per-class precision/recall and macro averages.

Rows of a confusion matrix are true classes, columns predicted classes.
A precision or recall with a zero denominator is undefined (``None``); in
the macro average it contributes 0 while the class count stays fixed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

N_LEVELS = 5


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (K, K) int

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __getitem__(self, key):
        return self.counts[key]


def confusion(true_labels, predicted_labels, n_classes: int = N_LEVELS) -> ConfusionMatrix:
    """Count (true, predicted) pairs; labels are 1-based levels."""
    t = np.asarray(true_labels, dtype=int).reshape(-1)
    p = np.asarray(predicted_labels, dtype=int).reshape(-1)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.size} true vs {p.size} predicted")
    for arr in (t, p):
        if arr.size and (arr.min() < 1 or arr.max() > n_classes):
            raise ValueError(f"labels must lie in 1..{n_classes}")
    counts = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(counts, (t - 1, p - 1), 1)
    return ConfusionMatrix(counts)


def class_counts(cm: ConfusionMatrix, i: int) -> tuple[int, int, int]:
    """(TP, FP, FN) for 1-based class ``i``."""
    k = i - 1
    tp = int(cm.counts[k, k])
    fp = int(cm.counts[:, k].sum()) - tp
    fn = int(cm.counts[k, :].sum()) - tp
    return tp, fp, fn


def precision_recall(cm: ConfusionMatrix, i: int):
    tp, fp, fn = class_counts(cm, i)
    p = tp / (tp + fp) if tp + fp else None
    r = tp / (tp + fn) if tp + fn else None
    return p, r


def macro(cm: ConfusionMatrix):
    """Return ``(MP, MR, n_undefined)``; undefined per-class values count as 0."""
    ps, rs, undefined = [], [], 0
    for i in range(1, cm.n_classes + 1):
        p, r = precision_recall(cm, i)
        if p is None or r is None:
            undefined += 1
        ps.append(p or 0.0)
        rs.append(r or 0.0)
    n = cm.n_classes
    return sum(ps) / n, sum(rs) / n, undefined


@dataclass(frozen=True)
class EvaluationReport:
    confusion: ConfusionMatrix
    per_class: tuple  # (precision|None, recall|None, support) per class
    mp: float
    mr: float
    n_samples: int
    undefined_classes: int

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.counts.tolist(),
            "per_class": [
                {"class": i + 1, "precision": p, "recall": r, "support": s}
                for i, (p, r, s) in enumerate(self.per_class)
            ],
            "mp": self.mp,
            "mr": self.mr,
            "n": self.n_samples,
            "undefined_classes": self.undefined_classes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_text(self, title: str = "") -> str:
        return format_table([(title, self)])


def evaluate_labels(true_labels, predicted_labels) -> EvaluationReport:
    cm = confusion(true_labels, predicted_labels)
    per_class = []
    for i in range(1, cm.n_classes + 1):
        p, r = precision_recall(cm, i)
        per_class.append((p, r, int(cm.counts[i - 1].sum())))
    mp, mr, undef = macro(cm)
    return EvaluationReport(cm, tuple(per_class), mp, mr, cm.total, undef)


def report(model, pipeline, dataset) -> EvaluationReport:
    """Transform, predict (argmax, ties to the lowest class) and score."""
    X = pipeline.transform(dataset).values
    if getattr(model, "kind", "") == "fnn":
        X = X[:, -1, :]
    pred = model.predict(X) + 1
    return evaluate_labels(dataset.labels, pred)


def _cell(v) -> str:
    return f"{v:7.2f}" if v is not None else "      -"


def format_table(rows) -> str:
    """Fixed-width table, one Precision/MP and Recall/MR line pair per model.

    Column layout: model (10 chars), metric (14), H1..H5 at 7 chars each and
    Overall at 9. Undefined values print as ``-``.
    """
    head = f"{'Model':<10}{'Metric':<14}" + "".join(f"{'H' + str(i):>7}" for i in range(1, 6)) + f"{'Overall':>9}"
    lines = [head, "-" * len(head)]
    for title, rep in rows:
        ps = "".join(_cell(p) for p, _, _ in rep.per_class)
        rs = "".join(_cell(r) for _, r, _ in rep.per_class)
        sup = "".join(f"{s:7d}" for _, _, s in rep.per_class)
        lines.append(f"{title:<10}{'Precision/MP':<14}{ps}{rep.mp:9.2f}")
        lines.append(f"{'':<10}{'Recall/MR':<14}{rs}{rep.mr:9.2f}")
        lines.append(f"{'':<10}{'Support':<14}{sup}{rep.n_samples:9d}")
    return "\n".join(lines) + "\n"
