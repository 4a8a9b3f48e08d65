"""Feature engineering: ordered-rating encoding, dummy features, min-max
normalization and PCA with variance-explained component selection.

Column layout of a raw feature vector follows schema order: one column per
numerical or ordered attribute, N columns per unordered attribute, and
service age last. When PCA is enabled it acts on the non-dummy columns; the
dummy columns are appended unchanged after the projected components.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .dataset import ConditionSchema, LabeledDataset, AssetHistory, Numerical, Ordered, Unordered
from .errors import DataError


def encode_ordered(i: int, n_levels: int) -> float:
    """Map rating ``i`` of ``n_levels`` (1-based) to ``(i - 1/2) / N``."""
    if n_levels < 1 or not 1 <= i <= n_levels:
        raise ValueError(f"level index {i} outside 1..{n_levels}")
    return (i - 0.5) / n_levels


def encode_unordered(index: int, n_categories: int) -> np.ndarray:
    """One-hot vector for category ``index`` (1-based) of ``n_categories``."""
    if n_categories < 1 or not 1 <= index <= n_categories:
        raise ValueError(f"category index {index} outside 1..{n_categories}")
    v = np.zeros(n_categories)
    v[index - 1] = 1.0
    return v


def fit_minmax(column) -> tuple[float, float]:
    col = np.asarray(column, dtype=float).ravel()
    if col.size == 0:
        raise ValueError("cannot fit min-max bounds on an empty column")
    if not np.isfinite(col).all():
        raise ValueError("column has non-finite values")
    return float(col.min()), float(col.max())


def apply_minmax(x_raw, lo: float, hi: float):
    """Scale into [0, 1]; values outside the fitted range are clamped and a
    degenerate range (hi == lo) maps everything to 0.5."""
    x = np.asarray(x_raw, dtype=float)
    if hi == lo:
        out = np.full_like(x, 0.5)
    else:
        with np.errstate(over="ignore"):  # tiny spans overflow to inf, then clamp
            out = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def fit_pca(X):
    """Principal axes of the rows of ``X``.

    Returns ``(P, eigenvalues, column_means)`` with the columns of ``P``
    ordered by descending eigenvalue.
    """
    X = linalg.as_matrix(X)
    means = X.mean(axis=0)
    eig = linalg.sym_eig(linalg.gram(linalg.center_columns(X)), psd=True)
    return eig.eigenvectors, eig.eigenvalues, means


def pve(eigenvalues, t: int) -> float:
    """Proportion of variance explained by the first ``t`` components."""
    lam = np.asarray(eigenvalues, dtype=float)
    n = lam.size
    if not 1 <= t <= n:
        raise ValueError(f"t={t} outside 1..{n}")
    total = lam.sum()
    if total <= 0:
        raise ValueError("zero total variance; PVE undefined")
    if t == n:
        return 1.0
    return float(min(lam[:t].sum() / total, 1.0))


def select_components(eigenvalues, threshold: float) -> int:
    """Smallest component count whose PVE reaches ``threshold``."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    n = len(eigenvalues)
    for j in range(1, n + 1):
        if pve(eigenvalues, j) >= threshold:
            return j
    return n


@dataclass(frozen=True)
class PcaProjection:
    components: np.ndarray  # (n_in, j)
    column_means: np.ndarray  # (n_in,)
    eigenvalues: np.ndarray  # all n_in, descending
    kept: int
    threshold: float
    pve_achieved: float


@dataclass(frozen=True)
class FeaturePipeline:
    """Fitted feature transform. Build with :func:`fit_pipeline`."""

    schema: ConditionSchema
    ordered_maps: dict
    dummy_maps: dict
    minmax_bounds: dict  # numerical column name -> (Min, Max); includes "service_age"
    pca: PcaProjection | None = None
    columns: tuple = field(default=())  # raw column names in order

    @property
    def raw_width(self) -> int:
        return len(self.columns)

    @property
    def dummy_mask(self) -> np.ndarray:
        mask = []
        for a in self.schema.attributes:
            n = len(a.kind.categories) if isinstance(a.kind, Unordered) else 1
            mask.extend([isinstance(a.kind, Unordered)] * n)
        mask.append(False)
        return np.array(mask, dtype=bool)

    @property
    def out_width(self) -> int:
        if self.pca is None:
            return self.raw_width
        return self.pca.kept + int(self.dummy_mask.sum())

    # -- transform ---------------------------------------------------------

    def raw_rows(self, histories: Sequence[AssetHistory]) -> np.ndarray:
        """Encoded + normalized features, shape (n_assets, T, raw_width)."""
        rows = []
        for h in histories:
            rows.append([self._encode_record(r) for r in h.records])
        return np.asarray(rows, dtype=float).reshape(len(histories), -1, self.raw_width)

    def _encode_record(self, rec) -> list[float]:
        out: list[float] = []
        for a in self.schema.attributes:
            v = rec.values[a.name]
            if isinstance(a.kind, Numerical):
                lo, hi = self.minmax_bounds[a.name]
                out.append(apply_minmax(float(v), lo, hi))
            elif isinstance(a.kind, Ordered):
                try:
                    out.append(self.ordered_maps[a.name][v])
                except KeyError:
                    raise DataError(f"asset {rec.asset_id}: unknown level {v!r} for {a.name!r}")
            else:
                cats = self.dummy_maps[a.name]
                if v not in cats:
                    raise DataError(f"asset {rec.asset_id}: unseen category {v!r} for {a.name!r}")
                out.extend(encode_unordered(cats[v] + 1, len(cats)).tolist())
        lo, hi = self.minmax_bounds["service_age"]
        out.append(apply_minmax(float(rec.service_age), lo, hi))
        return out

    def project(self, raw: np.ndarray) -> np.ndarray:
        """Apply the PCA step to a (..., raw_width) array."""
        if self.pca is None:
            return raw
        mask = self.dummy_mask
        dense = raw[..., ~mask]
        proj = (dense - self.pca.column_means) @ self.pca.components
        return np.concatenate([proj, raw[..., mask]], axis=-1)

    def transform(self, data) -> "SequenceTensor":
        histories = data.histories if isinstance(data, LabeledDataset) else list(data)
        if not histories:
            raise DataError("nothing to transform")
        lengths = {len(h) for h in histories}
        if len(lengths) != 1:
            raise DataError(f"histories have mixed lengths {sorted(lengths)}")
        values = self.project(self.raw_rows(histories))
        if not np.isfinite(values).all():
            raise DataError("transform produced non-finite features")
        return SequenceTensor(values, tuple(h.asset_id for h in histories))

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "schema": self.schema.to_dict(),
            "columns": list(self.columns),
            "ordered_maps": self.ordered_maps,
            "dummy_maps": self.dummy_maps,
            "minmax_bounds": {k: list(v) for k, v in self.minmax_bounds.items()},
            "pca": None,
        }
        if self.pca is not None:
            p = self.pca
            d["pca"] = {
                "components": p.components.tolist(),
                "column_means": p.column_means.tolist(),
                "eigenvalues": p.eigenvalues.tolist(),
                "kept": p.kept,
                "threshold": p.threshold,
                "pve_achieved": p.pve_achieved,
            }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "FeaturePipeline":
        pca = None
        if d.get("pca") is not None:
            p = d["pca"]
            pca = PcaProjection(
                np.asarray(p["components"], dtype=float).reshape(-1, p["kept"]),
                np.asarray(p["column_means"], dtype=float),
                np.asarray(p["eigenvalues"], dtype=float),
                int(p["kept"]),
                float(p["threshold"]),
                float(p["pve_achieved"]),
            )
        return cls(
            ConditionSchema.from_dict(d["schema"]),
            {k: dict(v) for k, v in d["ordered_maps"].items()},
            {k: dict(v) for k, v in d["dummy_maps"].items()},
            {k: tuple(v) for k, v in d["minmax_bounds"].items()},
            pca,
            tuple(d["columns"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "FeaturePipeline":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SequenceTensor:
    values: np.ndarray  # (n_assets, T, width)
    asset_ids: tuple[str, ...]

    @property
    def shape(self):
        return self.values.shape

    def last_step(self) -> np.ndarray:
        return self.values[:, -1, :]


def _columns(schema: ConditionSchema) -> tuple[str, ...]:
    cols = []
    for a in schema.attributes:
        if isinstance(a.kind, Unordered):
            cols.extend(f"{a.name}:{c}" for c in a.kind.categories)
        else:
            cols.append(a.name)
    cols.append("service_age")
    return tuple(cols)


def fit_pipeline(train: LabeledDataset, pca_threshold: float | None = None) -> FeaturePipeline:
    """Fit encoders, min-max bounds and (optionally) PCA on training data only.

    PCA rows are all (asset, inspection) pairs of the training set pooled
    together, so every timestep shares one projection.
    """
    schema = train.schema
    histories = train.histories
    if not histories:
        raise DataError("empty training set")
    records = [r for h in histories for r in h.records]
    ordered_maps, dummy_maps, bounds = {}, {}, {}
    for a in schema.attributes:
        if isinstance(a.kind, Numerical):
            bounds[a.name] = fit_minmax([float(r.values[a.name]) for r in records])
        elif isinstance(a.kind, Ordered):
            n = len(a.kind.levels)
            ordered_maps[a.name] = {lvl: encode_ordered(i + 1, n) for i, lvl in enumerate(a.kind.levels)}
        else:
            dummy_maps[a.name] = {c: i for i, c in enumerate(a.kind.categories)}
    bounds["service_age"] = fit_minmax([float(r.service_age) for r in records])

    pipe = FeaturePipeline(schema, ordered_maps, dummy_maps, bounds, None, _columns(schema))
    if pca_threshold is None:
        return pipe
    if not 0 < pca_threshold <= 1:
        raise ValueError("pca_threshold must lie in (0, 1]")
    raw = pipe.raw_rows(histories).reshape(-1, pipe.raw_width)
    dense = raw[:, ~pipe.dummy_mask]
    if dense.shape[0] < 2:
        raise DataError("PCA needs at least 2 training rows")
    P, lam, means = fit_pca(dense)
    if lam.sum() <= 0:
        raise DataError("training features have zero variance; disable PCA")
    j = select_components(lam, pca_threshold)
    proj = PcaProjection(P[:, :j].copy(), means, lam, j, float(pca_threshold), pve(lam, j))
    return FeaturePipeline(schema, ordered_maps, dummy_maps, bounds, proj, pipe.columns)


def transform(pipeline: FeaturePipeline, dataset) -> SequenceTensor:
    return pipeline.transform(dataset)
