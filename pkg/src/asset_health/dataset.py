"""Inspection-record data model, CSV ingestion, stratified splitting and a
synthetic fleet generator.

A dataset is a fleet of assets of one class. Each asset carries ``T``
chronologically ordered inspection records and one health-index label that
was assigned some years after the last inspection.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

Value = Union[float, str]


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Numerical:
    kind = "numerical"


@dataclass(frozen=True)
class Ordered:
    """Ranked rating. Position in ``levels`` is the rating order used by the
    ordered encoder (first level -> i = 1)."""

    levels: tuple[str, ...]
    kind = "ordered"

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if len(self.levels) < 2:
            raise DataError("ordered attribute needs at least 2 levels")
        if len(set(self.levels)) != len(self.levels):
            raise DataError(f"duplicate level names in {self.levels}")


@dataclass(frozen=True)
class Unordered:
    categories: tuple[str, ...]
    kind = "unordered"

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        if len(self.categories) < 2:
            raise DataError("unordered attribute needs at least 2 categories")
        if len(set(self.categories)) != len(self.categories):
            raise DataError(f"duplicate category names in {self.categories}")


ConditionKind = Union[Numerical, Ordered, Unordered]


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: ConditionKind


@dataclass(frozen=True)
class ConditionSchema:
    """Ordered attribute declarations. The order fixes feature column order.

    Service age is always present and is not listed among ``attributes``.
    """

    attributes: tuple[Attribute, ...]
    includes_service_age: bool = True

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise DataError(f"attribute names must be unique: {names}")
        reserved = {"asset_id", "inspection_time", "service_age"}
        if reserved & set(names):
            raise DataError(f"attribute names clash with reserved columns: {reserved & set(names)}")

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def to_dict(self) -> dict:
        out = []
        for a in self.attributes:
            entry = {"name": a.name, "kind": a.kind.kind}
            if isinstance(a.kind, Ordered):
                entry["levels"] = list(a.kind.levels)
            elif isinstance(a.kind, Unordered):
                entry["categories"] = list(a.kind.categories)
            out.append(entry)
        return {"attributes": out}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ConditionSchema":
        attrs = []
        for entry in d["attributes"]:
            kind = entry["kind"]
            if kind == "numerical":
                k = Numerical()
            elif kind == "ordered":
                k = Ordered(tuple(entry["levels"]))
            elif kind == "unordered":
                k = Unordered(tuple(entry["categories"]))
            else:
                raise DataError(f"unknown attribute kind {kind!r} for {entry.get('name')!r}")
            attrs.append(Attribute(entry["name"], k))
        return cls(tuple(attrs))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ConditionSchema":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# records and labels
# ---------------------------------------------------------------------------


class HealthIndex(enum.IntEnum):
    """Health-index levels. H5 is "as new", H1 is end of life."""

    H1 = 1
    H2 = 2
    H3 = 3
    H4 = 4
    H5 = 5

    @property
    def definition(self) -> str:
        return _HI_TEXT[self][0]

    @property
    def action(self) -> str:
        return _HI_TEXT[self][1]

    @property
    def class_index(self) -> int:
        """0-based index used by the softmax head."""
        return int(self) - 1


_HI_TEXT = {
    HealthIndex.H5: ("In 'as new' condition", "Minor maintenance"),
    HealthIndex.H4: ("Some minor problems or evidence of aging", "Normal maintenance"),
    HealthIndex.H3: (
        "Many minor problems or a major problem; aging accelerates without intervention",
        "Increase inspection and maintenance frequency",
    ),
    HealthIndex.H2: (
        "Many serious problems; failure possible without intervention",
        "Plan replacement or rehabilitation",
    ),
    HealthIndex.H1: ("Failure is imminent", "End of life; replace immediately"),
}


@dataclass(frozen=True)
class InspectionRecord:
    asset_id: str
    inspection_time: int
    values: Mapping[str, Value]
    service_age: float


@dataclass(frozen=True)
class AssetHistory:
    asset_id: str
    records: tuple[InspectionRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)


@dataclass(frozen=True)
class LabeledDataset:
    schema: ConditionSchema
    T: int
    entries: tuple[tuple[AssetHistory, HealthIndex], ...]
    label_horizon_year: int

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self):
        return len(self.entries)

    @property
    def histories(self) -> list[AssetHistory]:
        return [h for h, _ in self.entries]

    @property
    def labels(self) -> np.ndarray:
        """Health-index levels (1..5) as an int array."""
        return np.array([int(y) for _, y in self.entries], dtype=int)

    @property
    def asset_ids(self) -> list[str]:
        return [h.asset_id for h, _ in self.entries]

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        return LabeledDataset(
            self.schema, self.T, tuple(self.entries[i] for i in indices), self.label_horizon_year
        )


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------


def _parse_value(attr: Attribute, raw: str, rownum: int) -> Value:
    if isinstance(attr.kind, Numerical):
        try:
            v = float(raw)
        except ValueError:
            raise DataError(f"row {rownum}: non-numeric value {raw!r} in numerical column {attr.name!r}")
        if not math.isfinite(v):
            raise DataError(f"row {rownum}: non-finite value in column {attr.name!r}")
        return v
    allowed = attr.kind.levels if isinstance(attr.kind, Ordered) else attr.kind.categories
    if raw not in allowed:
        raise DataError(
            f"row {rownum}: schema violation in attribute {attr.name!r}: {raw!r} not in {list(allowed)}"
        )
    return raw


def read_records(path, schema: ConditionSchema) -> list[AssetHistory]:
    """Read a records CSV into per-asset histories sorted by inspection time."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: no records")
        expected = ["asset_id", "inspection_time", *schema.names, "service_age"]
        if header != expected:
            raise DataError(f"{path}: header {header} does not match schema columns {expected}")
        rows: dict[str, dict[int, InspectionRecord]] = {}
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise DataError(f"row {rownum}: expected {len(expected)} fields, got {len(row)}")
            asset_id = row[0]
            try:
                year = int(row[1])
            except ValueError:
                raise DataError(f"row {rownum}: inspection_time {row[1]!r} is not an integer year")
            values = {
                a.name: _parse_value(a, raw, rownum) for a, raw in zip(schema.attributes, row[2:-1])
            }
            try:
                age = float(row[-1])
            except ValueError:
                raise DataError(f"row {rownum}: non-numeric service_age {row[-1]!r}")
            if not (math.isfinite(age) and age >= 0):
                raise DataError(f"row {rownum}: service_age must be a nonnegative number")
            per_asset = rows.setdefault(asset_id, {})
            if year in per_asset:
                raise DataError(f"row {rownum}: duplicate record for asset {asset_id!r} at {year}")
            per_asset[year] = InspectionRecord(asset_id, year, values, age)
    if not rows:
        raise DataError(f"{path}: no records")
    return [
        AssetHistory(aid, tuple(recs[y] for y in sorted(recs))) for aid, recs in rows.items()
    ]


def read_labels(path) -> tuple[dict[str, HealthIndex], dict[str, int]]:
    path = Path(path)
    labels, years = {}, {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["asset_id", "health_index", "assigned_year"]:
            raise DataError(f"{path}: expected header asset_id,health_index,assigned_year")
        for rownum, row in enumerate(reader, start=2):
            try:
                level = int(row["health_index"])
                year = int(row["assigned_year"])
            except ValueError:
                raise DataError(f"{path} row {rownum}: health_index and assigned_year must be integers")
            if not 1 <= level <= 5:
                raise DataError(f"{path} row {rownum}: health_index {level} outside 1..5")
            if row["asset_id"] in labels:
                raise DataError(f"{path} row {rownum}: duplicate label for {row['asset_id']!r}")
            labels[row["asset_id"]] = HealthIndex(level)
            years[row["asset_id"]] = year
    return labels, years


def fit_length(history: AssetHistory, T: int, pad_forward: bool = False) -> AssetHistory | None:
    """Bring a history to exactly ``T`` records.

    Longer histories keep their ``T`` most recent records. Shorter ones are
    dropped (``None``) unless ``pad_forward`` is set, in which case the
    earliest record is repeated to the left.
    """
    recs = history.records
    if len(recs) >= T:
        return AssetHistory(history.asset_id, recs[len(recs) - T:])
    if not pad_forward:
        return None
    return AssetHistory(history.asset_id, (recs[0],) * (T - len(recs)) + recs)


def parse_csv(
    path,
    schema: ConditionSchema,
    labels_path,
    T: int | None = None,
    pad_forward: bool = False,
) -> LabeledDataset:
    """Load records + labels into a :class:`LabeledDataset`.

    ``T`` defaults to the longest history in the file. Assets without a label
    are rejected.
    """
    histories = read_records(path, schema)
    labels, years = read_labels(labels_path)
    missing = [h.asset_id for h in histories if h.asset_id not in labels]
    if missing:
        raise DataError(f"unlabeled assets: {missing[:10]}{' ...' if len(missing) > 10 else ''}")
    if T is None:
        T = max(len(h) for h in histories)
    entries = []
    dropped = 0
    for h in histories:
        fitted = fit_length(h, T, pad_forward)
        if fitted is None:
            dropped += 1
            continue
        entries.append((fitted, labels[h.asset_id]))
    if dropped:
        logger.warning("excluded %d assets with fewer than %d inspections", dropped, T)
    if not entries:
        raise DataError(f"no asset has {T} inspections")
    horizon = max(years[h.asset_id] for h, _ in entries)
    return LabeledDataset(schema, T, tuple(entries), horizon)


def _fmt(v: Value) -> str:
    return repr(float(v)) if isinstance(v, (float, int, np.floating)) else str(v)


def write_records(path, schema: ConditionSchema, histories: Sequence[AssetHistory]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset_id", "inspection_time", *schema.names, "service_age"])
        for h in histories:
            for r in h.records:
                w.writerow(
                    [r.asset_id, r.inspection_time, *(_fmt(r.values[n]) for n in schema.names), _fmt(r.service_age)]
                )


def write_labels(path, dataset: LabeledDataset) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset_id", "health_index", "assigned_year"])
        for h, y in dataset.entries:
            w.writerow([h.asset_id, int(y), dataset.label_horizon_year])


def write_csv(dataset: LabeledDataset, records_path, labels_path) -> None:
    write_records(records_path, dataset.schema, dataset.histories)
    write_labels(labels_path, dataset)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    asset_id: str
    reason: str


def validate(dataset: LabeledDataset) -> list[Violation]:
    """Check every type invariant; an empty list means the dataset is valid."""
    out: list[Violation] = []
    schema = dataset.schema
    for history, label in dataset.entries:
        aid = history.asset_id
        recs = history.records
        if not recs:
            out.append(Violation(aid, "empty history"))
            continue
        if len(recs) != dataset.T:
            out.append(Violation(aid, f"sequence length mismatch: {len(recs)} != {dataset.T}"))
        for a, b in zip(recs, recs[1:]):
            if b.inspection_time <= a.inspection_time:
                out.append(Violation(aid, f"non-increasing time: {a.inspection_time} -> {b.inspection_time}"))
            if b.service_age < a.service_age:
                out.append(Violation(aid, f"decreasing service age at {b.inspection_time}"))
        for r in recs:
            if r.asset_id != aid:
                out.append(Violation(aid, f"record belongs to asset {r.asset_id!r}"))
            if not (math.isfinite(r.service_age) and r.service_age >= 0):
                out.append(Violation(aid, f"invalid service age {r.service_age} at {r.inspection_time}"))
            for a in schema.attributes:
                if a.name not in r.values or r.values[a.name] is None:
                    out.append(Violation(aid, f"missing value for {a.name!r} at {r.inspection_time}"))
                    continue
                v = r.values[a.name]
                if isinstance(a.kind, Numerical):
                    if isinstance(v, str) or not math.isfinite(v):
                        out.append(Violation(aid, f"non-finite {a.name!r} at {r.inspection_time}"))
                else:
                    allowed = a.kind.levels if isinstance(a.kind, Ordered) else a.kind.categories
                    if v not in allowed:
                        out.append(Violation(aid, f"unknown value {v!r} for {a.name!r} at {r.inspection_time}"))
        if recs[-1].inspection_time >= dataset.label_horizon_year:
            out.append(Violation(aid, "label horizon not after last inspection"))
        if int(label) not in range(1, 6):
            out.append(Violation(aid, f"label {label} outside 1..5"))
    return out


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_indices(labels: Sequence[int], fraction: float, rng: np.random.Generator):
    """Return (keep, held_out) index arrays, stratified by label.

    Each class sends ``round(count * fraction)`` members to the held-out side
    (half rounds up). If that leaves the held-out side empty, the largest
    class donates one member.
    """
    labels = np.asarray(labels)
    classes = np.unique(labels)
    counts = {c: int((labels == c).sum()) for c in classes}
    n_out = {c: _round_half_up(counts[c] * fraction) for c in classes}
    for c in classes:
        if n_out[c] >= counts[c]:
            raise DataError(
                f"cannot stratify class {c} ({counts[c]} member(s)) at fraction {fraction}; "
                "merge small classes or use a different fraction"
            )
    if sum(n_out.values()) == 0:
        donor = max(classes, key=lambda c: (counts[c], -c))
        if counts[donor] < 2:
            raise DataError("every class has a single member; cannot build two non-empty splits")
        n_out[donor] = 1
    keep, held = [], []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        perm = idx[rng.permutation(len(idx))]
        held.extend(perm[: n_out[c]].tolist())
        keep.extend(perm[n_out[c]:].tolist())
    return np.array(sorted(keep), dtype=int), np.array(sorted(held), dtype=int)


def split_train_test(dataset: LabeledDataset, test_fraction: float = 0.2, seed: int = 0):
    """Stratified, seeded train/test split. Entry order is preserved in both halves."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    if len(dataset) == 0:
        raise DataError("cannot split an empty dataset")
    train_idx, test_idx = stratified_indices(dataset.labels, test_fraction, np.random.default_rng(seed))
    return dataset.subset(train_idx), dataset.subset(test_idx)


# ---------------------------------------------------------------------------
# synthetic fleets
# ---------------------------------------------------------------------------
#
# The latent model below is fiction used to exercise the pipeline; it makes
# no claim about any real asset population. Latent degradation d runs from 0
# (as new) to 1 (failed) and grows linearly at a per-asset rate r.


@dataclass(frozen=True)
class NumericalTemplate:
    """Attribute value = at_new + (at_failed - at_new) * d + noise."""

    name: str
    at_new: float
    at_failed: float
    decimals: int = 3


@dataclass(frozen=True)
class OrderedTemplate:
    """Levels are listed worst first; the rating reads off 1 - d."""

    name: str
    levels: tuple[str, ...]


@dataclass(frozen=True)
class UnorderedTemplate:
    """Categorical operating condition; each category scales the aging rate."""

    name: str
    categories: tuple[str, ...]
    rate_multipliers: tuple[float, ...]
    probabilities: tuple[float, ...] | None = None


Template = Union[NumericalTemplate, OrderedTemplate, UnorderedTemplate]


@dataclass(frozen=True)
class SynthConfig:
    n_assets: int = 1000
    timesteps: int = 2
    interval_years: int = 10
    horizon_gap_years: int = 10
    first_year: int = 1998
    templates: tuple[Template, ...] = ()
    noise: float = 0.0
    rate_weight: float = 0.0
    class_mix: tuple[float, ...] = (0.2, 0.2, 0.2, 0.2, 0.2)
    initial_degradation: tuple[float, float] = (0.0, 0.6)
    # degradation gained per year at multiplier 1.0
    rate_range: tuple[float, float] = (0.0, 0.02)
    initial_age: tuple[float, float] = (5.0, 30.0)
    max_attempts: int = 200

    def __post_init__(self):
        if self.n_assets < 1 or self.timesteps < 1 or self.interval_years < 1:
            raise DataError("n_assets, timesteps and interval_years must be >= 1")
        if self.horizon_gap_years < 1:
            raise DataError("horizon_gap_years must be >= 1")
        if not 0.0 <= self.rate_weight <= 1.0:
            raise DataError("rate_weight must lie in [0, 1]")
        if self.noise < 0:
            raise DataError("noise must be nonnegative")
        if len(self.class_mix) != 5 or min(self.class_mix) < 0 or sum(self.class_mix) <= 0:
            raise DataError("class_mix needs 5 nonnegative weights with a positive sum")
        for t in self.templates:
            if isinstance(t, UnorderedTemplate) and len(t.rate_multipliers) != len(t.categories):
                raise DataError(f"{t.name}: one rate multiplier per category required")

    def schema(self) -> ConditionSchema:
        attrs = []
        for t in self.templates:
            if isinstance(t, NumericalTemplate):
                attrs.append(Attribute(t.name, Numerical()))
            elif isinstance(t, OrderedTemplate):
                attrs.append(Attribute(t.name, Ordered(t.levels)))
            else:
                attrs.append(Attribute(t.name, Unordered(t.categories)))
        return ConditionSchema(tuple(attrs))


def pole_like(**overrides) -> SynthConfig:
    """Wood-pole shaped fleet: two inspections ten years apart by default."""
    base = dict(
        n_assets=3000,
        timesteps=2,
        interval_years=10,
        horizon_gap_years=10,
        first_year=1998,
        templates=(
            NumericalTemplate("shell_thickness_1", 80.0, 15.0),
            NumericalTemplate("shell_thickness_2", 80.0, 15.0),
            NumericalTemplate("shell_thickness_3", 80.0, 15.0),
            NumericalTemplate("ground_circumference", 110.0, 85.0),
            OrderedTemplate("surface_condition", ("poor", "medium", "good")),
            UnorderedTemplate("woodpecker_holes", ("no", "yes"), (1.0, 1.25), (0.7, 0.3)),
            UnorderedTemplate(
                "carrying_transformer",
                ("none", "single_phase", "three_phase"),
                (1.0, 1.15, 1.35),
                (0.5, 0.35, 0.15),
            ),
        ),
        rate_range=(0.0, 0.02),
    )
    base.update(overrides)
    return SynthConfig(**base)


def cable_like(**overrides) -> SynthConfig:
    """XLPE-cable shaped fleet: three inspections five years apart by default."""
    base = dict(
        n_assets=2500,
        timesteps=3,
        interval_years=5,
        horizon_gap_years=5,
        first_year=2003,
        templates=(
            NumericalTemplate("partial_discharge_pc", 5.0, 500.0, decimals=1),
            NumericalTemplate("neutral_corrosion", 0.0, 1.0),
            OrderedTemplate("visual_condition", ("poor", "medium", "good")),
            NumericalTemplate("average_loading_a", 150.0, 350.0, decimals=1),
        ),
        rate_range=(0.0, 0.04),
    )
    base.update(overrides)
    return SynthConfig(**base)


PROFILES = {"pole-like": pole_like, "cable-like": cable_like}


def _quotas(mix: Sequence[float], n: int) -> np.ndarray:
    w = np.asarray(mix, dtype=float)
    w = w / w.sum()
    raw = w * n
    q = np.floor(raw).astype(int)
    order = sorted(range(5), key=lambda k: (-(raw[k] - q[k]), k))
    for k in order[: n - q.sum()]:
        q[k] += 1
    return q


def _draw_latent(cfg: SynthConfig, rng: np.random.Generator, m: int):
    unordered = [t for t in cfg.templates if isinstance(t, UnorderedTemplate)]
    cats = []
    mult = np.ones(m)
    for t in unordered:
        k = len(t.categories)
        p = np.full(k, 1.0 / k) if t.probabilities is None else np.asarray(t.probabilities) / sum(t.probabilities)
        c = rng.choice(k, size=m, p=p)
        cats.append(c)
        mult = mult * np.asarray(t.rate_multipliers)[c]
    d0 = rng.uniform(*cfg.initial_degradation, size=m)
    base_rate = rng.uniform(*cfg.rate_range, size=m)
    rate = base_rate * mult
    age0 = rng.uniform(*cfg.initial_age, size=m)
    return d0, rate, cats, age0


def _rate_cap(cfg: SynthConfig) -> float:
    cap = cfg.rate_range[1]
    for t in cfg.templates:
        if isinstance(t, UnorderedTemplate):
            cap *= max(t.rate_multipliers)
    return cap


def latent_path(cfg: SynthConfig, d0, rate) -> np.ndarray:
    """Latent degradation at each inspection, shape (m, T)."""
    k = np.arange(cfg.timesteps)
    return np.clip(d0[:, None] + rate[:, None] * k[None, :] * cfg.interval_years, 0.0, 1.0)


def label_from_latent(cfg: SynthConfig, d_last, rate) -> np.ndarray:
    """Health-index level (1..5) from last-inspection degradation and rate."""
    cap = _rate_cap(cfg)
    r_norm = np.clip(rate / cap, 0.0, 1.0) if cap > 0 else np.zeros_like(rate)
    score = (1.0 - cfg.rate_weight) * d_last + cfg.rate_weight * r_norm
    severity = np.minimum(np.floor(score * 5.0), 4).astype(int)
    return 5 - severity


def synthesize(config: SynthConfig, seed: int = 0) -> LabeledDataset:
    """Generate a labeled fleet whose class counts follow ``config.class_mix``.

    Candidate assets are drawn in batches and accepted while their class
    quota is open; a class whose quota cannot be filled within
    ``max_attempts`` batches is a configuration error.
    """
    cfg = config
    rng = np.random.default_rng(seed)
    quotas = _quotas(cfg.class_mix, cfg.n_assets)
    filled = np.zeros(5, dtype=int)
    chunks = []
    for _ in range(cfg.max_attempts):
        if (filled >= quotas).all():
            break
        d0, rate, cats, age0 = _draw_latent(cfg, rng, max(cfg.n_assets, 64))
        path = latent_path(cfg, d0, rate)
        y = label_from_latent(cfg, path[:, -1], rate)
        accept = np.zeros(len(y), dtype=bool)
        for i, level in enumerate(y):
            if filled[level - 1] < quotas[level - 1]:
                filled[level - 1] += 1
                accept[i] = True
        if accept.any():
            chunks.append((d0[accept], rate[accept], [c[accept] for c in cats], age0[accept], y[accept]))
    if not (filled >= quotas).all():
        short = [f"H{k + 1}" for k in range(5) if filled[k] < quotas[k]]
        raise DataError(f"class mix unreachable: could not fill {short} after {cfg.max_attempts} batches")

    d0 = np.concatenate([c[0] for c in chunks])
    rate = np.concatenate([c[1] for c in chunks])
    cats = [np.concatenate([c[2][j] for c in chunks]) for j in range(len(chunks[0][2]))]
    age0 = np.concatenate([c[3] for c in chunks])
    y = np.concatenate([c[4] for c in chunks])
    # interleave classes so consecutive asset ids are not sorted by acceptance order
    order = rng.permutation(len(y))
    d0, rate, age0, y = d0[order], rate[order], age0[order], y[order]
    cats = [c[order] for c in cats]

    path = latent_path(cfg, d0, rate)
    m, T = path.shape
    schema = cfg.schema()
    columns: dict[str, list] = {}
    u = 0
    for t in cfg.templates:
        if isinstance(t, NumericalTemplate):
            span = t.at_failed - t.at_new
            noise = rng.normal(0.0, 1.0, size=(m, T)) * cfg.noise * abs(span)
            vals = np.round(t.at_new + span * path + noise, t.decimals)
            columns[t.name] = vals.tolist()
        elif isinstance(t, OrderedTemplate):
            n = len(t.levels)
            health = 1.0 - path + rng.normal(0.0, 1.0, size=(m, T)) * cfg.noise
            idx = np.clip(np.floor(health * n), 0, n - 1).astype(int)
            columns[t.name] = [[t.levels[k] for k in row] for row in idx]
        else:
            c = cats[u]
            u += 1
            columns[t.name] = [[t.categories[c[i]]] * T for i in range(m)]

    width = len(str(m))
    years = [cfg.first_year + k * cfg.interval_years for k in range(T)]
    entries = []
    for i in range(m):
        aid = str(i + 1).zfill(max(5, width))
        recs = tuple(
            InspectionRecord(
                aid,
                years[k],
                {t.name: columns[t.name][i][k] for t in cfg.templates},
                round(float(age0[i]) + k * cfg.interval_years, 1),
            )
            for k in range(T)
        )
        entries.append((AssetHistory(aid, recs), HealthIndex(int(y[i]))))
    horizon = years[-1] + cfg.horizon_gap_years
    return LabeledDataset(schema, T, tuple(entries), horizon)
