"""Mini-batch training, early stopping on validation macro-precision, and
grid search over hyperparameters."""

from __future__ import annotations

import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import metrics
from .dataset import stratified_indices
from .errors import DataError, NumericalError
from .network import (
    ClassifierConfig,
    FnnBaseline,
    FnnConfig,
    SequenceClassifier,
    init_params,
    model_from_dict,
)

logger = logging.getLogger(__name__)

MAX_GRID = 256


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    validation_fraction: float = 0.1
    early_stop_patience: int = 50
    clip_norm: float | None = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not 0 <= self.validation_fraction < 0.5:
            raise ValueError("validation_fraction must lie in [0, 0.5)")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")


class _Adam:
    def __init__(self, params, cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        b1t = 1.0 - c.beta1 ** self.t
        b2t = 1.0 - c.beta2 ** self.t
        for k in params:  # fixed key order
            g = grads[k]
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * g * g
            params[k] -= c.learning_rate * (self.m[k] / b1t) / (np.sqrt(self.v[k] / b2t) + c.eps)


class _Sgd:
    def __init__(self, params, cfg: TrainConfig):
        self.lr = cfg.learning_rate

    def step(self, params, grads):
        for k in params:
            params[k] -= self.lr * grads[k]


@dataclass
class TrainedModel:
    model: SequenceClassifier | FnnBaseline
    pipeline: object | None = None
    train_config: TrainConfig | None = None
    history: list = field(default_factory=list)  # per-epoch dicts
    chosen_epoch: int = 0

    @property
    def val_mp(self) -> float:
        if not self.history:
            return float("nan")
        return self.history[self.chosen_epoch - 1]["val_mp"]

    def to_dict(self) -> dict:
        d = self.model.to_dict()
        d["pipeline_sha256"] = self.pipeline.digest() if self.pipeline is not None else None
        d["train_config"] = asdict(self.train_config) if self.train_config else None
        d["chosen_epoch"] = self.chosen_epoch
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    def history_json(self) -> str:
        return json.dumps({"chosen_epoch": self.chosen_epoch, "epochs": self.history}, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict, pipeline=None) -> "TrainedModel":
        if pipeline is not None and d.get("pipeline_sha256") not in (None, pipeline.digest()):
            raise DataError("feature pipeline does not match the one this model was trained with")
        cfg = TrainConfig(**d["train_config"]) if d.get("train_config") else None
        return cls(model_from_dict(d), pipeline, cfg, [], int(d.get("chosen_epoch", 0)))


def _prepare(X, labels):
    X = np.asarray(X, dtype=float)
    y = np.asarray(labels, dtype=int).reshape(-1)
    if X.shape[0] == 0:
        raise DataError("no training samples")
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} samples but {y.shape[0]} labels")
    if y.min() < 1 or y.max() > 5:
        raise DataError("labels must be health-index levels 1..5")
    return X, y - 1


def _macro_precision(model, X, y0) -> float:
    pred = model.predict(X)
    cm = metrics.confusion(y0 + 1, pred + 1)
    return metrics.macro(cm)[0]


def fit(model, X, labels, cfg: TrainConfig, pipeline=None) -> TrainedModel:
    """Train ``model`` in place on (X, labels) and return the best snapshot.

    ``labels`` are health-index levels 1..5. A stratified validation slice
    is held out for model selection; with ``validation_fraction == 0`` the
    training set doubles as the selection set.
    """
    X, y = _prepare(X, labels)
    rng = np.random.default_rng(cfg.seed)
    if cfg.validation_fraction > 0:
        tr, va = stratified_indices(y, cfg.validation_fraction, rng)
    else:
        tr, va = np.arange(len(y)), np.arange(0)
    Xtr, ytr = X[tr], y[tr]
    Xva, yva = (X[va], y[va]) if len(va) else (Xtr, ytr)

    opt = _Adam(model.params, cfg) if cfg.optimizer == "adam" else _Sgd(model.params, cfg)
    history = []
    best = ((-1.0, -np.inf), 0)
    best_params = {k: v.copy() for k, v in model.params.items()}
    n = len(ytr)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            _, cache = model.forward(Xtr[idx])
            g = model.backward(cache, ytr[idx])
            if not np.isfinite(g.loss) or not all(np.isfinite(v).all() for v in g.grads.values()):
                raise NumericalError(f"non-finite loss or gradient at epoch {epoch}, batch {bi}")
            if cfg.clip_norm is not None:
                norm = g.global_norm()
                if norm > cfg.clip_norm:
                    for k in g.grads:
                        g.grads[k] *= cfg.clip_norm / norm
            opt.step(model.params, g.grads)
        train_loss = model.loss(Xtr, ytr)
        val_loss = model.loss(Xva, yva)
        val_mp = _macro_precision(model, Xva, yva)
        if not np.isfinite(train_loss):
            raise NumericalError(f"training loss diverged at epoch {epoch}")
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "val_mp": val_mp})
        # MP saturates on small validation sets; lower loss breaks MP ties
        key = (val_mp, -val_loss)
        if key > best[0]:
            best = (key, epoch)
            best_params = {k: v.copy() for k, v in model.params.items()}
        elif epoch - best[1] >= cfg.early_stop_patience:
            logger.info("early stop at epoch %d (best %d)", epoch, best[1])
            break
    for k in model.params:
        model.params[k][...] = best_params[k]
    return TrainedModel(model, pipeline, cfg, history, best[1])


def train(model_config: ClassifierConfig, tensor, labels, cfg: TrainConfig, pipeline=None) -> TrainedModel:
    """Train a sequence classifier. ``tensor`` is a SequenceTensor or an (n, T, d) array."""
    X = getattr(tensor, "values", tensor)
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[1:] != (model_config.timesteps, model_config.input_width):
        raise DataError(
            f"tensor shape {X.shape} does not match T={model_config.timesteps}, d={model_config.input_width}"
        )
    model = init_params(model_config, cfg.seed)
    return fit(model, X, labels, cfg, pipeline)


def train_baseline(tensor, labels, cfg: TrainConfig, hidden=(10, 10), pipeline=None) -> TrainedModel:
    """Train the snapshot FNN on the last inspection's features only."""
    X = np.asarray(getattr(tensor, "values", tensor), dtype=float)
    if X.ndim != 3:
        raise DataError("expected an (n, T, d) tensor")
    last = X[:, -1, :]
    model = FnnBaseline.init(FnnConfig(last.shape[1], tuple(hidden)), cfg.seed)
    return fit(model, last, labels, cfg, pipeline)


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    learning_rate: tuple = (0.01,)
    lstm_hidden: tuple = ((10, 10),)
    epochs: tuple = (200,)
    batch_size: tuple = (32,)
    cap: int = MAX_GRID

    def __post_init__(self):
        for name in ("learning_rate", "lstm_hidden", "epochs", "batch_size"):
            if not getattr(self, name):
                raise ValueError(f"grid list {name!r} is empty")
        if self.size > self.cap:
            raise ValueError(f"grid has {self.size} combinations, cap is {self.cap}")

    @property
    def size(self) -> int:
        return len(self.learning_rate) * len(self.lstm_hidden) * len(self.epochs) * len(self.batch_size)

    def combinations(self):
        for lr, hid, ep, bs in itertools.product(self.learning_rate, self.lstm_hidden, self.epochs, self.batch_size):
            yield {"learning_rate": lr, "lstm_hidden": tuple(hid), "epochs": ep, "batch_size": bs}


def _run_combo(args):
    index, combo, X, labels, model_config, cfg_base = args
    cfg = replace(
        cfg_base,
        learning_rate=combo["learning_rate"],
        epochs=combo["epochs"],
        batch_size=combo["batch_size"],
        seed=cfg_base.seed ^ index,
    )
    mcfg = replace(model_config, lstm_hidden=combo["lstm_hidden"])
    tm = train(mcfg, X, labels, cfg)
    return index, tm.val_mp, tm.chosen_epoch


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("ASSET_HEALTH_THREADS", "1")))
    except ValueError:
        return 1


def grid_search(grid: GridSpec, tensor, labels, model_config: ClassifierConfig, cfg_base: TrainConfig):
    """Exhaustive search scored by validation macro-precision.

    Combination ``k`` trains with seed ``cfg_base.seed ^ k``. Ties go to the
    earliest combination in product order. Returns
    ``(best_train_config, best_model_config, leaderboard)``.
    """
    X = np.asarray(getattr(tensor, "values", tensor), dtype=float)
    combos = list(grid.combinations())
    jobs = [(k, c, X, labels, model_config, cfg_base) for k, c in enumerate(combos)]
    workers = min(worker_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_combo, jobs))
    else:
        results = [_run_combo(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    board = [
        {"index": k, **{**combos[k], "lstm_hidden": list(combos[k]["lstm_hidden"])}, "val_mp": mp, "chosen_epoch": ep}
        for k, mp, ep in results
    ]
    best = max(board, key=lambda r: (r["val_mp"], -r["index"]))
    combo = combos[best["index"]]
    best_cfg = replace(
        cfg_base,
        learning_rate=combo["learning_rate"],
        epochs=combo["epochs"],
        batch_size=combo["batch_size"],
        seed=cfg_base.seed ^ best["index"],
    )
    best_mcfg = replace(model_config, lstm_hidden=combo["lstm_hidden"])
    board.sort(key=lambda r: (-r["val_mp"], r["index"]))
    return best_cfg, best_mcfg, board
