"""Sequence classifier (stacked LSTM + softmax head) and the snapshot
feed-forward baseline, with exact gradients.

All computations are batched: a sequence batch has shape ``(B, T, d)`` and
a snapshot batch ``(B, d)``. Passing a single ``(T, d)`` sequence (or a
single ``d`` vector to the baseline) is also accepted. Class labels are
0-based (class ``c`` is health index ``H{c+1}``).

LSTM gate layout inside each stacked weight matrix is ``[input, forget,
output, candidate]``, each block ``h`` rows tall.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

N_CLASSES = 5
LOSS_FLOOR = 1e-12
GATES = ("input", "forget", "output", "candidate")


def softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(p, c) -> float:
    """``-ln(max(p[c], 1e-12))`` for a single distribution."""
    return float(-np.log(max(float(np.asarray(p)[c]), LOSS_FLOOR)))


def sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _glorot(rng, shape, fan_in, fan_out):
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=shape)


@dataclass
class Gradients:
    loss: float
    grads: dict

    def __getitem__(self, key):
        return self.grads[key]

    def global_norm(self) -> float:
        return float(np.sqrt(sum(np.sum(g * g) for g in self.grads.values())))


@dataclass(frozen=True)
class ClassifierConfig:
    input_width: int
    timesteps: int
    lstm_hidden: tuple[int, ...] = (10, 10)
    dense_relu_width: int | None = None
    n_classes: int = N_CLASSES
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lstm_hidden", tuple(int(h) for h in self.lstm_hidden))
        if self.timesteps < 1 or self.input_width < 1:
            raise ValueError("timesteps and input_width must be >= 1")
        if not self.lstm_hidden or min(self.lstm_hidden) < 1:
            raise ValueError("need at least one LSTM layer with width >= 1")
        if self.dense_relu_width is not None and self.dense_relu_width < 1:
            raise ValueError("dense_relu_width must be >= 1")
        if self.n_classes != N_CLASSES:
            raise ValueError("the output head always has 5 classes (H1..H5)")


@dataclass(frozen=True)
class FnnConfig:
    input_width: int
    hidden: tuple[int, ...] = (10, 10)
    n_classes: int = N_CLASSES
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_width < 1 or (self.hidden and min(self.hidden) < 1):
            raise ValueError("widths must be >= 1")
        if self.n_classes != N_CLASSES:
            raise ValueError("the output head always has 5 classes (H1..H5)")


class _Cache(dict):
    """Forward activations; remembers which model produced them."""


class _Model:
    kind = ""
    config: ClassifierConfig | FnnConfig
    params: dict

    def _head_backward(self, cache, labels, grads):
        """Softmax/CE gradient into the output layer; returns (loss, d_top)."""
        p = cache["probs"]
        B = p.shape[0]
        labels = np.asarray(labels, dtype=int).reshape(-1)
        if labels.shape[0] != B:
            raise ValueError(f"{labels.shape[0]} labels for a batch of {B}")
        if labels.min() < 0 or labels.max() >= N_CLASSES:
            raise ValueError("labels must be 0-based class indices in 0..4")
        pc = p[np.arange(B), labels]
        loss = float(np.mean(-np.log(np.maximum(pc, LOSS_FLOOR))))
        dz = p.copy()
        dz[np.arange(B), labels] -= 1.0
        dz[pc < LOSS_FLOOR] = 0.0  # flat region of the floored log
        dz /= B
        feat = cache["head_in"]
        grads["out.W"] = dz.T @ feat
        grads["out.b"] = dz.sum(axis=0)
        return loss, dz @ self.params["out.W"]

    def _check_cache(self, cache):
        if not isinstance(cache, _Cache) or cache.get("model") is not self:
            raise ValueError("cache was not produced by this model's forward pass")

    def predict_proba(self, X) -> np.ndarray:
        return self.forward(X)[0]

    def predict(self, X) -> np.ndarray:
        """0-based class predictions; ties go to the lowest class index."""
        return np.argmax(np.atleast_2d(self.predict_proba(X)), axis=-1)

    def loss(self, X, labels) -> float:
        p = np.atleast_2d(self.predict_proba(X))
        labels = np.asarray(labels, dtype=int).reshape(-1)
        pc = p[np.arange(len(labels)), labels]
        return float(np.mean(-np.log(np.maximum(pc, LOSS_FLOOR))))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": asdict(self.config),
            "gate_order": list(GATES) if self.kind == "lstm" else None,
            "params": {k: v.tolist() for k, v in self.params.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    def copy(self):
        return type(self)(self.config, {k: v.copy() for k, v in self.params.items()})


class SequenceClassifier(_Model):
    kind = "lstm"

    def __init__(self, config: ClassifierConfig, params: dict):
        self.config = config
        self.params = params

    @classmethod
    def init(cls, config: ClassifierConfig, seed: int | None = None) -> "SequenceClassifier":
        """Glorot-uniform weights, forget-gate bias 1, other biases 0."""
        rng = np.random.default_rng(config.seed if seed is None else seed)
        params = {}
        d = config.input_width
        for k, h in enumerate(config.lstm_hidden):
            params[f"lstm{k}.W"] = _glorot(rng, (4 * h, d), d, h)
            params[f"lstm{k}.U"] = _glorot(rng, (4 * h, h), h, h)
            b = np.zeros(4 * h)
            b[h:2 * h] = 1.0
            params[f"lstm{k}.b"] = b
            d = h
        if config.dense_relu_width is not None:
            m = config.dense_relu_width
            params["dense.W"] = _glorot(rng, (m, d), d, m)
            params["dense.b"] = np.zeros(m)
            d = m
        params["out.W"] = _glorot(rng, (N_CLASSES, d), d, N_CLASSES)
        params["out.b"] = np.zeros(N_CLASSES)
        return cls(config, params)

    def forward(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 2
        if single:
            X = X[None]
        cfg = self.config
        if X.ndim != 3 or X.shape[1:] != (cfg.timesteps, cfg.input_width):
            raise ValueError(
                f"expected sequences of shape (T={cfg.timesteps}, d={cfg.input_width}), got {X.shape[1:]}"
            )
        B, T, _ = X.shape
        cache = _Cache(model=self, layers=[])
        inp = X
        for k, H in enumerate(cfg.lstm_hidden):
            W, U, b = self.params[f"lstm{k}.W"], self.params[f"lstm{k}.U"], self.params[f"lstm{k}.b"]
            h = np.zeros((B, H))
            c = np.zeros((B, H))
            hs = np.empty((B, T, H))
            steps = []
            for t in range(T):
                z = inp[:, t] @ W.T + h @ U.T + b
                i = sigmoid(z[:, :H])
                f = sigmoid(z[:, H:2 * H])
                o = sigmoid(z[:, 2 * H:3 * H])
                g = np.tanh(z[:, 3 * H:])
                c_prev, h_prev = c, h
                c = f * c_prev + i * g
                tc = np.tanh(c)
                h = o * tc
                hs[:, t] = h
                steps.append((i, f, o, g, c_prev, h_prev, tc))
            cache["layers"].append((inp, steps))
            inp = hs
        top = inp[:, -1]
        if cfg.dense_relu_width is not None:
            a = top @ self.params["dense.W"].T + self.params["dense.b"]
            cache["dense_pre"] = a
            cache["dense_in"] = top
            top = np.maximum(a, 0.0)
        cache["head_in"] = top
        logits = top @ self.params["out.W"].T + self.params["out.b"]
        probs = softmax(logits)
        cache["probs"] = probs
        return (probs[0] if single else probs), cache

    def backward(self, cache, labels) -> Gradients:
        """Exact gradient of the batch-mean floored cross-entropy."""
        self._check_cache(cache)
        cfg = self.config
        grads: dict = {}
        loss, d_top = self._head_backward(cache, labels, grads)
        if cfg.dense_relu_width is not None:
            da = d_top * (cache["dense_pre"] > 0)
            grads["dense.W"] = da.T @ cache["dense_in"]
            grads["dense.b"] = da.sum(axis=0)
            d_top = da @ self.params["dense.W"]

        layers = cache["layers"]
        inp0 = layers[-1][0]
        B, T = inp0.shape[0], inp0.shape[1]
        d_hs = np.zeros((B, T, cfg.lstm_hidden[-1]))
        d_hs[:, -1] = d_top
        for k in reversed(range(len(cfg.lstm_hidden))):
            H = cfg.lstm_hidden[k]
            W, U = self.params[f"lstm{k}.W"], self.params[f"lstm{k}.U"]
            inp, steps = layers[k]
            dW = np.zeros_like(W)
            dU = np.zeros_like(U)
            db = np.zeros(4 * H)
            d_inp = np.zeros_like(inp)
            dh_next = np.zeros((B, H))
            dc_next = np.zeros((B, H))
            dz = np.empty((B, 4 * H))
            for t in reversed(range(T)):
                i, f, o, g, c_prev, h_prev, tc = steps[t]
                dh = d_hs[:, t] + dh_next
                dc = dh * o * (1.0 - tc * tc) + dc_next
                dz[:, :H] = dc * g * i * (1.0 - i)
                dz[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
                dz[:, 2 * H:3 * H] = dh * tc * o * (1.0 - o)
                dz[:, 3 * H:] = dc * i * (1.0 - g * g)
                dc_next = dc * f
                dW += dz.T @ inp[:, t]
                dU += dz.T @ h_prev
                db += dz.sum(axis=0)
                d_inp[:, t] = dz @ W
                dh_next = dz @ U
            grads[f"lstm{k}.W"] = dW
            grads[f"lstm{k}.U"] = dU
            grads[f"lstm{k}.b"] = db
            d_hs = d_inp
        return Gradients(loss, {k: grads[k] for k in self.params})

    @classmethod
    def from_dict(cls, d: dict) -> "SequenceClassifier":
        if d.get("kind") != "lstm":
            raise ValueError(f"not a sequence classifier: kind={d.get('kind')!r}")
        cfg = ClassifierConfig(**d["config"])
        model = cls(cfg, {k: np.asarray(v, dtype=float) for k, v in d["params"].items()})
        _check_shapes(model, cls.init(cfg))
        return model


class FnnBaseline(_Model):
    """Feed-forward ReLU network over a single inspection's features."""

    kind = "fnn"

    def __init__(self, config: FnnConfig, params: dict):
        self.config = config
        self.params = params

    @classmethod
    def init(cls, config: FnnConfig, seed: int | None = None) -> "FnnBaseline":
        rng = np.random.default_rng(config.seed if seed is None else seed)
        params = {}
        d = config.input_width
        for k, m in enumerate(config.hidden):
            params[f"fc{k}.W"] = _glorot(rng, (m, d), d, m)
            params[f"fc{k}.b"] = np.zeros(m)
            d = m
        params["out.W"] = _glorot(rng, (N_CLASSES, d), d, N_CLASSES)
        params["out.b"] = np.zeros(N_CLASSES)
        return cls(config, params)

    def forward(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X[None]
        if X.ndim != 2 or X.shape[1] != self.config.input_width:
            raise ValueError(f"expected width {self.config.input_width}, got shape {X.shape}")
        cache = _Cache(model=self, layers=[])
        a = X
        for k in range(len(self.config.hidden)):
            pre = a @ self.params[f"fc{k}.W"].T + self.params[f"fc{k}.b"]
            cache["layers"].append((a, pre))
            a = np.maximum(pre, 0.0)
        cache["head_in"] = a
        probs = softmax(a @ self.params["out.W"].T + self.params["out.b"])
        cache["probs"] = probs
        return (probs[0] if single else probs), cache

    def backward(self, cache, labels) -> Gradients:
        self._check_cache(cache)
        grads: dict = {}
        loss, d = self._head_backward(cache, labels, grads)
        for k in reversed(range(len(self.config.hidden))):
            a_in, pre = cache["layers"][k]
            dpre = d * (pre > 0)
            grads[f"fc{k}.W"] = dpre.T @ a_in
            grads[f"fc{k}.b"] = dpre.sum(axis=0)
            d = dpre @ self.params[f"fc{k}.W"]
        return Gradients(loss, {k: grads[k] for k in self.params})

    @classmethod
    def from_dict(cls, d: dict) -> "FnnBaseline":
        if d.get("kind") != "fnn":
            raise ValueError(f"not a baseline model: kind={d.get('kind')!r}")
        cfg = FnnConfig(**d["config"])
        model = cls(cfg, {k: np.asarray(v, dtype=float) for k, v in d["params"].items()})
        _check_shapes(model, cls.init(cfg))
        return model


def _check_shapes(model, reference):
    if set(model.params) != set(reference.params):
        raise ValueError("parameter set does not match the configuration")
    for k, v in reference.params.items():
        if model.params[k].shape != v.shape:
            raise ValueError(f"{k}: shape {model.params[k].shape} != expected {v.shape}")
        if not np.isfinite(model.params[k]).all():
            raise ValueError(f"{k}: non-finite entries")


def model_from_dict(d: dict):
    return SequenceClassifier.from_dict(d) if d.get("kind") == "lstm" else FnnBaseline.from_dict(d)


def init_params(config, seed: int | None = None):
    if isinstance(config, ClassifierConfig):
        return SequenceClassifier.init(config, seed)
    return FnnBaseline.init(config, seed)


def forward(model: SequenceClassifier, sequence):
    return model.forward(sequence)


def backward(model, cache, label) -> Gradients:
    return model.backward(cache, label)


def forward_fnn(baseline: FnnBaseline, last_step_features):
    return baseline.forward(last_step_features)[0]
