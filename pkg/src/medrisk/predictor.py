"""Bidirectional LSTM glucose predictor with exact hand-derived gradients.

The model reads a fixed window of per-step features (CGM with missing steps
zero-filled, bolus, carbs, and the missing flag so zeros are disambiguated),
runs one LSTM pass in each direction, and maps the two final hidden states
through a linear head to a single mg/dL value ``horizon_steps`` after the
window. Everything is plain numpy in float64: forward, backpropagation
through time, and Adam. That keeps training bit-reproducible for a given
seed on a single thread and lets tests check the analytic gradients against
central finite differences directly.

Parameters are stored in a flat dict: per direction ``Wx`` (features x 4H),
``Wh`` (H x 4H) and ``b`` (4H), with gate columns ordered [input, forget,
cell, output], plus the head ``w_out`` (2H) and ``b_out``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InsufficientData, ShapeMismatch
from .glucose import CGM_MAX, CGM_MIN, GlucoseTrace, EvalMetrics, metrics_from_errors

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PredictorConfig:
    window_steps: int = 12       # 60 minutes of history
    horizon_steps: int = 6       # predict 30 minutes ahead
    hidden_size: int = 16
    epochs: int = 30
    learning_rate: float = 0.01
    batch_size: int = 256
    seed: int = 42
    features_used: tuple[str, ...] = ("cgm", "bolus", "carbs", "missing")

    def __post_init__(self) -> None:
        for name in ("window_steps", "horizon_steps", "hidden_size", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise InsufficientData(f"{name} must be positive")

    @property
    def n_features(self) -> int:
        return len(self.features_used)


@dataclass(frozen=True)
class Normalization:
    """Per-feature affine statistics; invertible because stds are floored.

    Normalized inputs are winsorized at ``input_clip_sigma`` standard
    deviations so a single wild sample cannot blow up the gate
    pre-activations; the affine statistics themselves stay invertible.
    """

    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float
    target_std: float
    input_clip_sigma: float = 3.0

    def apply(self, windows: np.ndarray) -> np.ndarray:
        z = (windows - self.feature_mean) / self.feature_std
        return np.clip(z, -self.input_clip_sigma, self.input_clip_sigma)


@dataclass
class TrainedPredictor:
    config: PredictorConfig
    params: dict[str, np.ndarray]
    normalization: Normalization
    loss_history: list[float] = field(default_factory=list)

    def predict(self, window: np.ndarray) -> float:
        return float(self.predict_batch(window[None, :, :])[0])

    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        expected = (self.config.window_steps, self.config.n_features)
        if windows.ndim != 3 or windows.shape[1:] != expected:
            raise ShapeMismatch(expected, tuple(windows.shape[1:]))
        norm = self.normalization
        out = _forward(self.params, norm.apply(windows))
        return np.clip(out * norm.target_std + norm.target_mean, CGM_MIN, CGM_MAX)


# --- feature encoding ---------------------------------------------------------

def encode_features(trace: GlucoseTrace, features_used: tuple[str, ...]) -> np.ndarray:
    """Per-step feature matrix; missing CGM is zero-filled, flagged via the
    dedicated feature so the model never reads an absent sample as a true
    zero."""
    columns = []
    for name in features_used:
        if name == "cgm":
            columns.append(np.nan_to_num(trace.cgm, nan=0.0))
        elif name == "missing":
            columns.append(trace.missing.astype(float))
        elif name == "bolus":
            columns.append(trace.bolus.astype(float))
        elif name == "carbs":
            columns.append(trace.carbs.astype(float))
        elif name == "finger":
            columns.append(np.nan_to_num(trace.finger, nan=0.0))
        else:
            raise InsufficientData(f"unknown feature: {name}")
    return np.stack(columns, axis=1)


@dataclass(frozen=True)
class WindowSet:
    """Supervised pairs plus bookkeeping used by evaluation and attacks."""

    x: np.ndarray            # (n, window_steps, n_features), raw units
    y: np.ndarray            # (n,) true cgm at the horizon
    start: np.ndarray        # (n,) window start step within the trace
    target_step: np.ndarray  # (n,) step index of the horizon truth
    patient_id: str


def build_windows(trace: GlucoseTrace, cfg: PredictorConfig) -> WindowSet:
    """All windows whose horizon truth is an observed (non-missing) sample."""
    feats = encode_features(trace, cfg.features_used)
    w, h = cfg.window_steps, cfg.horizon_steps
    n = len(trace) - w - h + 1
    xs, ys, starts, targets = [], [], [], []
    for s in range(max(n, 0)):
        target = s + w - 1 + h
        if trace.missing[target]:
            continue
        xs.append(feats[s : s + w])
        ys.append(trace.cgm[target])
        starts.append(s)
        targets.append(target)
    if not xs:
        return WindowSet(
            x=np.empty((0, w, cfg.n_features)),
            y=np.empty(0),
            start=np.empty(0, dtype=int),
            target_step=np.empty(0, dtype=int),
            patient_id=trace.patient_id,
        )
    return WindowSet(
        x=np.stack(xs),
        y=np.array(ys),
        start=np.array(starts, dtype=int),
        target_step=np.array(targets, dtype=int),
        patient_id=trace.patient_id,
    )


# --- LSTM forward / backward --------------------------------------------------

def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_params(cfg: PredictorConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    h, f = cfg.hidden_size, cfg.n_features
    scale = 1.0 / np.sqrt(h)

    def uniform(*shape):
        return rng.uniform(-scale, scale, size=shape)

    params = {}
    for direction in ("f", "b"):
        params[f"Wx_{direction}"] = uniform(f, 4 * h)
        params[f"Wh_{direction}"] = uniform(h, 4 * h)
        bias = uniform(4 * h)
        bias[h : 2 * h] += 1.0  # open the forget gate at init
        params[f"b_{direction}"] = bias
    params["w_out"] = uniform(2 * h)
    params["b_out"] = np.zeros(1)
    return params


def _direction_forward(x, wx, wh, b, reverse, keep_cache):
    batch, steps, _ = x.shape
    hidden = wh.shape[0]
    h_state = np.zeros((batch, hidden))
    c_state = np.zeros((batch, hidden))
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    cache = []
    for t in order:
        h_prev, c_prev = h_state, c_state
        z = x[:, t] @ wx + h_prev @ wh + b
        gi = _sigmoid(z[:, :hidden])
        gf = _sigmoid(z[:, hidden : 2 * hidden])
        gg = np.tanh(z[:, 2 * hidden : 3 * hidden])
        go = _sigmoid(z[:, 3 * hidden :])
        c_state = gf * c_prev + gi * gg
        tc = np.tanh(c_state)
        h_state = go * tc
        if keep_cache:
            cache.append((t, gi, gf, gg, go, c_prev, tc, h_prev))
    return h_state, cache


def _direction_backward(x, wx, wh, dh_final, cache):
    hidden = wh.shape[0]
    d_wx = np.zeros_like(wx)
    d_wh = np.zeros_like(wh)
    d_b = np.zeros(4 * hidden)
    dh = dh_final
    dc = np.zeros_like(dh_final)
    for t, gi, gf, gg, go, c_prev, tc, h_prev in reversed(cache):
        do = dh * tc
        dc = dc + dh * go * (1.0 - tc * tc)
        di = dc * gg
        df = dc * c_prev
        dg = dc * gi
        dz = np.concatenate(
            [
                di * gi * (1.0 - gi),
                df * gf * (1.0 - gf),
                dg * (1.0 - gg * gg),
                do * go * (1.0 - go),
            ],
            axis=1,
        )
        d_wx += x[:, t].T @ dz
        d_wh += h_prev.T @ dz
        d_b += dz.sum(axis=0)
        dh = dz @ wh.T
        dc = dc * gf
    return d_wx, d_wh, d_b


def _forward(params: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Normalized prediction for a normalized batch (batch, steps, features)."""
    h_fwd, _ = _direction_forward(
        x, params["Wx_f"], params["Wh_f"], params["b_f"], reverse=False, keep_cache=False
    )
    h_bwd, _ = _direction_forward(
        x, params["Wx_b"], params["Wh_b"], params["b_b"], reverse=True, keep_cache=False
    )
    concat = np.concatenate([h_fwd, h_bwd], axis=1)
    return concat @ params["w_out"] + params["b_out"][0]


def loss_and_gradients(
    params: dict[str, np.ndarray], x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared error over the batch and its exact parameter gradients."""
    hidden = params["Wh_f"].shape[0]
    h_fwd, cache_f = _direction_forward(
        x, params["Wx_f"], params["Wh_f"], params["b_f"], reverse=False, keep_cache=True
    )
    h_bwd, cache_b = _direction_forward(
        x, params["Wx_b"], params["Wh_b"], params["b_b"], reverse=True, keep_cache=True
    )
    concat = np.concatenate([h_fwd, h_bwd], axis=1)
    pred = concat @ params["w_out"] + params["b_out"][0]
    err = pred - y
    loss = float(np.mean(err * err))

    dpred = 2.0 * err / len(y)
    grads = {
        "w_out": concat.T @ dpred,
        "b_out": np.array([dpred.sum()]),
    }
    dh_f = np.outer(dpred, params["w_out"][:hidden])
    dh_b = np.outer(dpred, params["w_out"][hidden:])
    grads["Wx_f"], grads["Wh_f"], grads["b_f"] = _direction_backward(
        x, params["Wx_f"], params["Wh_f"], dh_f, cache_f
    )
    grads["Wx_b"], grads["Wh_b"], grads["b_b"] = _direction_backward(
        x, params["Wx_b"], params["Wh_b"], dh_b, cache_b
    )
    return loss, grads


def _batched_forward(params, x, chunk=4096):
    outs = [
        _forward(params, x[i : i + chunk]) for i in range(0, len(x), chunk)
    ]
    return np.concatenate(outs) if outs else np.empty(0)


# --- training -----------------------------------------------------------------

def _fit_normalization(x: np.ndarray, y: np.ndarray) -> Normalization:
    flat = x.reshape(-1, x.shape[-1])
    std = flat.std(axis=0)
    return Normalization(
        feature_mean=flat.mean(axis=0),
        feature_std=np.maximum(std, 1e-6),
        target_mean=float(y.mean()),
        target_std=float(max(y.std(), 1e-6)),
    )


def train(traces: list[GlucoseTrace], cfg: PredictorConfig | None = None) -> TrainedPredictor:
    """Fit the predictor on every usable window of the given traces.

    Minibatch Adam over the MSE objective; the shuffle, the initializer, and
    hence the final weights are fully determined by ``cfg.seed``.

    Raises:
        InsufficientData: no trace yields a single (window, truth) pair.
    """
    cfg = cfg or PredictorConfig()
    sets = [build_windows(t, cfg) for t in traces]
    xs = [s.x for s in sets if len(s.y)]
    if not xs:
        raise InsufficientData("no usable training windows")
    x_raw = np.concatenate(xs)
    y_raw = np.concatenate([s.y for s in sets if len(s.y)])

    norm = _fit_normalization(x_raw, y_raw)
    x = norm.apply(x_raw)
    y = (y_raw - norm.target_mean) / norm.target_std

    rng = np.random.default_rng(cfg.seed)
    params = init_params(cfg, rng)

    adam_m = {k: np.zeros_like(v) for k, v in params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    def full_loss() -> float:
        pred = _batched_forward(params, x)
        return float(np.mean((pred - y) ** 2))

    history = [full_loss()]
    n = len(y)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            _, grads = loss_and_gradients(params, x[idx], y[idx])
            step += 1
            for key in params:
                adam_m[key] = beta1 * adam_m[key] + (1 - beta1) * grads[key]
                adam_v[key] = beta2 * adam_v[key] + (1 - beta2) * grads[key] ** 2
                m_hat = adam_m[key] / (1 - beta1**step)
                v_hat = adam_v[key] / (1 - beta2**step)
                params[key] = params[key] - cfg.learning_rate * m_hat / (
                    np.sqrt(v_hat) + eps
                )
        history.append(full_loss())

    return TrainedPredictor(
        config=cfg, params=params, normalization=norm, loss_history=history
    )


def predict(p: TrainedPredictor, window: np.ndarray) -> float:
    """Single mg/dL prediction, clamped to the reportable range.

    Raises:
        ShapeMismatch
    """
    return p.predict(window)


def evaluate(p: TrainedPredictor, traces: list[GlucoseTrace]) -> EvalMetrics:
    """RMSE/MAE over every window whose horizon truth was observed.

    Raises:
        InsufficientData
    """
    errors = []
    for trace in traces:
        ws = build_windows(trace, p.config)
        if not len(ws.y):
            continue
        pred = np.concatenate(
            [p.predict_batch(ws.x[i : i + 4096]) for i in range(0, len(ws.y), 4096)]
        )
        errors.append(pred - ws.y)
    if not errors:
        raise InsufficientData("no evaluable windows")
    return metrics_from_errors(np.concatenate(errors))


def persistence_predictions(ws: WindowSet, cfg: PredictorConfig) -> np.ndarray:
    """Naive forecast: carry the last observed CGM value in each window.

    Windows with no observed sample fall back to the set's mean truth, which
    only matters in pathological all-missing traces.
    """
    cgm_col = cfg.features_used.index("cgm")
    missing_col = cfg.features_used.index("missing")
    preds = np.empty(len(ws.y))
    fallback = float(ws.y.mean()) if len(ws.y) else 0.0
    for i in range(len(ws.y)):
        observed = np.flatnonzero(ws.x[i, :, missing_col] < 0.5)
        preds[i] = ws.x[i, observed[-1], cgm_col] if observed.size else fallback
    return preds


def evaluate_persistence(traces: list[GlucoseTrace], cfg: PredictorConfig) -> EvalMetrics:
    """The persistence-baseline metrics on the same window set as `evaluate`."""
    errors = []
    for trace in traces:
        ws = build_windows(trace, cfg)
        if not len(ws.y):
            continue
        errors.append(persistence_predictions(ws, cfg) - ws.y)
    if not errors:
        raise InsufficientData("no evaluable windows")
    return metrics_from_errors(np.concatenate(errors))


# --- parameter files ------------------------------------------------------------

def save_predictor(p: TrainedPredictor, path: str | Path) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "config": {
            "window_steps": p.config.window_steps,
            "horizon_steps": p.config.horizon_steps,
            "hidden_size": p.config.hidden_size,
            "epochs": p.config.epochs,
            "learning_rate": p.config.learning_rate,
            "batch_size": p.config.batch_size,
            "seed": p.config.seed,
            "features_used": list(p.config.features_used),
        },
        "normalization": {
            "feature_mean": p.normalization.feature_mean.tolist(),
            "feature_std": p.normalization.feature_std.tolist(),
            "target_mean": p.normalization.target_mean,
            "target_std": p.normalization.target_std,
            "input_clip_sigma": p.normalization.input_clip_sigma,
        },
        "params": {k: v.tolist() for k, v in p.params.items()},
        "loss_history": p.loss_history,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)


def load_predictor(path: str | Path) -> TrainedPredictor:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("format_version") != FORMAT_VERSION:
        raise InsufficientData(f"unsupported predictor format: {payload.get('format_version')}")
    raw_cfg = dict(payload["config"])
    raw_cfg["features_used"] = tuple(raw_cfg["features_used"])
    cfg = PredictorConfig(**raw_cfg)
    norm = Normalization(
        feature_mean=np.array(payload["normalization"]["feature_mean"]),
        feature_std=np.array(payload["normalization"]["feature_std"]),
        target_mean=payload["normalization"]["target_mean"],
        target_std=payload["normalization"]["target_std"],
        input_clip_sigma=payload["normalization"].get("input_clip_sigma", 3.0),
    )
    params = {k: np.array(v) for k, v in payload["params"].items()}
    h, f = cfg.hidden_size, cfg.n_features
    expected = {
        "Wx_f": (f, 4 * h), "Wh_f": (h, 4 * h), "b_f": (4 * h,),
        "Wx_b": (f, 4 * h), "Wh_b": (h, 4 * h), "b_b": (4 * h,),
        "w_out": (2 * h,), "b_out": (1,),
    }
    for key, shape in expected.items():
        if key not in params or params[key].shape != shape:
            raise ShapeMismatch(shape, params.get(key, np.empty(0)).shape)
    return TrainedPredictor(
        config=cfg,
        params=params,
        normalization=norm,
        loss_history=list(payload.get("loss_history", [])),
    )
