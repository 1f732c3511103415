"""Feed-forward classifier written directly in numpy.

The network maps N collective probabilities to a confidence ``w`` in (0, 1):
0 means certainly entangled, 1 certainly separable.  Hidden layers use ReLU,
the output a sigmoid, and training minimizes binary cross-entropy with Adam.
Weight matrices are stored ``(fan_out, fan_in)``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteLoss, SingleClassDataset
from .sampling import make_rng

__all__ = [
    "HIDDEN_LAYERS",
    "MlpModel",
    "Decision",
    "TrainingHyper",
    "TrainingReport",
    "init_model",
    "forward",
    "predict",
    "loss_and_gradients",
    "gradient_check",
    "train",
    "decide",
    "decide_batch",
]

log = logging.getLogger(__name__)

HIDDEN_LAYERS = (36, 180, 75, 180, 75)


@dataclass
class MlpModel:
    layer_sizes: list
    weights: list
    biases: list
    activation: str = "relu"
    output_activation: str = "sigmoid"
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        sizes = list(self.layer_sizes)
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise DimensionMismatch("layer count does not match layer_sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise DimensionMismatch(f"layer {i} has shape {w.shape}/{b.shape}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise NonFiniteLoss(f"layer {i} has non-finite parameters")

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    def params(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MlpModel":
        return MlpModel(list(self.layer_sizes), [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.activation,
                        self.output_activation, dict(self.train_meta))


@dataclass(frozen=True)
class Decision:
    w: float
    epsilon: float
    entangled: bool

    @property
    def label(self) -> str:
        return "entangled" if self.entangled else "separable"


@dataclass
class TrainingHyper:
    learning_rate: float = 1e-3
    batch_size: int = 256
    epochs: int = 100
    validation_fraction: float = 0.05
    patience: int = 10
    seed: int = 0
    standardize: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingHyper":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainingReport:
    loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False

    @property
    def epochs_run(self) -> int:
        return len(self.loss)


def init_model(n_in: int, seed: int = 0, hidden=HIDDEN_LAYERS) -> MlpModel:
    """He-normal weights (variance 2 / fan_in) and zero biases."""
    if n_in < 1:
        raise ValueError("n_in must be >= 1")
    sizes = [int(n_in), *hidden, 1]
    rng = make_rng(seed, 0xA11)
    weights = [rng.standard_normal((fo, fi)) * np.sqrt(2.0 / fi) for fi, fo in zip(sizes, sizes[1:])]
    biases = [np.zeros(fo) for fo in sizes[1:]]
    return MlpModel(sizes, weights, biases, train_meta={"seed": seed, "n_in": int(n_in)})


def _sigmoid(z):
    # Split by sign to avoid overflow in exp.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _preprocess(model, x):
    scale = model.train_meta.get("standardize")
    if scale:
        x = (x - np.asarray(scale["mean"])) / np.asarray(scale["std"])
    return x


def _logits(model, x, keep=False):
    acts = [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w.T + b
        h = z if i == last else np.maximum(z, 0.0)
        if keep:
            acts.append(h)
    return (h[:, 0], acts) if keep else h[:, 0]


def predict(model: MlpModel, x) -> np.ndarray:
    """Confidence ``w`` for a batch ``(n, n_in)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.n_in:
        raise DimensionMismatch(f"expected features of width {model.n_in}, got {x.shape}")
    return _sigmoid(_logits(model, _preprocess(model, x)))


def forward(model: MlpModel, features) -> float:
    features = np.asarray(features, dtype=float)
    if features.shape != (model.n_in,):
        raise DimensionMismatch(f"expected {model.n_in} features, got {features.shape}")
    return float(predict(model, features[None, :])[0])


def _bce(z, y):
    # Mean of softplus(z) - y z, the cross-entropy of sigmoid(z) against y.
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def loss_and_gradients(model: MlpModel, x, y) -> tuple[float, list]:
    """Mean BCE and its gradients, ordered like ``model.params()``."""
    z, acts = _logits(model, x, keep=True)
    n = len(y)
    loss = _bce(z, y)
    delta = ((_sigmoid(z) - y) / n)[:, None]
    grads = []
    for i in range(len(model.weights) - 1, -1, -1):
        h_in = acts[i]
        grads.append(delta.sum(axis=0))
        grads.append(delta.T @ h_in)
        if i > 0:
            delta = (delta @ model.weights[i]) * (acts[i] > 0)
    grads.reverse()
    return loss, grads


def gradient_check(model: MlpModel, x, y, step: float = 1e-5) -> float:
    """Largest relative gap between backprop and central differences.

    The relative error is ``|a - n| / max(|a| + |n|, 1e-6)``; the floor keeps
    parameters with vanishing gradient from dominating.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _, grads = loss_and_gradients(model, x, y)
    worst = 0.0
    for p, g in zip(model.params(), grads):
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            up = _bce(_logits(model, x), y)
            flat[k] = orig - step
            down = _bce(_logits(model, x), y)
            flat[k] = orig
            num = (up - down) / (2 * step)
            err = abs(num - gflat[k]) / max(abs(num) + abs(gflat[k]), 1e-6)
            worst = max(worst, err)
    return worst


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(model: MlpModel, features, entangled, hyper: TrainingHyper | None = None,
          callback=None) -> tuple[MlpModel, TrainingReport]:
    """Train on features ``(n, N)`` with boolean entanglement labels.

    Targets follow the confidence orientation: separable -> 1, entangled -> 0.
    The best-validation-loss parameters are returned.
    """
    hyper = hyper or TrainingHyper()
    x = np.asarray(features, dtype=float)
    ent = np.asarray(entangled, dtype=bool)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("training set is empty")
    if x.shape[1] != model.n_in:
        raise DimensionMismatch(f"model expects {model.n_in} features, data has {x.shape[1]}")
    if ent.all() or not ent.any():
        raise SingleClassDataset("training data must contain both classes")
    y = (~ent).astype(float)

    model = model.copy()
    if hyper.standardize:
        mean, std = x.mean(axis=0), x.std(axis=0) + 1e-12
        model.train_meta["standardize"] = {"mean": mean.tolist(), "std": std.tolist()}
    x = _preprocess(model, x)

    split_rng = make_rng(hyper.seed, 0x5E1)
    order = split_rng.permutation(len(x))
    n_val = int(round(hyper.validation_fraction * len(x)))
    val_idx, tr_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
    xt, yt = x[tr_idx], y[tr_idx]
    xv, yv = x[val_idx], y[val_idx]

    params = model.params()
    opt = _Adam(params, hyper.learning_rate)
    report = TrainingReport()
    best_loss, best_params, stall = np.inf, None, 0
    for epoch in range(hyper.epochs):
        perm = make_rng(hyper.seed, 0xE0C, epoch).permutation(len(xt))
        total = 0.0
        for start in range(0, len(xt), hyper.batch_size):
            idx = perm[start:start + hyper.batch_size]
            loss, grads = loss_and_gradients(model, xt[idx], yt[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}, batch at {start}")
            opt.step(params, grads)
            total += loss * len(idx)
        report.loss.append(total / len(xt))
        if n_val:
            zv = _logits(model, xv)
            vloss = _bce(zv, yv)
            report.val_loss.append(vloss)
            report.val_accuracy.append(float(np.mean((zv >= 0) == (yv == 1))))
        else:
            vloss = report.loss[-1]
            report.val_loss.append(vloss)
            report.val_accuracy.append(float("nan"))
        log.info("epoch %d loss %.5f val_loss %.5f val_acc %.4f", epoch, report.loss[-1],
                 vloss, report.val_accuracy[-1])
        if callback is not None:
            callback(epoch, report)
        if vloss < best_loss:
            best_loss, stall = vloss, 0
            best_params = [p.copy() for p in params]
            report.best_epoch = epoch
        else:
            stall += 1
            if stall >= hyper.patience:
                report.stopped_early = True
                break
    for p, best in zip(params, best_params):
        p[...] = best
    meta = {k: v for k, v in asdict(hyper).items()}
    meta.update(n_in=model.n_in, epochs_run=report.epochs_run, best_epoch=report.best_epoch)
    model.train_meta.update(meta)
    return model, report


def decide(model: MlpModel, features, epsilon: float) -> Decision:
    """Threshold rule: ``w < epsilon`` means entangled, ``w >= epsilon`` separable."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    w = forward(model, features)
    return Decision(w, epsilon, w < epsilon)


def decide_batch(w, epsilon: float) -> np.ndarray:
    """Entangled mask for precomputed confidences."""
    return np.asarray(w) < epsilon
