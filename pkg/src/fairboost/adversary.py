"""The adversary: a small dense network predicting the sensitive attribute.

It consumes the predictor's output (the score passed through a sigmoid,
plus the true label in equalized-odds mode) and emits a raw logit;
callers apply sigmoid where a probability is needed. Besides the usual
parameter gradients for its own SGD updates, it exposes the gradient of
its loss with respect to the INPUT, which the trainer chains through the
sigmoid link to steer the boosting residuals.

Hidden layers use ReLU. Loss is the binary negative log-likelihood with
probabilities clipped to [EPS_P, 1 - EPS_P] inside the logs; gradients
use the exact unclipped form (the clip only matters beyond |logit|~16).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrainingError
from .util import sigmoid

EPS_P = 1e-7


@dataclass
class AdversaryNet:
    """Dense net parameters: weights[i] has shape (fan_in, fan_out)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def d_in(self) -> int:
        return self.weights[0].shape[0]

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdversaryNet":
        return cls(
            weights=[np.array(w, dtype=float) for w in d["weights"]],
            biases=[np.array(b, dtype=float) for b in d["biases"]],
        )


def init_xavier(layer_sizes, seed: int) -> AdversaryNet:
    """Seeded Xavier-uniform weights, zero biases.

    Each weight matrix is drawn from U(-lim, lim) with
    lim = sqrt(6 / (fan_in + fan_out)), first layer first.
    """
    sizes = list(layer_sizes)
    if len(sizes) < 2 or any(int(k) < 1 for k in sizes):
        raise ValueError(f"invalid layer sizes {sizes}")
    if sizes[-1] != 1:
        raise ValueError("output layer must have size 1")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return AdversaryNet(weights, biases)


def _as_batch(net: AdversaryNet, v):
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    V = v[None, :] if single else v
    if V.ndim != 2 or V.shape[1] != net.d_in:
        raise ValueError(f"expected input dimension {net.d_in}, got shape {v.shape}")
    return V, single


def _forward_acts(net: AdversaryNet, V):
    """Run the net, keeping every layer activation for backprop."""
    acts = [V]
    last = len(net.weights) - 1
    a = V
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return acts


def forward(net: AdversaryNet, v):
    """Logit(s) for one input vector or a batch of them."""
    V, single = _as_batch(net, v)
    out = _forward_acts(net, V)[-1][:, 0]
    return float(out[0]) if single else out


def adversary_loss(net: AdversaryNet, v, s):
    """Negative log-likelihood of the sensitive attribute under the net."""
    V, single = _as_batch(net, v)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    p = np.clip(sigmoid(_forward_acts(net, V)[-1][:, 0]), EPS_P, 1.0 - EPS_P)
    loss = -(s_arr * np.log(p) + (1.0 - s_arr) * np.log(1.0 - p))
    return float(loss[0]) if single else loss


def _backward(net: AdversaryNet, acts, S, want_params: bool):
    """Shared backward pass from the NLL through all layers.

    Returns (param_grads or None, per-sample input gradient). Parameter
    gradients are batch means; the input gradient stays per-sample.
    """
    n = acts[0].shape[0]
    logit = acts[-1][:, 0]
    delta = (sigmoid(logit) - S)[:, None]
    gw = [None] * len(net.weights)
    gb = [None] * len(net.biases)
    for i in range(len(net.weights) - 1, -1, -1):
        if want_params:
            gw[i] = acts[i].T @ delta / n
            gb[i] = delta.mean(axis=0)
        delta = delta @ net.weights[i].T
        if i > 0:
            delta = delta * (acts[i] > 0.0)
    return (gw, gb) if want_params else None, delta


def param_gradients(net: AdversaryNet, V, S):
    """Mean gradients of the loss over a batch, one array per parameter.

    Returns (weight_grads, bias_grads) shaped like net.weights and
    net.biases.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[1] != net.d_in:
        raise ValueError(f"expected batch shape (n, {net.d_in}), got {V.shape}")
    if V.shape[0] == 0:
        raise ValueError("empty batch")
    S = np.asarray(S, dtype=float)
    grads, _ = _backward(net, _forward_acts(net, V), S, want_params=True)
    return grads


def input_gradient(net: AdversaryNet, v, s):
    """Per-sample gradient of the loss with respect to the input vector."""
    V, single = _as_batch(net, v)
    S = np.atleast_1d(np.asarray(s, dtype=float))
    _, dv = _backward(net, _forward_acts(net, V), S, want_params=False)
    return dv[0] if single else dv


def sgd_step(net: AdversaryNet, grads, learning_rate: float) -> AdversaryNet:
    """In-place step theta <- theta - lr * grad; returns the net."""
    gw, gb = grads
    for g in list(gw) + list(gb):
        if not np.isfinite(g).all():
            raise TrainingError("non-finite adversary gradient")
    for w, g in zip(net.weights, gw):
        w -= learning_rate * g
    for b, g in zip(net.biases, gb):
        b -= learning_rate * g
    return net


class AdamOptimizer:
    """Adam state for one AdversaryNet; optional alternative to plain SGD."""

    def __init__(self, net: AdversaryNet, learning_rate: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(w) for w in net.weights] + [np.zeros_like(b) for b in net.biases]
        self.v = [np.zeros_like(w) for w in net.weights] + [np.zeros_like(b) for b in net.biases]

    def step(self, net: AdversaryNet, grads) -> AdversaryNet:
        gw, gb = grads
        flat = list(gw) + list(gb)
        for g in flat:
            if not np.isfinite(g).all():
                raise TrainingError("non-finite adversary gradient")
        self.t += 1
        params = list(net.weights) + list(net.biases)
        for p, g, m, v in zip(params, flat, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            mhat = m / (1 - self.beta1 ** self.t)
            vhat = v / (1 - self.beta2 ** self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
        return net
