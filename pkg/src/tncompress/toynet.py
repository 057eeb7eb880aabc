"""Small deterministic networks with manual backprop, and the synthetic
datasets they train on.

Two architectures: an 8 -> 32 -> 2 MLP with a rectifier, and a tiny CNN
(1 x 8 x 8 input, one 3x3 valid conv to 4 channels, rectifier, flatten to
144, linear to 2).  Both use a softmax cross-entropy head and no biases.
Weights are stored as float32; all arithmetic runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray


def make_blobs(seed: int, train: int = 512, test: int = 256,
               separation: float = 1.5) -> Dataset:
    """Two unit-variance Gaussian clusters at +-separation along the first
    coordinate of an 8-dimensional space."""
    rng = np.random.default_rng(seed)

    def draw(n):
        half = n // 2
        y = np.repeat([0, 1], [half, n - half])
        x = rng.standard_normal((n, 8))
        x[:, 0] += np.where(y == 0, -separation, separation)
        return x, y

    x_tr, y_tr = draw(train)
    x_te, y_te = draw(test)
    return Dataset(x_tr, y_tr, x_te, y_te)


def make_stripes(seed: int, train: int = 512, test: int = 256,
                 noise: float = 0.5) -> Dataset:
    """8x8 single-channel images: horizontal stripes (class 0) vs vertical
    stripes (class 1), plus Gaussian pixel noise."""
    rng = np.random.default_rng(seed)
    rows = np.tile(np.where(np.arange(8) % 2 == 0, 1.0, -1.0)[:, None], (1, 8))
    patterns = np.stack([rows, rows.T])  # (class, 8, 8)

    def draw(n):
        half = n // 2
        y = np.repeat([0, 1], [half, n - half])
        x = patterns[y] + noise * rng.standard_normal((n, 8, 8))
        return x[..., None], y  # add the channel axis

    x_tr, y_tr = draw(train)
    x_te, y_te = draw(test)
    return Dataset(x_tr, y_tr, x_te, y_te)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross entropy, batch accuracy, and the logit gradient."""
    logits = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    probs = exp / exp.sum(axis=1, keepdims=True)
    n = logits.shape[0]
    loss = float(-np.log(probs[np.arange(n), labels] + 1e-300).mean())
    acc = float((logits.argmax(axis=1) == labels).mean())
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    return loss, acc, grad / n


class MLP:
    """8 -> 32 -> 2 with a rectifier; weights [W1 (32x8), W2 (2x32)]."""

    arch = "mlp"
    input_shape = (8,)

    def __init__(self, seed: int, hidden: int = 32):
        rng = np.random.default_rng(seed)
        self.weights = [
            (rng.standard_normal((hidden, 8)) / np.sqrt(8)).astype(np.float32),
            (rng.standard_normal((2, hidden)) / np.sqrt(hidden)).astype(np.float32),
        ]

    def forward(self, x: np.ndarray) -> np.ndarray:
        w1, w2 = (w.astype(np.float64) for w in self.weights)
        h = np.maximum(np.asarray(x, dtype=np.float64) @ w1.T, 0.0)
        return h @ w2.T

    def loss_and_grads(self, x, y):
        w1, w2 = (w.astype(np.float64) for w in self.weights)
        x = np.asarray(x, dtype=np.float64)
        pre = x @ w1.T
        h = np.maximum(pre, 0.0)
        logits = h @ w2.T
        loss, acc, dlogits = softmax_cross_entropy(logits, y)
        dw2 = dlogits.T @ h
        dh = (dlogits @ w2) * (pre > 0)
        dw1 = dh.T @ x
        return loss, acc, [dw1, dw2]


class TinyCNN:
    """1 x 8 x 8 -> 3x3 valid conv to 4 channels -> rectifier -> flatten 144
    (little-endian over width, height, channel) -> linear to 2."""

    arch = "tinycnn"
    input_shape = (8, 8, 1)

    def __init__(self, seed: int):
        rng = np.random.default_rng(seed)
        self.weights = [
            (rng.standard_normal((3, 3, 1, 4)) / 3.0).astype(np.float32),
            (rng.standard_normal((2, 144)) / 12.0).astype(np.float32),
        ]

    @staticmethod
    def _conv(x, kernel):
        wo = x.shape[1] - kernel.shape[0] + 1
        ho = x.shape[2] - kernel.shape[0] + 1
        out = np.zeros((x.shape[0], wo, ho, kernel.shape[3]))
        for k1 in range(kernel.shape[0]):
            for k2 in range(kernel.shape[1]):
                out += np.einsum("bwhs,st->bwht",
                                 x[:, k1:k1 + wo, k2:k2 + ho, :], kernel[k1, k2])
        return out

    @staticmethod
    def _flatten(a):
        # little-endian (w fastest, then h, then channel) per sample
        return a.transpose(0, 3, 2, 1).reshape(a.shape[0], -1)

    def forward(self, x: np.ndarray) -> np.ndarray:
        kc, wfc = (w.astype(np.float64) for w in self.weights)
        pre = self._conv(np.asarray(x, dtype=np.float64), kc)
        return self._flatten(np.maximum(pre, 0.0)) @ wfc.T

    def loss_and_grads(self, x, y):
        kc, wfc = (w.astype(np.float64) for w in self.weights)
        x = np.asarray(x, dtype=np.float64)
        pre = self._conv(x, kc)
        act = np.maximum(pre, 0.0)
        flat = self._flatten(act)
        logits = flat @ wfc.T
        loss, acc, dlogits = softmax_cross_entropy(logits, y)
        dwfc = dlogits.T @ flat
        dflat = dlogits @ wfc
        dact = dflat.reshape(act.shape[0], act.shape[3], act.shape[2],
                             act.shape[1]).transpose(0, 3, 2, 1)
        dpre = dact * (pre > 0)
        dk = np.zeros_like(kc)
        wo, ho = pre.shape[1], pre.shape[2]
        for k1 in range(kc.shape[0]):
            for k2 in range(kc.shape[1]):
                dk[k1, k2] = np.einsum("bwhs,bwht->st",
                                       x[:, k1:k1 + wo, k2:k2 + ho, :], dpre)
        return loss, acc, [dk, dwfc]


def make_net(arch: str, seed: int):
    if arch == "mlp":
        return MLP(seed)
    if arch == "tinycnn":
        return TinyCNN(seed)
    raise ValueError(f"unknown architecture {arch!r}")


def make_dataset(arch: str, seed: int) -> Dataset:
    return make_blobs(seed) if arch == "mlp" else make_stripes(seed)


def toy_backward(net, x: np.ndarray, y: np.ndarray) -> list[np.ndarray]:
    """Exact gradients of the mean cross entropy w.r.t. every weight."""
    x = np.asarray(x)
    if x.shape[1:] != net.input_shape:
        raise ValueError(f"batch shape {x.shape[1:]} does not match "
                         f"{net.input_shape}")
    _, _, grads = net.loss_and_grads(x, y)
    return grads
