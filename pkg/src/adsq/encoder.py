"""Feed-forward encoder with hand-written forward/backward passes.

Layout is fixed: rectifier hidden layers, an identity-activation semantic
layer second from last, and a tanh hash head last. One instance serves the
label network and one serves each image network; the image pair shares the
topology but never the weights.

Gradients flow in through two injection points: ``upstream_r`` at the
semantic-layer output and ``upstream_v`` at the hash-layer pre-activation.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError, TrainingError

MODEL_MAGIC = b"ADSQW001"


@dataclass
class EncoderParams:
    """Ordered affine layers; weights are (out, in), biases (out,)."""

    weights: list
    biases: list

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def semantic_dim(self) -> int:
        return self.weights[-2].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    def copy(self) -> "EncoderParams":
        return EncoderParams([w.copy() for w in self.weights],
                             [b.copy() for b in self.biases])

    def allclose(self, other, rtol=0.0, atol=0.0) -> bool:
        return all(np.allclose(a, b, rtol=rtol, atol=atol)
                   for a, b in zip(self.weights + self.biases,
                                   other.weights + other.biases))


@dataclass
class NetOutputs:
    """Per-item activations: semantic features r, hash pre-activations v,
    and binary-like codes u = tanh(v)."""

    r: np.ndarray
    v: np.ndarray
    u: np.ndarray


@dataclass
class EncoderGrads:
    """Parameter gradients mirroring EncoderParams layer order."""

    weights: list
    biases: list

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.weights + self.biases)


def init_params(dims, seed) -> EncoderParams:
    """Glorot-uniform weights, zero biases, deterministic per seed.

    ``dims`` chains input width through hidden widths to the semantic and
    hash widths; at least [input, semantic, hash] is required.
    """
    dims = [int(d) for d in dims]
    if len(dims) < 3:
        raise ConfigError(
            f"encoder needs at least [input, semantic, hash] widths, got {dims}")
    if any(d < 1 for d in dims):
        raise ConfigError(f"layer widths must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return EncoderParams(weights=weights, biases=biases)


def _forward_trace(params: EncoderParams, x: np.ndarray):
    """Hidden activations plus (r, v); kept private for backward()."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.in_dim:
        raise ValueError(
            f"input shape {x.shape} does not match encoder input width {params.in_dim}")
    hidden = [x]
    h = x
    for w, b in zip(params.weights[:-2], params.biases[:-2]):
        h = np.maximum(h @ w.T + b, 0.0)
        hidden.append(h)
    r = h @ params.weights[-2].T + params.biases[-2]
    v = r @ params.weights[-1].T + params.biases[-1]
    return hidden, r, v


def forward(params: EncoderParams, x) -> NetOutputs:
    _, r, v = _forward_trace(params, x)
    return NetOutputs(r=r, v=v, u=np.tanh(v))


def backward(params: EncoderParams, x, upstream_r, upstream_v) -> EncoderGrads:
    """Exact reverse-mode parameter gradients for the two injected upstreams."""
    hidden, r, v = _forward_trace(params, x)
    upstream_r = np.asarray(upstream_r, dtype=np.float64)
    upstream_v = np.asarray(upstream_v, dtype=np.float64)
    if upstream_r.shape != r.shape:
        raise ValueError(f"upstream_r shape {upstream_r.shape} != r shape {r.shape}")
    if upstream_v.shape != v.shape:
        raise ValueError(f"upstream_v shape {upstream_v.shape} != v shape {v.shape}")

    n_layers = params.num_layers
    gw = [None] * n_layers
    gb = [None] * n_layers

    gw[-1] = upstream_v.T @ r
    gb[-1] = upstream_v.sum(axis=0)
    g = upstream_v @ params.weights[-1] + upstream_r

    gw[-2] = g.T @ hidden[-1]
    gb[-2] = g.sum(axis=0)
    g = g @ params.weights[-2]

    for i in range(n_layers - 3, -1, -1):
        g = g * (hidden[i + 1] > 0)
        gw[i] = g.T @ hidden[i]
        gb[i] = g.sum(axis=0)
        if i > 0:
            g = g @ params.weights[i]
    return EncoderGrads(weights=gw, biases=gb)


class MomentumSGD:
    """Classic momentum SGD over a fixed list of parameter arrays:

        velocity <- momentum * velocity + grad + weight_decay * param
        param    <- param - lr * velocity

    One optimizer instance owns one network's (or head's) velocity state.
    """

    def __init__(self, arrays, momentum: float, weight_decay: float):
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = [np.zeros_like(a) for a in arrays]

    def step(self, arrays, grads, lr: float):
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        if len(arrays) != len(self.velocity) or len(grads) != len(self.velocity):
            raise ValueError("array/gradient count does not match optimizer state")
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise TrainingError("non-finite gradient; aborting epoch")
        for a, g, vel in zip(arrays, grads, self.velocity):
            vel *= self.momentum
            vel += g + self.weight_decay * a
            a -= lr * vel


def sgd_step(params: EncoderParams, grads: EncoderGrads, lr: float,
             momentum: float, weight_decay: float,
             optimizer: MomentumSGD | None = None) -> EncoderParams:
    """Single update; pass the same ``optimizer`` to carry velocity across steps."""
    arrays = params.weights + params.biases
    if optimizer is None:
        optimizer = MomentumSGD(arrays, momentum, weight_decay)
    optimizer.step(arrays, grads.weights + grads.biases, lr)
    return params


def save_params(path, params: EncoderParams):
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", params.num_layers))
        for w, b in zip(params.weights, params.biases):
            rows, cols = w.shape
            fh.write(struct.pack("<II", rows, cols))
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_params(path) -> EncoderParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:8] != MODEL_MAGIC:
        raise FormatError(f"{path}: missing or malformed model-file magic")
    (n_layers,) = struct.unpack_from("<I", blob, 8)
    offset = 12
    weights, biases = [], []
    for _ in range(n_layers):
        if offset + 8 > len(blob):
            raise FormatError(f"{path}: truncated layer header")
        rows, cols = struct.unpack_from("<II", blob, offset)
        offset += 8
        need = 8 * rows * cols + 8 * rows
        if offset + need > len(blob):
            raise FormatError(f"{path}: truncated layer payload")
        w = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=offset)
        offset += 8 * rows * cols
        b = np.frombuffer(blob, dtype="<f8", count=rows, offset=offset)
        offset += 8 * rows
        weights.append(w.reshape(rows, cols).astype(np.float64))
        biases.append(b.astype(np.float64))
    if offset != len(blob):
        raise FormatError(f"{path}: trailing bytes after last layer")
    if len(weights) < 2:
        raise FormatError(f"{path}: model must have at least semantic and hash layers")
    return EncoderParams(weights=weights, biases=biases)
