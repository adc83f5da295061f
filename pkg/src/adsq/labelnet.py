"""Label-network objective, gradients, and training phase.

The label network embeds multi-hot label vectors. Its loss couples four
terms over all ordered within-batch pairs (i != j):

  sem_pair    pairwise likelihood on semantic features, logits 0.5 * r_i.r_j
  code_pair   same on tanh code outputs, logits 0.5 * w_i.w_j
  binary_reg  L1 pull of |code entries| toward 1 (or literal entries
              toward +1 when ``j3_literal`` is set)
  classify    squared error of the linear classifier readout vs true labels

The trained outputs (semantic rows and code rows for the whole training
set) are cached and later used as fixed supervision by the image networks.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .config import HyperParams
from .data import Dataset, SimilarityMatrix
from .encoder import (EncoderParams, MomentumSGD, NetOutputs, backward, forward)
from .errors import FormatError, TrainingError
from .numerics import sigmoid_stable, softplus_stable

SUPERVISION_MAGIC = b"ADSQS001"


@dataclass
class ClassifierHead:
    """Linear readout from code space to label space."""

    weight: np.ndarray  # classes x k_half
    bias: np.ndarray    # classes

    def predict(self, omega):
        return omega @ self.weight.T + self.bias

    def copy(self) -> "ClassifierHead":
        return ClassifierHead(self.weight.copy(), self.bias.copy())


def init_head(num_classes: int, k_half: int, seed) -> ClassifierHead:
    rng = np.random.default_rng(seed)
    bound = np.sqrt(6.0 / (num_classes + k_half))
    return ClassifierHead(weight=rng.uniform(-bound, bound, size=(num_classes, k_half)),
                          bias=np.zeros(num_classes))


@dataclass
class LabelSupervision:
    """Cached label-network outputs for every training item."""

    r_l: np.ndarray      # n x semantic_dim
    omega_l: np.ndarray  # n x k_half
    epoch: int


@dataclass
class LabelLossBreakdown:
    """Weighted term contributions; they sum to ``total``."""

    sem_pair: float
    code_pair: float
    binary_reg: float
    classify: float

    @property
    def total(self) -> float:
        return self.sem_pair + self.code_pair + self.binary_reg + self.classify


@dataclass
class LabelGrads:
    r: np.ndarray
    omega: np.ndarray
    head_weight: np.ndarray
    head_bias: np.ndarray


def _check_finite(value, term):
    if not np.all(np.isfinite(value)):
        raise TrainingError(f"non-finite {term} term in label-network loss")
    return value


def pairwise_nll(logits, sim_binary):
    """Negative log-likelihood sum over ordered off-diagonal pairs."""
    per_pair = softplus_stable(logits) - sim_binary * logits
    np.fill_diagonal(per_pair, 0.0)
    return float(per_pair.sum())


def binary_reg_value(omega, literal: bool) -> float:
    """Per-item L1 distance of codes from the discrete target set."""
    if literal:
        return float(np.abs(omega - 1.0).sum())
    return float(np.abs(np.abs(omega) - 1.0).sum())


def labelnet_loss(outs: NetOutputs, head: ClassifierHead, sim_binary, labels,
                  hp: HyperParams) -> LabelLossBreakdown:
    r, omega = outs.r, outs.u
    m = r.shape[0]
    s = np.asarray(sim_binary, dtype=np.float64)
    lam = 0.5 * (r @ r.T)
    theta = 0.5 * (omega @ omega.T)
    sem = _check_finite(hp.alpha * pairwise_nll(lam, s), "sem_pair")
    code = _check_finite(hp.beta * pairwise_nll(theta, s), "code_pair")
    # each item appears in 2*(m-1) ordered-pair slots
    reg = _check_finite(hp.gamma * 2.0 * (m - 1) * binary_reg_value(omega, hp.j3_literal),
                        "binary_reg")
    resid = head.predict(omega) - np.asarray(labels, dtype=np.float64)
    classify = _check_finite(hp.delta * float((resid**2).sum()), "classify")
    return LabelLossBreakdown(sem_pair=sem, code_pair=code, binary_reg=reg,
                              classify=classify)


def labelnet_grad(outs: NetOutputs, head: ClassifierHead, sim_binary, labels,
                  hp: HyperParams) -> LabelGrads:
    """Exact gradients of the label loss w.r.t. r rows, code rows, and head.

    The binary regularizer uses the subgradient convention that its slope
    is 0 exactly at |entry| = 1 (and at 0 in the literal form's kink).
    """
    r, omega = outs.r, outs.u
    m = r.shape[0]
    s = np.asarray(sim_binary, dtype=np.float64)

    g_lam = sigmoid_stable(0.5 * (r @ r.T)) - s
    np.fill_diagonal(g_lam, 0.0)
    g_r = hp.alpha * (g_lam @ r)  # symmetric pair matrix: both slots fold into one product

    g_theta = sigmoid_stable(0.5 * (omega @ omega.T)) - s
    np.fill_diagonal(g_theta, 0.0)
    g_omega = hp.beta * (g_theta @ omega)

    if hp.j3_literal:
        reg_slope = np.sign(omega - 1.0)
    else:
        reg_slope = np.sign(np.abs(omega) - 1.0) * np.sign(omega)
    g_omega = g_omega + hp.gamma * 2.0 * (m - 1) * reg_slope

    resid = head.predict(omega) - np.asarray(labels, dtype=np.float64)
    d = 2.0 * hp.delta * resid
    g_omega = g_omega + d @ head.weight
    g_head_w = d.T @ omega
    g_head_b = d.sum(axis=0)

    for name, g in (("r", g_r), ("omega", g_omega), ("head", g_head_w)):
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient ({name}) in label-network loss")
    return LabelGrads(r=g_r, omega=g_omega, head_weight=g_head_w, head_bias=g_head_b)


def iter_batches(n, batch_size, rng):
    """Shuffled index batches; a trailing remnant below 2 items is dropped."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        batch = order[start:start + batch_size]
        if batch.size >= 2:
            yield batch


def train_labelnet(params: EncoderParams, head: ClassifierHead, dataset: Dataset,
                   sim: SimilarityMatrix, hp: HyperParams, *, epochs: int, lr: float,
                   rng, opt_net: MomentumSGD | None = None,
                   opt_head: MomentumSGD | None = None):
    """Run ``epochs`` of minibatch SGD, then cache supervision from the
    final parameters over the full training set.

    Mutates ``params`` and ``head`` in place; returns
    (LabelSupervision, per-epoch loss totals).
    """
    labels_f = dataset.labels.astype(np.float64)
    if opt_net is None:
        opt_net = MomentumSGD(params.weights + params.biases, hp.momentum, hp.weight_decay)
    if opt_head is None:
        opt_head = MomentumSGD([head.weight, head.bias], hp.momentum, hp.weight_decay)

    epoch_losses = []
    for _ in range(epochs):
        total = 0.0
        for batch in iter_batches(dataset.n, hp.batch_size, rng):
            x = labels_f[batch]
            s_bin, _ = sim.submatrix(batch)
            outs = forward(params, x)
            total += labelnet_loss(outs, head, s_bin, labels_f[batch], hp).total
            grads = labelnet_grad(outs, head, s_bin, labels_f[batch], hp)
            upstream_v = grads.omega * (1.0 - outs.u**2)
            net_grads = backward(params, x, grads.r, upstream_v)
            opt_net.step(params.weights + params.biases,
                         net_grads.weights + net_grads.biases, lr)
            opt_head.step([head.weight, head.bias],
                          [grads.head_weight, grads.head_bias], lr)
        epoch_losses.append(total)

    outs = forward(params, labels_f)
    supervision = LabelSupervision(r_l=outs.r, omega_l=outs.u, epoch=epochs)
    return supervision, epoch_losses


def save_supervision(path, sup: LabelSupervision):
    n, sem = sup.r_l.shape
    k = sup.omega_l.shape[1]
    with open(path, "wb") as fh:
        fh.write(SUPERVISION_MAGIC)
        fh.write(struct.pack("<III", n, sem, k))
        fh.write(np.ascontiguousarray(sup.r_l, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(sup.omega_l, dtype="<f8").tobytes())


def load_supervision(path) -> LabelSupervision:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 20 or blob[:8] != SUPERVISION_MAGIC:
        raise FormatError(f"{path}: missing or malformed supervision-file magic")
    n, sem, k = struct.unpack_from("<III", blob, 8)
    expected = 20 + 8 * n * (sem + k)
    if len(blob) != expected:
        raise FormatError(f"{path}: truncated supervision payload")
    r = np.frombuffer(blob, dtype="<f8", count=n * sem, offset=20).reshape(n, sem)
    w = np.frombuffer(blob, dtype="<f8", count=n * k, offset=20 + 8 * n * sem).reshape(n, k)
    return LabelSupervision(r_l=r.astype(np.float64), omega_l=w.astype(np.float64), epoch=-1)
