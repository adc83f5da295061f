"""Image-network objective with fixed label-network supervision.

Pairing is within-batch. The semantic and code likelihood terms run over
ordered pairs i != j where the supervision side carries index i and the
image side index j; the asymmetric inner-product term runs over all batch
pairs including i = j, anchoring each item's continuous output to its own
discrete code. The balance term pushes every bit's batch column sum
toward zero.

Gradients are the exact derivatives of the loss as computed here. They
enter the encoder at two points: the hash pre-activation (quantization,
balance, code-likelihood, and asymmetric terms) and the semantic layer
(the semantic likelihood term, which never touches the hash head).
"""

from dataclasses import dataclass

import numpy as np

from .bstep import CodeMatrix
from .config import HyperParams, TermMask, variant_loss_mask
from .data import Dataset, SimilarityMatrix
from .encoder import EncoderParams, MomentumSGD, backward, forward
from .errors import TrainingError
from .labelnet import LabelSupervision, iter_batches, pairwise_nll
from .numerics import sigmoid_stable


@dataclass
class ImgBatchContext:
    """Everything one batch of the image objective needs, index-aligned."""

    indices: np.ndarray
    u: np.ndarray           # batch x k_half, tanh outputs
    r_img: np.ndarray       # batch x semantic_dim
    r_sup: np.ndarray       # batch x semantic_dim, label-network semantic rows
    w_sup: np.ndarray       # batch x k_half, label-network code rows
    codes: np.ndarray       # batch x k_half, entries +-1
    sim_binary: np.ndarray  # batch x batch in {0,1}
    sim_signed: np.ndarray  # batch x batch in {-1,+1}


@dataclass
class ImgLossBreakdown:
    """Weighted term contributions; they sum to ``total``. Masked terms
    are reported as exactly 0.0 and are never computed."""

    sem_pair: float
    code_pair: float
    quant: float
    balance: float
    asym: float

    @property
    def total(self) -> float:
        return self.sem_pair + self.code_pair + self.quant + self.balance + self.asym


def make_context(batch, outs, sup: LabelSupervision, code_matrix: CodeMatrix,
                 sim: SimilarityMatrix) -> ImgBatchContext:
    batch = np.asarray(batch)
    s_bin, s_signed = sim.submatrix(batch)
    return ImgBatchContext(indices=batch, u=outs.u, r_img=outs.r,
                           r_sup=sup.r_l[batch], w_sup=sup.omega_l[batch],
                           codes=code_matrix.codes[batch],
                           sim_binary=s_bin, sim_signed=s_signed)


def _check_finite(value, term):
    if not np.all(np.isfinite(value)):
        raise TrainingError(f"non-finite {term} term in image-network loss")
    return value


def imgnet_loss(ctx: ImgBatchContext, hp: HyperParams, variant="full") -> ImgLossBreakdown:
    mask = variant if isinstance(variant, TermMask) else variant_loss_mask(variant)
    k = ctx.u.shape[1]

    sem = 0.0
    if mask.sem_pair:
        lam = 0.5 * (ctx.r_sup @ ctx.r_img.T)
        sem = _check_finite(mask.sem_pair * hp.alpha * pairwise_nll(lam, ctx.sim_binary),
                            "sem_pair")
    code = 0.0
    if mask.code_pair:
        theta = 0.5 * (ctx.w_sup @ ctx.u.T)
        code = _check_finite(mask.code_pair * hp.beta * pairwise_nll(theta, ctx.sim_binary),
                             "code_pair")
    quant = 0.0
    if mask.quant:
        quant = _check_finite(mask.quant * hp.eta * float(((ctx.u - ctx.codes)**2).sum()),
                              "quant")
    balance = 0.0
    if mask.balance:
        balance = _check_finite(mask.balance * hp.nu * float((ctx.u.sum(axis=0)**2).sum()),
                                "balance")
    asym = 0.0
    if mask.asym:
        fit = ctx.u @ ctx.codes.T - k * ctx.sim_signed
        asym = _check_finite(mask.asym * float((fit**2).sum()), "asym")
    return ImgLossBreakdown(sem_pair=sem, code_pair=code, quant=quant,
                            balance=balance, asym=asym)


def imgnet_grads(ctx: ImgBatchContext, hp: HyperParams, variant="full"):
    """Exact gradients of imgnet_loss w.r.t. the hash pre-activations and
    the semantic outputs: returns (g_r, g_v)."""
    mask = variant if isinstance(variant, TermMask) else variant_loss_mask(variant)
    k = ctx.u.shape[1]

    g_u = np.zeros_like(ctx.u)
    if mask.asym:
        fit = ctx.u @ ctx.codes.T - k * ctx.sim_signed
        g_u += mask.asym * 2.0 * (fit @ ctx.codes)
    if mask.code_pair:
        g_theta = sigmoid_stable(0.5 * (ctx.w_sup @ ctx.u.T)) - ctx.sim_binary
        np.fill_diagonal(g_theta, 0.0)
        g_u += mask.code_pair * hp.beta * 0.5 * (g_theta.T @ ctx.w_sup)
    if mask.quant:
        g_u += mask.quant * 2.0 * hp.eta * (ctx.u - ctx.codes)
    if mask.balance:
        g_u += mask.balance * 2.0 * hp.nu * ctx.u.sum(axis=0)
    g_v = g_u * (1.0 - ctx.u**2)

    g_r = np.zeros_like(ctx.r_img)
    if mask.sem_pair:
        g_lam = sigmoid_stable(0.5 * (ctx.r_sup @ ctx.r_img.T)) - ctx.sim_binary
        np.fill_diagonal(g_lam, 0.0)
        g_r = mask.sem_pair * hp.alpha * 0.5 * (g_lam.T @ ctx.r_sup)

    for name, g in (("v", g_v), ("r", g_r)):
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient ({name}) in image-network loss")
    return g_r, g_v


def grad_v(ctx: ImgBatchContext, hp: HyperParams, variant="full") -> np.ndarray:
    """Gradient w.r.t. hash pre-activations only (semantic side excluded)."""
    return imgnet_grads(ctx, hp, variant)[1]


def wstep_epoch(params: EncoderParams, dataset: Dataset, sim: SimilarityMatrix,
                code_matrix: CodeMatrix, sup: LabelSupervision, hp: HyperParams,
                variant, *, lr: float, rng,
                optimizer: MomentumSGD | None = None) -> float:
    """One epoch of weight updates with the discrete codes held fixed.

    Mutates ``params`` in place; returns the summed batch losses."""
    if optimizer is None:
        optimizer = MomentumSGD(params.weights + params.biases, hp.momentum, hp.weight_decay)
    total = 0.0
    for batch in iter_batches(dataset.n, hp.batch_size, rng):
        x = dataset.features[batch]
        outs = forward(params, x)
        ctx = make_context(batch, outs, sup, code_matrix, sim)
        total += imgnet_loss(ctx, hp, variant).total
        g_r, g_v = imgnet_grads(ctx, hp, variant)
        net_grads = backward(params, x, g_r, g_v)
        optimizer.step(params.weights + params.biases,
                       net_grads.weights + net_grads.biases, lr)
    return total


def full_objective(params: EncoderParams, dataset: Dataset, sim: SimilarityMatrix,
                   code_matrix: CodeMatrix, sup: LabelSupervision, hp: HyperParams,
                   variant) -> ImgLossBreakdown:
    """Whole-training-set objective (a single batch spanning every item)."""
    idx = np.arange(dataset.n)
    outs = forward(params, dataset.features)
    ctx = make_context(idx, outs, sup, code_matrix, sim)
    return imgnet_loss(ctx, hp, variant)
