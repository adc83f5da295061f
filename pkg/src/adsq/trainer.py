"""Alternating training loop: label network first, then rounds of weight
updates and discrete code updates for both image networks.

Per outer round: (optionally) refresh the label network and its cached
supervision, run ``t_img`` weight epochs per image network with codes
fixed, then one coordinate-descent sweep of each code matrix with weights
fixed. The learning rate walks a geometric grid, one point per round,
clamped at the last point. In the symmetric variant a single image
network backs both halves of the final code.
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .bstep import CodeMatrix, bstep_sweep
from .codes import pack, quantize_sign, write_codes
from .config import (HyperParams, TermMask, Variant, parse_variant, variant_loss_mask)
from .data import Dataset, SimilarityMatrix, validate_dataset
from .encoder import MomentumSGD, forward, init_params, save_params
from .errors import DataError, TrainingError
from .imgnet import full_objective, wstep_epoch
from .labelnet import (LabelLossBreakdown, init_head, labelnet_loss, train_labelnet)

MODEL_FILES = ("label.net", "imgx.net", "imgy.net")
CODE_FILES = ("codes_x.adsqb", "codes_y.adsqb")
LOG_FILE = "train_log.csv"

CONVERGENCE_TOL = 1e-4
CONVERGENCE_PATIENCE = 2

# fixed stream ids feeding per-purpose RNGs derived from the run seed
_STREAM_LABEL_INIT = 0
_STREAM_HEAD_INIT = 1
_STREAM_IMGX_INIT = 2
_STREAM_IMGY_INIT = 3
_STREAM_LABEL_BATCH = 4
_STREAM_IMGX_BATCH = 5
_STREAM_IMGY_BATCH = 6


def subseed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


@dataclass
class LogRow:
    round: int
    phase: str
    loss_total: float
    j1: float
    j2: float
    j3: float
    j4: float
    asym: float


@dataclass
class TrainState:
    label_params: object
    head: object
    imgx_params: object
    imgy_params: object
    codes_x: CodeMatrix
    codes_y: CodeMatrix
    supervision: object
    variant: Variant
    rounds_run: int = 0
    history: list = field(default_factory=list)
    log_rows: list = field(default_factory=list)


def convergence_check(history, tol: float = CONVERGENCE_TOL,
                      patience: int = CONVERGENCE_PATIENCE) -> bool:
    """True once the relative round-to-round change stayed below ``tol``
    for ``patience`` consecutive rounds."""
    if len(history) < patience + 1:
        return False
    tail = history[-(patience + 1):]
    for prev, cur in zip(tail[:-1], tail[1:]):
        rel = abs(cur - prev) / max(abs(prev), np.finfo(np.float64).tiny)
        if rel >= tol:
            return False
    return True


def _label_breakdown_row(rnd, dataset, sim, params, head, hp) -> LogRow:
    labels_f = dataset.labels.astype(np.float64)
    outs = forward(params, labels_f)
    s_bin = sim.binary.astype(np.float64)
    bd = labelnet_loss(outs, head, s_bin, labels_f, hp)
    return LogRow(rnd, "label", bd.total, bd.sem_pair, bd.code_pair,
                  bd.binary_reg, bd.classify, 0.0)


def _img_breakdown_row(rnd, phase, params, dataset, sim, codes, sup, hp, mask) -> LogRow:
    bd = full_objective(params, dataset, sim, codes, sup, hp, mask)
    return LogRow(rnd, phase, bd.total, bd.sem_pair, bd.code_pair,
                  bd.quant, bd.balance, bd.asym)


def train(dataset: Dataset, sim: SimilarityMatrix, hp: HyperParams,
          variant=None) -> TrainState:
    """Run the full alternating procedure; see the module docstring."""
    variant = parse_variant(variant if variant is not None else hp.variant)
    mask = variant_loss_mask(variant)
    symmetric = variant is Variant.SYMMETRIC

    problems = validate_dataset(dataset, hp)
    if problems:
        raise DataError("; ".join(problems))
    if sim.n != dataset.n:
        raise DataError(f"similarity size {sim.n} does not match dataset n {dataset.n}")

    label_dims = [dataset.num_classes, *hp.encoder_hidden, hp.semantic_dim, hp.k_half]
    img_dims = [dataset.dim, *hp.encoder_hidden, hp.semantic_dim, hp.k_half]

    label_params = init_params(label_dims, subseed(hp.seed, _STREAM_LABEL_INIT))
    head = init_head(dataset.num_classes, hp.k_half, subseed(hp.seed, _STREAM_HEAD_INIT))
    imgx_params = init_params(img_dims, subseed(hp.seed, _STREAM_IMGX_INIT))
    imgy_params = imgx_params if symmetric else init_params(
        img_dims, subseed(hp.seed, _STREAM_IMGY_INIT))

    label_rng = np.random.default_rng(subseed(hp.seed, _STREAM_LABEL_BATCH))
    imgx_rng = np.random.default_rng(subseed(hp.seed, _STREAM_IMGX_BATCH))
    imgy_rng = np.random.default_rng(subseed(hp.seed, _STREAM_IMGY_BATCH))

    opt_label = MomentumSGD(label_params.weights + label_params.biases,
                            hp.momentum, hp.weight_decay)
    opt_head = MomentumSGD([head.weight, head.bias], hp.momentum, hp.weight_decay)
    opt_x = MomentumSGD(imgx_params.weights + imgx_params.biases,
                        hp.momentum, hp.weight_decay)
    opt_y = None if symmetric else MomentumSGD(
        imgy_params.weights + imgy_params.biases, hp.momentum, hp.weight_decay)

    state = TrainState(label_params=label_params, head=head,
                       imgx_params=imgx_params, imgy_params=imgy_params,
                       codes_x=None, codes_y=None, supervision=None, variant=variant)

    def run_label_phase(rnd, lr):
        sup, _ = train_labelnet(label_params, head, dataset, sim, hp,
                                epochs=hp.t_label, lr=lr, rng=label_rng,
                                opt_net=opt_label, opt_head=opt_head)
        state.supervision = sup
        state.log_rows.append(_label_breakdown_row(rnd, dataset, sim, label_params, head, hp))

    try:
        run_label_phase(0, hp.lr_for_round(0))
    except TrainingError as exc:
        raise TrainingError(f"round 0, phase label: {exc}") from exc

    # warm-start codes from the current (still untrained) networks
    state.codes_x = CodeMatrix(quantize_sign(forward(imgx_params, dataset.features).u),
                               owner="x")
    state.codes_y = state.codes_x if symmetric else CodeMatrix(
        quantize_sign(forward(imgy_params, dataset.features).u), owner="y")

    nets = [("x", imgx_params, opt_x, imgx_rng)]
    if not symmetric:
        nets.append(("y", imgy_params, opt_y, imgy_rng))

    def run_phase(rnd, phase, fn):
        try:
            fn()
        except TrainingError as exc:
            raise TrainingError(f"round {rnd}, phase {phase}: {exc}") from exc

    for rnd in range(hp.outer_rounds):
        lr = hp.lr_for_round(rnd)
        if rnd > 0 and hp.refresh_labelnet:
            run_phase(rnd, "label", lambda: run_label_phase(rnd, lr))
        for tag, params, opt, rng in nets:
            codes = state.codes_x if tag == "x" else state.codes_y

            def wstep(params=params, codes=codes, opt=opt, rng=rng, tag=tag):
                for _ in range(hp.t_img):
                    wstep_epoch(params, dataset, sim, codes, state.supervision, hp,
                                mask, lr=lr, rng=rng, optimizer=opt)
                state.log_rows.append(_img_breakdown_row(
                    rnd, f"wstep_{tag}", params, dataset, sim, codes,
                    state.supervision, hp, mask))

            run_phase(rnd, f"wstep_{tag}", wstep)
        for tag, params, _, _ in nets:
            codes = state.codes_x if tag == "x" else state.codes_y

            def bstep(params=params, codes=codes, tag=tag):
                u_full = forward(params, dataset.features).u
                bstep_sweep(codes, u_full, sim.signed.astype(np.float64), hp, sweeps=1)
                state.log_rows.append(_img_breakdown_row(
                    rnd, f"bstep_{tag}", params, dataset, sim, codes,
                    state.supervision, hp, mask))

            run_phase(rnd, f"bstep_{tag}", bstep)

        total = sum(full_objective(params, dataset, sim,
                                   state.codes_x if tag == "x" else state.codes_y,
                                   state.supervision, hp, mask).total
                    for tag, params, _, _ in nets)
        state.history.append(total)
        state.rounds_run = rnd + 1
        if convergence_check(state.history):
            break
    return state


def write_training_log(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "phase", "loss_total", "j1", "j2", "j3", "j4", "asym"])
        for r in rows:
            writer.writerow([r.round, r.phase, repr(r.loss_total), repr(r.j1),
                             repr(r.j2), repr(r.j3), repr(r.j4), repr(r.asym)])


def save_run(state: TrainState, outdir, hp: HyperParams) -> list:
    """Write model files, per-network training codes, and the log CSV.
    Returns the list of paths written."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for name, params in zip(MODEL_FILES,
                            (state.label_params, state.imgx_params, state.imgy_params)):
        path = os.path.join(outdir, name)
        save_params(path, params)
        paths.append(path)
    for name, codes in zip(CODE_FILES, (state.codes_x, state.codes_y)):
        path = os.path.join(outdir, name)
        write_codes(path, pack(codes.codes))
        paths.append(path)
    log_path = os.path.join(outdir, LOG_FILE)
    write_training_log(log_path, state.log_rows)
    paths.append(log_path)
    return paths
