"""Discrete code optimization by cyclic coordinate descent over columns.

With network outputs U fixed, the code matrix B (entries exactly +-1)
minimizes

    || U B^T - k_half * S_signed ||_F^2 + eta * || U - B ||_F^2

one column at a time. Because every candidate column has unit entries,
the self-interaction term is constant and each column has the closed-form
minimizer  -sign(2 * B_rest (U_rest^T u_col) + p_col)  where
P = -2 * k_half * S_signed^T U - 2 * eta * U.
"""

from dataclasses import dataclass

import numpy as np

from .config import HyperParams


@dataclass
class CodeMatrix:
    """Discrete codes, one row per training item; entries exactly +-1."""

    codes: np.ndarray  # n x k_half, float64
    owner: str = ""

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.float64)
        if not np.isin(self.codes, (-1.0, 1.0)).all():
            raise ValueError("code matrix entries must be exactly -1 or +1")

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    @property
    def k_half(self) -> int:
        return self.codes.shape[1]

    def copy(self) -> "CodeMatrix":
        return CodeMatrix(self.codes.copy(), owner=self.owner)


@dataclass
class BStepWorkspace:
    """Quantities fixed across one sweep: full-set tanh outputs U, the
    signed similarity, and the linear-term matrix P derived from them."""

    U: np.ndarray
    P: np.ndarray
    sim_signed: np.ndarray
    k_half: int
    eta: float


def bstep_objective(U, B, sim_signed, k_half: int, eta: float) -> float:
    U = np.asarray(U, dtype=np.float64)
    fit = U @ B.T - k_half * np.asarray(sim_signed, dtype=np.float64)
    quant = U - B
    return float((fit**2).sum() + eta * (quant**2).sum())


def compute_P(U, sim_signed, hp: HyperParams) -> np.ndarray:
    U = np.asarray(U, dtype=np.float64)
    s = np.asarray(sim_signed, dtype=np.float64)
    if s.shape != (U.shape[0], U.shape[0]):
        raise ValueError(f"similarity shape {s.shape} does not match U rows {U.shape[0]}")
    return -2.0 * hp.k_half * (s.T @ U) - 2.0 * hp.eta * U


def make_workspace(U, sim_signed, hp: HyperParams) -> BStepWorkspace:
    return BStepWorkspace(U=np.asarray(U, dtype=np.float64), P=compute_P(U, sim_signed, hp),
                          sim_signed=np.asarray(sim_signed, dtype=np.float64),
                          k_half=hp.k_half, eta=hp.eta)


def update_column(code_matrix: CodeMatrix, c: int, ws: BStepWorkspace) -> np.ndarray:
    """Replace column c with the exact minimizer over {-1,+1}^n, all other
    columns fixed. sign(0) = +1, so a zero argument lands on -1 after the
    leading negation."""
    B = code_matrix.codes
    k = B.shape[1]
    if not 0 <= c < k:
        raise IndexError(f"column index {c} out of range for {k} columns")
    rest = np.delete(np.arange(k), c)
    cross = ws.U[:, rest].T @ ws.U[:, c]          # (k-1,)
    arg = 2.0 * (B[:, rest] @ cross) + ws.P[:, c]
    B[:, c] = np.where(arg >= 0, -1.0, 1.0)
    return B[:, c]


def bstep_sweep(code_matrix: CodeMatrix, U, sim_signed, hp: HyperParams,
                sweeps: int = 1) -> CodeMatrix:
    """Cycle columns in ascending order ``sweeps`` times; stop early once a
    full sweep changes nothing. The objective is checked to be
    non-increasing at every column update."""
    ws = make_workspace(U, sim_signed, hp)
    B = code_matrix.codes
    obj = bstep_objective(ws.U, B, ws.sim_signed, ws.k_half, ws.eta)
    for _ in range(sweeps):
        changed = False
        for c in range(B.shape[1]):
            before = B[:, c].copy()
            update_column(code_matrix, c, ws)
            if not np.array_equal(before, B[:, c]):
                changed = True
            new_obj = bstep_objective(ws.U, B, ws.sim_signed, ws.k_half, ws.eta)
            assert new_obj <= obj + 1e-9 * max(1.0, abs(obj)), \
                f"discrete objective increased: {obj} -> {new_obj}"
            obj = new_obj
        if not changed:
            break
    return code_matrix
