"""Central finite differences used as the gradient oracle in several suites."""

import numpy as np

STEP = 1e-6
TOL = 1e-5


def fd_grad(fn, arr, step=STEP):
    """Central-difference gradient of scalar fn w.r.t. every entry of arr.

    fn is called with no arguments and must read ``arr`` by reference;
    entries are perturbed in place and restored.
    """
    grad = np.zeros_like(arr, dtype=np.float64)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + step
        fp = fn()
        arr[idx] = orig - step
        fm = fn()
        arr[idx] = orig
        grad[idx] = (fp - fm) / (2 * step)
    return grad


def max_rel_error(analytic, numeric):
    """Max absolute difference normalized by the largest gradient entry."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.max(np.abs(numeric)), np.max(np.abs(analytic)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def random_similarity(rng, n):
    """Random symmetric {0,1} similarity with unit diagonal, plus signed view."""
    s = (rng.random((n, n)) < 0.5).astype(np.float64)
    s = np.triu(s, 1)
    s = s + s.T
    np.fill_diagonal(s, 1.0)
    return s, 2.0 * s - 1.0
