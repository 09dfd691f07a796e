"""Synthetic test tensors.

All randomness comes from ``numpy.random.default_rng(seed)``, so equal seeds
give bitwise-equal output.
"""

import math

import numpy as np

from .decomp import full_ranks
from .tt import TTTensor, reconstruct

DEFAULT_SEED = 42


def _dims(dims):
    dims = tuple(int(n) for n in dims)
    if not dims or any(n < 1 for n in dims):
        raise ValueError(f"dimensions must be positive, got {dims}")
    return dims


def gen_hilbert(dims):
    """Hilbert tensor ``X(i_1, ..., i_d) = 1 / (i_1 + ... + i_d)`` with 1-based indices."""
    dims = _dims(dims)
    total = sum(np.ix_(*[np.arange(1, n + 1, dtype=np.float64) for n in dims]))
    return 1.0 / total


def gen_gaussian(dims, seed=DEFAULT_SEED):
    """Tensor of i.i.d. standard normal entries."""
    return np.random.default_rng(seed).standard_normal(_dims(dims))


def check_ranks(dims, ranks):
    """Full rank chain for ``dims``, rejecting ranks no unfolding can have."""
    dims = _dims(dims)
    ranks = full_ranks(ranks, len(dims))
    for k in range(1, len(dims)):
        cap = min(math.prod(dims[:k]), math.prod(dims[k:]))
        if ranks[k] > cap:
            raise ValueError(f"rank r_{k}={ranks[k]} exceeds the unfolding size limit {cap}")
    return ranks


def gen_planted_tt(dims, ranks, seed=DEFAULT_SEED):
    """Random TT with standard normal core entries and its dense tensor.

    Returns
    -------
    dense : ndarray
    tt : TTTensor
    """
    dims = _dims(dims)
    ranks = check_ranks(dims, ranks)
    rng = np.random.default_rng(seed)
    cores = [rng.standard_normal((ranks[k], n, ranks[k + 1])) for k, n in enumerate(dims)]
    X = TTTensor(cores)
    return reconstruct(X), X


def random_feasible_ranks(dims, rng, max_rank=None):
    """Random rank chain that no unfolding forces to be clamped.

    Draws ``r_k <= r_{k-1} I_k`` going right, then enforces
    ``r_k <= I_{k+1} r_{k+1}`` going left.
    """
    dims = _dims(dims)
    d = len(dims)
    ranks = [1] * (d + 1)
    for k in range(1, d):
        hi = min(ranks[k - 1] * dims[k - 1], math.prod(dims[k:]))
        if max_rank is not None:
            hi = min(hi, max_rank)
        ranks[k] = int(rng.integers(1, hi + 1))
    for k in range(d - 1, 0, -1):
        ranks[k] = min(ranks[k], dims[k] * ranks[k + 1])
    return tuple(ranks)


def gen_mask(dims, fraction, seed=DEFAULT_SEED):
    """Boolean mask with ``round(fraction * size)`` entries set, chosen uniformly."""
    dims = _dims(dims)
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    size = math.prod(dims)
    count = max(1, int(round(fraction * size)))
    lin = np.random.default_rng(seed).choice(size, size=count, replace=False)
    out = np.zeros(size, dtype=bool)
    out[lin] = True
    return out.reshape(dims, order="F")
