"""Tensor-train representation."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError

#: Default ceiling on the number of entries :func:`reconstruct` may produce.
DEFAULT_DENSE_CAP = 10**8


class TTTensor:
    """Chain of order-3 cores ``G_k`` of shape ``(r_{k-1}, I_k, r_k)``, ``r_0 = r_d = 1``.

    The rank chain is checked on construction; a malformed chain raises
    ``ValueError`` rather than producing an object.
    """

    def __init__(self, cores):
        cores = [np.asarray(G, dtype=np.float64) for G in cores]
        if not cores:
            raise ValueError("a TT tensor needs at least one core")
        for k, G in enumerate(cores):
            if G.ndim != 3 or min(G.shape) < 1:
                raise ValueError(f"core {k} has invalid shape {G.shape}")
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise ValueError("boundary TT-ranks must be 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[2] != cores[k + 1].shape[0]:
                raise ValueError(
                    f"rank mismatch between cores {k} and {k + 1}: "
                    f"{cores[k].shape[2]} != {cores[k + 1].shape[0]}"
                )
        self.cores = cores

    @property
    def order(self):
        return len(self.cores)

    @property
    def dims(self):
        return tuple(G.shape[1] for G in self.cores)

    @property
    def ranks(self):
        return (1,) + tuple(G.shape[2] for G in self.cores)

    def __len__(self):
        return len(self.cores)

    def __repr__(self):
        return f"TTTensor(dims={self.dims}, ranks={self.ranks})"

    def full(self, cap=DEFAULT_DENSE_CAP):
        return reconstruct(self, cap)


def reconstruct(X, cap=DEFAULT_DENSE_CAP):
    """Dense tensor of a TT by left-to-right accumulation.

    Raises
    ------
    ResourceLimitError
        If the dense result would exceed ``cap`` entries.
    """
    total = math.prod(X.dims)
    if total > cap:
        raise ResourceLimitError(f"dense tensor of {total} entries exceeds cap {cap}")
    B = X.cores[0].reshape(X.dims[0], X.ranks[1], order="F")
    rows = X.dims[0]
    for G in X.cores[1:]:
        r0, n, r1 = G.shape
        B = B @ G.reshape(r0, n * r1, order="F")
        rows *= n
        B = B.reshape(rows, r1, order="F")
    return B.reshape(X.dims, order="F")


def param_count(X):
    """Number of stored parameters ``sum_k r_{k-1} I_k r_k``."""
    return sum(G.size for G in X.cores)


@dataclass(frozen=True)
class OrthogonalityReport:
    side: str
    max_deviation: list

    @property
    def worst(self):
        return max(self.max_deviation, default=0.0)


def check_orthogonality(X, side):
    """Per-core deviation from left (``G2^T G2 = I``) or right (``G1 G1^T = I``) orthogonality.

    Left covers cores ``1..d-1``; right covers cores ``2..d``.
    """
    devs = []
    if side == "left":
        for G in X.cores[:-1]:
            r0, n, r1 = G.shape
            G2 = G.reshape(r0 * n, r1, order="F")
            devs.append(float(np.abs(G2.T @ G2 - np.eye(r1)).max()))
    elif side == "right":
        for G in X.cores[1:]:
            r0, n, r1 = G.shape
            G1 = G.reshape(r0, n * r1, order="F")
            devs.append(float(np.abs(G1 @ G1.T - np.eye(r0)).max()))
    else:
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    return OrthogonalityReport(side=side, max_deviation=devs)


def reverse_tt(X):
    """TT of the index-reversed tensor: cores reversed, rank modes swapped."""
    return TTTensor([np.transpose(G, (2, 1, 0)) for G in reversed(X.cores)])
