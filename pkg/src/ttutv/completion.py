"""Tensor completion by projected gradient steps with a TT retraction.

Each iteration moves the current estimate toward the observed entries and
maps the result back to the set of tensors with fixed TT-ranks by a
truncated TT decomposition (SVD, ULV or URV based)::

    X_{t+1} = retract(X_t + alpha * P_Omega(M - X_t))

This is iterative hard thresholding in TT format. The tangent-space
projection of Riemannian gradient descent is not applied; the retraction,
which is the part being compared, is the same.
"""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .decomp import DecompConfig, decompose
from .errors import ResourceLimitError
from .tensor_core import psnr, rse
from .tt import TTTensor, reconstruct

log = logging.getLogger(__name__)

#: Sweep used by each retraction (the direction each factorization suits).
RETRACTION_SWEEP = {"svd": "l2r", "ulv": "l2r", "urv": "r2l"}


class RetractionError(RuntimeError):
    """A retraction failed; ``iteration`` is the 1-based iteration index (0 = initial guess)."""

    def __init__(self, iteration, cause):
        super().__init__(f"retraction failed at iteration {iteration}: {cause}")
        self.iteration = iteration


@dataclass(frozen=True)
class ObservationMask:
    """Observed entries of a tensor of shape ``shape``.

    ``indices`` holds 0-based multi-indices, one row per observation.
    """

    shape: tuple
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim == 1 and len(shape) == 1:
            idx = idx[:, None]
        vals = np.asarray(self.values, dtype=np.float64).ravel()
        if idx.ndim != 2 or idx.shape[1] != len(shape):
            raise ValueError(f"indices must have shape (n, {len(shape)})")
        if idx.shape[0] < 1:
            raise ValueError("at least one observed entry is required")
        if vals.size != idx.shape[0]:
            raise ValueError("one value per observed index is required")
        if np.any(idx < 0) or np.any(idx >= np.array(shape)):
            raise IndexError("observed index out of range")
        lin = np.ravel_multi_index(tuple(idx.T), shape, order="F")
        if np.unique(lin).size != lin.size:
            raise ValueError("observed indices must be unique")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_linear", lin)

    @classmethod
    def from_dense(cls, mask, data):
        """Observations where the boolean (or 0/1) ``mask`` is set, values from ``data``."""
        mask = np.asarray(mask) != 0
        data = np.asarray(data, dtype=np.float64)
        if mask.shape != data.shape:
            raise ValueError(f"mask shape {mask.shape} differs from data shape {data.shape}")
        lin = np.flatnonzero(mask.ravel(order="F"))
        idx = np.stack(np.unravel_index(lin, mask.shape, order="F"), axis=1)
        return cls(mask.shape, idx, data.ravel(order="F")[lin])

    @property
    def linear(self):
        """0-based positions in reverse lexicographic order."""
        return self._linear

    def __len__(self):
        return self.values.size

    def dense_mask(self):
        out = np.zeros(math.prod(self.shape), dtype=bool)
        out[self._linear] = True
        return out.reshape(self.shape, order="F")

    def filled(self):
        """Observed values in place, zeros elsewhere."""
        out = np.zeros(math.prod(self.shape))
        out[self._linear] = self.values
        return out.reshape(self.shape, order="F")


def sample_mask(truth, fraction, seed=42):
    """Observe a uniformly random ``fraction`` of the entries of ``truth``."""
    truth = np.asarray(truth, dtype=np.float64)
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    rng = np.random.default_rng(seed)
    n = truth.size
    count = max(1, int(round(fraction * n)))
    lin = np.sort(rng.choice(n, size=count, replace=False))
    idx = np.stack(np.unravel_index(lin, truth.shape, order="F"), axis=1)
    return ObservationMask(truth.shape, idx, truth.ravel(order="F")[lin])


def project_observed(T, mask):
    """``P_Omega(T)``: entries of ``T`` at observed positions, zero elsewhere."""
    T = np.asarray(T, dtype=np.float64)
    if T.shape != mask.shape:
        raise ValueError(f"tensor shape {T.shape} differs from mask shape {mask.shape}")
    out = np.zeros(T.size)
    lin = mask.linear
    out[lin] = T.ravel(order="F")[lin]
    return out.reshape(T.shape, order="F")


@dataclass(frozen=True)
class CompletionConfig:
    ranks: tuple
    retraction: str = "svd"
    step_size: float = 1.0
    max_iters: int = 500
    stop_tol: float = 1e-6
    window: int = 5
    divergence_patience: int = 20
    refine_passes: int = 1
    seed: int = 42
    dense_cap: int = 10**7

    def __post_init__(self):
        object.__setattr__(self, "retraction", self.retraction.lower())
        if self.retraction not in RETRACTION_SWEEP:
            raise ValueError(f"unknown retraction {self.retraction!r}")
        if self.step_size < 0:
            raise ValueError("step_size must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass
class IterationTrace:
    rse_observed: list = field(default_factory=list)
    rse_full: list = field(default_factory=list)
    psnr: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    status: str = "running"
    message: str = ""

    def __len__(self):
        return len(self.rse_observed)

    def rows(self):
        """One dict per iteration, for CSV output."""
        for i in range(len(self)):
            yield {
                "iteration": i + 1,
                "rse_observed": self.rse_observed[i],
                "rse_full": self.rse_full[i] if self.rse_full else "",
                "psnr": self.psnr[i] if self.psnr else "",
                "wall_time_ms": 1000.0 * self.wall_time[i],
            }


def retract(Y, ranks, retraction, refine_passes=1):
    """Map a dense tensor to a TT with (at most) the given ranks."""
    cfg = DecompConfig(
        method=retraction,
        sweep=RETRACTION_SWEEP[retraction],
        ranks=ranks,
        refine_passes=refine_passes,
    )
    X, _ = decompose(Y, cfg)
    return X


def initial_guess(mask, shape, cfg):
    """Retraction of the zero-filled observations."""
    if tuple(shape) != mask.shape:
        raise ValueError(f"shape {tuple(shape)} differs from mask shape {mask.shape}")
    try:
        return retract(mask.filled(), cfg.ranks, cfg.retraction, cfg.refine_passes)
    except Exception as exc:
        raise RetractionError(0, exc) from exc


def _observed_rse(D, mask, ref):
    diff = D.ravel(order="F")[mask.linear] - mask.values
    return float(np.linalg.norm(diff)) / ref


def complete(mask, shape, cfg, truth=None):
    """Recover a tensor from the observations in ``mask``.

    Stops after ``cfg.max_iters`` iterations, when the observed-entry RSE
    changes by less than ``cfg.stop_tol`` (relative) over ``cfg.window``
    iterations, or when it has increased ``cfg.divergence_patience`` times
    in a row. ``trace.status`` records which.

    Returns
    -------
    X : TTTensor
    trace : IterationTrace
    """
    shape = tuple(int(n) for n in shape)
    total = math.prod(shape)
    if total > cfg.dense_cap:
        raise ResourceLimitError(f"dense iterate of {total} entries exceeds cap {cfg.dense_cap}")
    if truth is not None:
        truth = np.asarray(truth, dtype=np.float64)
        if truth.shape != shape:
            raise ValueError("truth shape differs from shape")

    ref = float(np.linalg.norm(mask.values)) or 1.0
    lin = mask.linear
    trace = IterationTrace()
    X = initial_guess(mask, shape, cfg)
    target = X.ranks
    D = reconstruct(X).ravel(order="F")
    start = time.perf_counter()
    rising = 0

    for it in range(1, cfg.max_iters + 1):
        Y = D.copy()
        Y[lin] += cfg.step_size * (mask.values - D[lin])
        try:
            X = retract(Y.reshape(shape, order="F"), cfg.ranks, cfg.retraction, cfg.refine_passes)
        except Exception as exc:
            raise RetractionError(it, exc) from exc
        if X.ranks != target:
            raise AssertionError(f"iteration {it}: ranks {X.ranks} left the manifold {target}")
        D = reconstruct(X).ravel(order="F")

        r_obs = _observed_rse(D, mask, ref)
        trace.rse_observed.append(r_obs)
        if truth is not None:
            est = D.reshape(shape, order="F")
            trace.rse_full.append(rse(est, truth))
            trace.psnr.append(psnr(est, truth))
        trace.wall_time.append(time.perf_counter() - start)

        if it > 1 and r_obs > trace.rse_observed[-2]:
            rising += 1
        else:
            rising = 0
        if rising >= cfg.divergence_patience:
            trace.status = "diverged"
            trace.message = (
                f"observed RSE increased for {rising} consecutive iterations "
                f"(now {r_obs:.3e})"
            )
            log.warning(trace.message)
            break
        if r_obs == 0.0:
            trace.status = "converged"
            break
        if it > cfg.window:
            past = trace.rse_observed[-1 - cfg.window]
            if abs(past - r_obs) < cfg.stop_tol * past:
                trace.status = "converged"
                break
    else:
        trace.status = "max_iters"
    return X, trace
