"""TT decompositions by sequential truncated SVD, ULV or URV factorizations.

Left-to-right sweeps keep the left factor of each truncation as a core and
carry ``T11 @ V1.T`` forward; right-to-left sweeps keep ``V1.T`` and carry
``U1 @ T11`` back. Per-step residual norms are recorded and combined into
an a-priori bound on the total error:

* ``sqrt(sum eps_k**2)`` whenever the kept factor is orthogonal to the
  residual (SVD either way, ULV left-to-right, URV right-to-left, ULV
  right-to-left keeping the full column block);
* ``sum eps_k`` for ULV right-to-left keeping only ``L11``.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BoundViolation, InvariantError, ResourceLimitError
from .factor import factorize, truncate_fixed_rank, truncate_fixed_tol
from .tensor_core import frobenius_norm, reverse_indices
from .tt import DEFAULT_DENSE_CAP, TTTensor, reconstruct, reverse_tt

log = logging.getLogger(__name__)

METHODS = ("svd", "ulv", "urv")
_SWEEP_ALIASES = {
    "l2r": "l2r",
    "left_to_right": "l2r",
    "r2l": "r2l",
    "right_to_left": "r2l",
}
_RETAIN_ALIASES = {
    "l11_only": "l11_only",
    "l11": "l11_only",
    "leading": "l11_only",
    "full_column": "full_column",
    "full": "full_column",
}

#: Absolute slack, relative to ``||A||_F``, allowed on top of the bound.
BOUND_SLACK = 1e-8


@dataclass(frozen=True)
class DecompConfig:
    """How to decompose: factorization, sweep direction and truncation mode.

    Exactly one of ``ranks`` (fixed TT-ranks) or ``eps`` (relative
    tolerance) must be given. ``ranks`` is either the full chain
    ``(1, r_1, ..., r_{d-1}, 1)`` or just the interior ranks.
    """

    method: str = "ulv"
    sweep: str = "l2r"
    ranks: tuple = None
    eps: float = None
    weights: tuple = None
    refine_passes: int = 1
    retain: str = "l11_only"
    debug: bool = False

    def __post_init__(self):
        method = self.method.lower()
        if method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        object.__setattr__(self, "method", method)
        try:
            object.__setattr__(self, "sweep", _SWEEP_ALIASES[self.sweep.lower()])
            object.__setattr__(self, "retain", _RETAIN_ALIASES[self.retain.lower()])
        except KeyError as exc:
            raise ValueError(f"unrecognised option {exc.args[0]!r}") from None
        if (self.ranks is None) == (self.eps is None):
            raise ValueError("give exactly one of ranks (fixed rank) or eps (fixed tolerance)")
        if self.eps is not None and not self.eps >= 0:
            raise ValueError("eps must be nonnegative")
        if self.weights is not None and self.eps is None:
            raise ValueError("weights only apply in fixed-tolerance mode")
        if self.refine_passes < 0:
            raise ValueError("refine_passes must be >= 0")
        if self.ranks is not None:
            object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
            if any(r < 1 for r in self.ranks):
                raise ValueError("TT-ranks must be >= 1")
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def mode(self):
        return "fixed_rank" if self.ranks is not None else "fixed_tol"


@dataclass
class DecompReport:
    """Per-step bookkeeping of one sweep.

    ``eps_k[k-1]`` is the residual norm of the truncation of the k-th
    unfolding, whatever the sweep direction.
    """

    method: str
    sweep: str
    mode: str
    norm: float
    eps_k: list = field(default_factory=list)
    ranks_requested: tuple = None
    ranks_chosen: tuple = None
    bound_kind: str = "sqrt"
    achieved_error: float = None
    wall_time: float = 0.0
    warnings: list = field(default_factory=list)
    debug_deviations: list = field(default_factory=list)

    @property
    def bound(self):
        if self.bound_kind == "sum":
            return float(sum(self.eps_k))
        return math.sqrt(sum(e * e for e in self.eps_k))

    @property
    def rse(self):
        if self.achieved_error is None or self.norm == 0.0:
            return None
        return self.achieved_error / self.norm


def full_ranks(ranks, d):
    """Normalize interior or full rank lists to the chain ``(1, r_1, ..., r_{d-1}, 1)``."""
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) == d - 1:
        ranks = (1,) + ranks + (1,)
    if len(ranks) != d + 1:
        raise ValueError(f"expected {d - 1} interior or {d + 1} total ranks, got {len(ranks)}")
    if ranks[0] != 1 or ranks[-1] != 1:
        raise ValueError("boundary TT-ranks must be 1")
    if any(r < 1 for r in ranks):
        raise ValueError("TT-ranks must be >= 1")
    return ranks


def check_weights(weights, d):
    """Validate tolerance weights; ``None`` gives equal weights ``1/sqrt(d-1)``."""
    if d < 2:
        return ()
    if weights is None:
        return (1.0 / math.sqrt(d - 1),) * (d - 1)
    weights = tuple(float(w) for w in weights)
    if len(weights) != d - 1:
        raise ValueError(f"expected {d - 1} weights, got {len(weights)}")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    if abs(sum(w * w for w in weights) - 1.0) > 1e-12:
        raise ValueError("squared weights must sum to 1")
    return weights


def _as_input(A):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim < 1 or A.size == 0:
        raise ValueError("input must be a nonempty tensor of order >= 1")
    if A.size > DEFAULT_DENSE_CAP:
        raise ResourceLimitError(f"input of {A.size} entries exceeds cap {DEFAULT_DENSE_CAP}")
    return A


class _Truncator:
    """Chooses the truncation at each sweep step for one config."""

    def __init__(self, cfg, d, norm, report, sum_bound):
        self.cfg = cfg
        self.report = report
        retain = "full_column" if cfg.retain == "full_column" else "leading"
        self.retain = retain if (cfg.method == "ulv" and cfg.sweep == "r2l") else "leading"
        if cfg.ranks is not None:
            self.ranks = full_ranks(cfg.ranks, d)
            report.ranks_requested = self.ranks
            self.tols = None
        else:
            self.ranks = None
            w = check_weights(cfg.weights, d)
            # Under a summed bound the squared weights split the tolerance.
            share = [wk * wk for wk in w] if sum_bound else list(w)
            self.tols = [s * cfg.eps * norm for s in share]

    def __call__(self, C, k):
        """Truncate the matrix ``C`` standing in for the k-th unfolding (1-based)."""
        F = factorize(C, self.cfg.method, self.cfg.refine_passes)
        p = min(C.shape)
        if self.ranks is not None:
            r = self.ranks[k]
            if r > p:
                msg = f"rank r_{k}={r} clamped to {p} (unfolding is {C.shape[0]}x{C.shape[1]})"
                log.warning(msg)
                self.report.warnings.append(msg)
                r = p
            return truncate_fixed_rank(F, r, self.retain)
        return truncate_fixed_tol(F, self.tols[k - 1], self.retain)


def _finish(report, cores, eps, chosen, start):
    report.eps_k = [float(e) for e in eps]
    report.ranks_chosen = tuple(chosen)
    report.wall_time = time.perf_counter() - start
    return TTTensor(cores), report


def _sweep_l2r(A, cfg):
    start = time.perf_counter()
    A = _as_input(A)
    dims = A.shape
    d = len(dims)
    norm = frobenius_norm(A)
    report = DecompReport(method=cfg.method, sweep="l2r", mode=cfg.mode, norm=norm)
    trunc = _Truncator(cfg, d, norm, report, sum_bound=False)

    cores, eps, chosen = [], [], [1]
    C = A.reshape(dims[0], -1, order="F")
    r_prev = 1
    for k in range(1, d):
        C = C.reshape(r_prev * dims[k - 1], -1, order="F")
        tf = trunc(C, k)
        cores.append(tf.U1.reshape(r_prev, dims[k - 1], tf.rank, order="F"))
        nxt = tf.right()
        if cfg.debug:
            # A^{(k+1)}_1 = U^{(k)T} A^{(k)}_2 because U1 is orthogonal to the residual.
            dev = frobenius_norm(nxt - tf.U1.T @ C)
            scale = max(frobenius_norm(C), np.finfo(float).tiny)
            report.debug_deviations.append(dev / scale)
            if dev > 1e-10 * scale:
                raise InvariantError(f"step {k}: carried factor deviates from U1^T C by {dev:.3e}")
        C = nxt
        r_prev = tf.rank
        eps.append(tf.residual_norm)
        chosen.append(tf.rank)
    cores.append(C.reshape(r_prev, dims[-1], 1, order="F"))
    chosen.append(1)
    return _finish(report, cores, eps, chosen, start)


def _sweep_r2l(A, cfg):
    start = time.perf_counter()
    A = _as_input(A)
    dims = A.shape
    d = len(dims)
    norm = frobenius_norm(A)
    report = DecompReport(method=cfg.method, sweep="r2l", mode=cfg.mode, norm=norm)
    sum_bound = cfg.method == "ulv" and cfg.retain == "l11_only"
    report.bound_kind = "sum" if sum_bound else "sqrt"
    trunc = _Truncator(cfg, d, norm, report, sum_bound=sum_bound)

    cores = [None] * d
    eps = [0.0] * (d - 1)
    chosen = [1] * (d + 1)
    C = A.reshape(-1, dims[-1], order="F")
    r_next = 1
    for k in range(d - 1, 0, -1):
        # C holds the k-th unfolding's row space: (I_1...I_k) x (I_{k+1} r_{k+1}).
        C = C.reshape(-1, dims[k] * r_next, order="F")
        tf = trunc(C, k)
        cores[k] = tf.V1.T.reshape(tf.rank, dims[k], r_next, order="F")
        C = tf.left()
        r_next = tf.rank
        eps[k - 1] = tf.residual_norm
        chosen[k] = tf.rank
    cores[0] = C.reshape(1, dims[0], r_next, order="F")
    return _finish(report, cores, eps, chosen, start)


# -- public algorithms -------------------------------------------------------


def tt_svd(A, cfg=None, **kwargs):
    """TT-SVD in either sweep direction.

    Accepts a :class:`DecompConfig` with ``method="svd"`` or keyword
    arguments for one.
    """
    cfg = cfg or DecompConfig(method="svd", **kwargs)
    if cfg.method != "svd":
        raise ValueError("tt_svd needs method='svd'")
    return _sweep_l2r(A, cfg) if cfg.sweep == "l2r" else _sweep_r2l(A, cfg)


def tt_ulv_fixed_rank_l2r(A, ranks, refine_passes=1, debug=False):
    """TT-ULV with fixed ranks, left-to-right; left-orthogonal cores."""
    cfg = DecompConfig("ulv", "l2r", ranks=ranks, refine_passes=refine_passes, debug=debug)
    return _sweep_l2r(A, cfg)


def tt_ulv_fixed_tol_l2r(A, eps, weights=None, refine_passes=1, debug=False):
    """TT-ULV to relative accuracy ``eps``, left-to-right.

    Step ``k`` truncates at ``w_k * eps * ||A||_F`` so that the total error
    is at most ``eps * ||A||_F``.
    """
    cfg = DecompConfig(
        "ulv", "l2r", eps=eps, weights=weights, refine_passes=refine_passes, debug=debug
    )
    return _sweep_l2r(A, cfg)


def tt_urv_fixed_rank_r2l(A, ranks, refine_passes=1):
    """TT-URV with fixed ranks, right-to-left; right-orthogonal cores."""
    return _sweep_r2l(A, DecompConfig("urv", "r2l", ranks=ranks, refine_passes=refine_passes))


def tt_urv_fixed_tol_r2l(A, eps, weights=None, refine_passes=1):
    """TT-URV to relative accuracy ``eps``, right-to-left."""
    cfg = DecompConfig("urv", "r2l", eps=eps, weights=weights, refine_passes=refine_passes)
    return _sweep_r2l(A, cfg)


def tt_ulv_fixed_rank_r2l(A, ranks, retain="l11_only", refine_passes=1):
    """TT-ULV with fixed ranks, right-to-left.

    ``retain="l11_only"`` carries ``U1 L11`` back and only guarantees the
    summed bound; ``"full_column"`` carries ``U1 L11 + U2 L21`` and keeps the
    square-root bound at the price of a wider carried factor.
    """
    cfg = DecompConfig("ulv", "r2l", ranks=ranks, retain=retain, refine_passes=refine_passes)
    return _sweep_r2l(A, cfg)


def tt_ulv_fixed_tol_r2l(A, eps, weights=None, retain="l11_only", refine_passes=1):
    """TT-ULV to relative accuracy ``eps``, right-to-left.

    With ``retain="l11_only"`` step ``k`` gets ``w_k**2 * eps * ||A||_F``
    (so ``eps / (d-1)`` each for equal weights) to honour the summed bound.
    """
    cfg = DecompConfig(
        "ulv", "r2l", eps=eps, weights=weights, retain=retain, refine_passes=refine_passes
    )
    return _sweep_r2l(A, cfg)


def left_orthogonal_via_urv(A, cfg):
    """Left-orthogonal TT from TT-URV: reverse the modes, sweep right-to-left, reverse back."""
    if cfg.method != "urv":
        raise ValueError("left_orthogonal_via_urv needs method='urv'")
    A = _as_input(A)
    inner = replace(cfg, sweep="r2l")
    if cfg.ranks is not None:
        inner = replace(inner, ranks=full_ranks(cfg.ranks, A.ndim)[::-1])
    if cfg.weights is not None:
        inner = replace(inner, weights=tuple(cfg.weights)[::-1])
    X, report = _sweep_r2l(reverse_indices(A), inner)
    report.sweep = "l2r"
    report.eps_k = report.eps_k[::-1]
    report.ranks_chosen = report.ranks_chosen[::-1]
    if report.ranks_requested is not None:
        report.ranks_requested = report.ranks_requested[::-1]
    return reverse_tt(X), report


def decompose(A, cfg):
    """Run the algorithm selected by ``cfg``.

    ``method="urv"`` with ``sweep="l2r"`` uses index reversal; ``method="ulv"``
    with ``sweep="r2l"`` is the right-to-left ULV variant with the looser
    summed bound unless ``retain="full_column"``.
    """
    if cfg.method == "urv" and cfg.sweep == "l2r":
        return left_orthogonal_via_urv(A, cfg)
    if cfg.sweep == "l2r":
        return _sweep_l2r(A, cfg)
    return _sweep_r2l(A, cfg)


def verify_bound(A, X, report, slack=BOUND_SLACK, cap=DEFAULT_DENSE_CAP):
    """Fill in ``achieved_error`` and check it against the recorded bound.

    Raises
    ------
    BoundViolation
        If ``||A - X||_F > bound + slack * ||A||_F``.
    """
    A = np.asarray(A, dtype=np.float64)
    achieved = frobenius_norm(A - reconstruct(X, cap))
    report = replace(report, achieved_error=achieved)
    allowed = slack * frobenius_norm(A)
    if achieved > report.bound + allowed:
        raise BoundViolation(achieved, report.bound, allowed)
    return report
