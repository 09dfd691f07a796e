"""Matrix factorizations used as truncation kernels.

All factorizations are economy size: for ``A`` of shape ``(m, n)`` with
``p = min(m, n)`` the orthonormal factors are ``(m, p)`` and ``(n, p)`` and
the middle factor is ``(p, p)``.

ULV and URV are built QLP style from alternating Householder QR passes with
column pivoting. Truncation residuals are never formed explicitly; because
``A = U T V^T`` with orthonormal ``U`` and ``V``, the squared residual of a
rank-``r`` truncation equals the squared norm of the discarded entries of
``T``, which is ``||A||_F^2 - ||T_11||_F^2`` without the cancellation.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError

log = logging.getLogger(__name__)

_EPS = np.finfo(np.float64).eps

# Squared ratio (downdated / last exact column norm) below which the norm is
# recomputed from scratch.
NORM_RECOMPUTE_RATIO = 1e-8


@dataclass(frozen=True)
class ULVFactors:
    """``A = U @ L @ V.T`` with ``L`` lower triangular."""

    U: np.ndarray
    L: np.ndarray
    V: np.ndarray

    kind = "ulv"

    @property
    def middle(self):
        return self.L


@dataclass(frozen=True)
class URVFactors:
    """``A = U @ R @ V.T`` with ``R`` upper triangular."""

    U: np.ndarray
    R: np.ndarray
    V: np.ndarray

    kind = "urv"

    @property
    def middle(self):
        return self.R


@dataclass(frozen=True)
class SVDFactors:
    """``A = U @ diag(S) @ V.T`` with ``S`` nonincreasing."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    kind = "svd"

    @property
    def middle(self):
        return np.diag(self.S)


@dataclass(frozen=True)
class TruncatedFactorization:
    """Leading factors of a UTV or SVD split ``A = U1 @ T11 @ V1.T + E``.

    For ULV factors truncated with ``retain="full_column"`` the left factor
    is the full ``U`` and ``T11`` is the ``(p, r)`` leading column block of
    ``L``; the residual is then ``U2 L22 V2^T``.
    """

    kind: str
    rank: int
    U1: np.ndarray
    T11: np.ndarray
    V1: np.ndarray
    residual_norm: float
    retain: str = "leading"

    def left(self):
        """Left factor carried forward by a right-to-left sweep (``U1 @ T11``)."""
        return self.U1 @ self.T11

    def right(self):
        """Right factor carried forward by a left-to-right sweep (``T11 @ V1.T``)."""
        return self.T11 @ self.V1.T

    def approx(self):
        return self.U1 @ self.T11 @ self.V1.T


@dataclass(frozen=True)
class RankRevealDiag:
    sigma_min_T11: float
    residual_spectral_norm: float
    reference_sigmas: tuple = field(default=(0.0, 0.0))

    @property
    def leading_ratio(self):
        """``sigma_min(T11) / sigma_r``; 1 for an SVD."""
        s_r = self.reference_sigmas[0]
        return self.sigma_min_T11 / s_r if s_r > 0 else float("nan")

    @property
    def residual_ratio(self):
        """``||discarded block||_2 / sigma_{r+1}``; 1 for an SVD."""
        s_next = self.reference_sigmas[1]
        return self.residual_spectral_norm / s_next if s_next > 0 else float("nan")


def _householder(x):
    """Reflector ``H = I - tau v v^T`` with ``v[0] = 1`` and ``H x = beta e_1``.

    Follows LAPACK ``dlarfg``: no reflection (``tau = 0``) when ``x`` is
    already a multiple of ``e_1``.
    """
    alpha = x[0]
    xnorm = np.linalg.norm(x[1:])
    if xnorm == 0.0:
        return None, 0.0, alpha
    beta = -np.copysign(np.hypot(alpha, xnorm), alpha)
    v = x / (alpha - beta)
    v[0] = 1.0
    tau = (beta - alpha) / beta
    return v, tau, beta


def qr_col_pivot(A, pivoting=True):
    """Householder QR with column pivoting, ``A[:, perm] = Q @ R``.

    The pivot at each step is the remaining column of largest norm; exact
    ties go to the lowest index. Norms are downdated and recomputed when
    cancellation makes the downdate unreliable.

    Parameters
    ----------
    A : array_like, shape (m, n)
    pivoting : bool
        With ``False`` this is plain Householder QR and ``perm`` is the
        identity.

    Returns
    -------
    Q : ndarray, shape (m, p)
        Orthonormal columns.
    R : ndarray, shape (p, n)
        Upper triangular (trapezoidal if ``n > m``) with nonincreasing
        ``|R[k, k]|`` when pivoting.
    perm : ndarray of int, shape (n,)
    """
    W = np.array(A, dtype=np.float64, order="F")
    if W.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {W.shape}")
    m, n = W.shape
    p = min(m, n)
    perm = np.arange(n)
    reflectors = []

    if pivoting:
        norms = np.linalg.norm(W, axis=0)
        exact = norms.copy()

    for k in range(p):
        if pivoting:
            j = k + int(np.argmax(norms[k:]))
            if j != k:
                W[:, [k, j]] = W[:, [j, k]]
                perm[[k, j]] = perm[[j, k]]
                norms[[k, j]] = norms[[j, k]]
                exact[[k, j]] = exact[[j, k]]

        v, tau, beta = _householder(W[k:, k].copy())
        if tau != 0.0:
            block = W[k:, k + 1:]
            block -= np.outer(tau * v, v @ block)
            W[k, k] = beta
            W[k + 1:, k] = 0.0
        reflectors.append((v, tau))

        if pivoting and k + 1 < n:
            rest = slice(k + 1, n)
            live = norms[rest] > 0.0
            ratio = np.zeros_like(norms[rest])
            ratio[live] = np.abs(W[k, rest][live]) / norms[rest][live]
            temp = np.maximum(0.0, 1.0 - ratio * ratio)
            with np.errstate(divide="ignore", invalid="ignore"):
                drift = temp * (norms[rest] / exact[rest]) ** 2
            stale = live & (drift <= NORM_RECOMPUTE_RATIO)
            new = norms[rest] * np.sqrt(temp)
            if np.any(stale):
                cols = np.flatnonzero(stale) + k + 1
                fresh = np.linalg.norm(W[k + 1:, cols], axis=0)
                new[stale] = fresh
                exact[cols] = fresh
            norms[rest] = new

    Q = np.eye(m, p)
    for k in range(p - 1, -1, -1):
        v, tau = reflectors[k]
        if tau != 0.0:
            block = Q[k:, k:]
            block -= np.outer(tau * v, v @ block)
    R = np.triu(W[:p, :])
    return Q, R, perm


def _inverse(perm):
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


def _orthonormal_complement(U, count):
    """``count`` orthonormal columns orthogonal to the orthonormal ``U``."""
    m = U.shape[0]
    proj = np.eye(m) - U @ U.T
    Q, _, _ = qr_col_pivot(proj)
    extra = Q[:, :count]
    extra -= U @ (U.T @ extra)
    Q2, _, _ = qr_col_pivot(extra, pivoting=False)
    return Q2


def _round_robin(n):
    """Rounds of disjoint column pairs covering every pair once (circle method)."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    N = len(players)
    rounds = []
    for _ in range(N - 1):
        pairs = [(players[i], players[N - 1 - i]) for i in range(N // 2)]
        pairs = [(a, b) for a, b in pairs if a >= 0 and b >= 0]
        rounds.append((np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def svd(A, max_sweeps=60, tol=None):
    """One-sided Jacobi SVD preconditioned by pivoted QR.

    Returns
    -------
    U : ndarray, shape (m, p)
    S : ndarray, shape (p,)
        Nonincreasing, nonnegative.
    V : ndarray, shape (n, p)

    Raises
    ------
    ConvergenceError
        If the columns are not mutually orthogonal after ``max_sweeps``.
    """
    A = np.asarray(A, dtype=np.float64)
    m, n = A.shape
    if m < n:
        U, S, V = svd(A.T, max_sweeps=max_sweeps, tol=tol)
        return V, S, U

    Q, R, perm = qr_col_pivot(A)
    # Jacobi on R^T: R^T J = X with orthogonal columns, so
    # A = (Q J) diag(S) (P Xhat)^T where Xhat = X / S.
    X = np.array(R.T, order="F")
    J = np.eye(n)
    if tol is None:
        tol = n * _EPS
    rounds = _round_robin(n)

    sweep = 0
    while True:
        rotated = False
        worst = 0.0
        for P, Qi in rounds:
            if P.size == 0:
                continue
            xp, xq = X[:, P], X[:, Qi]
            alpha = np.einsum("ij,ij->j", xp, xp)
            beta = np.einsum("ij,ij->j", xq, xq)
            gamma = np.einsum("ij,ij->j", xp, xq)
            scale = np.sqrt(alpha * beta)
            with np.errstate(divide="ignore", invalid="ignore"):
                coupling = np.where(scale > 0, np.abs(gamma) / scale, 0.0)
            act = coupling > tol
            if not np.any(act):
                continue
            worst = max(worst, float(coupling.max()))
            rotated = True
            zeta = np.where(act, (beta - alpha) / np.where(act, 2.0 * gamma, 1.0), 0.0)
            t = np.where(act, np.copysign(1.0, zeta) / (np.abs(zeta) + np.hypot(1.0, zeta)), 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            X[:, P], X[:, Qi] = c * xp - s * xq, s * xp + c * xq
            jp, jq = J[:, P], J[:, Qi]
            J[:, P], J[:, Qi] = c * jp - s * jq, s * jp + c * jq
        sweep += 1
        if not rotated:
            break
        if sweep >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi SVD did not converge in {max_sweeps} sweeps "
                f"(largest relative column coupling {worst:.3e})",
                iterations=sweep,
                residual=worst,
            )

    S = np.linalg.norm(X, axis=0)
    order = np.argsort(-S, kind="stable")
    S = S[order]
    X = X[:, order]
    U = (Q @ J)[:, order]

    good = S > 0.0
    Xhat = np.zeros_like(X)
    Xhat[:, good] = X[:, good] / S[good]
    if not np.all(good):
        k = int(good.sum())
        Xhat[:, k:] = _orthonormal_complement(Xhat[:, :k], n - k)
    V = Xhat[_inverse(perm)]
    return U, S, V


# -- QLP passes --------------------------------------------------------------
# Each pass rewrites A = U M V^T in place of (U, M, V).


def _pass_upper(U, M, V, pivoting=True):
    Q, R, perm = qr_col_pivot(M, pivoting)
    return U @ Q, R, V[:, perm]


def _pass_lower(U, M, V, pivoting=True):
    Q, R, perm = qr_col_pivot(M.T, pivoting)
    return U[:, perm], R.T, V @ Q


def ulv(A, refine_passes=1):
    """Rank-revealing ULV decomposition ``A = U @ L @ V.T``.

    The base is pivoted QLP: a column-pivoted QR of ``A`` followed by a
    column-pivoted QR of the transposed triangular factor. Each refinement
    pass adds one more pivoted (QR, LQ) round on ``L``.

    With ``refine_passes=0`` the leading columns of ``U`` span the pivot
    columns of ``A``, so a truncation is no better than pivoted QR. One
    refinement pass rotates them toward the dominant singular subspace.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {A.shape}")
    if refine_passes < 0:
        raise ValueError("refine_passes must be >= 0")
    Q0, R0, perm0 = qr_col_pivot(A)
    Q1, R1, perm1 = qr_col_pivot(R0.T)
    # A P0 = Q0 R0 and R0^T P1 = Q1 R1 give A = (Q0 P1) R1^T (P0 Q1)^T.
    U, M, V = Q0[:, perm1], R1.T, Q1[_inverse(perm0)]
    for _ in range(refine_passes):
        U, M, V = _pass_upper(U, M, V)
        U, M, V = _pass_lower(U, M, V)
    return ULVFactors(U=U, L=np.tril(M), V=V)


def urv(A, refine_passes=1):
    """Rank-revealing URV decomposition ``A = U @ R @ V.T`` (ULV of ``A.T``, transposed)."""
    A = np.asarray(A, dtype=np.float64)
    F = ulv(A.T, refine_passes=refine_passes)
    return URVFactors(U=F.V, R=F.L.T, V=F.U)


def factorize(A, kind, refine_passes=1):
    """Dispatch on ``kind`` in ``{"svd", "ulv", "urv"}``."""
    kind = kind.lower()
    if kind == "svd":
        return SVDFactors(*svd(A))
    if kind == "ulv":
        return ulv(A, refine_passes)
    if kind == "urv":
        return urv(A, refine_passes)
    raise ValueError(f"unknown factorization kind {kind!r}")


# -- truncation --------------------------------------------------------------


def discarded_weights(F, retain="leading"):
    """Per-index squared norms whose tail sums give truncation residuals.

    ``sum(w[r:])`` is the squared Frobenius norm of the residual of the
    rank-``r`` truncation: row norms of ``L`` (ULV), column norms of ``R``
    (URV), squared singular values (SVD). For ULV with
    ``retain="full_column"`` the residual is ``L22`` alone, whose entries
    are exactly those in columns ``>= r`` of the lower triangle.
    """
    if F.kind == "svd":
        return F.S ** 2
    if F.kind == "ulv":
        axis = 0 if retain == "full_column" else 1
        return np.sum(F.L ** 2, axis=axis)
    if F.kind == "urv":
        return np.sum(F.R ** 2, axis=0)
    raise ValueError(f"unknown factorization kind {F.kind!r}")


def _tail_norms(weights):
    tails = np.concatenate([np.cumsum(weights[::-1])[::-1], [0.0]])
    return np.sqrt(tails)


def truncate_fixed_rank(F, r, retain="leading"):
    """Keep the leading ``r`` components of a factorization.

    Parameters
    ----------
    F : ULVFactors, URVFactors or SVDFactors
    r : int
        ``1 <= r <= p``.
    retain : {"leading", "full_column"}
        ``"full_column"`` (ULV only) keeps ``U1 L11 + U2 L21``.
    """
    p = F.middle.shape[0]
    if not 1 <= r <= p:
        raise ValueError(f"rank {r} outside 1..{p}")
    if retain not in ("leading", "full_column"):
        raise ValueError(f"unknown retain mode {retain!r}")
    if retain == "full_column" and F.kind != "ulv":
        raise ValueError("full_column retention only applies to ULV factors")
    tail = _tail_norms(discarded_weights(F, retain))
    if F.kind == "svd":
        T11 = np.diag(F.S[:r])
    elif retain == "full_column":
        T11 = F.L[:, :r]
    else:
        T11 = F.middle[:r, :r]
    U1 = F.U if retain == "full_column" else F.U[:, :r]
    return TruncatedFactorization(
        kind=F.kind,
        rank=r,
        U1=U1,
        T11=T11,
        V1=F.V[:, :r],
        residual_norm=float(tail[r]),
        retain=retain,
    )


def select_rank(F, eps, retain="leading"):
    """Smallest rank ``r >= 1`` whose truncation residual is ``<= eps``."""
    if eps < 0:
        raise ValueError("tolerance must be nonnegative")
    tail = _tail_norms(discarded_weights(F, retain))
    p = tail.size - 1
    ok = np.flatnonzero(tail[1:] <= eps)
    return int(ok[0]) + 1 if ok.size else p


def truncate_fixed_tol(F, eps, retain="leading"):
    """Truncate to the smallest rank (at least 1) with residual at most ``eps``."""
    return truncate_fixed_rank(F, select_rank(F, eps, retain), retain)


def rank_reveal_diag(F, r):
    """Compare the split at rank ``r`` against exact singular values.

    The reference singular values come from LAPACK applied to the middle
    factor, which shares its spectrum with the source matrix.
    """
    T = F.middle
    p = T.shape[0]
    if not 1 <= r < p:
        raise ValueError(f"rank {r} outside 1..{p - 1}")
    sigmas = np.linalg.svd(T, compute_uv=False)
    if F.kind == "svd":
        lead = float(F.S[r - 1])
        resid = float(F.S[r])
    else:
        lead = float(np.linalg.svd(T[:r, :r], compute_uv=False)[-1])
        block = T[r:, :] if F.kind == "ulv" else T[:, r:]
        resid = float(np.linalg.norm(block, 2))
    return RankRevealDiag(
        sigma_min_T11=lead,
        residual_spectral_norm=resid,
        reference_sigmas=(float(sigmas[r - 1]), float(sigmas[r])),
    )
