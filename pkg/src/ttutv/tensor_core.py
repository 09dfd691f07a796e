"""Dense tensors, index maps, unfoldings and error metrics.

Tensors are plain ``float64`` numpy arrays. All reshapes that fuse indices
use Fortran (first-index-fastest) order, i.e. the reverse lexicographic map
``ivec``, so that ``unfold`` agrees with MATLAB's ``reshape``.

Mode numbers ``k`` and multi-indices passed to ``ivec`` are 1-based, as in
the math; array storage is 0-based.
"""

import math

import numpy as np

#: Value returned by :func:`psnr` when the estimate is exact.
PSNR_EXACT = math.inf


def as_tensor(data, dims=None):
    """Return ``data`` as a float64 array, optionally reshaped to ``dims``.

    A flat ``data`` sequence is interpreted in reverse lexicographic order.
    """
    arr = np.asarray(data, dtype=np.float64)
    if dims is not None:
        dims = tuple(int(n) for n in dims)
        if arr.size != math.prod(dims):
            raise ValueError(f"{arr.size} values do not fill dims {dims}")
        arr = arr.reshape(dims, order="F")
    if any(n < 1 for n in arr.shape):
        raise ValueError(f"all dimensions must be positive, got {arr.shape}")
    return arr


def ivec(index, dims):
    """Linear position of a 1-based multi-index under the reverse lexicographic map.

    >>> ivec((2, 3), (4, 5))
    10
    """
    index = tuple(index)
    dims = tuple(dims)
    if len(index) != len(dims):
        raise IndexError(f"index {index} has wrong length for dims {dims}")
    pos = 0
    stride = 1
    for i, n in zip(index, dims):
        if not 1 <= i <= n:
            raise IndexError(f"index component {i} out of range 1..{n}")
        pos += (i - 1) * stride
        stride *= n
    return pos + 1


def multi_index(pos, dims):
    """Inverse of :func:`ivec`: 1-based multi-index of linear position ``pos``."""
    total = math.prod(dims)
    if not 1 <= pos <= total:
        raise IndexError(f"linear index {pos} out of range 1..{total}")
    rem = pos - 1
    out = []
    for n in dims:
        rem, i = divmod(rem, n)
        out.append(i + 1)
    return tuple(out)


def unfold(T, k):
    """k-th unfolding: rows fuse modes 1..k, columns fuse modes k+1..d."""
    T = np.asarray(T)
    d = T.ndim
    if not 1 <= k <= d - 1:
        raise ValueError(f"unfolding index k={k} outside 1..{d - 1}")
    rows = math.prod(T.shape[:k])
    return T.reshape(rows, -1, order="F")


def fold(M, dims):
    """Inverse of :func:`unfold` for any split point."""
    M = np.asarray(M)
    dims = tuple(int(n) for n in dims)
    if M.size != math.prod(dims):
        raise ValueError(f"matrix of size {M.shape} cannot fold into {dims}")
    return M.reshape(dims, order="F")


def mode_product(T, A, k):
    """Mode-k product ``T x_k A`` with ``A`` of shape ``(J, I_k)``."""
    T = np.asarray(T, dtype=np.float64)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if not 1 <= k <= T.ndim:
        raise ValueError(f"mode {k} outside 1..{T.ndim}")
    if A.shape[1] != T.shape[k - 1]:
        raise ValueError(
            f"matrix has {A.shape[1]} columns but mode {k} has size {T.shape[k - 1]}"
        )
    out = np.tensordot(A, T, axes=(1, k - 1))
    return np.moveaxis(out, 0, k - 1)


def kron(A, B):
    """Kronecker product ``[a_ij * B]``."""
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def frobenius_norm(T):
    return float(np.linalg.norm(np.ravel(T)))


def rse(est, truth):
    """Relative error ``||est - truth||_F / ||truth||_F``."""
    est = np.asarray(est, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {truth.shape}")
    ref = frobenius_norm(truth)
    if ref == 0.0:
        raise ValueError("relative error undefined for a zero reference tensor")
    return frobenius_norm(est - truth) / ref


def psnr(est, truth):
    """Peak signal-to-noise ratio in dB, peak taken as the maximum entry of ``truth``.

    Returns :data:`PSNR_EXACT` (``+inf``) when the estimate matches exactly.
    """
    est = np.asarray(est, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {truth.shape}")
    mse = float(np.sum((est - truth) ** 2)) / truth.size
    if mse == 0.0:
        return PSNR_EXACT
    peak = float(np.max(truth))
    return 10.0 * math.log10(peak * peak / mse)


def reverse_indices(T):
    """Tensor with the mode order reversed: ``out[i_d, ..., i_1] = T[i_1, ..., i_d]``."""
    T = np.asarray(T)
    return np.transpose(T, tuple(range(T.ndim - 1, -1, -1)))
