"""Tensor-train decompositions with SVD, ULV and URV truncation."""

__version__ = "0.1.0"

from .completion import (
    CompletionConfig,
    IterationTrace,
    ObservationMask,
    RetractionError,
    complete,
    project_observed,
    retract,
    sample_mask,
)
from .decomp import (
    DecompConfig,
    DecompReport,
    decompose,
    left_orthogonal_via_urv,
    tt_svd,
    tt_ulv_fixed_rank_l2r,
    tt_ulv_fixed_rank_r2l,
    tt_ulv_fixed_tol_l2r,
    tt_ulv_fixed_tol_r2l,
    tt_urv_fixed_rank_r2l,
    tt_urv_fixed_tol_r2l,
    verify_bound,
)
from .errors import (
    BoundViolation,
    ConvergenceError,
    DimsOverflow,
    FormatError,
    InvariantError,
    MagicMismatch,
    ResourceLimitError,
    TruncatedPayload,
)
from .factor import (
    SVDFactors,
    TruncatedFactorization,
    ULVFactors,
    URVFactors,
    qr_col_pivot,
    rank_reveal_diag,
    svd,
    truncate_fixed_rank,
    truncate_fixed_tol,
    ulv,
    urv,
)
from .generate import gen_gaussian, gen_hilbert, gen_mask, gen_planted_tt
from .io import read_tensor, read_text_tensor, read_tt, write_tensor, write_tt
from .tensor_core import (
    fold,
    frobenius_norm,
    ivec,
    kron,
    mode_product,
    multi_index,
    psnr,
    reverse_indices,
    rse,
    unfold,
)
from .tt import TTTensor, check_orthogonality, param_count, reconstruct, reverse_tt
