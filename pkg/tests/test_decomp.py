import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ttutv.decomp import (
    DecompConfig,
    check_weights,
    decompose,
    full_ranks,
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
from ttutv.errors import BoundViolation
from ttutv.factor import factorize, truncate_fixed_rank
from ttutv.generate import gen_planted_tt
from ttutv.tensor_core import reverse_indices, unfold
from ttutv.tt import check_orthogonality, reconstruct

SIX = [
    ("svd", "l2r", "l11_only"),
    ("svd", "r2l", "l11_only"),
    ("ulv", "l2r", "l11_only"),
    ("urv", "r2l", "l11_only"),
    ("ulv", "r2l", "l11_only"),
    ("urv", "l2r", "l11_only"),
]
SIX_IDS = ["-".join(v[:2]) for v in SIX]


def run(A, method, sweep, retain="l11_only", **kw):
    X, rep = decompose(A, DecompConfig(method, sweep, retain=retain, **kw))
    return X, verify_bound(A, X, rep)


def gaussian(dims, seed=0):
    return np.random.default_rng(seed).standard_normal(dims)


# -- config ------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        DecompConfig("ulv", "l2r")
    with pytest.raises(ValueError):
        DecompConfig("ulv", "l2r", ranks=(2,), eps=0.1)
    with pytest.raises(ValueError):
        DecompConfig("qr", "l2r", ranks=(2,))
    with pytest.raises(ValueError):
        DecompConfig("ulv", "up", ranks=(2,))
    with pytest.raises(ValueError):
        DecompConfig("ulv", "l2r", ranks=(0,))
    with pytest.raises(ValueError):
        DecompConfig("ulv", "l2r", ranks=(2,), weights=(1.0,))
    cfg = DecompConfig("ULV", "left_to_right", eps=0.1, retain="full")
    assert (cfg.method, cfg.sweep, cfg.retain, cfg.mode) == ("ulv", "l2r", "full_column", "fixed_tol")


def test_rank_and_weight_normalization():
    assert full_ranks((2, 3), 3) == (1, 2, 3, 1)
    assert full_ranks((1, 2, 3, 1), 3) == (1, 2, 3, 1)
    with pytest.raises(ValueError):
        full_ranks((2, 2, 3, 1), 3)
    with pytest.raises(ValueError):
        full_ranks((2,), 3)
    assert check_weights(None, 5) == (0.5,) * 4
    with pytest.raises(ValueError):
        check_weights((0.5, 0.5), 3)
    assert check_weights((0.6, 0.8), 3) == (0.6, 0.8)


# -- exact recovery ----------------------------------------------------------


@pytest.mark.parametrize("variant", SIX, ids=SIX_IDS)
@pytest.mark.parametrize("dims, ranks", [((4, 5, 6), (1, 2, 3, 1)), ((6, 5, 4), (1, 3, 2, 1))])
def test_planted_recovery(variant, dims, ranks):
    A, _ = gen_planted_tt(dims, ranks, seed=3)
    X, rep = run(A, *variant, ranks=ranks)
    assert rep.rse <= 1e-10
    assert X.ranks == ranks


@pytest.mark.parametrize("variant", SIX, ids=SIX_IDS)
def test_rank_one_outer_product(variant):
    r = np.random.default_rng(4)
    u, v, w = r.standard_normal(3), r.standard_normal(4), r.standard_normal(5)
    A = np.einsum("i,j,k->ijk", u, v, w)
    _, rep = run(A, *variant, ranks=(1, 1))
    assert rep.rse <= 1e-12


@pytest.mark.parametrize("retain", ["l11_only", "full_column"])
def test_ulv_r2l_planted_either_retain(retain):
    A, _ = gen_planted_tt((5, 6, 4, 3), (1, 3, 4, 2, 1), seed=5)
    _, rep = run(A, "ulv", "r2l", retain=retain, ranks=(3, 4, 2))
    assert rep.rse <= 1e-10


# -- bounds ------------------------------------------------------------------


def test_ulv_l2r_bound_random_4d():
    A = gaussian((8, 9, 10, 7))
    X, rep = tt_ulv_fixed_rank_l2r(A, (4, 6, 3))
    rep = verify_bound(A, X, rep)
    assert rep.bound_kind == "sqrt"
    assert rep.achieved_error <= rep.bound + 1e-8 * rep.norm
    assert X.ranks == (1, 4, 6, 3, 1)


def test_urv_r2l_bound_random_4d():
    A = gaussian((8, 9, 10, 7), 1)
    X, rep = tt_urv_fixed_rank_r2l(A, (4, 6, 3))
    rep = verify_bound(A, X, rep)
    assert rep.achieved_error <= rep.bound + 1e-8 * rep.norm


def test_ulv_r2l_bounds_by_retain_mode():
    A = gaussian((6, 7, 8), 2)
    X, rep = tt_ulv_fixed_rank_r2l(A, (3, 4))
    rep = verify_bound(A, X, rep)
    assert rep.bound_kind == "sum"
    assert rep.achieved_error <= sum(rep.eps_k) + 1e-8 * rep.norm
    X, rep = tt_ulv_fixed_rank_r2l(A, (3, 4), retain="full_column")
    rep = verify_bound(A, X, rep)
    assert rep.bound_kind == "sqrt"
    assert rep.achieved_error <= math.sqrt(sum(e * e for e in rep.eps_k)) + 1e-8 * rep.norm


def test_ulv_r2l_matrix_case_is_single_truncation():
    A = gaussian((7, 9), 3)
    errs = []
    for retain in ("l11_only", "full_column"):
        X, rep = tt_ulv_fixed_rank_r2l(A, (3,), retain=retain)
        err = np.linalg.norm(A - reconstruct(X))
        assert abs(err - rep.eps_k[0]) <= 1e-10 * np.linalg.norm(A)
        errs.append(err)
    # Keeping U2 L21 can only reduce the error.
    assert errs[1] <= errs[0] + 1e-12


def test_matrix_case_matches_factor_truncation():
    A = gaussian((8, 6), 4)
    X, rep = tt_urv_fixed_rank_r2l(A, (3,))
    direct = truncate_fixed_rank(factorize(A, "urv"), 3).residual_norm
    assert abs(rep.eps_k[0] - direct) <= 1e-10
    assert abs(np.linalg.norm(A - reconstruct(X)) - direct) <= 1e-10


def test_bound_violation_is_raised():
    A = gaussian((4, 5, 6), 5)
    X, rep = tt_ulv_fixed_rank_l2r(A, (2, 2))
    rep.eps_k = [0.0, 0.0]
    with pytest.raises(BoundViolation):
        verify_bound(A, X, rep)


def test_exact_decomposition_bound_is_tight():
    A, _ = gen_planted_tt((4, 5, 6), (1, 2, 3, 1), seed=6)
    X, rep = tt_ulv_fixed_rank_l2r(A, (2, 3))
    rep = verify_bound(A, X, rep)
    assert rep.achieved_error <= 1e-10 * rep.norm and rep.bound >= 0


@given(st.integers(0, 10_000))
def test_bounds_and_eckart_young_floor(seed):
    r = np.random.default_rng(seed)
    d = int(r.integers(3, 5))
    dims = tuple(int(n) for n in r.integers(2, 7, size=d))
    ranks = tuple(int(r.integers(1, 4)) for _ in range(d - 1))
    A = r.standard_normal(dims)
    for method, sweep, retain in SIX + [("ulv", "r2l", "full_column")]:
        X, rep = run(A, method, sweep, retain=retain, ranks=ranks)
        slack = 1e-8 * rep.norm
        floor = 0.0
        for k in range(1, d):
            s = np.linalg.svd(unfold(A, k), compute_uv=False)
            floor = max(floor, math.sqrt(np.sum(s[X.ranks[k]:] ** 2)))
        assert rep.achieved_error >= floor - slack


# -- orthogonality -----------------------------------------------------------


@pytest.mark.parametrize("variant", SIX, ids=SIX_IDS)
def test_orthogonality_side(variant):
    A = gaussian((5, 6, 4, 3), 7)
    X, _ = run(A, *variant, ranks=(3, 4, 2))
    side = "left" if variant[1] == "l2r" else "right"
    assert check_orthogonality(X, side).worst <= 1e-12


def test_urv_by_reversal_matches_direct_run():
    A = gaussian((5, 5, 5), 8)
    cfg = DecompConfig("urv", "l2r", ranks=(3, 2))
    X, rep = left_orthogonal_via_urv(A, cfg)
    Y, rep2 = tt_urv_fixed_rank_r2l(reverse_indices(A), (2, 3))
    assert np.linalg.norm(A - reconstruct(X)) == np.linalg.norm(reverse_indices(A) - reconstruct(Y))
    assert rep.eps_k == rep2.eps_k[::-1]
    assert X.ranks == (1, 3, 2, 1)
    assert check_orthogonality(X, "left").worst <= 1e-12
    with pytest.raises(ValueError):
        left_orthogonal_via_urv(A, DecompConfig("ulv", "l2r", ranks=(3, 2)))


# -- fixed tolerance ---------------------------------------------------------


@pytest.mark.parametrize("eps", [0.3, 0.1, 0.01])
@pytest.mark.parametrize(
    "fn", [tt_ulv_fixed_tol_l2r, tt_urv_fixed_tol_r2l, tt_ulv_fixed_tol_r2l], ids=["ulv", "urv", "ulv-r2l"]
)
def test_fixed_tol_guarantee(fn, eps):
    A = gaussian((10, 10, 10), 9)
    X, rep = fn(A, eps)
    rep = verify_bound(A, X, rep)
    assert rep.rse <= eps


def test_svd_fixed_tol():
    A = gaussian((5, 6, 7), 10)
    X, rep = tt_svd(A, sweep="l2r", eps=0.3)
    assert verify_bound(A, X, rep).rse <= 0.3


def test_fixed_tol_ranks_close_to_svd():
    A = gaussian((10, 10, 10), 11)
    _, ref = tt_svd(A, eps=0.1)
    for fn in (tt_ulv_fixed_tol_l2r, tt_urv_fixed_tol_r2l):
        _, rep = fn(A, 0.1)
        assert all(abs(a - b) <= 2 for a, b in zip(rep.ranks_chosen, ref.ranks_chosen))


def test_large_tolerance_gives_rank_one():
    A = gaussian((4, 5, 6), 12)
    for fn in (tt_ulv_fixed_tol_l2r, tt_urv_fixed_tol_r2l):
        X, _ = fn(A, 10.0)
        assert X.ranks == (1, 1, 1, 1)


@pytest.mark.parametrize("fn", [tt_ulv_fixed_tol_l2r, tt_urv_fixed_tol_r2l])
def test_tiny_tolerance_recovers_planted_ranks(fn):
    A, _ = gen_planted_tt((6, 5, 4), (1, 3, 2, 1), seed=13)
    X, rep = fn(A, 1e-12)
    assert X.ranks == (1, 3, 2, 1)
    assert verify_bound(A, X, rep).rse <= 1e-10


def test_matrix_fixed_tol_is_one_truncation():
    A = gaussian((9, 7), 14)
    X, rep = tt_urv_fixed_tol_r2l(A, 0.5)
    assert len(rep.eps_k) == 1
    assert rep.eps_k[0] <= 0.5 * np.linalg.norm(A)


def test_custom_weights():
    A = gaussian((5, 6, 7), 15)
    X, rep = tt_ulv_fixed_tol_l2r(A, 0.2, weights=(0.6, 0.8))
    n = np.linalg.norm(A)
    assert rep.eps_k[0] <= 0.6 * 0.2 * n and rep.eps_k[1] <= 0.8 * 0.2 * n
    assert verify_bound(A, X, rep).rse <= 0.2


# -- degenerate inputs -------------------------------------------------------


def test_zero_tensor():
    A = np.zeros((3, 4, 5))
    X, rep = tt_ulv_fixed_tol_l2r(A, 0.1)
    assert X.ranks == (1, 1, 1, 1) and rep.bound == 0.0
    X, rep = tt_urv_fixed_rank_r2l(A, (2, 2))
    rep = verify_bound(A, X, rep)
    assert rep.achieved_error == 0.0 and rep.bound == 0.0


def test_rank_clamping_is_reported():
    A = gaussian((2, 3, 4), 16)
    X, rep = tt_ulv_fixed_rank_l2r(A, (5, 9))
    assert X.ranks == (1, 2, 4, 1)
    assert rep.ranks_requested == (1, 5, 9, 1)
    assert len(rep.warnings) == 2


def test_debug_chain_check():
    A = gaussian((4, 5, 6, 3), 17)
    X, rep = tt_ulv_fixed_rank_l2r(A, (3, 5, 2), debug=True)
    assert len(rep.debug_deviations) == 3
    assert max(rep.debug_deviations) <= 1e-10
    _, plain = tt_ulv_fixed_rank_l2r(A, (3, 5, 2))
    assert plain.debug_deviations == []


def test_first_order_tensor():
    v = gaussian((6,), 18)
    X, rep = tt_ulv_fixed_rank_l2r(v, ())
    assert np.array_equal(reconstruct(X), v) and rep.eps_k == []
