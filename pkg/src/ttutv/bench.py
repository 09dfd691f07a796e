"""Benchmark suites producing report rows.

Every run gets its own seed derived from the suite seed, so results do not
depend on execution order and runs may execute concurrently. Rows come back
in run order; the caller writes them.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .decomp import DecompConfig, decompose, verify_bound
from .errors import BoundViolation
from .generate import gen_hilbert, gen_planted_tt, random_feasible_ranks
from .report import decomp_row

SUITES = ("bounds", "recovery", "hilbert")

#: (method, sweep, retain) for every sweep algorithm.
ALL_VARIANTS = (
    ("svd", "l2r", "l11_only"),
    ("svd", "r2l", "l11_only"),
    ("ulv", "l2r", "l11_only"),
    ("urv", "r2l", "l11_only"),
    ("ulv", "r2l", "l11_only"),
    ("urv", "l2r", "l11_only"),
)

BOUND_VARIANTS = (
    ("ulv", "l2r", "l11_only"),
    ("urv", "r2l", "l11_only"),
    ("ulv", "r2l", "l11_only"),
    ("ulv", "r2l", "full_column"),
)

RECOVERY_TOL = 1e-10
HILBERT_RANKS = (2, 4, 6, 8)


def random_fixture(seed):
    """Gaussian tensor of order 3-4 with dims <= 10 and a feasible random rank chain."""
    rng = np.random.default_rng(seed)
    d = int(rng.integers(3, 5))
    dims = tuple(int(n) for n in rng.integers(2, 11, size=d))
    ranks = random_feasible_ranks(dims, rng)
    return rng.standard_normal(dims), ranks


def _run(A, variant, ranks=None, eps=None, refine_passes=1):
    method, sweep, retain = variant
    cfg = DecompConfig(method, sweep, ranks=ranks, eps=eps, retain=retain, refine_passes=refine_passes)
    X, rep = decompose(A, cfg)
    return X, verify_bound(A, X, rep)


def _bounds_run(seed):
    A, ranks = random_fixture(seed)
    rows, failures = [], []
    for variant in BOUND_VARIANTS:
        try:
            X, rep = _run(A, variant, ranks=ranks)
        except BoundViolation as exc:
            failures.append(f"seed {seed} {'/'.join(variant)}: {exc}")
            continue
        rows.append(decomp_row(rep, X))
    return rows, failures


def _recovery_run(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(3, 5))
    dims = tuple(int(n) for n in rng.integers(2, 11, size=d))
    ranks = random_feasible_ranks(dims, rng, max_rank=4)
    A, _ = gen_planted_tt(dims, ranks, seed=seed)
    rows, failures = [], []
    for variant in ALL_VARIANTS:
        X, rep = _run(A, variant, ranks=ranks)
        rows.append(decomp_row(rep, X, truth=A))
        if rep.rse > RECOVERY_TOL:
            failures.append(f"seed {seed} {'/'.join(variant[:2])}: rse {rep.rse:.3e} at planted ranks")
    return rows, failures


def _hilbert_run(r):
    A = gen_hilbert((20, 20, 20))
    rows = []
    for variant in (ALL_VARIANTS[0], ALL_VARIANTS[2], ALL_VARIANTS[3]):
        X, rep = _run(A, variant, ranks=(r, r))
        rows.append(decomp_row(rep, X, truth=A))
    return rows, []


def run_suite(name, count=None, seed=42, jobs=1):
    """Run a suite and return ``(rows, failures)``.

    ``count`` is the number of random fixtures (ignored by ``hilbert``).
    """
    if name == "bounds":
        tasks = [(_bounds_run, seed + i) for i in range(200 if count is None else count)]
    elif name == "recovery":
        tasks = [(_recovery_run, seed + i) for i in range(20 if count is None else count)]
    elif name == "hilbert":
        tasks = [(_hilbert_run, r) for r in HILBERT_RANKS]
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: t[0](t[1]), tasks))
    else:
        results = [fn(arg) for fn, arg in tasks]

    rows, failures = [], []
    for r, f in results:
        rows.extend(r)
        failures.extend(f)
    if name == "hilbert":
        failures.extend(_hilbert_checks(rows))
    return rows, failures


def _hilbert_checks(rows):
    """RSE strictly decreasing in r per method; UTV within 2x of SVD at each r."""
    failures = []
    by_method = {}
    for row in rows:
        by_method.setdefault(row["method"], []).append(float(row["rse"]))
    for method, errs in by_method.items():
        if any(b >= a for a, b in zip(errs, errs[1:])):
            failures.append(f"hilbert {method}: rse not strictly decreasing {errs}")
    for method in ("ulv", "urv"):
        for r, e, s in zip(HILBERT_RANKS, by_method[method], by_method["svd"]):
            if e > 2.0 * s:
                failures.append(f"hilbert {method} r={r}: rse {e:.3e} > 2 x svd {s:.3e}")
    return failures
