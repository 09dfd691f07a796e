"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 numerical
invariant failure (bound violated, recovery failed, non-convergence).
"""

import argparse
import logging
import sys
import time

import numpy as np

from . import __version__
from .bench import SUITES, run_suite
from .completion import CompletionConfig, ObservationMask, RetractionError, complete
from .decomp import DecompConfig, decompose, verify_bound
from .errors import BoundViolation, ConvergenceError, FormatError, InvariantError, ResourceLimitError
from .generate import DEFAULT_SEED, check_ranks, gen_gaussian, gen_hilbert, gen_mask, gen_planted_tt
from .io import read_mask, read_tensor, read_text_tensor, read_tt, sniff, write_tensor, write_tt
from .report import completion_row, decomp_row, format_ranks, write_report, write_trace
from .tensor_core import frobenius_norm
from .tt import param_count, reconstruct

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("ttutv")

_SUM_BOUND_NOTE = (
    "note: ulv with a right-to-left sweep keeps only L11 and guarantees the "
    "looser bound sum(eps_k); use --retain full_column for the sqrt bound"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    p = _Parser(prog="ttutv", description="Tensor-train decompositions with SVD, ULV and URV truncation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("decompose", help="decompose a tensor file into a TT file")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--method", choices=("svd", "ulv", "urv"), default="ulv")
    s.add_argument("--sweep", choices=("l2r", "r2l"), default="l2r")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--ranks", type=_int_list, help="r_1,...,r_{d-1}")
    g.add_argument("--eps", type=float, help="relative tolerance")
    s.add_argument("--weights", type=_float_list, help="w_1,...,w_{d-1} with sum of squares 1")
    s.add_argument("--refine", type=int, default=1, help="extra pivoted QR rounds (default 1)")
    s.add_argument("--retain", choices=("l11_only", "full_column"), default="l11_only")
    s.add_argument("--out", required=True)
    s.add_argument("--report", required=True)

    s = sub.add_parser("reconstruct", help="expand a TT file to a dense tensor file")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("complete", help="complete a tensor from observed entries")
    s.add_argument("--in", dest="inp", required=True, help="tensor holding the observed values")
    s.add_argument("--mask", required=True, help="tensor file of 0/1 entries")
    s.add_argument("--ranks", type=_int_list, required=True)
    s.add_argument("--retraction", choices=("svd", "ulv", "urv"), default="svd")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--iters", type=int, default=500)
    s.add_argument("--stop-tol", type=float, default=1e-6)
    s.add_argument("--refine", type=int, default=1)
    s.add_argument("--report", required=True)
    s.add_argument("--trace", help="per-iteration CSV")
    s.add_argument("--out", help="TT file for the final iterate")

    s = sub.add_parser("bench", help="run a benchmark suite")
    s.add_argument("--suite", choices=SUITES, required=True)
    s.add_argument("--report", required=True)
    s.add_argument("--count", type=int, help="number of random fixtures")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)

    s = sub.add_parser("info", help="describe a tensor or TT file")
    s.add_argument("--in", dest="inp", required=True)

    s = sub.add_parser("gen", help="generate a synthetic tensor file")
    s.add_argument("--kind", choices=("hilbert", "planted", "gaussian", "mask"), required=True)
    s.add_argument("--dims", type=_int_list, required=True)
    s.add_argument("--ranks", type=_int_list, help="planted TT ranks")
    s.add_argument("--fraction", type=float, default=0.5, help="observed fraction for masks")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--out", required=True)
    s.add_argument("--tt-out", help="also write the planted TT")

    s = sub.add_parser("import", help="convert a text tensor to a tensor file")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    return p


def _decompose(args):
    A = read_tensor(args.inp)
    if args.method == "ulv" and args.sweep == "r2l" and args.retain == "l11_only":
        print(_SUM_BOUND_NOTE, file=sys.stderr)
    cfg = DecompConfig(
        method=args.method,
        sweep=args.sweep,
        ranks=args.ranks,
        eps=args.eps,
        weights=args.weights,
        refine_passes=args.refine,
        retain=args.retain,
    )
    X, rep = decompose(A, cfg)
    write_tt(args.out, X)
    rep = verify_bound(A, X, rep)
    write_report(args.report, [decomp_row(rep, X, eps=args.eps)])
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(
        f"{args.method} {args.sweep}: ranks {format_ranks(X.ranks)}, rse {rep.rse:.3e}, "
        f"bound ({rep.bound_kind}) {rep.bound / rep.norm if rep.norm else 0.0:.3e}"
    )
    return EXIT_OK


def _reconstruct(args):
    write_tensor(args.out, reconstruct(read_tt(args.inp)))
    return EXIT_OK


def _complete(args):
    truth = read_tensor(args.inp)
    mask = read_mask(args.mask, truth.shape)
    if not mask.any():
        raise UsageError("mask has no observed entries")
    check_ranks(truth.shape, args.ranks)
    obs = ObservationMask.from_dense(mask, truth)
    cfg = CompletionConfig(
        ranks=args.ranks,
        retraction=args.retraction,
        step_size=args.alpha,
        max_iters=args.iters,
        stop_tol=args.stop_tol,
        refine_passes=args.refine,
    )
    start = time.perf_counter()
    X, trace = complete(obs, truth.shape, cfg, truth=truth)
    wall = time.perf_counter() - start
    write_report(args.report, [completion_row(args.retraction, X, trace, wall)])
    if args.trace:
        write_trace(args.trace, trace)
    if args.out:
        write_tt(args.out, X)
    print(f"{args.retraction}: {len(trace)} iterations ({trace.status}), rse {trace.rse_full[-1]:.3e}")
    if trace.status == "diverged":
        print(f"error: {trace.message}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _bench(args):
    rows, failures = run_suite(args.suite, count=args.count, seed=args.seed, jobs=args.jobs)
    write_report(args.report, rows)
    for f in failures:
        print(f"FAIL {f}", file=sys.stderr)
    print(f"{args.suite}: {len(rows)} rows, {len(failures)} failures")
    return EXIT_NUMERIC if failures else EXIT_OK


def _info(args):
    kind = sniff(args.inp)
    if kind == "tensor":
        T = read_tensor(args.inp)
        print(f"tensor dims={T.shape} entries={T.size} norm={frobenius_norm(T):.6e}")
    elif kind == "tt":
        X = read_tt(args.inp)
        print(f"tt dims={X.dims} ranks={X.ranks} params={param_count(X)}")
    else:
        raise FormatError("not a tensor or TT file (unknown magic)", 0)
    return EXIT_OK


def _gen(args):
    if args.kind == "hilbert":
        T = gen_hilbert(args.dims)
    elif args.kind == "gaussian":
        T = gen_gaussian(args.dims, args.seed)
    elif args.kind == "mask":
        T = gen_mask(args.dims, args.fraction, args.seed).astype(np.float64)
    else:
        if args.ranks is None:
            raise UsageError("gen --kind planted needs --ranks")
        T, X = gen_planted_tt(args.dims, args.ranks, args.seed)
        if args.tt_out:
            write_tt(args.tt_out, X)
    write_tensor(args.out, T)
    return EXIT_OK


def _import(args):
    write_tensor(args.out, read_text_tensor(args.inp))
    return EXIT_OK


_COMMANDS = {
    "decompose": _decompose,
    "reconstruct": _reconstruct,
    "complete": _complete,
    "bench": _bench,
    "info": _info,
    "gen": _gen,
    "import": _import,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BoundViolation, InvariantError, ConvergenceError, RetractionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, IndexError, ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
