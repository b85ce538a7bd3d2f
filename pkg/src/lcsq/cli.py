"""Command-line entry point: ``lcsq compute | verify | check``.

Exit status: 0 success, 1 mismatch or failed check, 2 bad input (parse
error, unsupported ring, unsupported regime, incomplete table), 3 when the
resource guard left components uncomputed.
"""

from __future__ import annotations

import argparse
import logging
import re
import resource
import sys
import time
from contextlib import contextmanager

from .closed_forms import UnsupportedRegimeError, diff_tables, predict_fp_from_z, predict_n2, predict_n3
from .emit import emit_csv, emit_latex, emit_text, format_cell_text
from .lcs_engine import (
    DEFAULT_MAX_DIM,
    AlgebraPresentation,
    BigradedTable,
    IncompleteTableError,
    Ring,
    n_table,
)
from .store import CacheRecord, ComputationKey, ResultStore, cache_dir_from
from .weyl_divided import (
    check_dim_divisibility,
    check_hilbert_divisibility,
    default_exps,
    pure_power_support,
    weyl_suite,
)

log = logging.getLogger("lcsq")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3

# default bound for checks when the support box would need more than this
CHECK_DEGREE_CAP = 11


class InputError(Exception):
    """Bad command-line input; maps to exit status 2."""


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_algebra_args(p: argparse.ArgumentParser, ring_default: str | None = "Z") -> None:
    p.add_argument("--ring", default=ring_default, help="Z or Fp:<prime>")
    p.add_argument("--gens", type=int, default=2, help="number of generators k")
    p.add_argument("--relations", default="", help='comma-separated relations, e.g. "x1^3,x2^7"')
    p.add_argument("--i", type=int, default=None, help="index i of N_i")
    p.add_argument("--max-degree", type=int, default=None, help="total degree bound")
    p.add_argument("--max-dim", type=int, default=DEFAULT_MAX_DIM,
                   help="skip components whose free-algebra dimension exceeds this")
    p.add_argument("--cache-dir", default=None, help="result cache directory (default: $LCSQ_CACHE_DIR)")
    p.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcsq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="compute a table of N_i components")
    _add_algebra_args(c)
    c.add_argument("--format", choices=("text", "csv", "latex"), default="text")

    v = sub.add_parser("verify", help="compare computed tables with a prediction")
    _add_algebra_args(v)
    v.add_argument("--against", choices=("n2", "n3", "fp-conjecture"), required=True)
    v.add_argument("--p", type=int, default=None, help="prime for fp-conjecture")

    k = sub.add_parser("check", help="divisibility and operator checks")
    k.add_argument("kind", choices=("divisibility", "hilbert", "weyl"))
    _add_algebra_args(k, ring_default=None)
    k.add_argument("--exps", type=_int_list, default=None, help="n_1,...,n_k (default: read off the relations)")
    k.add_argument("--support", type=_int_list, default=None, help="degree box containing the nonzero cells")
    k.add_argument("--variable", type=int, default=1, help="variable of the Hilbert series (1-based)")
    k.add_argument("--p", type=int, default=None, help="prime for the operator suite")
    k.add_argument("--n", type=int, default=None, help="truncation exponent for the operator suite")
    return parser


def _presentation(args, ring: str | None = None) -> AlgebraPresentation:
    try:
        return AlgebraPresentation.from_strings(args.gens, Ring.parse(ring or args.ring), args.relations)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _peak_memory_mb() -> float:
    # ru_maxrss is in kilobytes on Linux
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def compute_table(
    pres: AlgebraPresentation, i: int, bound: int, max_dim: int | None, cache_dir=None
) -> CacheRecord:
    """Cache-aware table computation."""
    key = ComputationKey.for_run(pres, i, bound, max_dim)
    store = ResultStore(cache_dir) if cache_dir is not None else None
    if store is not None:
        hit = store.get(key, pres)
        if hit is not None:
            log.info("cache hit %s", store.path_for(key))
            return hit
    t0 = time.perf_counter()
    table = n_table(pres, i, bound, max_dim)
    record = CacheRecord(key, table, round(time.perf_counter() - t0, 2), round(_peak_memory_mb(), 2))
    if store is not None:
        store.put(record)
    return record


@contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _need_i(args) -> int:
    if args.i is None:
        raise InputError("--i is required")
    if args.i < 1:
        raise InputError("--i must be positive")
    return args.i


def _bound(args, default: int | None = None) -> int:
    bound = args.max_degree if args.max_degree is not None else default
    if bound is None:
        raise InputError("--max-degree is required")
    if bound < 0:
        raise InputError("--max-degree must be non-negative")
    return bound


def cmd_compute(args) -> int:
    pres = _presentation(args)
    rec = compute_table(pres, _need_i(args), _bound(args), args.max_dim, cache_dir_from(args.cache_dir))
    table = rec.table
    if args.format == "text":
        body = emit_text(table)
    elif args.format == "csv":
        body = emit_csv(table)
    else:
        if table.k != 2:
            raise InputError("LaTeX output needs exactly two generators")
        body = emit_latex(table, f"Time: {rec.wall_time:.2f} sec, Memory: {rec.peak_memory_mb:.2f}MB")
    with _output(args.out) as fh:
        fh.write(body)
    if table.skipped():
        log.warning("%d components exceeded the %s-monomial cap and are blank", len(table.skipped()), args.max_dim)
        return EXIT_RESOURCE
    return EXIT_OK


def pure_powers(pres: AlgebraPresentation) -> tuple[int, int]:
    """(m, n) for a presentation Z<x1, x2>/(x1^m, x2^n)."""
    pat = re.compile(r"^x([12])\^(\d+)$|^x([12])$")
    found = {}
    for text in pres.relation_strings():
        mt = pat.match(text)
        if not mt:
            raise InputError(f"closed forms need relations x1^m, x2^n; got {text!r}")
        g = int(mt.group(1) or mt.group(3))
        found[g] = int(mt.group(2) or 1)
    if pres.k != 2 or sorted(found) != [1, 2] or len(pres.relations) != 2:
        raise InputError("closed forms need exactly two generators with relations x1^m, x2^n")
    return found[1], found[2]


def cmd_verify(args) -> int:
    if args.against == "fp-conjecture":
        if args.p is None:
            raise InputError("--p is required for fp-conjecture")
        try:
            fp_ring = Ring(args.p)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        zpres = _presentation(args, "Z")
        i, bound = _need_i(args), _bound(args)
        cache = cache_dir_from(args.cache_dir)
        z = compute_table(zpres, i, bound, args.max_dim, cache).table
        fp = compute_table(zpres.with_ring(fp_ring), i, bound, args.max_dim, cache).table
        report = diff_tables(fp, predict_fp_from_z(z, args.p), f"N_{i} over F_{args.p} vs prediction from Z")
    else:
        pres = _presentation(args)
        if not pres.ring.is_integral:
            raise InputError("closed forms are stated over Z")
        m, n = pure_powers(pres)
        want_i = 2 if args.against == "n2" else 3
        if args.i not in (None, want_i):
            raise InputError(f"--against {args.against} compares N_{want_i}")
        try:
            if want_i == 2:
                bound = _bound(args, m + n)
                predicted = predict_n2(m, n, bound)
            else:
                bound = _bound(args, m + n + 2)
                predicted = predict_n3(m, n, bound)
        except UnsupportedRegimeError as exc:
            raise InputError(str(exc)) from exc
        computed = compute_table(pres, want_i, bound, args.max_dim, cache_dir_from(args.cache_dir)).table
        report = diff_tables(computed, predicted, f"N_{want_i} of {pres} vs closed form")
    with _output(args.out) as fh:
        fh.write(report.render(format_cell_text) + "\n")
    return EXIT_OK if report.ok else EXIT_FAIL


def _check_table(args) -> tuple[BigradedTable, list[int], list[int] | None]:
    if args.ring is None:
        raise InputError("--ring Fp:<p> is required")
    pres = _presentation(args)
    if pres.ring.is_integral:
        raise InputError("divisibility checks need --ring Fp:<p>")
    i = _need_i(args)
    probe = BigradedTable(pres.k, 0, {}, pres.ring, i, pres)
    support = args.support if args.support is not None else pure_power_support(probe)
    if support is not None and len(support) != pres.k:
        raise InputError(f"--support needs {pres.k} entries")
    bound = _bound(args, min(sum(support), CHECK_DEGREE_CAP) if support is not None else None)
    exps = args.exps if args.exps is not None else default_exps(probe)
    if len(exps) != pres.k or any(e < 0 for e in exps):
        raise InputError(f"--exps needs {pres.k} non-negative integers")
    table = compute_table(pres, i, bound, args.max_dim, cache_dir_from(args.cache_dir)).table
    return table, exps, support


def cmd_check(args) -> int:
    if args.kind == "weyl":
        if args.p is None or args.n is None:
            raise InputError("weyl check needs --p and --n")
        if args.n < 0:
            raise InputError("--n must be non-negative")
        try:
            reports = weyl_suite(args.p, args.n)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        failed = [r for r in reports if not r]
        lines = [f"operator identities over F_{args.p}, n={args.n}: {len(reports) - len(failed)}/{len(reports)} hold"]
        lines += [r.line() for r in failed]
        ok = not failed
    else:
        table, exps, support = _check_table(args)
        try:
            if args.kind == "divisibility":
                rep = check_dim_divisibility(table, exps, support)
            else:
                if support is None:
                    raise InputError("--support is required for relations that are not pure powers")
                if not 1 <= args.variable <= table.k:
                    raise InputError(f"--variable must be in 1..{table.k}")
                rep = check_hilbert_divisibility(table, args.variable, exps, support)
        except (IncompleteTableError, ValueError) as exc:
            raise InputError(str(exc)) from exc
        lines, ok = [rep.line()], rep.passed
    with _output(args.out) as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"compute": cmd_compute, "verify": cmd_verify, "check": cmd_check}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
