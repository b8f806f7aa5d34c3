"""Command-line entry point: ``hulllab {check,decompose,verify,sample,gap}``.

Exit codes: 0 success, 1 mathematical negative (not decomposable, failing
suite), 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from collections import Counter

from . import io as hio
from .bounds import classify, gap_probe, in_upper
from .laminates import NotDecomposable, decompose, recombine, verify_tree
from .linalg import nuclear_norm
from .sampler import REGIONS, monte_carlo_classify
from .state import Params, g_defect, in_K, k_residual, m0, ohm_defect
from .suites import SUITES, run_suite

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError("must be positive and finite")
    return v


def _params(args) -> Params:
    try:
        return Params(args.r, args.s, args.p)
    except ValueError as exc:
        raise UsageError(f"invalid parameters: {exc}") from None


def _emit(obj) -> None:
    sys.stdout.write(hio.dumps(obj) + "\n")


def _open_out(path: str):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from None


# -- commands ---------------------------------------------------------------


def cmd_check(args) -> int:
    z, params = hio.load_state_file(args.input)
    t = params.tol(args.tol)
    M0 = m0(z, params)
    try:
        G = g_defect(z, params, t)
    except ValueError:
        G = None
    report = {
        "params": hio.params_to_json(params),
        "state": hio.state_to_json(z),
        "in_K": in_K(z, params, t),
        "k_residual": k_residual(z, params),
        "m0": M0,
        "G": G,
        "nuclear_norm": nuclear_norm(M0),
        "ohm_defect": ohm_defect(z),
        "in_upper": {"open": in_upper(z, params, t), "closed": in_upper(z, params, t, closed=True)},
    }
    try:
        decompose(z, params, t)
        report["in_lower_hull"] = True
        report["lower_failure"] = None
    except NotDecomposable as exc:
        report["in_lower_hull"] = False
        report["lower_failure"] = exc.reason.value
    report["verdict"] = classify(z, params, t).tag
    _emit(report)
    return EXIT_OK


def cmd_decompose(args) -> int:
    z, params = hio.load_state_file(args.input)
    try:
        tree = decompose(z, params, args.tol)
    except NotDecomposable as exc:
        _emit({"decomposable": False, "reason": exc.reason.value, "detail": exc.detail})
        print(f"not decomposable: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    rep = verify_tree(tree, params)
    _, leaves = recombine(tree)
    _emit({
        "decomposable": True,
        "tree": hio.tree_to_json(tree),
        "leaves": [{"weight": w, "state": hio.state_to_json(s)} for w, s in leaves],
        "verification": {
            "leaves": rep.leaves,
            "depth": rep.depth,
            "max_leaf_residual": rep.max_leaf_residual,
            "max_lambda_residual": rep.max_lambda_residual,
            "max_child_error": rep.max_child_error,
            "recombination_error": rep.recombination_error,
            "ok": rep.ok(),
        },
    })
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.suite != "all" and args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from: all, {', '.join(SUITES)}")
    params = _params(args)
    results = [run_suite(name, params, args.n, args.seed) for name in names]
    if args.format == "json":
        _emit({"params": hio.params_to_json(params), "suites": [r.to_dict() for r in results]})
    else:
        for r in results:
            print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NEGATIVE


def _campaign(args):
    params = _params(args)
    points = None
    if args.region == "file":
        if not args.points:
            raise UsageError("--region file needs --points FILE")
        points, file_params = hio.load_points(args.points)
        if file_params is not None:
            params = file_params
    elif args.n is None:
        raise UsageError("--n is required")
    return monte_carlo_classify(params, args.n or 0, args.seed, args.region, points, threads=args.threads)


def _write_cloud(args, rows, summary) -> None:
    if not args.out:
        return
    fh = _open_out(args.out)
    with fh:
        if args.format == "csv":
            hio.write_cloud_csv(rows, fh)
        else:
            doc = {
                "summary": summary,
                "rows": [
                    {"state": hio.state_to_json(r.state), "verdict": r.verdict.tag, "nuclear_norm": r.nuclear, "G": r.G, "ohm_defect": r.ohm}
                    for r in rows
                ],
            }
            fh.write(hio.dumps(doc) + "\n")


def cmd_sample(args) -> int:
    if args.out:
        _open_out(args.out).close()  # fail early, before the campaign runs
    report = _campaign(args)
    summary = report.summary()
    _write_cloud(args, report.rows, summary)
    _emit(summary)
    return EXIT_OK


def cmd_gap(args) -> int:
    if args.input:
        z, params = hio.load_state_file(args.input, _params(args))
        try:
            rep = gap_probe(z, params, args.tol)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        out = rep.to_dict()
        out["classification"] = classify(z, params, args.tol).tag
        _emit(out)
        return EXIT_OK
    if args.out:
        _open_out(args.out).close()
    report = _campaign(args)
    probes = Counter()
    failures = Counter()
    worst = 0.0
    gap_rows = []
    for row in report.rows:
        if not row.verdict.tag.startswith("OnUpperBoundary"):
            continue
        g = gap_probe(row.state, report.params, args.tol)
        probes[g.verdict] += 1
        if g.lower_failure:
            failures[g.lower_failure] += 1
        if g.verdict == "GapPoint":
            gap_rows.append(row)
            worst = max(worst, abs(g.sign_balance_residual))
    summary = report.summary()
    summary["probe"] = dict(sorted(probes.items()))
    summary["lower_failures"] = dict(sorted(failures.items()))
    summary["max_sign_balance_residual"] = worst
    _write_cloud(args, gap_rows, summary)
    _emit(summary)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _add_params(p) -> None:
    p.add_argument("--r", type=_positive_float, default=1.0, help="radius of the alpha sphere (default 1)")
    p.add_argument("--s", type=_positive_float, default=1.0, help="radius of the beta sphere (default 1)")
    p.add_argument("--p", type=float, default=0.0, help="pressure, |p| <= r s (default 0)")


def _add_campaign(p, default_region: str) -> None:
    p.add_argument("--n", type=_positive_int, help="number of samples")
    p.add_argument("--seed", type=_seed, default=0, help="master seed, 64-bit unsigned (default 0)")
    p.add_argument("--region", choices=REGIONS, default=default_region)
    p.add_argument("--points", help="JSON point list for --region file")
    p.add_argument("--out", help="write the cloud here")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="cloud format (default csv)")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker threads (capped by HULLLAB_THREADS)")
    _add_params(p)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hulllab", description="Inner and outer hull estimates for relaxed ideal MHD states.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="report every oracle on one state")
    p.add_argument("input", help="state JSON file")
    p.add_argument("--tol", type=_positive_float, default=None, help="tolerance (default 1e-9 * max(1, r s))")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("decompose", help="build and verify a laminate tree")
    p.add_argument("input", help="state JSON file")
    p.add_argument("--tol", type=_positive_float, default=None, help="tolerance (default 1e-9 * max(1, r s))")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", required=True, help=f"all, or one of: {', '.join(SUITES)}")
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--format", choices=("text", "json"), default="text")
    _add_params(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="classify a sampled point cloud")
    _add_campaign(p, "ball")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("gap", help="probe boundary states that escape the laminate oracle")
    _add_campaign(p, "boundary")
    p.add_argument("--input", help="probe a single state file instead of sampling")
    p.add_argument("--tol", type=_positive_float, default=None)
    p.set_defaults(func=cmd_gap)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except (hio.FormatError, UsageError) as exc:
        print(f"hulllab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hulllab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"hulllab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "verbose", False):
        print(f"done in {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
