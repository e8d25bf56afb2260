"""``infobound`` command line.

Reports are JSON on stdout, diagnostics on stderr. Exit codes are part of the
interface::

    0   ok
    2   a reproduced reference value regressed (verify-examples)
    3   a bound violation was found (check)
    64  unreadable or malformed input (also bad command-line usage)
    65  well-formed input that breaks a probability invariant
    66  a resource guard was hit
    67  infinite entropy production on a forward trajectory
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from . import bound_checker, fluctuation
from .search import MAX_GRID_POINTS, Objective, grid_oracle, grid_size, search
from .documents import (DocumentValidationError, ParseError, chain_from_document,
                        chain_to_document, load_json, model_from_document)
from .errors import DomainError, InfiniteSigmaError, RegressionError, ResourceLimitError
from .info_core import tolerance_scale
from .markov_chain import EXAMPLE1_FIXTURE_COMPLETED, example1, example2

log = logging.getLogger("infobound")

EXIT_OK = 0
EXIT_REGRESSION = 2
EXIT_VIOLATION = 3
EXIT_PARSE = 64
EXIT_VALIDATION = 65
EXIT_RESOURCE = 66
EXIT_INFINITE_SIGMA = 67

LN2 = math.log(2.0)

# report keys holding entropies (nats); --bits rescales exactly these
NATS_KEYS = frozenset({
    "iqc", "h_x1", "h_x2_given_k", "h_k", "mutual_x1_k", "lower_violation", "upper_violation",
    "avg_sigma", "avg_ic", "avg_sigma_plus_ic", "sigma_plus_iqc", "gap", "max_abs_sigma",
    "best_value", "oracle_value",
})


def to_bits(obj):
    """Copy of a report with every entropy-valued key divided by ln 2."""
    if isinstance(obj, dict):
        return {k: (v / LN2 if k in NATS_KEYS and isinstance(v, float) else to_bits(v))
                for k, v in obj.items()}
    if isinstance(obj, list):
        return [to_bits(v) for v in obj]
    return obj


def _finite_or_null(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite_or_null(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite_or_null(v) for v in obj]
    return obj


def emit(report: dict, bits: bool = False, stream=None) -> None:
    """Write a report as JSON; floats use Python's shortest round-trip repr."""
    if bits:
        report = dict(to_bits(report), units="bits")
    text = json.dumps(_finite_or_null(report), indent=2, allow_nan=False)
    print(text, file=stream or sys.stdout)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_PARSE)


def _default_seed() -> int:
    raw = os.environ.get("INFOBOUND_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        log.warning("ignoring non-integer INFOBOUND_SEED=%r", raw)
        return 0


def _fluctuation_summary(chain) -> dict:
    model = fluctuation.build_zero_sigma_model(chain)
    avg = fluctuation.averages(model)
    gap = fluctuation.conjecture_gap(model, chain)
    return {
        "jarzynski": fluctuation.jarzynski_exhaustive(model),
        "max_abs_sigma": fluctuation.max_abs_sigma(model),
        "avg_sigma": avg.avg_sigma,
        "avg_ic": avg.avg_ic,
        "avg_sigma_plus_ic": avg.avg_sigma_plus_ic,
        "iqc": gap.iqc,
        "sigma_plus_iqc": avg.avg_sigma + gap.iqc,
        "gap": gap.gap,
    }


def _demo_checks(name: str, demo: dict) -> list[str]:
    failed = []
    if abs(demo["jarzynski"] - 1.0) > 1e-10:
        failed.append(f"{name}.zero_sigma_model.jarzynski = {demo['jarzynski']!r}, expected 1")
    if demo["max_abs_sigma"] > 1e-10:
        failed.append(f"{name}.zero_sigma_model.max_abs_sigma = {demo['max_abs_sigma']!r}, expected 0")
    if demo["avg_sigma_plus_ic"] < -1e-10:
        failed.append(f"{name}.zero_sigma_model.avg_sigma_plus_ic = {demo['avg_sigma_plus_ic']!r} < 0")
    return failed


def cmd_verify_examples(args) -> int:
    failed: list[str] = []
    try:
        r1, r2 = bound_checker.verify_paper_examples()
    except RegressionError as exc:
        failed.append(str(exc))
        r1, r2 = bound_checker.check_su_bounds(example1()), bound_checker.check_su_bounds(example2())
    report = {"units": "nats"}
    for name, chain, rep in (("example1", example1(), r1), ("example2", example2(), r2)):
        entry = rep.to_dict()
        entry["footnote"] = bound_checker.check_footnote(chain).to_dict()
        entry["zero_sigma_model"] = demo = _fluctuation_summary(chain)
        failed += _demo_checks(name, demo)
        if name == "example1":
            entry["fixture_completed"] = list(EXAMPLE1_FIXTURE_COMPLETED)
            if abs(demo["sigma_plus_iqc"] + LN2) > 1e-10:
                failed.append(f"example1.zero_sigma_model.sigma_plus_iqc = {demo['sigma_plus_iqc']!r}, "
                              "expected -ln 2")
        report[name] = entry
    report["status"] = "regression" if failed else "ok"
    if failed:
        report["failed"] = failed
    emit(report, bits=args.bits)
    for f in failed:
        log.error("regression: %s", f)
    return EXIT_REGRESSION if failed else EXIT_OK


def _load_chain(path, scale):
    doc = load_json(path)
    if scale is None:
        return chain_from_document(doc)
    with tolerance_scale(scale):
        return chain_from_document(doc)


def cmd_check(args) -> int:
    chain = _load_chain(args.input, args.tolerance_scale)
    report = bound_checker.check_su_bounds(chain).to_dict()
    emit(report, bits=args.bits)
    return EXIT_OK if report["verdict"] == "holds" else EXIT_VIOLATION


def cmd_search(args) -> int:
    dims = tuple(args.dims)
    seed = args.seed if args.seed is not None else _default_seed()
    objective = Objective.parse(args.objective)
    if args.oracle_steps is not None and grid_size(dims, args.oracle_steps) > MAX_GRID_POINTS:
        raise ResourceLimitError(
            f"oracle grid has {grid_size(dims, args.oracle_steps)} points (> {MAX_GRID_POINTS}); "
            "reduce dims or --oracle-steps")
    result = search(dims, objective, restarts=args.restarts, seed=seed,
                    budget=args.budget, workers=args.workers)
    report = {
        "objective": objective.value,
        "dims": list(dims),
        "best_value": result.best_value,
    }
    if objective is Objective.MAXIMIZE_IQC_MINUS_HK:
        report["gap"] = -result.best_value
    report.update(restarts_run=result.restarts_run, evaluations=result.evaluations,
                  seed=result.seed, converged=result.converged,
                  best_chain=chain_to_document(result.best_chain))
    if args.oracle_steps is not None:
        oracle = grid_oracle(dims, objective, args.oracle_steps)
        report["oracle"] = {"steps_per_axis": args.oracle_steps, "oracle_value": oracle,
                            "search_matches_oracle": result.best_value <= oracle + 1e-6}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(chain_to_document(result.best_chain), fh, indent=2)
            fh.write("\n")
    emit(report, bits=args.bits)
    return EXIT_OK


def cmd_jarzynski(args) -> int:
    chain = None
    if args.from_chain:
        chain = _load_chain(args.from_chain, args.tolerance_scale)
        model = fluctuation.build_zero_sigma_model(chain)
    else:
        doc = load_json(args.model)
        if args.allow_infinite_sigma and isinstance(doc, dict):
            doc = dict(doc, allow_infinite_sigma=True)
        if args.tolerance_scale is None:
            model = model_from_document(doc)
        else:
            with tolerance_scale(args.tolerance_scale):
                model = model_from_document(doc)

    report = {"mode": args.mode}
    if args.mode == "exhaustive":
        report["jarzynski"] = fluctuation.jarzynski_exhaustive(model)
        report["reverse_leak"] = fluctuation.reverse_leak(model)
    else:
        seed = args.seed if args.seed is not None else _default_seed()
        mc = fluctuation.jarzynski_montecarlo(model, args.samples, seed, workers=args.workers)
        report.update(jarzynski=mc.estimate, std_error=mc.std_error, samples=mc.samples, seed=seed)
    avg = fluctuation.averages(model)
    report.update(avg_sigma=avg.avg_sigma, avg_ic=avg.avg_ic, avg_sigma_plus_ic=avg.avg_sigma_plus_ic)
    if chain is not None:
        gap = fluctuation.conjecture_gap(model, chain)
        report.update(iqc=gap.iqc, sigma_plus_iqc=avg.avg_sigma + gap.iqc, gap=gap.gap)
    emit(report, bits=args.bits)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="infobound", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--bits", action="store_true", help="report entropies in bits (display only)")
        return p

    p = common(sub.add_parser("verify-examples", help="recompute both counterexamples"))
    p.set_defaults(func=cmd_verify_examples)

    p = common(sub.add_parser("check", help="evaluate 0 <= I_QC <= H(k) on a chain document"))
    p.add_argument("input", help="ChainDocument JSON file")
    p.add_argument("--tolerance-scale", type=float, default=None,
                   help="loosen validation tolerances by this factor")
    p.set_defaults(func=cmd_check)

    p = common(sub.add_parser("search", help="numerically search for bound violations"))
    p.add_argument("--dims", type=int, nargs=3, required=True, metavar=("N2", "NK", "N1"))
    p.add_argument("--objective", choices=["iqc-min", "gap-max"], default="iqc-min")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--seed", type=int, default=None, help="default: $INFOBOUND_SEED or 0")
    p.add_argument("--budget", type=int, default=50_000, help="total objective evaluations")
    p.add_argument("--oracle-steps", type=int, default=None, help="also run the grid oracle")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="write the best chain here as a ChainDocument")
    p.set_defaults(func=cmd_search)

    p = common(sub.add_parser("jarzynski", help="evaluate <exp(-sigma - I_c)> on a feedback model"))
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="ModelDocument JSON file")
    src.add_argument("--from-chain", help="ChainDocument; builds the zero-entropy-production model")
    p.add_argument("--mode", choices=["exhaustive", "mc"], default="exhaustive")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None, help="default: $INFOBOUND_SEED or 0")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--allow-infinite-sigma", action="store_true")
    p.add_argument("--tolerance-scale", type=float, default=None)
    p.set_defaults(func=cmd_jarzynski)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except ParseError as exc:
        emit({"error": "parse", "diagnostics": exc.diagnostics}, stream=sys.stderr)
        return EXIT_PARSE
    except DomainError as exc:
        emit({"error": "usage", "message": str(exc)}, stream=sys.stderr)
        return EXIT_PARSE
    except DocumentValidationError as exc:
        emit({"error": "validation", "diagnostics": exc.diagnostics}, stream=sys.stderr)
        return EXIT_VALIDATION
    except ResourceLimitError as exc:
        emit({"error": "resource", "message": str(exc)}, stream=sys.stderr)
        return EXIT_RESOURCE
    except InfiniteSigmaError as exc:
        emit({"error": "infinite_sigma", "message": str(exc),
              "trajectory": list(exc.trajectory) if exc.trajectory else None}, stream=sys.stderr)
        return EXIT_INFINITE_SIGMA


if __name__ == "__main__":
    sys.exit(main())
