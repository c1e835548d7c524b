"""Command-line entry point: ``codecalib {validate,analyze,synth}``.

Exit codes: 0 success, 1 data violation, 2 I/O failure, 3 bad configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .confidence import ALL_MEASURES, Measure
from .correctness import MissingLabelError, Notion
from .metrics import Scheme
from .pipeline import ConfigError, RunConfig, analyze
from .records import RecordFormatError, load_records, validate_record
from .synth import Profile, write_synth_corpus

EXIT_OK, EXIT_DATA, EXIT_IO, EXIT_CONFIG = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _load_all(paths: Sequence[str]):
    records, seen = [], set()
    for path in paths:
        for r in load_records(path):
            if r.record_id in seen:
                raise RecordFormatError(f"{path}: record_id {r.record_id!r} already loaded from an earlier file")
            seen.add(r.record_id)
            records.append(r)
    return records


def cmd_validate(args) -> int:
    total = 0
    for path in args.paths:
        try:
            records = load_records(path)
        except OSError as exc:
            print(f"{path}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_IO
        except RecordFormatError as exc:
            print(f"{path}: {exc}")
            total += 1
            continue
        for r in records:
            for v in validate_record(r):
                print(f"{path}: {r.record_id}: {v}")
                total += 1
    print(f"{total} violation(s)")
    return EXIT_OK if total == 0 else EXIT_DATA


def _parse_measures(text: str) -> tuple[Measure, ...]:
    if text == "all":
        return ALL_MEASURES
    try:
        return tuple(Measure(m.strip()) for m in text.split(",") if m.strip())
    except ValueError as exc:
        raise ConfigError(f"--measures: {exc}") from None


def cmd_analyze(args) -> int:
    try:
        config = RunConfig(
            inputs=tuple(args.input),
            measures=_parse_measures(args.measures),
            notion=Notion(args.notion.replace("-", "_")),
            bins=args.bins,
            scheme=Scheme.EQUAL_WIDTH if args.scheme == "equal" else Scheme.QUANTILE,
            folds=args.folds,
            seed=args.seed,
            collapse_threshold=args.collapse_threshold,
            out=args.out,
            epsilon=args.epsilon,
            format=args.format,
            feature=args.feature,
        )
        config.check()
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        records = _load_all(config.inputs)
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_IO
    except RecordFormatError as exc:
        print(f"bad record: {exc}", file=sys.stderr)
        return EXIT_DATA
    if not records:
        print("no records to analyze", file=sys.stderr)
        return EXIT_DATA
    try:
        result = analyze(records, config)
    except MissingLabelError as exc:
        print(f"cannot label corpus: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in result.files:
        print(f"wrote {path}")
    if not any(key[2] == "raw" for key in result.reports):
        print("every requested measure was skipped", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.n < 100:
        print("--n must be at least 100", file=sys.stderr)
        return EXIT_CONFIG
    try:
        count = write_synth_corpus(args.out, args.n, args.seed, args.profile)
    except OSError as exc:
        print(f"cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {count} records to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="codecalib", description="Calibration analysis for generated-code confidence measures.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check record files against the schema invariants")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="compute raw and rescaled calibration reports and plots")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--measures", default="all", help="comma-separated subset of: " + ", ".join(m.value for m in Measure))
    p.add_argument("--notion", choices=["exact-match", "all-pass"], default="all-pass")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--scheme", choices=["equal", "quantile"], default="equal")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--collapse-threshold", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=1e-9)
    p.add_argument("--feature", choices=["ln_prob", "logit"], default="ln_prob")
    p.add_argument("--out", default="calibration-out")
    p.add_argument("--format", choices=["markdown", "csv"], default="markdown")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="write a synthetic corpus with a known calibration profile")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile", choices=[pr.value for pr in Profile], default="calibrated")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
