"""Command-line entry point: ``spinbath-dd <verb> --config spec.json --out dir``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..dynamics import NumericalError
from ..sequence_design import NonConvergenceError
from ..spin_model import ConfigError, EigensolverError
from .pipelines import clean_json, initial_state_check, run
from .spec import ExperimentSpec, Kind, SpecError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

VERBS = {
    "derive": {Kind.DERIVE_SEQUENCES},
    "simulate": {Kind.ECHO_CURVE, Kind.CONCURRENCE_CURVE, Kind.RELAXATION_CURVE,
                 Kind.INSERTION_COMPARISON, Kind.EFFECTIVE_DYNAMICS},
    "sweep": {Kind.NOP_SWEEP},
    "crosscheck": {Kind.ORACLE_CROSSCHECK, Kind.ECHO_CURVE},
    "slope": {Kind.SLOPE_CHECK},
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinbath-dd", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, kinds in VERBS.items():
        sp = sub.add_parser(verb, help="kinds: " + ", ".join(sorted(k.value for k in kinds)))
        sp.add_argument("--config", required=True, help="experiment spec (JSON)")
        sp.add_argument("--out", required=True, help="output directory")
    return p


def _dispatch(verb: str, spec: ExperimentSpec, out: str) -> dict:
    if spec.kind not in VERBS[verb]:
        allowed = ", ".join(sorted(k.value for k in VERBS[verb]))
        raise SpecError("kind", f"{spec.kind.value!r} is not handled by '{verb}' (expected {allowed})")
    if verb == "crosscheck" and spec.kind is Kind.ECHO_CURVE:
        # bath-state robustness: ground versus first excited bath state
        Path(out).mkdir(parents=True, exist_ok=True)
        seq = spec.schedule.build(spec.model).seq
        rep = initial_state_check(spec.model, seq, out_dir=out)
        summary = {"max_abs_diff": rep.max_abs_diff, "max_decay": rep.max_decay, "ratio": rep.ratio,
                   "csv": rep.csv_paths}
        Path(out, "initial_state_check.json").write_text(json.dumps(clean_json(summary), indent=2, sort_keys=True) + "\n")
        return summary
    return run(spec, out).tolerance_report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = ExperimentSpec.load(args.config)
        report = _dispatch(args.verb, spec, args.out)
    except (NumericalError, NonConvergenceError, EigensolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SpecError, ConfigError, KeyError, ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(json.dumps(clean_json(report), indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
