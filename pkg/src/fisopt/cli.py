"""Command-line front end: generate | optimize | compare | evaluate.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 internal error.
``FISOPT_OUTPUT_DIR`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .dataset import Dataset, DomainError
from .fis import SugenoFis
from .harness import ExperimentSpec, compare, optimize_dataset, to_markdown
from .metrics import FitnessContext, evaluate_classifier
from .optim import ALGORITHMS, OptimizerConfig
from .subclust import RADIUS_BOUNDS
from .synthgen import FIELDS, FieldProfile, LabelRuleSet, default_profile, default_rules, generate_dataset

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4

log = logging.getLogger("fisopt")


class DataError(Exception):
    pass


def _output_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get("FISOPT_OUTPUT_DIR", "."))


def _load_dataset(path: str) -> Dataset:
    try:
        return Dataset.load_json(path)
    except FileNotFoundError as exc:
        raise DataError(f"dataset file not found: {path}") from exc
    except (json.JSONDecodeError, KeyError, DomainError) as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc


def cmd_generate(args) -> int:
    try:
        profile = FieldProfile.load(args.profile) if args.profile else default_profile(args.field)
        rules = LabelRuleSet.load(args.rules) if args.rules else default_rules()
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    ds = generate_dataset(profile, rules, args.n, args.seed, fractions=tuple(args.fractions))
    out = _output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.name or f"{profile.field_name}_n{args.n}_s{args.seed}"
    ds.save_json(out / f"{stem}.json")
    ds.save_csv(out / f"{stem}.csv")
    print(f"wrote {out / (stem + '.json')} and {out / (stem + '.csv')}")
    print("split sizes: " + ", ".join(f"{k}={v}" for k, v in ds.sizes().items()))
    counts = ds.class_counts(0)
    print("field_performance: " + ", ".join(f"{k}={v} ({100 * v / len(ds):.1f}%)"
                                            for k, v in counts.items()))
    return EXIT_OK


def _optimizer_config(args, dim: int) -> OptimizerConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except FileNotFoundError as exc:
            raise DomainError(f"config file not found: {args.config}") from exc
    algorithm = args.algorithm or base.get("algorithm")
    if algorithm is None:
        raise DomainError("an algorithm is required (--algorithm or config file)")
    d = {"lower": RADIUS_BOUNDS[0], "upper": RADIUS_BOUNDS[1], **base,
         "algorithm": algorithm, "dim": dim}
    if args.seed is not None:
        d["seed"] = args.seed
    if args.budget is not None:
        d["budget"] = args.budget
    if args.stall is not None:
        d["stall_evaluations"] = args.stall
    ga = dict(base.get("ga", {}))
    for key in ("population_size", "generations", "selection"):
        if getattr(args, key) is not None:
            ga[key] = getattr(args, key)
    if args.count_initial_as_generation:
        ga["count_initial_as_generation"] = True
    pso = dict(base.get("pso", {}))
    for key in ("swarm_size", "c1", "c2"):
        if getattr(args, key) is not None:
            pso[key] = getattr(args, key)
    sa = dict(base.get("sa", {}))
    for key in ("schedule", "t0"):
        if getattr(args, key) is not None:
            sa[key] = getattr(args, key)
    if args.iterations is not None:
        pso["iterations"] = sa["iterations"] = args.iterations
    d.update(ga=ga, pso=pso, sa=sa)
    return OptimizerConfig.from_dict(d).validate()


def cmd_optimize(args) -> int:
    ds = _load_dataset(args.data)
    cfg = _optimizer_config(args, ds.layout.input_dim)
    start = time.perf_counter()
    report = optimize_dataset(ds, cfg, use_test=not args.validation_only, memoize=args.memoize,
                              workers=args.workers)
    elapsed = time.perf_counter() - start
    out = Path(args.out) if args.out else _output_dir(None) / "run_report.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report.to_dict(include_timing=args.record_timing), indent=1) + "\n")
    if args.save_fis:
        FitnessContext(ds, use_test=False).build(report.best_x).save(args.save_fis)
    print(f"best fitness {report.best_fitness!r}")
    print(f"evaluation function executions {report.evaluation_executions}")
    print(f"runtime {elapsed:.2f}s")
    print(f"report {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    spec_path = Path(args.spec)
    try:
        spec = ExperimentSpec.load(spec_path)
    except FileNotFoundError as exc:
        raise DataError(f"experiment spec not found: {spec_path}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DomainError(f"invalid experiment spec: {exc}") from exc
    if args.seed is not None:
        spec.seeds = [args.seed]
    try:
        dataset = spec.load_dataset(base_dir=spec_path.parent)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    report = compare(spec, dataset, workers=args.workers)
    written = report.write(_output_dir(args.out))
    cols, body = report.summary_table()
    print(to_markdown(cols, body), end="")
    failed = sum(1 for r in report.rows if r["error"])
    print(f"{len(report.rows)} runs ({failed} failed); wrote {len(written)} files to "
          f"{_output_dir(args.out)}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ds = _load_dataset(args.data)
    try:
        fis = SugenoFis.load(args.fis)
    except FileNotFoundError as exc:
        raise DataError(f"FIS file not found: {args.fis}") from exc
    except (json.JSONDecodeError, KeyError, DomainError) as exc:
        raise DataError(f"cannot read FIS {args.fis}: {exc}") from exc
    if fis.layout != ds.layout:
        raise DataError("FIS layout does not match the dataset layout")
    acc, sens, spec = evaluate_classifier(fis, ds, args.split)
    print(json.dumps({"split": args.split, "accuracy": acc, "sensitivity": sens,
                      "specificity": spec}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fisopt", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic field dataset (JSON + CSV)")
    g.add_argument("--field", choices=FIELDS, default="say_account")
    g.add_argument("--n", type=int, default=2000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--profile", help="field profile JSON (default: shipped profile)")
    g.add_argument("--rules", help="label rule set JSON (default: shipped rules)")
    g.add_argument("--fractions", type=float, nargs=3, default=[0.6, 0.2, 0.2],
                   metavar=("TRAIN", "VAL", "TEST"))
    g.add_argument("--out", help="output directory")
    g.add_argument("--name", help="output file stem")
    g.set_defaults(func=cmd_generate)

    o = sub.add_parser("optimize", help="optimize cluster radii with one algorithm")
    o.add_argument("--data", required=True)
    o.add_argument("--algorithm", choices=ALGORITHMS)
    o.add_argument("--config", help="OptimizerConfig JSON; flags override its values")
    o.add_argument("--seed", type=int)
    o.add_argument("--budget", type=int)
    o.add_argument("--stall", type=int, help="stop after this many non-improving evaluations")
    o.add_argument("--population-size", dest="population_size", type=int)
    o.add_argument("--generations", type=int)
    o.add_argument("--selection", choices=["normalized_geometric_ranking", "tournament"])
    o.add_argument("--count-initial-as-generation", action="store_true")
    o.add_argument("--swarm-size", dest="swarm_size", type=int)
    o.add_argument("--c1", type=float)
    o.add_argument("--c2", type=float)
    o.add_argument("--iterations", type=int)
    o.add_argument("--schedule", choices=["boltzmann", "exponential", "fast"])
    o.add_argument("--t0", type=float)
    o.add_argument("--validation-only", action="store_true",
                   help="fitness from the validation split alone")
    o.add_argument("--memoize", action="store_true")
    o.add_argument("--workers", type=int, default=1)
    o.add_argument("--record-timing", action="store_true",
                   help="include wall time in the report (breaks byte-identical reruns)")
    o.add_argument("--out", help="report path")
    o.add_argument("--save-fis", help="write the best FIS as JSON")
    o.set_defaults(func=cmd_optimize)

    c = sub.add_parser("compare", help="run an experiment grid and write comparison tables")
    c.add_argument("--spec", required=True)
    c.add_argument("--out", help="output directory")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--seed", type=int, help="replace the spec's replicate seeds with one seed")
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("evaluate", help="score a saved FIS on one dataset split")
    e.add_argument("--fis", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--split", choices=["train", "validation", "test"], default="validation")
    e.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DataError as exc:
        print(f"fisopt: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DomainError as exc:
        print(f"fisopt: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        log.debug("internal error", exc_info=True)
        print(f"fisopt: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
