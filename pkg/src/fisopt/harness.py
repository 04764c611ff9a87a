"""Experiment runner: optimizer grids over one field dataset and table-shaped reports."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import Dataset, DomainError
from .metrics import FitnessContext
from .optim import OptimizerConfig, RunReport, run
from .subclust import RADIUS_BOUNDS
from .synthgen import FieldProfile, LabelRuleSet, default_profile, default_rules, generate_dataset

log = logging.getLogger(__name__)

POPULATION_SIZES = (30, 100, 200, 300, 400, 500)
PSO_COEFFICIENTS = tuple((c, c) for c in (0.5, 1.0, 1.5, 2.0)) + ((2.8, 1.3),)
FAMILY = {"ga_binary": "GA", "ga_real": "GA", "pso": "PSO", "sa": "SA"}

DETAIL_COLUMNS = (
    "classifier", "algorithm", "params", "seed",
    "accuracy_validation", "accuracy_test", "accuracy_min",
    "sensitivity_validation", "specificity_validation",
    "sensitivity_test", "specificity_test",
    "evaluation_executions", "n_rules", "error",
)


def full_grid(sa_iterations=(1, 10, 25, 50, 100)) -> list[dict]:
    """The full optimizer sweep: GA codings x selections x populations, PSO
    swarm sizes x coefficient pairs, SA schedules x initial temperatures x
    iteration counts.

    PSO coefficient pairs cover the equal-value diagonal {0.5, 1, 1.5, 2} plus
    (2.8, 1.3); :func:`expand_grid` accepts an explicit ``coefficients`` list
    for the full 4 x 4 product.
    """
    return expand_grid({
        "ga": {"codings": ["binary", "real"],
               "selections": ["normalized_geometric_ranking", "tournament"],
               "population_sizes": list(POPULATION_SIZES), "generations": 25},
        "pso": {"swarm_sizes": list(POPULATION_SIZES),
                "coefficients": [list(c) for c in PSO_COEFFICIENTS], "iterations": 25},
        "sa": {"schedules": ["boltzmann", "exponential", "fast"], "t0": [1.0, 100.0],
               "iterations": list(sa_iterations)},
    })


def expand_grid(grid: dict) -> list[dict]:
    out = []
    ga = grid.get("ga")
    if ga:
        for coding in ga.get("codings", ["binary", "real"]):
            for sel in ga.get("selections", ["normalized_geometric_ranking"]):
                for pop in ga.get("population_sizes", [30]):
                    out.append({"algorithm": f"ga_{coding}",
                                "ga": {"selection": sel, "population_size": pop,
                                       "generations": ga.get("generations", 25),
                                       **ga.get("options", {})}})
    pso = grid.get("pso")
    if pso:
        coefs = pso.get("coefficients")
        if coefs is None:
            values = pso.get("c_values", [0.5, 1.0, 1.5, 2.0])
            coefs = [[a, b] for a in values for b in values] + [[2.8, 1.3]]
        for swarm in pso.get("swarm_sizes", [30]):
            for c1, c2 in coefs:
                out.append({"algorithm": "pso",
                            "pso": {"swarm_size": swarm, "c1": c1, "c2": c2,
                                    "iterations": pso.get("iterations", 25),
                                    **pso.get("options", {})}})
    sa = grid.get("sa")
    if sa:
        for sched in sa.get("schedules", ["boltzmann"]):
            for t0 in sa.get("t0", [1.0]):
                for iters in sa.get("iterations", [100]):
                    out.append({"algorithm": "sa",
                                "sa": {"schedule": sched, "t0": t0, "iterations": iters,
                                       **sa.get("options", {})}})
    return out


@dataclass
class ExperimentSpec:
    field_name: str
    configs: list[dict]
    seeds: list[int] = field(default_factory=lambda: [0])
    dataset: dict = field(default_factory=lambda: {"generate": {"n": 2000, "seed": 0}})
    use_test: bool = True
    memoize: bool = False

    def __post_init__(self):
        if not self.configs:
            raise DomainError("experiment grid is empty")
        if not self.seeds:
            raise DomainError("at least one replicate seed required")
        for cfg in self.configs:
            self.optimizer_config(cfg, self.seeds[0], 1)

    @staticmethod
    def optimizer_config(cfg: dict, seed: int, dim: int) -> OptimizerConfig:
        d = {"lower": RADIUS_BOUNDS[0], "upper": RADIUS_BOUNDS[1], **cfg, "seed": seed, "dim": dim}
        return OptimizerConfig.from_dict(d).validate()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        configs = list(d.get("configs", []))
        grid = d.get("grid")
        if grid == "full":
            configs += full_grid()
        elif grid:
            configs += expand_grid(grid)
        fit = d.get("fitness", {})
        return cls(
            field_name=d["field"],
            configs=configs,
            seeds=list(d.get("seeds", [0])),
            dataset=d.get("dataset", {"generate": {"n": 2000, "seed": 0}}),
            use_test=fit.get("use_test", True),
            memoize=fit.get("memoize", False),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def load_dataset(self, base_dir: Path | None = None) -> Dataset:
        src = self.dataset
        if "path" in src:
            path = Path(src["path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return Dataset.load_json(path)
        gen = src.get("generate", {})
        profile = FieldProfile.load(gen["profile"]) if "profile" in gen else default_profile(self.field_name)
        rules = LabelRuleSet.load(gen["rules"]) if "rules" in gen else default_rules()
        fractions = tuple(gen.get("fractions", (0.6, 0.2, 0.2)))
        return generate_dataset(profile, rules, int(gen.get("n", 2000)), int(gen.get("seed", 0)),
                                fractions=fractions)


def describe_params(cfg: OptimizerConfig) -> str:
    if cfg.algorithm.startswith("ga"):
        ga = cfg.ga
        sel = "ranking" if ga.selection == "normalized_geometric_ranking" else "tournament"
        return f"{cfg.algorithm[3:]} {sel} pop={ga.population_size} gens={ga.generations}"
    if cfg.algorithm == "pso":
        p = cfg.pso
        return f"c1={p.c1:g} c2={p.c2:g} swarm={p.swarm_size} iters={p.iterations}"
    s = cfg.sa
    return f"{s.schedule} t0={s.t0:g} iters={s.iterations}"


def optimize_dataset(dataset: Dataset, cfg: OptimizerConfig, use_test: bool = True,
                     memoize: bool = False, workers: int = 1) -> RunReport:
    """Run one optimization and attach uncounted val/test scores of the best radii."""
    ctx = FitnessContext(dataset, use_test=use_test, memoize=memoize)
    report = run(cfg, ctx, workers=workers)
    fis = ctx.build(report.best_x)
    scores = ctx.scores(report.best_x)
    extra = {"n_rules": fis.n_rules, "failures": ctx.failures}
    for split, s in scores.items():
        if s is not None:
            extra[split] = {"accuracy": s.accuracy, "sensitivity": s.sensitivity,
                            "specificity": s.specificity}
    report.extra = extra
    return report


def _run_row(args) -> tuple[dict, dict | None, float]:
    dataset, field_name, cfg_dict, seed, use_test, memoize = args
    cfg = ExperimentSpec.optimizer_config(cfg_dict, seed, dataset.layout.input_dim)
    row = {c: "" for c in DETAIL_COLUMNS}
    row.update(classifier=field_name, algorithm=cfg.algorithm, params=describe_params(cfg), seed=seed)
    try:
        rep = optimize_dataset(dataset, cfg, use_test=use_test, memoize=memoize)
    except Exception as exc:  # recorded per row; the grid keeps going
        log.exception("config %s failed", cfg_dict)
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row, None, 0.0
    val, test = rep.extra["validation"], rep.extra.get("test")
    row.update(
        accuracy_validation=val["accuracy"],
        sensitivity_validation=val["sensitivity"],
        specificity_validation=val["specificity"],
        evaluation_executions=rep.evaluation_executions,
        n_rules=rep.extra["n_rules"],
    )
    if test is not None:
        row.update(accuracy_test=test["accuracy"], sensitivity_test=test["sensitivity"],
                   specificity_test=test["specificity"],
                   accuracy_min=min(val["accuracy"], test["accuracy"]))
    else:
        row["accuracy_min"] = val["accuracy"]
    return row, rep.to_dict(), rep.wall_time


@dataclass
class ComparisonReport:
    rows: list[dict]
    reports: list[dict | None]
    wall_times: list[float]

    def best_per_algorithm(self) -> list[int]:
        """Row index of the best run per algorithm family (GA, PSO, SA).

        Highest min-accuracy wins; ties go to fewer evaluation executions, then
        to the earlier row.
        """
        best: dict[str, int] = {}
        for i, row in enumerate(self.rows):
            if row["error"]:
                continue
            fam = FAMILY[row["algorithm"]]
            key = (row["accuracy_min"], -row["evaluation_executions"])
            if fam not in best:
                best[fam] = i
            else:
                other = self.rows[best[fam]]
                if key > (other["accuracy_min"], -other["evaluation_executions"]):
                    best[fam] = i
        return [best[f] for f in ("GA", "PSO", "SA") if f in best]

    # -- tables ------------------------------------------------------------

    def detail_table(self) -> tuple[list[str], list[list]]:
        return list(DETAIL_COLUMNS), [[_fmt(r[c]) for c in DETAIL_COLUMNS] for r in self.rows]

    def summary_table(self) -> tuple[list[str], list[list]]:
        cols = ["classifier", "algorithm", "params", "accuracy", "evaluation function executions"]
        out = []
        for i in self.best_per_algorithm():
            r = self.rows[i]
            out.append([r["classifier"], FAMILY[r["algorithm"]], r["params"],
                        _pct(r["accuracy_min"]), r["evaluation_executions"]])
        return cols, out

    def family_table(self, family: str) -> tuple[list[str], list[list]]:
        rows = [r for r in self.rows if FAMILY[r["algorithm"]] == family and not r["error"]]
        if family == "GA":
            cols = ["classifier", "GA", "selection function", "population size", "accuracy",
                    "evaluation function executions"]
            body = []
            for r in rows:
                coding, sel, pop, _ = r["params"].split(" ")
                body.append([r["classifier"], coding, sel, pop.split("=")[1],
                             _pct(r["accuracy_min"]), r["evaluation_executions"]])
        elif family == "PSO":
            cols = ["classifier", "C1", "C2", "population size", "accuracy",
                    "evaluation function executions"]
            body = []
            for r in rows:
                c1, c2, swarm, _ = (p.split("=")[1] for p in r["params"].split(" "))
                body.append([r["classifier"], c1, c2, swarm, _pct(r["accuracy_min"]),
                             r["evaluation_executions"]])
        else:
            cols = ["classifier", "iterations", "T(k)", "T0", "accuracy",
                    "evaluation function executions"]
            body = []
            for r in rows:
                sched, t0, iters = r["params"].split(" ")
                body.append([r["classifier"], iters.split("=")[1], sched, t0.split("=")[1],
                             _pct(r["accuracy_min"]), r["evaluation_executions"]])
        return cols, body

    def metrics_table(self) -> tuple[list[str], list[list]]:
        cols = ["dataset", "classifier", "algorithm", "accuracy (%)", "sensitivity (%)",
                "specificity (%)"]
        body = []
        best = self.best_per_algorithm()
        for split in ("validation", "test"):
            for i in best:
                r = self.rows[i]
                if r[f"accuracy_{split}"] == "":
                    continue
                body.append([split, r["classifier"], FAMILY[r["algorithm"]],
                             _pct3(r[f"accuracy_{split}"]), _pct3(r[f"sensitivity_{split}"]),
                             _pct3(r[f"specificity_{split}"])])
        return cols, body

    def write(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        tables = {"detail": self.detail_table(), "summary": self.summary_table(),
                  "metrics": self.metrics_table()}
        for fam in ("GA", "PSO", "SA"):
            cols, body = self.family_table(fam)
            if body:
                tables[f"table_{fam.lower()}"] = (cols, body)
        for name, (cols, body) in tables.items():
            p = out / f"{name}.csv"
            p.write_text(to_csv(cols, body))
            written.append(p)
            p = out / f"{name}.md"
            p.write_text(to_markdown(cols, body))
            written.append(p)
        p = out / "reports.json"
        p.write_text(json.dumps(self.reports, indent=1) + "\n")
        written.append(p)
        p = out / "timings.csv"
        p.write_text(to_csv(["row", "wall_time_s"],
                            [[i, f"{t:.3f}"] for i, t in enumerate(self.wall_times)]))
        written.append(p)
        return written


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _pct(v) -> str:
    return "" if v == "" else f"{100 * v:.3f}%"


def _pct3(v) -> str:
    return "" if v == "" else f"{100 * v:.3f}"


def to_csv(cols, body) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    w.writerows(body)
    return buf.getvalue()


def to_markdown(cols, body) -> str:
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in body]
    return "\n".join(lines) + "\n"


def compare(spec: ExperimentSpec, dataset: Dataset | None = None, workers: int = 1) -> ComparisonReport:
    """Run every (config, seed) pair of the grid; rows come back in spec order."""
    if dataset is None:
        dataset = spec.load_dataset()
    jobs = [(dataset, spec.field_name, cfg, seed, spec.use_test, spec.memoize)
            for cfg in spec.configs for seed in spec.seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_row, jobs))
    else:
        results = [_run_row(j) for j in jobs]
    return ComparisonReport(
        rows=[r[0] for r in results],
        reports=[r[1] for r in results],
        wall_times=[r[2] for r in results],
    )
