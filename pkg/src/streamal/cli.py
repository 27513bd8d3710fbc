"""Command-line entry point: data generation, experiment runs, report rendering.

Three subcommands:

``gen``
    Write a synthetic embeddings CSV (optionally with an abrupt-drift
    stream) plus a ``.meta.json`` sidecar describing the generator.

``run``
    Execute the repeated-CV experiment for the configured learners and
    scenarios; writes ``report.json``, ``summary.csv`` and per-run
    ``series/*.csv`` files into the output directory.

``report``
    Pretty-print the three summary tables from a ``report.json`` and emit
    ``plots/*.csv`` step-vs-AUC data for external plotting.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 run finished
with failed cells.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import ClassLabel, ConfigError, Dataset, Instance, LoadError
from .datagen import BlobSpec, DriftSpec, gen_blobs, gen_drift_stream
from .evaluation import SCENARIOS, ExperimentConfig, RunReport, mean_ci, run_experiment
from .registry import LEARNERS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PARTIAL = 4

UNCERTAINTY_CHOICES = ("least_confidence", "margin", "entropy")


# ---------------------------------------------------------------------------
# Embeddings CSV


def load_embeddings(path) -> Dataset:
    """Read an embeddings CSV (header ``id,label,f0..f{D-1}``) into a Dataset.

    Class indices are assigned by first appearance of each label name.
    Schema violations raise `LoadError` naming the first offending line
    (the header is line 1).
    """
    path = Path(path)
    if not path.exists():
        raise LoadError(f"embeddings file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LoadError(f"{path}: line 1: file is empty") from None
        if len(header) < 3 or header[0] != "id" or header[1] != "label":
            raise LoadError(f"{path}: line 1: header must start with id,label,f0,...")
        expected = [f"f{i}" for i in range(len(header) - 2)]
        if header[2:] != expected:
            raise LoadError(f"{path}: line 1: feature columns must be f0..f{len(header) - 3}")
        width = len(header)
        dim = width - 2

        label_index: dict[str, int] = {}
        instances: list[Instance] = []
        seen_ids: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise LoadError(f"{path}: line {lineno}: expected {width} fields, got {len(row)}")
            inst_id, label_name = row[0], row[1]
            if not inst_id:
                raise LoadError(f"{path}: line {lineno}: empty id")
            if inst_id in seen_ids:
                raise LoadError(f"{path}: line {lineno}: duplicate id {inst_id!r}")
            seen_ids.add(inst_id)
            try:
                feats = np.array([float(v) for v in row[2:]], dtype=np.float64)
            except ValueError:
                raise LoadError(f"{path}: line {lineno}: unparseable feature value") from None
            if not np.all(np.isfinite(feats)):
                raise LoadError(f"{path}: line {lineno}: non-finite feature value")
            if label_name not in label_index:
                label_index[label_name] = len(label_index)
            instances.append((inst_id, label_name, feats))

        if not instances:
            raise LoadError(f"{path}: line 2: no data rows")
        if len(label_index) < 2:
            raise LoadError(f"{path}: only one class present, need at least two")
        classes = [ClassLabel(index=i, name=name) for name, i in label_index.items()]
        by_index = {c.name: c for c in classes}
        built = [
            Instance(id=i, features=f, label=by_index[name]) for (i, name, f) in instances
        ]
        return Dataset(instances=built, classes=classes, meta={"source": str(path), "dims": dim})


def write_embeddings(dataset: Dataset, path):
    """Write a Dataset as an embeddings CSV with lossless float round-trips."""
    path = Path(path)
    dim = dataset.n_features
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"] + [f"f{i}" for i in range(dim)])
        for inst in dataset.instances:
            writer.writerow(
                [inst.id, inst.label.name] + [format(v, ".17g") for v in inst.features]
            )


# ---------------------------------------------------------------------------
# Run configuration


@dataclass
class RunConfig:
    """Everything a `run` invocation needs, validated at load time."""

    learners: tuple[str, ...] = tuple(sorted(LEARNERS))
    scenarios: tuple[str, ...] = SCENARIOS
    threshold: float = 0.55
    uncertainty: str = "least_confidence"
    k_folds: int = 10
    repeats: int = 10
    train_frac: float = 0.2
    eval_every: int = 1
    seed: int = 0
    jobs: int = 1
    out: str = "streamal-out"
    dataset: str | None = None
    generator: str = "blobs"
    blob_counts: tuple[int, ...] = (300, 150, 60)
    blob_dims: int = 512
    blob_separation: float = 6.0
    blob_noise: float = 0.05
    drift_step: int | None = None
    mi_neighbors: int = 3
    ci_level: float = 0.95
    ci_method: str = "normal"
    ci_over: str = "cells"
    learner_params: dict = field(default_factory=dict)

    def validate(self):
        for name in self.learners:
            if name not in LEARNERS:
                raise ConfigError(f"unknown learner {name!r}; registry: {sorted(LEARNERS)}")
        for s in self.scenarios:
            if s not in SCENARIOS:
                raise ConfigError(f"unknown scenario {s!r}; expected one of {SCENARIOS}")
        if not self.learners:
            raise ConfigError("at least one learner is required")
        if not self.scenarios:
            raise ConfigError("at least one scenario is required")
        if self.uncertainty not in UNCERTAINTY_CHOICES:
            raise ConfigError(f"unknown uncertainty {self.uncertainty!r}")
        if not math.isfinite(self.threshold):
            raise ConfigError("threshold must be finite")
        if self.k_folds < 2:
            raise ConfigError("k_folds must be >= 2")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not 0.0 < self.train_frac < 1.0:
            raise ConfigError("train_frac must lie in (0, 1)")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.generator not in ("blobs", "drift"):
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.ci_over not in ("cells", "repeats"):
            raise ConfigError("ci_over must be 'cells' or 'repeats'")
        if self.ci_method not in ("normal", "t"):
            raise ConfigError("ci_method must be 'normal' or 't'")
        for lname in self.learner_params:
            if lname not in LEARNERS:
                raise ConfigError(f"hyperparameter override for unknown learner {lname!r}")
        return self

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            learners=tuple(self.learners),
            scenarios=tuple(self.scenarios),
            threshold=self.threshold,
            uncertainty_kind=self.uncertainty,
            k_folds=self.k_folds,
            repeats=self.repeats,
            train_frac=self.train_frac,
            eval_every=self.eval_every,
            seed=self.seed,
            mi_neighbors=self.mi_neighbors,
            ci_level=self.ci_level,
            ci_method=self.ci_method,
            ci_over=self.ci_over,
            learner_params=self.learner_params,
        )


def _strip_comment(line: str) -> str:
    if "#" in line:
        line = line[: line.index("#")]
    return line.strip()


def parse_config_file(path) -> dict:
    """Parse the flat ``key = value`` config format with ``#`` comments."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _parse_scalar(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


_INT_KEYS = {"k_folds", "repeats", "eval_every", "seed", "jobs", "blob_dims", "drift_step", "mi_neighbors"}
_FLOAT_KEYS = {"threshold", "train_frac", "blob_separation", "blob_noise", "ci_level"}
_LIST_KEYS = {"learners", "scenarios"}
_STR_KEYS = {"uncertainty", "out", "dataset", "generator", "ci_method", "ci_over"}


def build_run_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge config-file values and CLI overrides into a validated RunConfig.

    Dotted keys like ``sknn.n_neighbors`` collect into per-learner
    hyperparameter overrides. Unknown keys are configuration errors.
    """
    cfg = RunConfig()
    merged: dict = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    for key, raw in merged.items():
        if "." in key:
            lname, _, pname = key.partition(".")
            params = cfg.learner_params.setdefault(lname, {})
            params[pname] = _parse_scalar(raw) if isinstance(raw, str) else raw
            continue
        if key in _LIST_KEYS:
            value = _parse_list(raw) if isinstance(raw, str) else tuple(raw)
        elif key in _INT_KEYS:
            try:
                value = int(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
        elif key in _FLOAT_KEYS:
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be a number, got {raw!r}") from None
        elif key in _STR_KEYS:
            value = str(raw)
        elif key == "blob_counts":
            parts = _parse_list(raw) if isinstance(raw, str) else raw
            try:
                value = tuple(int(p) for p in parts)
            except (TypeError, ValueError):
                raise ConfigError(f"blob_counts must be integers, got {raw!r}") from None
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
        setattr(cfg, key, value)
    return cfg.validate()


def _build_dataset(cfg: RunConfig) -> Dataset:
    if cfg.dataset:
        return load_embeddings(cfg.dataset)
    spec = BlobSpec(
        n_per_class=cfg.blob_counts,
        dims=cfg.blob_dims,
        separation=cfg.blob_separation,
        noise_frac=cfg.blob_noise,
        seed=cfg.seed,
    )
    if cfg.generator == "drift":
        step = cfg.drift_step if cfg.drift_step is not None else spec.n_total // 2
        return gen_drift_stream(DriftSpec(blobs=spec, drift_step=step))
    return gen_blobs(spec)


# ---------------------------------------------------------------------------
# Output writers


def _fmt(v: float) -> str:
    return format(float(v), ".10g")


SUMMARY_COLUMNS = [
    "learner",
    "scenario",
    "n_cells",
    "auc_mean",
    "auc_ci",
    "q1_mean",
    "q1_ci",
    "q4_mean",
    "q4_ci",
    "final_auc_mean",
    "effort_min",
    "effort_max",
    "effort_mean",
    "effort_std",
    "effort_q1",
    "effort_q2",
    "effort_q3",
]


def write_summary_csv(report: RunReport, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for res in report.results:
            writer.writerow(
                [res.learner, res.scenario, res.n_cells]
                + [_fmt(getattr(res, col)) for col in SUMMARY_COLUMNS[3:]]
            )


def write_series_csvs(report: RunReport, series_dir) -> list[str]:
    series_dir = Path(series_dir)
    series_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for run in report.runs:
        name = f"{run.learner}_{run.scenario}_{run.repeat}_{run.fold}.csv"
        with (series_dir / name).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "uncertainty", "queried", "auc"])
            for rec in run.records:
                writer.writerow(
                    [
                        rec.step,
                        _fmt(rec.uncertainty),
                        int(rec.queried),
                        "" if rec.test_auc_after is None else _fmt(rec.test_auc_after),
                    ]
                )
        names.append(name)
    return names


def report_to_dict(report: RunReport, series_files: list[str]) -> dict:
    return {
        "config": report.config,
        "cells": [asdict(c) for c in report.cells],
        "results": [asdict(r) for r in report.results],
        "failures": report.failures,
        "series_files": series_files,
    }


def write_report_json(report_dict: dict, path):
    Path(path).write_text(
        json.dumps(report_dict, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen(args) -> int:
    try:
        names = _parse_list(args.names) if args.names else ()
        spec = BlobSpec(
            n_per_class=tuple(int(c) for c in _parse_list(args.counts)),
            dims=args.dims,
            separation=args.separation,
            noise_frac=args.noise,
            seed=args.seed,
            class_names=names,
        )
        if args.drift_step is not None:
            dataset = gen_drift_stream(DriftSpec(blobs=spec, drift_step=args.drift_step))
        else:
            dataset = gen_blobs(spec)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        write_embeddings(dataset, out)
        sidecar = {k: v for k, v in dataset.meta.items() if k != "noise_indices"}
        sidecar["classes"] = [c.name for c in dataset.classes]
        Path(str(out) + ".meta.json").write_text(
            json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_DATA

    counts: dict[str, int] = {}
    for inst in dataset.instances:
        counts[inst.label.name] = counts.get(inst.label.name, 0) + 1
    print(f"wrote {len(dataset.instances)} instances to {out}")
    for c in dataset.classes:
        print(f"  {c.name}: {counts.get(c.name, 0)}")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        file_values = parse_config_file(args.config) if args.config else {}
        overrides = {
            "seed": args.seed,
            "jobs": args.jobs,
            "out": args.out,
            "dataset": args.dataset,
            "learners": args.learners,
            "scenarios": args.scenarios,
            "repeats": args.repeats,
            "k_folds": args.k_folds,
            "threshold": args.threshold,
            "eval_every": args.eval_every,
            "train_frac": args.train_frac,
        }
        cfg = build_run_config(file_values, overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        dataset = _build_dataset(cfg)
    except (LoadError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA

    try:
        report = run_experiment(dataset, cfg.experiment_config(), n_jobs=cfg.jobs)
    except TypeError as exc:  # bad hyperparameter overrides surface here
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    series_files = write_series_csvs(report, out_dir / "series")
    write_report_json(report_to_dict(report, series_files), out_dir / "report.json")
    write_summary_csv(report, out_dir / "summary.csv")

    print(f"report: {out_dir / 'report.json'}")
    print(f"summary: {out_dir / 'summary.csv'}")
    print(f"series: {len(series_files)} files in {out_dir / 'series'}")
    if report.failures:
        print(f"{len(report.failures)} cell runs failed; see report.json", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _format_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(r) for r in rows)
    return "\n".join(out)


def _pm(mean: float, ci: float) -> str:
    return f"{mean:.4f}±{ci:.4f}"


def cmd_report(args) -> int:
    path = Path(args.report)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"data error: cannot read report: {exc}", file=sys.stderr)
        return EXIT_DATA
    results = data.get("results", [])
    if not results:
        print("data error: report contains no results", file=sys.stderr)
        return EXIT_DATA

    scenarios = sorted({r["scenario"] for r in results}, reverse=True)  # no_al first
    learners = sorted({r["learner"] for r in results})
    by_key = {(r["learner"], r["scenario"]): r for r in results}

    # scenario comparison: pool per-cell values across learners
    rows = []
    for scenario in scenarios:
        pooled = [v for r in results if r["scenario"] == scenario for v in r["cell_auc_means"]]
        pooled_q1 = [v for r in results if r["scenario"] == scenario for v in r["cell_q1"]]
        pooled_q4 = [v for r in results if r["scenario"] == scenario for v in r["cell_q4"]]
        if len(pooled) >= 2:
            cells = [_pm(*mean_ci(pooled)), _pm(*mean_ci(pooled_q1)), _pm(*mean_ci(pooled_q4))]
        else:
            cells = [f"{pooled[0]:.4f}", f"{pooled_q1[0]:.4f}", f"{pooled_q4[0]:.4f}"]
        rows.append([scenario.upper().replace("_", " ")] + cells)
    print("scenario comparison (AUC ROC mean±CI, stream quartiles Q1/Q4)")
    print(_format_table(["SCENARIO", "AUC", "AUC Q1", "AUC Q4"], rows))
    print()

    rows = []
    for learner in learners:
        row = [learner]
        for scenario in scenarios:
            res = by_key.get((learner, scenario))
            row.append(_pm(res["auc_mean"], res["auc_ci"]) if res else "-")
        rows.append(row)
    print("per-model AUC ROC (mean±CI)")
    print(_format_table(["MODEL"] + [s.upper().replace("_", " ") for s in scenarios], rows))
    print()

    rows = []
    effort_scenario = "al" if "al" in scenarios else scenarios[0]
    for learner in learners:
        res = by_key.get((learner, effort_scenario))
        if res is None:
            continue
        rows.append(
            [learner]
            + [
                f"{res[k]:.2f}%"
                for k in (
                    "effort_min",
                    "effort_max",
                    "effort_mean",
                    "effort_std",
                    "effort_q1",
                    "effort_q2",
                    "effort_q3",
                )
            ]
        )
    print(f"effort gain, scenario {effort_scenario.upper().replace('_', ' ')}")
    print(_format_table(["MODEL", "MIN", "MAX", "MEAN", "STD DEV", "Q1", "Q2", "Q3"], rows))

    plots_dir = Path(args.plots_dir) if args.plots_dir else path.parent / "plots"
    series_dir = path.parent / "series"
    written = _write_plot_data(data, series_dir, plots_dir)
    if written:
        print(f"\nplot data: {written} files in {plots_dir}")
    return EXIT_OK


def _write_plot_data(data: dict, series_dir: Path, plots_dir: Path) -> int:
    files = data.get("series_files", [])
    if not files or not series_dir.exists():
        return 0
    groups: dict[tuple[str, str], list[str]] = {}
    for name in files:
        stem = name[: -len(".csv")] if name.endswith(".csv") else name
        parts = stem.rsplit("_", 2)
        if len(parts) != 3:
            continue
        learner_scenario = parts[0]
        # scenario names may themselves contain underscores (no_al)
        for scenario in SCENARIOS:
            if learner_scenario.endswith("_" + scenario):
                learner = learner_scenario[: -len(scenario) - 1]
                groups.setdefault((learner, scenario), []).append(name)
                break

    plots_dir.mkdir(parents=True, exist_ok=True)
    written = 0
    for (learner, scenario), names in sorted(groups.items()):
        sums: dict[int, float] = {}
        counts: dict[int, int] = {}
        for name in sorted(names):
            fpath = series_dir / name
            if not fpath.exists():
                continue
            with fpath.open(newline="", encoding="utf-8") as fh:
                reader = csv.DictReader(fh)
                for row in reader:
                    if row["auc"] == "":
                        continue
                    step = int(row["step"])
                    sums[step] = sums.get(step, 0.0) + float(row["auc"])
                    counts[step] = counts.get(step, 0) + 1
        if not sums:
            continue
        with (plots_dir / f"{learner}_{scenario}.csv").open(
            "w", newline="", encoding="utf-8"
        ) as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "auc_mean"])
            for step in sorted(sums):
                writer.writerow([step, _fmt(sums[step] / counts[step])])
        written += 1
    return written


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamal",
        description="Streaming classifiers with uncertainty-driven labeling on embedding CSVs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the repeated-CV stream experiment")
    p_run.add_argument("--config", help="flat key = value config file")
    p_run.add_argument("--seed", type=int, help="base seed (overrides config)")
    p_run.add_argument("--jobs", type=int, help="parallel (repeat, fold) cells")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--dataset", help="embeddings CSV path (default: generated blobs)")
    p_run.add_argument("--learners", help="comma-separated learner names")
    p_run.add_argument("--scenarios", help="comma-separated scenarios (no_al,al)")
    p_run.add_argument("--repeats", type=int, help="CV repeats")
    p_run.add_argument("--k-folds", dest="k_folds", type=int, help="CV folds")
    p_run.add_argument("--threshold", type=float, help="query uncertainty threshold")
    p_run.add_argument("--eval-every", dest="eval_every", type=int, help="test-scoring stride")
    p_run.add_argument("--train-frac", dest="train_frac", type=float, help="train share of non-test data")
    p_run.set_defaults(func=cmd_run)

    p_gen = sub.add_parser("gen", help="generate a synthetic embeddings CSV")
    p_gen.add_argument("--out", required=True, help="output CSV path")
    p_gen.add_argument("--counts", default="300,150,60", help="per-class instance counts")
    p_gen.add_argument("--dims", type=int, default=512)
    p_gen.add_argument("--separation", type=float, default=6.0)
    p_gen.add_argument("--noise", type=float, default=0.05, help="label noise fraction")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--drift-step", dest="drift_step", type=int, default=None,
                       help="emit a drift stream permuting centers at this step")
    p_gen.add_argument("--names", default=None, help="comma-separated class names")
    p_gen.set_defaults(func=cmd_gen)

    p_rep = sub.add_parser("report", help="render tables from a report.json")
    p_rep.add_argument("report", help="path to report.json")
    p_rep.add_argument("--plots-dir", dest="plots_dir", default=None)
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
