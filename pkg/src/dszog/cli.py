"""Experiment runner: configure a task, run solvers under seeds and
budgets, and persist traces, reports, manifests, summaries and plot data.

Config files are plain key=value lines (# comments allowed). One run
directory per (method, seed) pair is created under out_dir; afterwards
summary.csv holds mean/std of the final metric across repeats and
plot_accuracy_vs_time.csv holds the accuracy-versus-wall-clock series for
classification tasks.
"""

from __future__ import annotations

import argparse
import os
import shutil
import sys
from typing import Optional

import numpy as np

from .baselines import Box, Simplex, full_batch_gda_solve, zopsgd_solve
from .dataio import dataset_checksum, read_sparse_dataset, subsample, write_run
from .metrics import HiAcc
from .problems import (
    Dataset,
    SplitSpec,
    accuracy,
    build_analytic_suite,
    build_fairness_problem,
    build_pairwise_problem,
    fairness_box_radius,
    generate_fairness_dataset,
    split,
)
from .solver import dszog_solve
from .types import ConfigError, DataError, DszogConfig, DszogError, ParseError, config_fields

_TASKS = ("pairwise", "fairness", "analytic")
_METHODS = ("dszog", "full_gda", "zopsgd")

# key -> (parser, default); None default means "unset"
_KEY_SPECS = {
    "task": (str, None),
    "method": (str, None),
    "out_dir": (str, None),
    "repeats": (int, 1),
    "base_seed": (int, 0),
    "time_budget_s": (float, None),
    "dataset": (str, None),
    "expect_dim": (int, None),
    "subsample_n": (int, None),
    "stratified": (None, True),  # bool, parsed specially
    "c_loss": (float, 1.0),
    "c_cov": (float, 1e-3),
    "gen_n": (int, 2000),
    "gen_d": (int, 100),
    "gen_r": (int, 10),
    "rho": (float, 0.6),
    "suite": (str, "a"),
    "feasible": (str, "box"),
    "box_lo": (float, -10.0),
    "box_hi": (float, 10.0),
    "split_train": (float, 0.5),
    "split_test": (float, 0.3),
    "split_val": (float, 0.2),
    "report_q": (int, 16),
    "report_mu": (float, 1e-5),
    "beta": (float, 10.0),
    "lam": (float, 1e-6),
    "mu": (float, None),
    "q": (int, 2),
    "batch_data": (int, 128),
    "batch_cons_w": (int, 128),
    "batch_cons_p": (int, 128),
    "eta_w": (float, 0.01),
    "eta_p": (float, 0.01),
    "a": (float, 0.5),
    "b": (float, 0.1),
    "c_eps": (float, 1e-8),
    "max_iters": (int, 10_000),
    "metric_every": (int, 100),
}
_REQUIRED = ("task", "method", "out_dir")


def parse_config(path: str) -> dict:
    """Read and validate a key=value config file."""
    values = {key: default for key, (_, default) in _KEY_SPECS.items()}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError("config", f"line {line_no}: expected key=value, got {stripped!r}")
        if key not in _KEY_SPECS:
            raise ConfigError(key, f"line {line_no}: unknown key")
        parser, _ = _KEY_SPECS[key]
        if key == "stratified":
            if raw.lower() not in ("true", "false"):
                raise ConfigError(key, f"line {line_no}: expected true/false")
            values[key] = raw.lower() == "true"
        elif key == "mu" and raw.lower() == "auto":
            values[key] = None
        else:
            try:
                values[key] = parser(raw)
            except ValueError:
                raise ConfigError(key, f"line {line_no}: cannot parse {raw!r}") from None
    for key in _REQUIRED:
        if values[key] is None:
            raise ConfigError(key, "required key missing")
    if values["task"] not in _TASKS:
        raise ConfigError("task", f"must be one of {_TASKS}")
    methods = tuple(tok.strip() for tok in values["method"].split(",") if tok.strip())
    if not methods or any(mth not in _METHODS for mth in methods):
        raise ConfigError("method", f"must be a comma list from {_METHODS}")
    values["method"] = methods
    if values["repeats"] < 1:
        raise ConfigError("repeats", "must be a positive integer")
    if values["task"] == "pairwise" and values["dataset"] is None:
        raise ConfigError("dataset", "pairwise task needs a dataset path")
    if values["suite"] not in ("a", "b", "c"):
        raise ConfigError("suite", "must be one of a, b, c")
    if values["feasible"] not in ("box", "simplex", "feasible_box"):
        raise ConfigError("feasible", "must be box, simplex, or feasible_box")
    if values["feasible"] == "feasible_box" and values["task"] != "fairness":
        raise ConfigError("feasible", "feasible_box is derived from fairness constraints")
    return values


def _solver_config(values: dict, seed: int) -> DszogConfig:
    kwargs = {name: values[name] for name in config_fields() if name != "seed"}
    return DszogConfig(seed=seed, **kwargs)


def _load_task_data(values: dict) -> Optional[tuple[Dataset, Dataset, Dataset]]:
    """Train/test/validation datasets for classification tasks, None for analytic."""
    task = values["task"]
    if task == "analytic":
        return None
    if task == "pairwise":
        data = read_sparse_dataset(values["dataset"], expect_dim=values["expect_dim"])
        if values["subsample_n"] is not None:
            data = subsample(data, values["subsample_n"], values["stratified"], seed=values["base_seed"])
    else:
        data = generate_fairness_dataset(
            values["gen_n"], values["gen_d"], values["gen_r"], seed=values["base_seed"], rho=values["rho"]
        )
    spec = SplitSpec(values["split_train"], values["split_test"], values["split_val"], seed=values["base_seed"])
    return split(data, spec)


def _build_problem(values: dict, train: Optional[Dataset]):
    task = values["task"]
    if task == "pairwise":
        return build_pairwise_problem(train, c_loss=values["c_loss"]), None
    if task == "fairness":
        return build_fairness_problem(train, c_cov=values["c_cov"]), None
    case = {c.name: c for c in build_analytic_suite()}[values["suite"]]
    return case.problem, case


def _feasible_set(values: dict, train: Optional[Dataset]):
    if values["feasible"] == "simplex":
        return Simplex()
    if values["feasible"] == "feasible_box":
        radius = fairness_box_radius(train, values["c_cov"])
        return Box(-radius, radius)
    return Box(values["box_lo"], values["box_hi"])


def _initial_point(problem, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(5,)))
    return 0.1 * rng.standard_normal(problem.dim)


def _run_one(values: dict, method: str, seed: int, problem, case, splits, run_dir: str) -> dict:
    """Execute one (method, seed) run and write its outputs. Returns the
    final metric entry for the summary."""
    cfg = _solver_config(values, seed)
    hi_acc = HiAcc(values["report_q"], values["report_mu"])
    w0 = _initial_point(problem, seed)
    budget = values["time_budget_s"]

    extra: dict[str, list[float]] = {}
    if splits is not None:
        _, test_data, val_data = splits

        def hook(row, w):
            extra.setdefault("accuracy", []).append(accuracy(w, test_data))
            extra.setdefault("val_accuracy", []).append(accuracy(w, val_data))

    else:

        def hook(row, w):
            extra.setdefault("err", []).append(float(np.max(np.abs(w - case.optimum))))

    feasible_set = None
    if method == "dszog":
        outcome = dszog_solve(problem, cfg, w0, hook, time_budget_s=budget, hi_acc=hi_acc)
    elif method == "full_gda":
        outcome = full_batch_gda_solve(problem, cfg, w0, hook, time_budget_s=budget, hi_acc=hi_acc)
    else:
        train = splits[0] if splits is not None else None
        feasible_set = _feasible_set(values, train)
        outcome = zopsgd_solve(problem, feasible_set, cfg, w0, hook, time_budget_s=budget, hi_acc=hi_acc)

    manifest = _manifest(values, method, cfg, problem, splits, feasible_set)
    write_run(
        outcome.record,
        outcome.stationarity,
        manifest,
        run_dir,
        termination=outcome.termination.value,
        extra_columns=extra,
    )
    if splits is not None:
        return {"metric": "test_accuracy", "value": extra["accuracy"][-1]}
    return {"metric": "final_err", "value": extra["err"][-1]}


def _manifest(values: dict, method: str, cfg: DszogConfig, problem, splits, feasible_set=None) -> dict:
    manifest: dict[str, object] = {
        "task": values["task"],
        "method": method,
        "base_seed": values["base_seed"],
    }
    for name in config_fields():
        manifest[name] = getattr(cfg, name)
    manifest["mu_realized"] = cfg.mu if cfg.mu is not None else "auto(1e-4*max(1,||w0||))"
    manifest["batch_data_realized"] = min(cfg.batch_data, problem.n_components)
    manifest["batch_cons_w_realized"] = min(cfg.batch_cons_w, problem.n_constraints)
    manifest["batch_cons_p_realized"] = min(cfg.batch_cons_p, problem.n_constraints)
    manifest["n_components"] = problem.n_components
    manifest["n_constraints"] = problem.n_constraints
    manifest["dim"] = problem.dim
    manifest["time_budget_s"] = values["time_budget_s"]
    manifest["metric_cadence_note"] = "test accuracy evaluated every metric_every iterations, wall-clock stamped"
    if values["task"] == "pairwise":
        manifest["dataset"] = values["dataset"]
        manifest["subsample_n"] = values["subsample_n"]
        manifest["stratified"] = values["stratified"]
        manifest["c_loss"] = values["c_loss"]
    if values["task"] == "fairness":
        manifest["gen_n"] = values["gen_n"]
        manifest["gen_d"] = values["gen_d"]
        manifest["gen_r"] = values["gen_r"]
        manifest["rho"] = values["rho"]
        manifest["c_cov"] = values["c_cov"]
    if splits is not None:
        train, test_data, val_data = splits
        manifest["split"] = f"{values['split_train']}/{values['split_test']}/{values['split_val']}"
        manifest["train_rows"] = train.n
        manifest["test_rows"] = test_data.n
        manifest["validation_rows"] = val_data.n
        manifest["dataset_checksum"] = format(dataset_checksum(train), "016x")
    if values["task"] == "analytic":
        manifest["suite"] = values["suite"]
    if method == "zopsgd":
        if isinstance(feasible_set, Simplex):
            manifest["feasible_set"] = "simplex"
        else:
            manifest["feasible_set"] = f"box[{feasible_set.lo},{feasible_set.hi}]"
            if values["feasible"] == "feasible_box":
                manifest["feasible_box_derivation"] = "largest box certified inside the covariance constraints"
        manifest["zopsgd_note"] = "projected baseline uses a simple-set stand-in, not the true constraint set"
    return manifest


def run_experiment(
    config_path: str,
    out_override: Optional[str] = None,
    seed_override: Optional[int] = None,
    dry_run: bool = False,
) -> int:
    """Run every (method, seed) pair in the config. Returns an exit code."""
    try:
        values = parse_config(config_path)
        if out_override is not None:
            values["out_dir"] = out_override
        if seed_override is not None:
            values["base_seed"] = seed_override
        if dry_run:
            if values["task"] == "pairwise" and not os.path.exists(values["dataset"]):
                raise DataError(f"dataset file not found: {values['dataset']}")
            print("config ok")
            return 0
        _execute(values)
    except (ConfigError, ParseError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DszogError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


def _execute(values: dict) -> None:
    splits = _load_task_data(values)
    train = splits[0] if splits is not None else None
    problem, case = _build_problem(values, train)
    out_dir = values["out_dir"]
    os.makedirs(out_dir, exist_ok=True)

    summary_rows = []
    for method in values["method"]:
        finals = []
        metric = None
        for r in range(values["repeats"]):
            seed = values["base_seed"] + r
            run_dir = os.path.join(out_dir, method, f"seed_{seed}")
            try:
                entry = _run_one(values, method, seed, problem, case, splits, run_dir)
            except Exception:
                shutil.rmtree(run_dir, ignore_errors=True)
                raise
            metric = entry["metric"]
            finals.append(entry["value"])
        arr = np.asarray(finals)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        summary_rows.append((method, metric, len(arr), float(arr.mean()), std))

    lines = ["method,metric,repeats,mean,std"]
    for method, metric, reps, mean, std in summary_rows:
        lines.append(f"{method},{metric},{reps},{format(mean, '.12g')},{format(std, '.12g')}")
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    if splits is not None:
        emit_plot_data(out_dir)


def emit_plot_data(out_dir: str) -> None:
    """Collect (method, seed, wall_s, test_accuracy) series from all traces
    under out_dir into plot_accuracy_vs_time.csv."""
    rows = []
    for method in sorted(os.listdir(out_dir)):
        method_dir = os.path.join(out_dir, method)
        if not os.path.isdir(method_dir):
            continue
        for seed_name in sorted(os.listdir(method_dir)):
            trace_path = os.path.join(method_dir, seed_name, "trace.csv")
            if not os.path.exists(trace_path):
                continue
            seed = int(seed_name.removeprefix("seed_"))
            with open(trace_path, "r", encoding="utf-8") as fh:
                header = fh.readline().strip().split(",")
                if "accuracy" not in header or "wall_s" not in header:
                    continue
                acc_col, wall_col = header.index("accuracy"), header.index("wall_s")
                for line in fh:
                    cells = line.strip().split(",")
                    rows.append((method, seed, float(cells[wall_col]), float(cells[acc_col])))
    if not rows:
        raise DataError(f"no traces with accuracy columns under {out_dir}")
    rows.sort(key=lambda row: (row[0], row[1], row[2]))
    lines = ["method,seed,wall_s,test_accuracy"]
    for method, seed, wall_s, acc in rows:
        lines.append(f"{method},{seed},{format(wall_s, '.12g')},{format(acc, '.12g')}")
    with open(os.path.join(out_dir, "plot_accuracy_vs_time.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="dszog", description="Run a constrained zeroth-order optimization experiment.")
    parser.add_argument("config", help="path to a key=value experiment config")
    parser.add_argument("--out", help="override out_dir")
    parser.add_argument("--seed", type=int, help="override base_seed")
    parser.add_argument("--dry-run", action="store_true", help="validate the config and exit")
    args = parser.parse_args(argv)
    return run_experiment(args.config, out_override=args.out, seed_override=args.seed, dry_run=args.dry_run)


if __name__ == "__main__":
    sys.exit(main())
