import os

import numpy as np
import pytest

from dszog.cli import main, parse_config, run_experiment
from dszog.types import config_fields


def write_config(path, **overrides):
    base = {
        "task": "analytic",
        "suite": "a",
        "method": "dszog",
        "out_dir": str(path.parent / "out"),
        "repeats": 2,
        "base_seed": 3,
        "beta": 1000.0,
        "mu": 1e-5,
        "eta_w": 1e-3,
        "max_iters": 1500,
        "metric_every": 500,
        "report_q": 2,
    }
    base.update(overrides)
    lines = ["# test config"] + [f"{k}={v}" for k, v in base.items()]
    path.write_text("\n".join(lines) + "\n")
    return base


def read_table(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


class TestConfigParsing:
    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("task=analytic\nmethod=dszog\nout_dir=o\nbogus=1\n")
        assert run_experiment(str(cfg)) == 1

    def test_missing_required_rejected(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("task=analytic\n")
        assert run_experiment(str(cfg)) == 1

    def test_bad_method_rejected(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(cfg, method="sgd")
        assert run_experiment(str(cfg)) == 1

    def test_dry_run_ok(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(cfg)
        assert run_experiment(str(cfg), dry_run=True) == 0
        assert not os.path.exists(str(tmp_path / "out"))

    def test_dry_run_missing_dataset(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(cfg, task="pairwise", dataset=str(tmp_path / "nope.txt"))
        assert run_experiment(str(cfg), dry_run=True) == 1

    def test_method_list_parsed(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(cfg, method="dszog,zopsgd")
        values = parse_config(str(cfg))
        assert values["method"] == ("dszog", "zopsgd")

    def test_mu_auto(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(cfg, mu="auto")
        assert parse_config(str(cfg))["mu"] is None


class TestAnalyticRuns:
    def test_three_repeats_converge_and_summarize(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        base = write_config(cfg, repeats=3)
        assert main([str(cfg)]) == 0
        out = tmp_path / "out"
        traces = sorted((out / "dszog").glob("seed_*/trace.csv"))
        assert len(traces) == 3
        header, rows = read_table(out / "summary.csv")
        assert header == ["method", "metric", "repeats", "mean", "std"]
        method, metric, repeats, mean, _ = rows[0]
        assert (method, metric, repeats) == ("dszog", "final_err", "3")
        assert float(mean) <= 1e-2
        # seed schedule appears in each manifest
        for r in range(3):
            manifest = (out / "dszog" / f"seed_{base['base_seed'] + r}" / "manifest.txt").read_text()
            assert f"seed={base['base_seed'] + r}" in manifest
            assert f"base_seed={base['base_seed']}" in manifest

    def test_manifest_contains_every_config_field_once(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(cfg, repeats=1, max_iters=50)
        assert run_experiment(str(cfg)) == 0
        manifest_path = tmp_path / "out" / "dszog" / "seed_3" / "manifest.txt"
        keys = [line.split("=", 1)[0] for line in manifest_path.read_text().splitlines()]
        for field in config_fields():
            assert keys.count(field) == 1, field

    def test_time_budget_recorded(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(cfg, repeats=1, max_iters=10**7, metric_every=10**6, time_budget_s=0.2)
        assert run_experiment(str(cfg)) == 0
        report = (tmp_path / "out" / "dszog" / "seed_3" / "report.txt").read_text()
        assert "termination=TimeBudget" in report

    def test_out_and_seed_overrides(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(cfg, repeats=1, max_iters=50)
        other = tmp_path / "elsewhere"
        assert run_experiment(str(cfg), out_override=str(other), seed_override=9) == 0
        assert (other / "dszog" / "seed_9" / "trace.csv").exists()


def strip_wall_column(trace_path):
    header, rows = read_table(trace_path)
    wall = header.index("wall_s")
    return [tuple(cell for i, cell in enumerate(row) if i != wall) for row in rows]


class TestDeterminismAndPlots:
    def test_trace_identical_excluding_wall_clock(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(cfg, repeats=1, max_iters=400, metric_every=100)
        assert run_experiment(str(cfg), out_override=str(tmp_path / "run1")) == 0
        assert run_experiment(str(cfg), out_override=str(tmp_path / "run2")) == 0
        a = strip_wall_column(tmp_path / "run1" / "dszog" / "seed_3" / "trace.csv")
        b = strip_wall_column(tmp_path / "run2" / "dszog" / "seed_3" / "trace.csv")
        assert a == b

    def test_fairness_run_emits_plot_data(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(
            cfg,
            task="fairness",
            method="dszog,zopsgd",
            repeats=2,
            gen_n=200,
            gen_d=20,
            gen_r=3,
            beta=10.0,
            mu=1e-4,
            eta_w=0.01,
            max_iters=60,
            metric_every=30,
            batch_data=16,
            batch_cons_w=4,
            batch_cons_p=4,
        )
        assert run_experiment(str(cfg)) == 0
        out = tmp_path / "out"
        header, rows = read_table(out / "plot_accuracy_vs_time.csv")
        assert header == ["method", "seed", "wall_s", "test_accuracy"]
        seen = {(row[0], row[1]) for row in rows}
        assert seen == {("dszog", "3"), ("dszog", "4"), ("zopsgd", "3"), ("zopsgd", "4")}
        for row in rows:
            assert 0.0 <= float(row[3]) <= 1.0
        assert rows == sorted(rows, key=lambda r: (r[0], int(r[1]), float(r[2])))
        # zopsgd manifests record the simple-set deviation
        manifest = (out / "zopsgd" / "seed_3" / "manifest.txt").read_text()
        assert "zopsgd_note=" in manifest
        assert "feasible_set=box[-10.0,10.0]" in manifest

    def test_summary_recomputable_from_traces(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        write_config(cfg, repeats=3, max_iters=300, metric_every=100)
        assert run_experiment(str(cfg)) == 0
        out = tmp_path / "out"
        finals = []
        for trace in sorted((out / "dszog").glob("seed_*/trace.csv")):
            header, rows = read_table(trace)
            finals.append(float(rows[-1][header.index("err")]))
        header, rows = read_table(out / "summary.csv")
        mean = float(rows[0][header.index("mean")])
        std = float(rows[0][header.index("std")])
        assert abs(mean - np.mean(finals)) <= 1e-12
        assert abs(std - np.std(finals, ddof=1)) <= 1e-12


class TestFailureHandling:
    def test_midrun_failure_removes_partial_outputs(self, tmp_path, monkeypatch):
        import dszog.cli as cli_module

        calls = {"n": 0}
        real_solve = cli_module.dszog_solve

        def flaky_solve(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 2:
                raise RuntimeError("synthetic failure")
            return real_solve(*args, **kwargs)

        monkeypatch.setattr(cli_module, "dszog_solve", flaky_solve)
        cfg = tmp_path / "c.cfg"
        write_config(cfg, repeats=2, max_iters=50)
        with pytest.raises(RuntimeError):
            cli_module._execute(parse_config(str(cfg)))
        out = tmp_path / "out"
        assert (out / "dszog" / "seed_3" / "trace.csv").exists()  # first repeat completed
        assert not (out / "dszog" / "seed_4").exists()  # failed repeat cleaned up
        assert not (out / "summary.csv").exists()


class TestPairwiseTask:
    def test_pairwise_end_to_end(self, tmp_path):
        from conftest import make_a9a_like, write_sparse

        data = make_a9a_like(n=120, dim=30, seed=2)
        data_path = tmp_path / "pairs.txt"
        write_sparse(data_path, data)
        cfg = tmp_path / "c.cfg"
        write_config(
            cfg,
            task="pairwise",
            dataset=str(data_path),
            subsample_n=100,
            repeats=1,
            beta=1.0,
            mu=1e-4,
            eta_w=0.01,
            max_iters=80,
            metric_every=40,
            batch_data=16,
            batch_cons_w=8,
            batch_cons_p=8,
        )
        assert run_experiment(str(cfg)) == 0
        out = tmp_path / "out"
        manifest = (out / "dszog" / "seed_3" / "manifest.txt").read_text()
        assert "dataset_checksum=" in manifest
        assert "n_constraints=" in manifest
        header, rows = read_table(out / "dszog" / "seed_3" / "trace.csv")
        assert "accuracy" in header and "val_accuracy" in header
