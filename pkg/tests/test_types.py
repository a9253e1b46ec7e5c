import numpy as np
import pytest

from dszog import (
    BlackBoxProblem,
    ConfigError,
    ContractError,
    DszogConfig,
    NumericalError,
    RecordRow,
    RunRecord,
    SimplexPoint,
    validate_config,
)

from conftest import make_stub_problem


class TestConfig:
    def test_paper_style_values_ok(self):
        cfg = DszogConfig(b=0.5, a=0.9, lam=1e-6)
        validate_config(cfg)

    def test_b_open_interval(self):
        with pytest.raises(ConfigError) as exc:
            DszogConfig(b=1.0)
        assert exc.value.field == "b"

    def test_mu_positive(self):
        with pytest.raises(ConfigError) as exc:
            DszogConfig(mu=0.0)
        assert exc.value.field == "mu"

    @pytest.mark.parametrize(
        "kwargs,field",
        [
            ({"beta": 0.0}, "beta"),
            ({"beta": -1.0}, "beta"),
            ({"lam": 0.0}, "lam"),
            ({"q": 0}, "q"),
            ({"batch_data": 0}, "batch_data"),
            ({"batch_cons_w": -3}, "batch_cons_w"),
            ({"batch_cons_p": 0}, "batch_cons_p"),
            ({"eta_w": 0.0}, "eta_w"),
            ({"eta_p": -0.1}, "eta_p"),
            ({"a": 0.0}, "a"),
            ({"a": 1.2}, "a"),
            ({"b": 0.0}, "b"),
            ({"c_eps": 0.0}, "c_eps"),
            ({"max_iters": 0}, "max_iters"),
            ({"metric_every": 0}, "metric_every"),
            ({"seed": -1}, "seed"),
        ],
    )
    def test_field_violations(self, kwargs, field):
        with pytest.raises(ConfigError) as exc:
            DszogConfig(**kwargs)
        assert exc.value.field == field

    def test_a_may_equal_one(self):
        DszogConfig(a=1.0)

    def test_mu_none_is_deferred(self):
        assert DszogConfig().mu is None


class TestSimplexPoint:
    def test_renormalizes_small_drift(self):
        p = SimplexPoint([0.5, 0.5 + 1e-9])
        assert abs(p.p.sum() - 1.0) <= 1e-12

    def test_rejects_negative(self):
        with pytest.raises(ContractError):
            SimplexPoint([1.2, -0.2])

    def test_rejects_bad_sum(self):
        with pytest.raises(ContractError):
            SimplexPoint([0.3, 0.3])

    def test_rejects_nonfinite(self):
        with pytest.raises(NumericalError):
            SimplexPoint([np.nan, 1.0])

    def test_array_is_read_only(self):
        p = SimplexPoint([0.25, 0.75])
        with pytest.raises(ValueError):
            p.p[0] = 0.5

    def test_uniform(self):
        assert np.allclose(SimplexPoint.uniform(4).p, 0.25)


class TestBlackBoxProblem:
    def test_counters_increment_exactly_once_per_call(self, stub_problem):
        w = np.zeros(3)
        for _ in range(7):
            stub_problem.objective_component(1, w)
        for _ in range(11):
            stub_problem.constraint(2, w)
        assert stub_problem.objective_calls == 7
        assert stub_problem.constraint_calls == 11
        assert stub_problem.total_calls == 18

    def test_uncounted_context(self, stub_problem):
        w = np.zeros(3)
        with stub_problem.uncounted():
            stub_problem.constraint(0, w)
            stub_problem.objective_component(0, w)
        assert stub_problem.total_calls == 0
        stub_problem.constraint(0, w)
        assert stub_problem.total_calls == 1

    def test_oracles_pure(self, stub_problem):
        w = np.array([0.3, -0.7, 2.0])
        assert stub_problem.constraint(1, w) == stub_problem.constraint(1, w)
        assert stub_problem.objective_component(2, w) == stub_problem.objective_component(2, w)

    def test_index_range_checked(self, stub_problem):
        w = np.zeros(3)
        with pytest.raises(ContractError):
            stub_problem.constraint(5, w)
        with pytest.raises(ContractError):
            stub_problem.objective_component(-1, w)

    def test_invalid_dims_rejected(self):
        with pytest.raises(ConfigError):
            BlackBoxProblem(0, 1, 1, lambda i, w: 0.0, lambda j, w: 0.0)


class TestRunRecord:
    def _row(self, it, wall=0.0):
        return RecordRow(it, wall, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def test_appends_in_order(self):
        rec = RunRecord()
        rec.append(self._row(0))
        rec.append(self._row(5, 1.0))
        assert len(rec) == 2

    def test_rejects_nonincreasing_iter(self):
        rec = RunRecord()
        rec.append(self._row(3))
        with pytest.raises(ContractError):
            rec.append(self._row(3))

    def test_rejects_decreasing_wall(self):
        rec = RunRecord()
        rec.append(self._row(0, 2.0))
        with pytest.raises(ContractError):
            rec.append(self._row(1, 1.0))


def test_counting_stub_matches_manual_count():
    problem = make_stub_problem(dim=2, n=3, m=4)
    w = np.ones(2)
    expected = 0
    for j in range(4):
        problem.constraint(j, w)
        expected += 1
    assert problem.constraint_calls == expected
