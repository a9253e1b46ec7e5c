import numpy as np
import pytest

from dszog import DataError, Dataset, DszogConfig, ParseError, RecordRow, RunRecord, build_pairwise_problem
from dszog.dataio import dataset_checksum, read_sparse_dataset, subsample, write_run
from dszog.metrics import StationarityReport

from conftest import make_a9a_like, write_sparse


def dummy_report(m=2):
    return StationarityReport(
        eps1_sq=0.5,
        eps2_sq=0.25,
        eps3_sq=0.0,
        max_violation=0.5,
        alphas=np.zeros(m),
        grad_norm_sq_w=0.5,
        grad_norm_sq_p=0.0,
        grad_norm_sq_p_raw=1.0,
        grad_w_mc_se=0.01,
    )


class TestReader:
    def test_basic_line(self, tmp_path):
        path = tmp_path / "tiny.txt"
        path.write_text("+1 3:0.5\n")
        data = read_sparse_dataset(path, expect_dim=4)
        assert np.array_equal(data.features, [[0.0, 0.0, 0.5, 0.0]])
        assert data.labels[0] == 1.0

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("abc\n")
        with pytest.raises(ParseError) as exc:
            read_sparse_dataset(path)
        assert exc.value.line_no == 1

    def test_zero_index_rejected(self, tmp_path):
        path = tmp_path / "zero.txt"
        path.write_text("+1 0:1.0\n")
        with pytest.raises(ParseError):
            read_sparse_dataset(path)

    def test_empty_file_then_downstream_data_error(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        data = read_sparse_dataset(path, expect_dim=3)
        assert data.n == 0
        with pytest.raises(DataError):
            build_pairwise_problem(data)

    def test_whitespace_and_comments(self, tmp_path):
        path = tmp_path / "ws.txt"
        path.write_text("# header comment\n\n  +1\t 1:2.0    3:-1.5 \n-1 2:0.25\n")
        data = read_sparse_dataset(path)
        assert data.features.shape == (2, 3)
        assert data.features[0, 2] == -1.5
        assert np.array_equal(data.labels, [1.0, -1.0])

    @pytest.mark.parametrize("token,expected", [("+1", 1.0), ("1", 1.0), ("-1", -1.0), ("0", -1.0), ("2", -1.0)])
    def test_label_table(self, tmp_path, token, expected):
        path = tmp_path / "labels.txt"
        path.write_text(f"{token} 1:1.0\n")
        assert read_sparse_dataset(path).labels[0] == expected

    def test_unknown_label_rejected(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("7 1:1.0\n")
        with pytest.raises(ParseError):
            read_sparse_dataset(path)

    def test_index_beyond_expect_dim(self, tmp_path):
        path = tmp_path / "wide.txt"
        path.write_text("+1 9:1.0\n")
        with pytest.raises(ParseError):
            read_sparse_dataset(path, expect_dim=4)

    def test_round_trip(self, tmp_path):
        data = make_a9a_like(n=40, dim=17, seed=3)
        path = tmp_path / "round.txt"
        write_sparse(path, data)
        loaded = read_sparse_dataset(path, expect_dim=17)
        assert np.array_equal(loaded.features, data.features)
        assert np.array_equal(loaded.labels, data.labels)


class TestSubsample:
    def _data(self, n_pos, n_neg):
        labels = np.array([1.0] * n_pos + [-1.0] * n_neg)
        rng = np.random.default_rng(0)
        return Dataset(features=rng.standard_normal((len(labels), 2)), labels=labels)

    def test_identity_up_to_order(self):
        data = self._data(4, 6)
        kept = subsample(data, 10, stratified=False, seed=1)
        assert sorted(map(tuple, kept.features)) == sorted(map(tuple, data.features))

    def test_stratified_ratio(self):
        data = self._data(60, 40)
        kept = subsample(data, 10, stratified=True, seed=2)
        assert int((kept.labels > 0).sum()) == 6
        assert int((kept.labels < 0).sum()) == 4

    def test_deterministic(self):
        data = self._data(30, 30)
        a = subsample(data, 20, stratified=True, seed=9)
        b = subsample(data, 20, stratified=True, seed=9)
        assert np.array_equal(a.features, b.features)

    def test_too_many_rejected(self):
        with pytest.raises(DataError):
            subsample(self._data(2, 2), 5, stratified=False, seed=0)


class TestChecksum:
    def test_stable_and_sensitive_to_changes(self):
        data = make_a9a_like(n=20, dim=8, seed=1)
        assert dataset_checksum(data) == dataset_checksum(data)
        bumped = Dataset(features=data.features + 1e-12, labels=data.labels)
        assert dataset_checksum(bumped) != dataset_checksum(data)


class TestWriteRun:
    def _record(self, rows):
        rec = RunRecord()
        for i, wall in enumerate(rows):
            rec.append(RecordRow(i * 5, wall, 1.0 / (i + 1), 0.5, 0.1, 0.01, 0.001, 2.0, 3.0))
        return rec

    def test_empty_record_header_only(self, tmp_path):
        write_run(RunRecord(), dummy_report(), {"k": "v"}, tmp_path)
        lines = (tmp_path / "trace.csv").read_text().splitlines()
        assert lines == ["iter,wall_s,obj,penalty,max_viol,sumsq_viol,step_w,ema_w,ema_p"]

    def test_trace_rows_and_extra_columns(self, tmp_path):
        rec = self._record([0.0, 0.1, 0.2])
        write_run(rec, dummy_report(), {}, tmp_path, extra_columns={"accuracy": [0.5, 0.6, 0.7]})
        lines = (tmp_path / "trace.csv").read_text().splitlines()
        assert lines[0].endswith(",accuracy")
        assert len(lines) == 4
        assert lines[1].split(",")[0] == "0"
        assert lines[1].split(",")[-1] == "0.5"

    def test_extra_column_length_checked(self, tmp_path):
        rec = self._record([0.0])
        from dszog import ContractError

        with pytest.raises(ContractError):
            write_run(rec, dummy_report(), {}, tmp_path, extra_columns={"accuracy": [1.0, 2.0]})

    def test_report_and_termination(self, tmp_path):
        write_run(RunRecord(), dummy_report(), {}, tmp_path, termination="TimeBudget")
        text = (tmp_path / "report.txt").read_text()
        assert "eps2_sq=0.25" in text
        assert "termination=TimeBudget" in text
        assert "alphas=0,0" in text

    def test_manifest_preserves_order_and_formats_floats(self, tmp_path):
        manifest = {"beta": 10.0, "name": "run", "mu": 1.2345678901234e-05}
        write_run(RunRecord(), dummy_report(), manifest, tmp_path)
        lines = (tmp_path / "manifest.txt").read_text().splitlines()
        assert lines[0] == "beta=10"
        assert lines[1] == "name=run"
        assert lines[2] == "mu=1.23456789012e-05"

    def test_twelve_significant_digits(self, tmp_path):
        rec = RunRecord()
        rec.append(RecordRow(0, 0.0, 1.0 / 3.0, 0, 0, 0, 0, 0, 0))
        write_run(rec, dummy_report(), {}, tmp_path)
        row = (tmp_path / "trace.csv").read_text().splitlines()[1]
        assert "0.333333333333" in row
