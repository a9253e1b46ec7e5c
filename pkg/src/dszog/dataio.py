"""Dataset ingestion, run manifests, and results persistence.

The dataset text format is the common sparse "label idx:val ..." one:
1-based feature indices, `#` comment lines, arbitrary whitespace between
tokens. Labels are normalized into {-1, +1} by a fixed table:
+1/1 -> +1 and -1/0/2 -> -1 (0/1- and 1/2-encoded datasets put the second
class at -1). Everything written out is plain CSV / key=value text with
12 significant digits, so runs diff cleanly.
"""

from __future__ import annotations

import os
from typing import Mapping, Optional, Sequence

import numpy as np

from . import _kernels
from .metrics import StationarityReport
from .problems import Dataset
from .types import ContractError, DataError, ParseError, RunRecord, TRACE_COLUMNS

_LABEL_TABLE = {1: 1.0, -1: -1.0, 0: -1.0, 2: -1.0}


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def read_sparse_dataset(path, expect_dim: Optional[int] = None) -> Dataset:
    """Parse a sparse text dataset; see the module docstring for the grammar."""
    rows: list[dict[int, float]] = []
    labels: list[float] = []
    max_idx = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            try:
                raw_label = float(tokens[0])
            except ValueError:
                raise ParseError(line_no, f"bad label token {tokens[0]!r}") from None
            if raw_label != int(raw_label) or int(raw_label) not in _LABEL_TABLE:
                raise ParseError(line_no, f"unmappable label {tokens[0]!r}")
            entries: dict[int, float] = {}
            for token in tokens[1:]:
                idx_str, sep, val_str = token.partition(":")
                if not sep:
                    raise ParseError(line_no, f"expected idx:val, got {token!r}")
                try:
                    idx = int(idx_str)
                    val = float(val_str)
                except ValueError:
                    raise ParseError(line_no, f"expected idx:val, got {token!r}") from None
                if idx < 1:
                    raise ParseError(line_no, f"feature indices are 1-based, got {idx}")
                if expect_dim is not None and idx > expect_dim:
                    raise ParseError(line_no, f"index {idx} exceeds expected dimension {expect_dim}")
                entries[idx] = val
            labels.append(_LABEL_TABLE[int(raw_label)])
            rows.append(entries)
            if entries:
                max_idx = max(max_idx, max(entries))
    dim = expect_dim if expect_dim is not None else max_idx
    features = np.zeros((len(rows), dim))
    for r, entries in enumerate(rows):
        for idx, val in entries.items():
            features[r, idx - 1] = val
    return Dataset(features=features, labels=np.array(labels))


def subsample(data: Dataset, n_keep: int, stratified: bool, seed: int) -> Dataset:
    """Seed-deterministic random subsample; stratified preserves the class
    ratio to within one row."""
    if n_keep > data.n:
        raise DataError(f"cannot keep {n_keep} of {data.n} rows")
    rng = np.random.default_rng(seed)
    if not stratified:
        idx = rng.choice(data.n, size=n_keep, replace=False)
    else:
        pos = np.flatnonzero(data.labels > 0)
        neg = np.flatnonzero(data.labels < 0)
        n_pos_keep = round(n_keep * len(pos) / data.n)
        n_pos_keep = min(max(n_pos_keep, n_keep - len(neg)), len(pos))
        idx = np.concatenate(
            [
                rng.choice(pos, size=n_pos_keep, replace=False),
                rng.choice(neg, size=n_keep - n_pos_keep, replace=False),
            ]
        )
        rng.shuffle(idx)
    return Dataset(
        features=data.features[idx],
        labels=data.labels[idx],
        sensitive=None if data.sensitive is None else data.sensitive[idx],
    )


def dataset_checksum(data: Dataset) -> int:
    """64-bit FNV-1a over the canonical byte serialization of a dataset."""
    parts = [b"dszog-dataset-v1"]
    parts.append(np.array(data.features.shape, dtype=np.int64).tobytes())
    parts.append(np.ascontiguousarray(data.features, dtype=np.float64).tobytes())
    parts.append(np.ascontiguousarray(data.labels, dtype=np.float64).tobytes())
    if data.sensitive is None:
        parts.append(b"no-sensitive")
    else:
        parts.append(np.array(data.sensitive.shape, dtype=np.int64).tobytes())
        parts.append(np.ascontiguousarray(data.sensitive, dtype=np.float64).tobytes())
    return _kernels.fnv1a64(b"".join(parts))


def write_run(
    record: RunRecord,
    report: StationarityReport,
    manifest: Mapping[str, object],
    out_dir,
    termination: Optional[str] = None,
    extra_columns: Optional[Mapping[str, Sequence[float]]] = None,
) -> None:
    """Persist one run: trace.csv, report.txt, manifest.txt.

    ``extra_columns`` appends named per-row columns (e.g. periodic test
    accuracy) after the standard trace columns.
    """
    os.makedirs(out_dir, exist_ok=True)
    extra = dict(extra_columns or {})
    for name, values in extra.items():
        if len(values) != len(record):
            raise ContractError(f"extra column {name!r} has {len(values)} values for {len(record)} rows")

    header = list(TRACE_COLUMNS) + list(extra)
    lines = [",".join(header)]
    for i, row in enumerate(record):
        cells = [str(row.iter)] + [_fmt(getattr(row, col)) for col in TRACE_COLUMNS[1:]]
        cells += [_fmt(extra[name][i]) for name in extra]
        lines.append(",".join(cells))
    _write_text(os.path.join(out_dir, "trace.csv"), lines)

    report_lines = [
        f"eps1_sq={_fmt(report.eps1_sq)}",
        f"eps2_sq={_fmt(report.eps2_sq)}",
        f"eps3_sq={_fmt(report.eps3_sq)}",
        f"max_violation={_fmt(report.max_violation)}",
        "alphas=" + ",".join(_fmt(v) for v in report.alphas),
        f"grad_norm_sq_w={_fmt(report.grad_norm_sq_w)}",
        f"grad_norm_sq_p={_fmt(report.grad_norm_sq_p)}",
        f"grad_norm_sq_p_raw={_fmt(report.grad_norm_sq_p_raw)}",
        f"grad_w_mc_se={_fmt(report.grad_w_mc_se)}",
    ]
    if report.grad_norm_sq_w_at_best_p is not None:
        report_lines.append(f"grad_norm_sq_w_at_best_p={_fmt(report.grad_norm_sq_w_at_best_p)}")
    if termination is not None:
        report_lines.append(f"termination={termination}")
    _write_text(os.path.join(out_dir, "report.txt"), report_lines)

    manifest_lines = [f"{key}={_to_text(value)}" for key, value in manifest.items()]
    _write_text(os.path.join(out_dir, "manifest.txt"), manifest_lines)


def _to_text(value) -> str:
    if isinstance(value, float):
        return _fmt(value)
    return str(value)


def _write_text(path: str, lines: list[str]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
