# core/store.py
from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from core.errors import ModelFormatError
from core.evaluation import CmcCurve, ExperimentReport
from core.txqda import TxqdaConfig, TxqdaModel
from core.view import TableView

MODEL_MAGIC = b"TXQD"
MODEL_VERSION = 1
_MODEL_HEADER = struct.Struct("<4sIIIII")   # magic, version, P, w, p_out, d_out
_META_LEN = struct.Struct("<I")


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    """Write to a temp file in the target directory, then rename over `path`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# -- model files ------------------------------------------------------------

def _block(matrix: np.ndarray) -> bytes:
    return np.asarray(matrix, dtype="<f8").tobytes(order="F")


def serialize_model(model: TxqdaModel, extra: Dict[str, Any] | None = None) -> bytes:
    parts, width = model.U1.shape[0], model.U2.shape[0]
    p_out, d_out = model.U1.shape[1], model.U2.shape[1]
    metadata = {**model.describe(), **(extra or {})}
    blob = json.dumps(metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return b"".join(
        [
            _MODEL_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, parts, width, p_out, d_out),
            _block(model.U1),
            _block(model.U2),
            _block(model.M),
            _META_LEN.pack(len(blob)),
            blob,
        ]
    )


def deserialize_model(raw: bytes, source: str = "<bytes>") -> Tuple[TxqdaModel, Dict[str, Any]]:
    if len(raw) < _MODEL_HEADER.size or raw[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"{source}: not a TXQD model file (bad magic)")
    _, version, parts, width, p_out, d_out = _MODEL_HEADER.unpack_from(raw, 0)
    if version != MODEL_VERSION:
        raise ModelFormatError(f"{source}: unsupported model version {version}")

    shapes = [(parts, p_out), (width, d_out), (p_out * d_out, p_out * d_out)]
    offset = _MODEL_HEADER.size
    blocks = []
    for rows, cols in shapes:
        size = 8 * rows * cols
        if offset + size > len(raw):
            raise ModelFormatError(f"{source}: truncated matrix block at offset {offset}")
        blocks.append(np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=offset).reshape((rows, cols), order="F"))
        offset += size

    if offset + _META_LEN.size > len(raw):
        raise ModelFormatError(f"{source}: missing metadata length at offset {offset}")
    (meta_len,) = _META_LEN.unpack_from(raw, offset)
    offset += _META_LEN.size
    if offset + meta_len != len(raw):
        raise ModelFormatError(f"{source}: metadata length {meta_len} does not match file size")
    try:
        metadata = json.loads(raw[offset:].decode("utf-8"))
        config = TxqdaConfig(**metadata["config"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{source}: unreadable metadata ({exc})") from None
    if (config.p_out, config.d_out) != (p_out, d_out):
        raise ModelFormatError(
            f"{source}: metadata config p_out={config.p_out}, d_out={config.d_out} "
            f"disagrees with header p_out={p_out}, d_out={d_out}"
        )

    u1, u2, m = (np.array(block, dtype=np.float64) for block in blocks)
    model = TxqdaModel(
        U1=u1,
        U2=u2,
        M=m,
        iterations_run=int(metadata.get("iterations_run", 0)),
        convergence_trace=tuple(metadata.get("convergence_trace", ())),
        config=config,
        metadata={k: v for k, v in metadata.items() if k not in ("config", "iterations_run", "convergence_trace")},
    )
    return model, metadata


def write_model(path: Path, model: TxqdaModel, extra: Dict[str, Any] | None = None) -> Path:
    atomic_write_bytes(path, serialize_model(model, extra))
    return path


def read_model(path: Path) -> Tuple[TxqdaModel, Dict[str, Any]]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise ModelFormatError(f"model file not found: {path}") from None
    return deserialize_model(raw, str(path))


# -- reports ----------------------------------------------------------------

def _serialize_report(report: ExperimentReport, include_timings: bool) -> dict:
    data = {
        "features": report.features,
        "method": report.method,
        "dim": report.dim,
        "gallery_size": report.gallery_size,
        "config": report.config,
        "summary": {f"rank_{rank}": value for rank, value in report.summary.items()},
        "mean_curve": list(report.mean_curve.values),
        "fold_curves": [list(curve.values) for curve in report.fold_curves],
    }
    if include_timings:
        data["runtimes_s"] = list(report.runtimes)
    return data


def _deserialize_report(data: dict) -> ExperimentReport:
    return ExperimentReport(
        features=data["features"],
        method=data["method"],
        dim=int(data["dim"]),
        config=data["config"],
        fold_curves=tuple(CmcCurve(tuple(c)) for c in data["fold_curves"]),
        mean_curve=CmcCurve(tuple(data["mean_curve"])),
        summary={int(key.removeprefix("rank_")): value for key, value in data["summary"].items()},
        runtimes=tuple(data.get("runtimes_s", ())),
    )


class ReportStore:
    """Writes one evaluation run (possibly several reports) under `out_dir`."""

    def __init__(self, out_dir: Path, stem: str) -> None:
        self.out_dir = Path(out_dir)
        self.stem = stem

    @property
    def json_path(self) -> Path:
        return self.out_dir / f"{self.stem}.json"

    @property
    def table_path(self) -> Path:
        return self.out_dir / f"{self.stem}.csv"

    @property
    def curves_path(self) -> Path:
        return self.out_dir / f"{self.stem}-curves.csv"

    def flush(self, reports: Sequence[ExperimentReport], table: TableView, *, include_timings: bool = False) -> List[Path]:
        serialized = {"reports": [_serialize_report(r, include_timings) for r in reports]}
        atomic_write_text(self.json_path, json.dumps(serialized, indent=2) + "\n")
        atomic_write_text(self.table_path, _csv_text([table.csv_header, *table.csv_rows]))
        atomic_write_text(self.curves_path, _csv_text(_curve_rows(reports)))
        return [self.json_path, self.table_path, self.curves_path]

    def load(self) -> List[ExperimentReport]:
        raw = json.loads(self.json_path.read_text(encoding="utf-8"))
        return [_deserialize_report(item) for item in raw["reports"]]


def _csv_text(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _curve_rows(reports: Sequence[ExperimentReport]) -> List[List[str]]:
    rows: List[List[str]] = [["features", "method", "dim", "rank", "cmc"]]
    for report in reports:
        for rank, value in enumerate(report.mean_curve.values, start=1):
            rows.append([report.features, report.method, str(report.dim), str(rank), repr(value)])
    return rows
