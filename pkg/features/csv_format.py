from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from core.errors import DuplicateIdentityError, FeatureFormatError
from core.store import atomic_write_bytes

from .base import VIEWS, FeatureSet, View

log = logging.getLogger("txreid.features")


def _decode(path: Path) -> str:
    raw = path.read_bytes()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FeatureFormatError(str(path), f"offset {exc.start}", "not valid UTF-8") from None


@dataclass(frozen=True)
class CsvFormat:
    name: str = "csv"
    suffix: str = ".csv"

    def read(self, path: Path, *, descriptor_name: str, view: View | None = None) -> FeatureSet:
        where = str(path)
        # splitlines() accepts LF and CRLF alike
        reader = csv.reader(_decode(path).splitlines())

        header = next(reader, None)
        if not header:
            raise FeatureFormatError(where, "line 1", "missing header")
        if header[:2] != ["person_id", "view"] or len(header) < 3:
            raise FeatureFormatError(where, "line 1", "header must start with person_id,view,f0")
        expected = [f"f{j}" for j in range(len(header) - 2)]
        if header[2:] != expected:
            raise FeatureFormatError(where, "line 1", f"feature columns must be f0..f{len(expected) - 1}")

        ids: list[int] = []
        rows: list[list[float]] = []
        seen: dict[int, int] = {}
        file_view: str | None = view

        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue  # trailing blank line
            loc = f"line {line_no}"
            if len(record) != len(header):
                raise FeatureFormatError(where, loc, f"expected {len(header)} fields, got {len(record)}")

            try:
                pid = int(record[0])
            except ValueError:
                raise FeatureFormatError(where, loc, f"person_id {record[0]!r} is not an integer") from None
            if pid < 0:
                raise FeatureFormatError(where, loc, f"person_id {pid} is negative")

            row_view = record[1].strip()
            if row_view not in VIEWS:
                raise FeatureFormatError(where, loc, f"view {row_view!r} is not A or B")
            if file_view is None:
                file_view = row_view
            elif row_view != file_view:
                raise FeatureFormatError(where, loc, f"view {row_view!r} differs from {file_view!r}")

            try:
                values = [float(cell) for cell in record[2:]]
            except ValueError as exc:
                raise FeatureFormatError(where, loc, str(exc)) from None
            if not all(math.isfinite(v) for v in values):
                raise FeatureFormatError(where, loc, "non-finite feature value")

            if pid in seen:
                raise DuplicateIdentityError(
                    f"{where} (line {line_no}): person_id {pid} already on line {seen[pid]}"
                )
            seen[pid] = line_no
            ids.append(pid)
            rows.append(values)

        if not rows:
            raise FeatureFormatError(where, "line 2", "no data rows")

        log.debug("read %d x %d features from %s", len(rows), len(header) - 2, where)
        return FeatureSet(
            descriptor_name=descriptor_name,
            view=file_view,  # type: ignore[arg-type]
            person_ids=tuple(ids),
            features=np.array(rows, dtype=np.float64),
        )

    def write(self, fs: FeatureSet, path: Path) -> None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["person_id", "view", *(f"f{j}" for j in range(fs.dim))])
        for pid, row in zip(fs.person_ids, fs.features):
            writer.writerow([pid, fs.view, *(repr(float(v)) for v in row)])
        atomic_write_bytes(path, buf.getvalue().encode("utf-8"))


FORMAT = CsvFormat()
