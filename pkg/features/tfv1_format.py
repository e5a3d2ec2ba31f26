from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from core.errors import DuplicateIdentityError, FeatureFormatError
from core.store import atomic_write_bytes

from .base import FeatureSet, View

MAGIC = b"TFV1"
_HEADER = struct.Struct("<4sII")


@dataclass(frozen=True)
class Tfv1Format:
    """
    Binary layout: magic "TFV1", u32 N, u32 D, N*D float64 row-major, N u64 person ids.
    Everything little-endian. The view is not stored and must be supplied by the caller.
    """

    name: str = "bin"
    suffix: str = ".tfv1"

    def read(self, path: Path, *, descriptor_name: str, view: View | None = None) -> FeatureSet:
        where = str(path)
        raw = path.read_bytes()
        if len(raw) < _HEADER.size:
            raise FeatureFormatError(where, "offset 0", f"file is {len(raw)} bytes, header needs {_HEADER.size}")

        magic, n, d = _HEADER.unpack_from(raw, 0)
        if magic != MAGIC:
            raise FeatureFormatError(where, "offset 0", f"bad magic {magic!r}")
        if n < 1 or d < 1:
            raise FeatureFormatError(where, "offset 4", f"dims must be positive, got N={n} D={d}")

        feat_end = _HEADER.size + 8 * n * d
        expected = feat_end + 8 * n
        if len(raw) != expected:
            raise FeatureFormatError(where, f"offset {min(len(raw), expected)}", f"expected {expected} bytes, got {len(raw)}")

        features = np.frombuffer(raw, dtype="<f8", count=n * d, offset=_HEADER.size).reshape(n, d)
        ids = np.frombuffer(raw, dtype="<u8", count=n, offset=feat_end)

        bad = np.flatnonzero(~np.isfinite(features).all(axis=1))
        if bad.size:
            row = int(bad[0])
            raise FeatureFormatError(where, f"offset {_HEADER.size + 8 * row * d}", f"non-finite value in row {row}")

        person_ids = tuple(int(pid) for pid in ids)
        if len(set(person_ids)) != n:
            raise DuplicateIdentityError(f"{where}: duplicate person_id in {descriptor_name} view {view}")

        return FeatureSet(
            descriptor_name=descriptor_name,
            view=view or "A",
            person_ids=person_ids,
            features=features.astype(np.float64),
        )

    def write(self, fs: FeatureSet, path: Path) -> None:
        payload = b"".join(
            [
                _HEADER.pack(MAGIC, fs.n_persons, fs.dim),
                np.ascontiguousarray(fs.features, dtype="<f8").tobytes(),
                np.asarray(fs.person_ids, dtype="<u8").tobytes(),
            ]
        )
        atomic_write_bytes(path, payload)


FORMAT = Tfv1Format()
