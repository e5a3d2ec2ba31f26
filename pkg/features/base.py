# features/base.py
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Protocol, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from core.errors import DuplicateIdentityError, ShapeMismatchError
from core.tensor import Tensor3

View = Literal["A", "B"]
VIEWS: tuple[View, ...] = ("A", "B")


@dataclass(frozen=True)
class FeatureSet:
    descriptor_name: str        # "cnn", "lomo", "gog", "synth", ...
    view: View
    person_ids: tuple[int, ...]
    features: NDArray[np.float64]  # N x D_full, one row per person

    def __post_init__(self) -> None:
        if self.view not in VIEWS:
            raise ValueError(f"view must be one of {VIEWS}, got {self.view!r}")
        ids = tuple(int(pid) for pid in self.person_ids)
        feats = np.array(self.features, dtype=np.float64, copy=True)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ShapeMismatchError(f"features must be a non-empty N x D matrix, got {feats.shape}")
        if len(ids) != feats.shape[0]:
            raise ShapeMismatchError(f"{len(ids)} person ids for {feats.shape[0]} feature rows")
        if len(set(ids)) != len(ids):
            dup = next(pid for pid, count in Counter(ids).items() if count > 1)
            raise DuplicateIdentityError(
                f"{self.descriptor_name}/{self.view}: person_id {dup} appears more than once"
            )
        if not np.all(np.isfinite(feats)):
            raise ValueError(f"{self.descriptor_name}/{self.view}: features must be finite")
        feats.setflags(write=False)
        object.__setattr__(self, "person_ids", ids)
        object.__setattr__(self, "features", feats)

    @property
    def n_persons(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, person_ids: Sequence[int]) -> FeatureSet:
        """Rows for `person_ids`, in that order."""
        index = {pid: row for row, pid in enumerate(self.person_ids)}
        try:
            rows = [index[int(pid)] for pid in person_ids]
        except KeyError as exc:
            raise KeyError(f"person_id {exc.args[0]} not in {self.descriptor_name}/{self.view}") from None
        return FeatureSet(self.descriptor_name, self.view, tuple(person_ids), self.features[rows])

    def with_features(self, features: ArrayLike) -> FeatureSet:
        return FeatureSet(self.descriptor_name, self.view, self.person_ids, np.asarray(features))


@dataclass(frozen=True)
class PairedViews:
    view_a: FeatureSet
    view_b: FeatureSet

    def __post_init__(self) -> None:
        if self.view_a.person_ids != self.view_b.person_ids:
            raise ValueError("paired views must list identical person_ids in identical order")

    @property
    def person_ids(self) -> tuple[int, ...]:
        return self.view_a.person_ids

    def view(self, name: View) -> FeatureSet:
        return self.view_a if name == "A" else self.view_b


@dataclass(frozen=True)
class StandardizationStats:
    mean: NDArray[np.float64]
    std: NDArray[np.float64]    # already floored at STD_FLOOR


@dataclass(frozen=True)
class FoldTensors:
    train_a: Tensor3
    train_b: Tensor3
    train_ids: tuple[int, ...]
    test_a: Tensor3 | None
    test_b: Tensor3 | None
    test_ids: tuple[int, ...]


class FeatureFormat(Protocol):
    name: str           # "csv", "bin"
    suffix: str         # default file suffix when writing

    def read(self, path: Path, *, descriptor_name: str, view: View | None) -> FeatureSet:
        """Parse `path`. Raises FeatureFormatError with a line or byte offset."""
        ...

    def write(self, fs: FeatureSet, path: Path) -> None:
        ...


class TensorSource(Protocol):
    """Anything the evaluation engine can draw per-fold training/test tensors from."""

    label: str

    @property
    def person_ids(self) -> tuple[int, ...]: ...

    def prepare(self, train_ids: Sequence[int], test_ids: Sequence[int]) -> FoldTensors:
        ...
