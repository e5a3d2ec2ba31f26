from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from numpy.typing import NDArray

from core.errors import RankOutOfRangeError, ShapeMismatchError, TooFewPersonsError
from core.matching import RankedList

SUMMARY_RANKS: tuple[int, ...] = (1, 5, 10, 15, 20)


@dataclass(frozen=True)
class Fold:
    index: int
    train_ids: tuple[int, ...]
    test_ids: tuple[int, ...]


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    train_fraction: float
    folds: tuple[Fold, ...]

    def __len__(self) -> int:
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


@dataclass(frozen=True)
class CmcCurve:
    values: tuple[float, ...]       # CMC(1) .. CMC(G)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def gallery_size(self) -> int:
        return len(self.values)

    def at(self, rank: int) -> float:
        if not 1 <= rank <= len(self.values):
            raise RankOutOfRangeError(f"rank {rank} outside 1..{len(self.values)}")
        return self.values[rank - 1]

    def as_array(self) -> NDArray[np.float64]:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class ExperimentReport:
    features: str                       # e.g. "cnn+lomo"
    method: str
    dim: int
    config: dict[str, Any]
    fold_curves: tuple[CmcCurve, ...]
    mean_curve: CmcCurve
    summary: dict[int, float]
    runtimes: tuple[float, ...] = field(default=(), compare=False)

    @property
    def gallery_size(self) -> int:
        return self.mean_curve.gallery_size


def make_folds(
    person_ids: Sequence[int],
    n_folds: int = 10,
    train_fraction: float = 0.5,
    seed: int = 0,
) -> FoldPlan:
    """
    Independent random identity splits; fold f shuffles with seed + f.

    Shuffles use numpy's PCG64 generator (`default_rng`), so plans are
    reproducible across platforms.
    """
    ids = np.asarray(sorted(int(pid) for pid in person_ids), dtype=np.int64)
    if ids.size < 4:
        raise TooFewPersonsError(f"cross-validation needs at least 4 persons, got {ids.size}")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if n_folds < 1:
        raise ValueError(f"n_folds must be >= 1, got {n_folds}")

    n_train = math.floor(ids.size * train_fraction)
    if n_train < 2 or ids.size - n_train < 1:
        raise TooFewPersonsError(
            f"{ids.size} persons at train_fraction={train_fraction} leave {n_train} for training"
        )

    folds = []
    for f in range(n_folds):
        perm = np.random.default_rng(seed + f).permutation(ids)
        folds.append(
            Fold(
                index=f,
                train_ids=tuple(int(pid) for pid in np.sort(perm[:n_train])),
                test_ids=tuple(int(pid) for pid in np.sort(perm[n_train:])),
            )
        )
    return FoldPlan(seed=seed, train_fraction=train_fraction, folds=tuple(folds))


def compute_cmc(rankings: Sequence[RankedList], true_indices: Sequence[int]) -> CmcCurve:
    """Single-shot CMC: rank = 1 + entries ranked ahead of the true match."""
    if len(rankings) != len(true_indices) or not rankings:
        raise ShapeMismatchError("need one true gallery index per ranked probe")
    gallery_size = len(rankings[0])
    ranks = np.empty(len(rankings), dtype=np.int64)
    for p, (ranking, truth) in enumerate(zip(rankings, true_indices)):
        if len(ranking) != gallery_size:
            raise ShapeMismatchError("all probes must be ranked against the same gallery")
        if not 0 <= truth < gallery_size:
            raise RankOutOfRangeError(f"true index {truth} outside gallery of {gallery_size}")
        ranks[p] = ranking.position_of(truth) + 1
    hits = np.bincount(ranks, minlength=gallery_size + 1)[1:]
    return CmcCurve(tuple(np.cumsum(hits) / len(rankings)))


def aggregate_cmc(curves: Sequence[CmcCurve]) -> CmcCurve:
    if not curves:
        raise ValueError("need at least one curve")
    lengths = {c.gallery_size for c in curves}
    if len(lengths) != 1:
        raise ShapeMismatchError(f"curves have different lengths {sorted(lengths)}")
    return CmcCurve(tuple(np.mean([c.as_array() for c in curves], axis=0)))


def summarize(curve: CmcCurve, ranks: Sequence[int] = SUMMARY_RANKS) -> dict[int, float]:
    return {rank: curve.at(rank) for rank in ranks if rank <= curve.gallery_size}
