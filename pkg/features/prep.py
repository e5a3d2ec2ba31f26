"""Turning descriptor tables into (fused) 3-order tensors.

Each descriptor vector is z-scored, cut into parts of one shared width w
(the last part zero-padded) and laid out as a parts x w x persons tensor.
Fused tensors stack the parts of several descriptors along mode 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from core.errors import EmptyIntersectionError, ShapeMismatchError
from core.tensor import Tensor3

from .base import FeatureSet, PairedViews, StandardizationStats, View

STD_FLOOR = 1e-12


def fit_standardizer(train_sets: Sequence[FeatureSet]) -> StandardizationStats:
    """Per-dimension mean and population std over the pooled rows of `train_sets`."""
    if not train_sets:
        raise ValueError("need at least one feature set")
    dims = {fs.dim for fs in train_sets}
    if len(dims) != 1:
        raise ShapeMismatchError(f"feature sets disagree on dimension: {sorted(dims)}")
    pooled = np.vstack([fs.features for fs in train_sets])
    if pooled.shape[0] < 2:
        raise ValueError("standardization needs at least 2 rows")
    return StandardizationStats(
        mean=pooled.mean(axis=0),
        std=np.maximum(pooled.std(axis=0), STD_FLOOR),
    )


def apply_standardizer(stats: StandardizationStats, fs: FeatureSet) -> FeatureSet:
    if stats.mean.size != fs.dim:
        raise ShapeMismatchError(f"stats fitted on dim {stats.mean.size}, features have dim {fs.dim}")
    return fs.with_features((fs.features - stats.mean) / stats.std)


def part_count(dim: int, part_width: int) -> int:
    return math.ceil(dim / part_width)


def tensorize(fs: FeatureSet, part_width: int) -> Tensor3:
    """(P, w, N) tensor with element (i, j, k) = feature j + i*w of person k (0 past the end)."""
    if part_width < 1:
        raise ValueError(f"part_width must be >= 1, got {part_width}")
    parts = part_count(fs.dim, part_width)
    padded = np.zeros((fs.n_persons, parts * part_width))
    padded[:, : fs.dim] = fs.features
    # row k reshaped C-order gives parts x width; move persons to the last axis
    return Tensor3(np.transpose(padded.reshape(fs.n_persons, parts, part_width), (1, 2, 0)))


def fuse(a: Tensor3, b: Tensor3) -> Tensor3:
    """Stack the parts of `b` after those of `a` (mode-1 concatenation)."""
    if a.dims[1] != b.dims[1]:
        raise ShapeMismatchError(f"part widths differ: {a.dims[1]} vs {b.dims[1]}")
    if a.dims[2] != b.dims[2]:
        raise ShapeMismatchError(f"person counts differ: {a.dims[2]} vs {b.dims[2]}")
    return Tensor3(np.concatenate([a.data, b.data], axis=0))


def align_views(a: FeatureSet, b: FeatureSet) -> PairedViews:
    """Restrict both views to their shared identities, sorted ascending."""
    shared = sorted(set(a.person_ids) & set(b.person_ids))
    if not shared:
        raise EmptyIntersectionError(
            f"{a.descriptor_name}: views {a.view} and {b.view} share no person_id"
        )
    return PairedViews(view_a=a.subset(shared), view_b=b.subset(shared))


def align_descriptors(views: Mapping[str, PairedViews]) -> dict[str, PairedViews]:
    """Restrict every descriptor to the identities present in all of them."""
    if not views:
        raise ValueError("no descriptors to align")
    shared = set.intersection(*(set(pv.person_ids) for pv in views.values()))
    if not shared:
        raise EmptyIntersectionError(f"descriptors {sorted(views)} share no person_id")
    ids = sorted(shared)
    return {
        name: PairedViews(view_a=pv.view_a.subset(ids), view_b=pv.view_b.subset(ids))
        for name, pv in views.items()
    }


@dataclass(frozen=True)
class TensorRecipe:
    """Everything needed to rebuild a (fused) tensor from raw descriptor sets."""

    fusion: tuple[str, ...]
    part_width: int
    stats: dict[str, StandardizationStats] | None   # None when standardization is off
    dims: dict[str, int]                            # D_full per descriptor

    @property
    def label(self) -> str:
        return "+".join(self.fusion)

    @property
    def parts(self) -> int:
        return sum(part_count(self.dims[name], self.part_width) for name in self.fusion)


def fit_recipe(
    views: Mapping[str, PairedViews],
    fusion: Sequence[str],
    part_width: int,
    train_ids: Sequence[int],
    *,
    standardize: bool = True,
) -> TensorRecipe:
    missing = [name for name in fusion if name not in views]
    if missing:
        raise KeyError(f"fusion names unknown descriptors: {missing}")
    stats = None
    if standardize:
        stats = {
            name: fit_standardizer([views[name].view_a.subset(train_ids), views[name].view_b.subset(train_ids)])
            for name in fusion
        }
    return TensorRecipe(
        fusion=tuple(fusion),
        part_width=part_width,
        stats=stats,
        dims={name: views[name].view_a.dim for name in fusion},
    )


def apply_recipe(recipe: TensorRecipe, sets: Mapping[str, FeatureSet], person_ids: Sequence[int]) -> Tensor3:
    tensor: Tensor3 | None = None
    for name in recipe.fusion:
        fs = sets[name].subset(person_ids)
        if fs.dim != recipe.dims[name]:
            raise ShapeMismatchError(f"{name}: expected {recipe.dims[name]} features, got {fs.dim}")
        if recipe.stats is not None:
            fs = apply_standardizer(recipe.stats[name], fs)
        part = tensorize(fs, recipe.part_width)
        tensor = part if tensor is None else fuse(tensor, part)
    assert tensor is not None
    return tensor


def view_sets(views: Mapping[str, PairedViews], view: View) -> dict[str, FeatureSet]:
    return {name: pv.view(view) for name, pv in views.items()}


def recipe_to_dict(recipe: TensorRecipe) -> dict[str, Any]:
    """JSON-safe form stored in model metadata; floats survive json's repr round-trip."""
    stats = None
    if recipe.stats is not None:
        stats = {
            name: {"mean": s.mean.tolist(), "std": s.std.tolist()} for name, s in recipe.stats.items()
        }
    return {
        "fusion": list(recipe.fusion),
        "part_width": recipe.part_width,
        "dims": dict(recipe.dims),
        "stats": stats,
    }


def recipe_from_dict(data: Mapping[str, Any]) -> TensorRecipe:
    raw_stats = data.get("stats")
    stats = None
    if raw_stats is not None:
        stats = {
            name: StandardizationStats(
                mean=np.asarray(s["mean"], dtype=np.float64),
                std=np.asarray(s["std"], dtype=np.float64),
            )
            for name, s in raw_stats.items()
        }
    return TensorRecipe(
        fusion=tuple(data["fusion"]),
        part_width=int(data["part_width"]),
        stats=stats,
        dims={name: int(d) for name, d in data["dims"].items()},
    )
