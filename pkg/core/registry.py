from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Sequence

from features.base import FoldTensors, PairedViews
from features.io import load_feature_set
from features.prep import (
    TensorRecipe,
    align_descriptors,
    align_views,
    apply_recipe,
    fit_recipe,
    part_count,
    view_sets,
)
from features.synth import generate_crossview
from models.run_config import RunConfig

log = logging.getLogger("txreid.registry")


class DescriptorRegistry:
    """
    In-memory store of paired descriptor views for one experiment.

    Every descriptor is aligned by identity across views and then across
    descriptors, so mode 3 of any tensor built from it refers to the same
    persons in the same (ascending id) order.
    """

    def __init__(self) -> None:
        self._views: dict[str, PairedViews] = {}

    def reload(self, config: RunConfig) -> None:
        views: dict[str, PairedViews] = {}
        if config.synth is not None:
            view_a, view_b = generate_crossview(config.synth)
            views[config.synth.descriptor_name] = align_views(view_a, view_b)
        for name, files in config.descriptors.items():
            view_a = load_feature_set(files.view_a, files.format, descriptor_name=name, view="A")
            view_b = load_feature_set(files.view_b, files.format, descriptor_name=name, view="B")
            views[name] = align_views(view_a, view_b)
        self._views = align_descriptors(views)
        for name, pv in self._views.items():
            log.info(
                "descriptor %s: %d paired persons, dim %d, %d parts of width %d",
                name, len(pv.person_ids), pv.view_a.dim,
                part_count(pv.view_a.dim, config.part_width), config.part_width,
            )

    def names(self) -> list[str]:
        return list(self._views)

    def items(self) -> list[tuple[str, PairedViews]]:
        return list(self._views.items())

    def summary(self) -> list[dict[str, Any]]:
        return [
            {"name": name, "persons": len(pv.person_ids), "dim": pv.view_a.dim}
            for name, pv in self._views.items()
        ]

    def source(self, fusion: Sequence[str], part_width: int, *, standardize: bool = True) -> FusedSource:
        missing = [name for name in fusion if name not in self._views]
        if missing:
            raise KeyError(f"unknown descriptors {missing}; loaded: {self.names()}")
        return FusedSource({name: self._views[name] for name in fusion}, tuple(fusion), part_width, standardize)


@dataclass(frozen=True)
class FusedSource:
    """Per-fold tensors for one fusion; preprocessing is refitted on each fold's training ids."""

    views: dict[str, PairedViews]
    fusion: tuple[str, ...]
    part_width: int
    standardize: bool = True

    @property
    def label(self) -> str:
        return "+".join(self.fusion)

    @property
    def person_ids(self) -> tuple[int, ...]:
        return self.views[self.fusion[0]].person_ids

    def recipe(self, train_ids: Sequence[int]) -> TensorRecipe:
        return fit_recipe(self.views, self.fusion, self.part_width, train_ids, standardize=self.standardize)

    def prepare(self, train_ids: Sequence[int], test_ids: Sequence[int]) -> FoldTensors:
        recipe = self.recipe(train_ids)
        sets_a = view_sets(self.views, "A")
        sets_b = view_sets(self.views, "B")
        return FoldTensors(
            train_a=apply_recipe(recipe, sets_a, train_ids),
            train_b=apply_recipe(recipe, sets_b, train_ids),
            train_ids=tuple(train_ids),
            test_a=apply_recipe(recipe, sets_a, test_ids) if test_ids else None,
            test_b=apply_recipe(recipe, sets_b, test_ids) if test_ids else None,
            test_ids=tuple(test_ids),
        )
