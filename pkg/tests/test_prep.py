from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from core.errors import DuplicateIdentityError, EmptyIntersectionError, ShapeMismatchError
from core.tensor import Tensor3
from features.base import FeatureSet, PairedViews
from features.prep import (
    STD_FLOOR,
    align_descriptors,
    align_views,
    apply_recipe,
    apply_standardizer,
    fit_recipe,
    fit_standardizer,
    fuse,
    recipe_from_dict,
    recipe_to_dict,
    tensorize,
    view_sets,
)
from tests.conftest import make_views


def fs(ids, rows, view="A", name="toy") -> FeatureSet:
    return FeatureSet(name, view, tuple(ids), np.asarray(rows, dtype=np.float64))


class TestFeatureSet:
    def test_duplicate_ids(self):
        with pytest.raises(DuplicateIdentityError):
            fs([7, 7], [[1.0], [2.0]])

    def test_row_count_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            fs([1, 2, 3], [[1.0], [2.0]])

    def test_subset_reorders(self):
        s = fs([3, 1, 2], [[3.0], [1.0], [2.0]])
        assert_array_equal(s.subset([1, 2]).features, [[1.0], [2.0]])
        with pytest.raises(KeyError):
            s.subset([9])


class TestStandardizer:
    def test_hand_example(self):
        stats = fit_standardizer([fs([0, 1], [[0.0, 0.0], [2.0, 2.0]])])
        assert_array_equal(stats.mean, [1.0, 1.0])
        assert_array_equal(stats.std, [1.0, 1.0])
        out = apply_standardizer(stats, fs([5], [[2.0, 2.0]]))
        assert_array_equal(out.features, [[1.0, 1.0]])

    def test_constant_column_is_floored(self):
        stats = fit_standardizer([fs([0, 1, 2], [[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])])
        assert stats.std[0] == STD_FLOOR
        out = apply_standardizer(stats, fs([0], [[5.0, 2.0]]))
        assert out.features[0, 0] == 0.0

    def test_pools_views(self):
        stats = fit_standardizer([fs([0], [[0.0]]), fs([0], [[4.0]], view="B")])
        assert_array_equal(stats.mean, [2.0])
        assert_array_equal(stats.std, [2.0])

    def test_dim_mismatch(self):
        stats = fit_standardizer([fs([0, 1], [[0.0], [1.0]])])
        with pytest.raises(ShapeMismatchError):
            apply_standardizer(stats, fs([0], [[1.0, 2.0]]))


class TestTensorize:
    def test_padding(self):
        t = tensorize(fs([0], [[1.0, 2.0, 3.0, 4.0, 5.0]]), 2)
        assert t.dims == (3, 2, 1)
        assert_array_equal(t.data[:, :, 0], [[1, 2], [3, 4], [5, 0]])

    def test_single_part(self):
        t = tensorize(fs([0, 1], [[1.0, 2.0], [3.0, 4.0]]), 5)
        assert t.dims == (1, 5, 2)
        assert_array_equal(t.data[0, :, 1], [3, 4, 0, 0, 0])

    def test_part_element_mapping(self, rng):
        s = fs(range(4), rng.standard_normal((4, 12)))
        t = tensorize(s, 5)
        for i in range(3):
            for j in range(5):
                col = j + i * 5
                expected = s.features[:, col] if col < 12 else np.zeros(4)
                assert_array_equal(t.data[i, j, :], expected)


class TestFuse:
    def test_shapes(self):
        a = Tensor3(np.ones((2, 3, 4)))
        assert fuse(a, Tensor3(np.zeros((5, 3, 4)))).dims == (7, 3, 4)
        assert fuse(a, Tensor3(np.zeros((1, 3, 4)))).dims == (3, 3, 4)

    def test_width_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            fuse(Tensor3(np.ones((2, 3, 4))), Tensor3(np.ones((2, 2, 4))))

    def test_person_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            fuse(Tensor3(np.ones((2, 3, 4))), Tensor3(np.ones((2, 3, 5))))


class TestAlign:
    def test_intersection_sorted(self):
        a = fs([3, 1, 2], [[3.0], [1.0], [2.0]])
        b = fs([2, 3, 5], [[20.0], [30.0], [50.0]], view="B")
        pv = align_views(a, b)
        assert pv.person_ids == (2, 3)
        assert_array_equal(pv.view_a.features, [[2.0], [3.0]])
        assert_array_equal(pv.view_b.features, [[20.0], [30.0]])

    def test_identical_ids(self):
        a = fs([1, 2], [[1.0], [2.0]])
        b = fs([1, 2], [[3.0], [4.0]], view="B")
        pv = align_views(a, b)
        assert pv.person_ids == (1, 2)
        assert_array_equal(pv.view_b.features, b.features)

    def test_disjoint(self):
        with pytest.raises(EmptyIntersectionError):
            align_views(fs([1], [[1.0]]), fs([2], [[1.0]], view="B"))

    def test_across_descriptors(self):
        first = PairedViews(fs([1, 2, 3], np.ones((3, 2))), fs([1, 2, 3], np.ones((3, 2)), view="B"))
        second = PairedViews(fs([2, 3, 4], np.ones((3, 1)), name="x"), fs([2, 3, 4], np.ones((3, 1)), view="B", name="x"))
        aligned = align_descriptors({"toy": first, "x": second})
        assert aligned["toy"].person_ids == (2, 3)
        assert aligned["x"].person_ids == (2, 3)


class TestRecipe:
    def test_fused_parts_and_round_trip(self, rng):
        a1, b1 = make_views(rng, 6, 7)
        a2, b2 = make_views(rng, 6, 4)
        views = {"one": PairedViews(a1, b1), "two": PairedViews(a2, b2)}
        train = [0, 2, 4]
        recipe = fit_recipe(views, ("one", "two"), 3, train)
        assert recipe.parts == 3 + 2
        assert recipe.label == "one+two"

        tensor = apply_recipe(recipe, view_sets(views, "A"), [1, 3])
        assert tensor.dims == (5, 3, 2)

        restored = recipe_from_dict(recipe_to_dict(recipe))
        again = apply_recipe(restored, view_sets(views, "A"), [1, 3])
        assert np.array_equal(again.data, tensor.data)

    def test_training_rows_are_standardized(self, rng):
        a, b = make_views(rng, 8, 4)
        views = {"toy": PairedViews(a, b)}
        train = list(range(8))
        recipe = fit_recipe(views, ("toy",), 4, train)
        ta = apply_recipe(recipe, view_sets(views, "A"), train)
        tb = apply_recipe(recipe, view_sets(views, "B"), train)
        pooled = np.concatenate([ta.data[0], tb.data[0]], axis=1)
        assert_allclose(pooled.mean(axis=1), 0.0, atol=1e-12)
        assert_allclose(pooled.std(axis=1), 1.0, rtol=1e-12)

    def test_without_standardization(self, rng):
        a, b = make_views(rng, 4, 3)
        views = {"toy": PairedViews(a, b)}
        recipe = fit_recipe(views, ("toy",), 3, [0, 1], standardize=False)
        assert recipe.stats is None
        t = apply_recipe(recipe, view_sets(views, "A"), [0, 1, 2, 3])
        assert_array_equal(t.data[0].T, a.features)
        assert recipe_from_dict(recipe_to_dict(recipe)).stats is None
