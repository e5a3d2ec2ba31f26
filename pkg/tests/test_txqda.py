from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from core.errors import InvalidModeError, ShapeMismatchError
from core.matching import distance_matrix, gallery_distances
from core.tensor import Tensor3, mode_product, person_slice, unfold, vectorize
from core.txqda import TxqdaConfig, TxqdaModel, mode_scatter, project, txqda_train
from core.xqda import XqdaConfig, difference_moments, xqda_train


def paired_tensors(rng, parts, width, n, noise=0.2):
    base = rng.standard_normal((parts, width, n))
    a = Tensor3(base + noise * rng.standard_normal(base.shape))
    b = Tensor3(base + noise * rng.standard_normal(base.shape))
    return a, b


def naive_mode_scatter(a, b, labels, u_other, mode):
    parts = a.dims[0]
    size = parts if mode == 1 else a.dims[1]
    intra, extra = np.zeros((size, size)), np.zeros((size, size))
    n_i = n_e = 0
    for i, p in enumerate(labels):
        for j, q in enumerate(labels):
            if mode == 1:
                diff = person_slice(a, i) @ u_other - person_slice(b, j) @ u_other
                outer = diff @ diff.T
            else:
                diff = u_other.T @ person_slice(a, i) - u_other.T @ person_slice(b, j)
                outer = diff.T @ diff
            if p == q:
                intra += outer
                n_i += 1
            else:
                extra += outer
                n_e += 1
    spread = u_other.shape[1]
    return intra / (n_i * spread), extra / (n_e * spread)


class TestModeScatter:
    @pytest.mark.parametrize("mode", [1, 2])
    def test_matches_pair_loop(self, rng, mode):
        a, b = paired_tensors(rng, 3, 4, 6)
        labels = list(range(6))
        rows = 4 if mode == 1 else 3
        u_other, _ = np.linalg.qr(rng.standard_normal((rows, 2)))
        pair = mode_scatter(a, b, labels, labels, u_other, mode)
        intra, extra = naive_mode_scatter(a, b, labels, u_other, mode)
        assert np.linalg.norm(pair.sigma_i - intra) <= 1e-10 * np.linalg.norm(intra)
        assert np.linalg.norm(pair.sigma_e - extra) <= 1e-10 * np.linalg.norm(extra)

    def test_single_part_equals_vector_moments(self, rng):
        a, b = paired_tensors(rng, 1, 5, 12)
        labels = list(range(12))
        pair = mode_scatter(a, b, labels, labels, np.eye(1), 2)
        vector = difference_moments(unfold(a, 3), labels, unfold(b, 3), labels)
        assert_allclose(pair.sigma_i, vector.sigma_i, rtol=1e-12, atol=1e-12)
        assert_allclose(pair.sigma_e, vector.sigma_e, rtol=1e-12, atol=1e-12)

    def test_identical_views_have_zero_intra(self, rng):
        a, _ = paired_tensors(rng, 3, 4, 6)
        labels = list(range(6))
        pair = mode_scatter(a, a, labels, labels, np.eye(4)[:, :2], 1)
        assert pair.sigma_i.shape == (3, 3)
        assert_allclose(pair.sigma_i, 0.0, atol=1e-12)

    def test_mode3_rejected(self, rng):
        a, b = paired_tensors(rng, 2, 2, 4)
        with pytest.raises(InvalidModeError):
            mode_scatter(a, b, range(4), range(4), np.eye(2), 3)

    def test_wrong_projection_rows(self, rng):
        a, b = paired_tensors(rng, 2, 3, 4)
        with pytest.raises(ShapeMismatchError):
            mode_scatter(a, b, range(4), range(4), np.eye(2), 1)


class TestTrain:
    def test_shapes_and_unit_columns(self, rng):
        a, b = paired_tensors(rng, 4, 6, 20)
        model = txqda_train(a, b, list(range(20)), config=TxqdaConfig(p_out=2, d_out=3))
        assert model.U1.shape == (4, 2)
        assert model.U2.shape == (6, 3)
        assert model.M.shape == (6, 6)
        assert_allclose(model.M, model.M.T)
        assert_allclose(np.linalg.norm(model.U1, axis=0), 1.0)
        assert 1 <= model.iterations_run <= 5
        assert len(model.convergence_trace) == model.iterations_run
        assert set(model.metadata["lambda_gt_one"]) == {"mode1", "mode2"}

    def test_output_dims_checked(self, rng):
        a, b = paired_tensors(rng, 2, 3, 6)
        with pytest.raises(ShapeMismatchError):
            txqda_train(a, b, list(range(6)), config=TxqdaConfig(p_out=3, d_out=1))
        with pytest.raises(ShapeMismatchError):
            txqda_train(a, b, list(range(6)), config=TxqdaConfig(p_out=1, d_out=4))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TxqdaConfig(p_out=0, d_out=1)
        with pytest.raises(ValueError):
            TxqdaConfig(p_out=1, d_out=1, max_iters=0)

    def test_vector_degeneracy_matches_xqda(self, rng):
        n, d = 50, 20
        a, b = paired_tensors(rng, 1, d, n, noise=0.5)
        labels = list(range(n))
        r = 8
        model = txqda_train(a, b, labels, config=TxqdaConfig(p_out=1, d_out=r, max_iters=1, reg_eps=1e-3))
        vector = xqda_train(unfold(a, 3), unfold(b, 3), labels, config=XqdaConfig(r=r, eps=1e-3))
        assert vector.metadata["r"] == r

        tensor_d = distance_matrix(project(model, a), project(model, b), model.M)
        vector_d = distance_matrix(vector.transform(unfold(a, 3)), vector.transform(unfold(b, 3)), vector.M)
        assert_allclose(tensor_d, vector_d, rtol=1e-8, atol=1e-8 * np.abs(vector_d).max())

    def test_self_distance_is_zero(self, rng):
        a, b = paired_tensors(rng, 3, 4, 10)
        model = txqda_train(a, b, list(range(10)), config=TxqdaConfig(p_out=2, d_out=2))
        y = project(model, a)
        for k in range(10):
            assert gallery_distances(y[k], y, model.M)[k] == 0.0

    def test_stops_early_below_tolerance(self, rng):
        a, b = paired_tensors(rng, 2, 3, 15)
        model = txqda_train(a, b, list(range(15)), config=TxqdaConfig(p_out=1, d_out=2, max_iters=5, conv_tol=1e9))
        assert model.iterations_run == 1

    def test_runs_to_max_iters(self, rng):
        a, b = paired_tensors(rng, 2, 3, 15)
        model = txqda_train(a, b, list(range(15)), config=TxqdaConfig(p_out=1, d_out=2, max_iters=3, conv_tol=0.0))
        assert model.iterations_run == 3
        assert all(delta >= 0.0 for delta in model.convergence_trace)


class TestProject:
    def _model(self, parts, width, u1=None, u2=None) -> TxqdaModel:
        u1 = np.eye(parts) if u1 is None else u1
        u2 = np.eye(width) if u2 is None else u2
        dim = u1.shape[1] * u2.shape[1]
        return TxqdaModel(
            U1=u1, U2=u2, M=np.eye(dim), iterations_run=0, convergence_trace=(),
            config=TxqdaConfig(p_out=u1.shape[1], d_out=u2.shape[1]),
        )

    def test_identity_projection_vectorizes_slices(self, rng):
        t = Tensor3(rng.standard_normal((3, 4, 5)))
        y = project(self._model(3, 4), t)
        for k in range(5):
            assert_array_equal(y[k], vectorize(person_slice(t, k)))

    def test_single_person_matches_mode_products(self, rng):
        t = Tensor3(rng.standard_normal((3, 4, 1)))
        u1, u2 = rng.standard_normal((3, 2)), rng.standard_normal((4, 2))
        y = project(self._model(3, 4, u1, u2), t)
        expected = vectorize(mode_product(mode_product(t, u1, 1), u2, 2).data[:, :, 0])
        assert y.shape == (1, 4)
        assert_allclose(y[0], expected, rtol=1e-12, atol=1e-12)
        assert_allclose(y[0], vectorize(u1.T @ person_slice(t, 0) @ u2), rtol=1e-12, atol=1e-12)

    def test_projection_is_linear_in_scale(self, rng):
        a, b = paired_tensors(rng, 3, 4, 10)
        model = txqda_train(a, b, list(range(10)), config=TxqdaConfig(p_out=2, d_out=2))
        scaled = Tensor3(2.5 * a.data)
        assert_allclose(project(model, scaled), 2.5 * project(model, a), rtol=1e-10, atol=1e-12)

    def test_width_mismatch(self, rng):
        with pytest.raises(ShapeMismatchError):
            project(self._model(3, 4), Tensor3(rng.standard_normal((3, 5, 2))))
