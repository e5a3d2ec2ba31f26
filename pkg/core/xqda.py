"""Cross-view quadratic discriminant analysis on vectors.

Intra-personal (same identity) and extra-personal (different identity) second
moments of cross-view differences drive a generalized eigenproblem; the
retained directions carry a Mahalanobis form learned in that subspace. The
tensor learner in `core.txqda` reuses every piece of this module per mode.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from core.errors import NoPositivePairsError, NumericalError, ShapeMismatchError, SingleLabelError
from core.tensor import Matrix

log = logging.getLogger("txreid.xqda")

SUBSPACE_EPS = 1e-6


@dataclass(frozen=True)
class ScatterPair:
    sigma_i: Matrix     # intra-personal second moment
    sigma_e: Matrix     # extra-personal second moment
    n_i: int
    n_e: int


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: NDArray[np.float64]    # descending
    eigenvectors: Matrix                # columns, unit norm, first nonzero entry positive

    def __len__(self) -> int:
        return int(self.eigenvalues.size)

    def top(self, r: int) -> Matrix:
        return self.eigenvectors[:, :r]


@dataclass(frozen=True)
class XqdaConfig:
    r: int
    eps: float = 1e-3

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError(f"output dimension r must be >= 1, got {self.r}")
        if self.eps <= 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")


@dataclass(frozen=True)
class XqdaModel:
    W: Matrix               # d x r
    M: Matrix               # r x r, symmetric
    reg_eps: float
    metadata: dict[str, Any] = field(default_factory=dict)

    def transform(self, x: ArrayLike) -> Matrix:
        """Rows of `x` mapped into the learned subspace."""
        return np.atleast_2d(np.asarray(x, dtype=np.float64)) @ self.W

    def distance(self, x: ArrayLike, z: ArrayLike) -> float:
        diff = (np.asarray(x, dtype=np.float64) - np.asarray(z, dtype=np.float64)) @ self.W
        return float(diff @ self.M @ diff)


def _symmetrize(s: Matrix) -> Matrix:
    return 0.5 * (s + s.T)


def _label_index(labels: Sequence[int], universe: NDArray[np.int64]) -> NDArray[np.intp]:
    return np.searchsorted(universe, np.asarray(labels, dtype=np.int64))


def pair_sums(
    xa: Matrix, labels_a: Sequence[int], xb: Matrix, labels_b: Sequence[int]
) -> tuple[Matrix, Matrix, int, int]:
    """
    Unnormalized sums of dd^T over cross-view pairs, d = x_i - z_j.

    Returns (same-label sum, all-pairs sum, same-label pair count, all-pairs count).
    Both sums use per-identity row totals, so no pair is ever materialized.
    """
    la = np.asarray(labels_a, dtype=np.int64)
    lb = np.asarray(labels_b, dtype=np.int64)
    universe = np.union1d(la, lb)
    ia = _label_index(la, universe)
    ib = _label_index(lb, universe)

    count_a = np.bincount(ia, minlength=universe.size)
    count_b = np.bincount(ib, minlength=universe.size)
    n_i = int(count_a @ count_b)

    class_a = np.zeros((universe.size, xa.shape[1]))
    class_b = np.zeros((universe.size, xb.shape[1]))
    np.add.at(class_a, ia, xa)
    np.add.at(class_b, ib, xb)

    # every x_i meets count_b[label] same-label partners (and vice versa)
    wa = count_b[ia].astype(np.float64)
    wb = count_a[ib].astype(np.float64)
    cross = class_a.T @ class_b
    intra = (xa.T * wa) @ xa + (xb.T * wb) @ xb - cross - cross.T

    n_a, n_b = xa.shape[0], xb.shape[0]
    sum_a = xa.sum(axis=0)
    sum_b = xb.sum(axis=0)
    total = n_b * (xa.T @ xa) + n_a * (xb.T @ xb) - np.outer(sum_a, sum_b) - np.outer(sum_b, sum_a)
    return intra, total, n_i, n_a * n_b


def _check_pairs(labels_a: Sequence[int], labels_b: Sequence[int], n_i: int, n_all: int) -> None:
    if len(set(labels_a)) < 2 or len(set(labels_b)) < 2:
        raise SingleLabelError("each view needs at least two distinct identities")
    if n_i == 0:
        raise NoPositivePairsError("no identity appears in both views")
    if n_all - n_i == 0:
        raise SingleLabelError("no cross-view pair with different identities")


def difference_moments(
    xa: ArrayLike, labels_a: Sequence[int], xb: ArrayLike, labels_b: Sequence[int]
) -> ScatterPair:
    """Second moments of same-label and different-label cross-view differences."""
    a = np.asarray(xa, dtype=np.float64)
    b = np.asarray(xb, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeMismatchError(f"views must share feature dim, got {a.shape} and {b.shape}")
    if a.shape[0] != len(labels_a) or b.shape[0] != len(labels_b):
        raise ShapeMismatchError("one label per row is required in each view")

    intra, total, n_i, n_all = pair_sums(a, labels_a, b, labels_b)
    _check_pairs(labels_a, labels_b, n_i, n_all)
    n_e = n_all - n_i
    return ScatterPair(
        sigma_i=_symmetrize(intra / n_i),
        sigma_e=_symmetrize((total - intra) / n_e),
        n_i=n_i,
        n_e=n_e,
    )


def regularize(s: ArrayLike, eps: float) -> Matrix:
    """Ridge scaled by the mean eigenvalue: s + eps*(trace(s)/d)*I (plain eps*I when trace is 0)."""
    mat = np.asarray(s, dtype=np.float64)
    d = mat.shape[0]
    trace = float(np.trace(mat))
    scale = eps * trace / d if trace != 0.0 else eps
    return mat + scale * np.eye(d)


def _canonical_signs(vectors: Matrix) -> Matrix:
    out = vectors / np.linalg.norm(vectors, axis=0)
    for c in range(out.shape[1]):
        col = out[:, c]
        nonzero = np.flatnonzero(np.abs(col) > 1e-12)
        if nonzero.size and col[nonzero[0]] < 0:
            out[:, c] = -col
    return out


def solve_gen_eig(sigma_e: ArrayLike, sigma_i: ArrayLike, *, positive_only: bool = True) -> Spectrum:
    """
    Solve sigma_e w = lambda sigma_i w through the Cholesky factor of sigma_i.

    With positive_only (the default) eigenpairs whose eigenvalue is not
    numerically positive are dropped; otherwise the whole spectrum is returned.
    """
    e = np.asarray(sigma_e, dtype=np.float64)
    i = np.asarray(sigma_i, dtype=np.float64)
    if e.shape != i.shape or e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise ShapeMismatchError(f"need two square matrices of one size, got {e.shape} and {i.shape}")

    try:
        chol = linalg.cholesky(i, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"intra-personal moment is not positive definite ({exc}); raise reg_eps") from None

    # L^-1 E L^-T
    half = linalg.solve_triangular(chol, e, lower=True)
    reduced = linalg.solve_triangular(chol, half.T, lower=True)
    values, vectors = linalg.eigh(_symmetrize(reduced))
    values = values[::-1]
    vectors = linalg.solve_triangular(chol.T, vectors[:, ::-1], lower=False)

    if positive_only:
        tol = max(float(values[0]), 0.0) * e.shape[0] * np.finfo(np.float64).eps
        keep = values > tol
        values, vectors = values[keep], vectors[:, keep]

    return Spectrum(eigenvalues=np.array(values), eigenvectors=_canonical_signs(vectors))


def subspace_metric(projected: ScatterPair, eps: float = SUBSPACE_EPS) -> Matrix:
    """M = inv(Sigma_I') - inv(Sigma_E') on regularized subspace moments."""
    inv_i = linalg.inv(regularize(projected.sigma_i, eps))
    inv_e = linalg.inv(regularize(projected.sigma_e, eps))
    return _symmetrize(inv_i - inv_e)


def xqda_train(
    xa: ArrayLike,
    xb: ArrayLike,
    labels_a: Sequence[int],
    labels_b: Sequence[int] | None = None,
    config: XqdaConfig | None = None,
) -> XqdaModel:
    """Learn W and M from paired cross-view vectors (rows are samples)."""
    if config is None:
        raise ValueError("xqda_train needs an XqdaConfig")
    labels_b = labels_a if labels_b is None else labels_b
    a = np.asarray(xa, dtype=np.float64)
    b = np.asarray(xb, dtype=np.float64)
    if config.r > a.shape[1]:
        raise ShapeMismatchError(f"r={config.r} exceeds feature dim {a.shape[1]}")

    moments = difference_moments(a, labels_a, b, labels_b)
    spectrum = solve_gen_eig(moments.sigma_e, regularize(moments.sigma_i, config.eps))

    warnings: list[str] = []
    r = min(config.r, len(spectrum))
    if r < config.r:
        msg = f"requested r={config.r} but only {len(spectrum)} positive eigenvalues; truncated to {r}"
        log.warning(msg)
        warnings.append(msg)
    if r == 0:
        raise NumericalError("generalized eigenproblem has no positive eigenvalue")

    w = spectrum.top(r)
    projected = ScatterPair(
        sigma_i=_symmetrize(w.T @ moments.sigma_i @ w),
        sigma_e=_symmetrize(w.T @ moments.sigma_e @ w),
        n_i=moments.n_i,
        n_e=moments.n_e,
    )
    metadata = {
        "requested_r": config.r,
        "r": r,
        "lambda_gt_one": int(np.count_nonzero(spectrum.eigenvalues > 1.0)),
        "warnings": warnings,
    }
    log.debug("xqda trained: d=%d r=%d lambda>1=%d", a.shape[1], r, metadata["lambda_gt_one"])
    return XqdaModel(W=w, M=subspace_metric(projected), reg_eps=config.eps, metadata=metadata)
