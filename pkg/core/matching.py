from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from core.errors import ShapeMismatchError
from core.tensor import Matrix


@dataclass(frozen=True)
class RankedList:
    order: NDArray[np.intp]             # gallery indices, best first
    distances: NDArray[np.float64]      # raw distances, aligned with `order`
    similarities: NDArray[np.float64]   # normalized scores in [0, 1], aligned with `order`

    def __len__(self) -> int:
        return int(self.order.size)

    def position_of(self, gallery_index: int) -> int:
        """0-based position of `gallery_index` in the ranking."""
        return int(np.flatnonzero(self.order == gallery_index)[0])


def mahalanobis(m_form: ArrayLike, x: ArrayLike, y: ArrayLike) -> float:
    """(x-y)^T M (x-y). M may be indefinite, so negative values are legal."""
    m = np.asarray(m_form, dtype=np.float64)
    diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    if diff.ndim != 1 or m.shape != (diff.size, diff.size):
        raise ShapeMismatchError(f"vectors of length {diff.size} do not fit a {m.shape} form")
    return float(diff @ m @ diff)


def gallery_distances(probe: ArrayLike, gallery: ArrayLike, m_form: ArrayLike) -> NDArray[np.float64]:
    """Distance from one probe to every gallery row, from explicit differences."""
    m = np.asarray(m_form, dtype=np.float64)
    g = np.atleast_2d(np.asarray(gallery, dtype=np.float64))
    p = np.asarray(probe, dtype=np.float64)
    if g.shape[1] != p.size or m.shape != (p.size, p.size):
        raise ShapeMismatchError(f"probe {p.shape}, gallery {g.shape} and form {m.shape} disagree")
    diff = g - p
    return np.einsum("gd,de,ge->g", diff, m, diff)


def distance_matrix(probes: ArrayLike, gallery: ArrayLike, m_form: ArrayLike) -> Matrix:
    """
    All probe x gallery distances via x^T M x + z^T M z - 2 x^T M z.

    Cheaper than explicit differences for large galleries; agrees with
    `mahalanobis` up to rounding.
    """
    m = np.asarray(m_form, dtype=np.float64)
    x = np.atleast_2d(np.asarray(probes, dtype=np.float64))
    z = np.atleast_2d(np.asarray(gallery, dtype=np.float64))
    if x.shape[1] != z.shape[1] or m.shape != (x.shape[1], x.shape[1]):
        raise ShapeMismatchError(f"probes {x.shape}, gallery {z.shape} and form {m.shape} disagree")
    xm = x @ m
    zm = z @ m
    self_x = np.einsum("nd,nd->n", xm, x)
    self_z = np.einsum("gd,gd->g", zm, z)
    return self_x[:, None] + self_z[None, :] - xm @ z.T - x @ zm.T


def normalize_scores(distances: ArrayLike) -> NDArray[np.float64]:
    """Min-max inversion into [0, 1] similarities; a flat row maps to all ones."""
    d = np.asarray(distances, dtype=np.float64)
    if d.size < 1:
        raise ValueError("need at least one distance")
    d_min, d_max = float(d.min()), float(d.max())
    if d_max == d_min:
        return np.ones_like(d)
    return (d_max - d) / (d_max - d_min)


def rank_distances(distances: ArrayLike) -> RankedList:
    """Stable ascending order; ties keep ascending gallery index."""
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 1 or d.size < 1:
        raise ShapeMismatchError("gallery must not be empty")
    order = np.argsort(d, kind="stable")
    return RankedList(order=order, distances=d[order], similarities=normalize_scores(d)[order])


def rank_gallery(probe: ArrayLike, gallery: ArrayLike, m_form: ArrayLike) -> RankedList:
    g = np.asarray(gallery, dtype=np.float64)
    if g.size == 0:
        raise ShapeMismatchError("gallery must not be empty")
    return rank_distances(gallery_distances(probe, g, m_form))
