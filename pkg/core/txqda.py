"""Tensor cross-view discriminant learning.

Alternates mode-1 (parts) and mode-2 (features) discriminant projections on
paired tensors whose third mode indexes persons, then learns one Mahalanobis
form in the vectorized projected space. Persons (mode 3) are never reduced.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike

from core.errors import InvalidModeError, ShapeMismatchError
from core.tensor import Matrix, Tensor3, mode_product, unfold
from core.xqda import (
    ScatterPair,
    Spectrum,
    _check_pairs,
    _symmetrize,
    difference_moments,
    pair_sums,
    regularize,
    solve_gen_eig,
    subspace_metric,
)

log = logging.getLogger("txreid.txqda")


@dataclass(frozen=True)
class TxqdaConfig:
    p_out: int                  # mode-1 output dim
    d_out: int                  # mode-2 output dim
    max_iters: int = 5
    conv_tol: float = 1e-6
    reg_eps: float = 1e-3

    def __post_init__(self) -> None:
        if self.p_out < 1 or self.d_out < 1:
            raise ValueError(f"p_out and d_out must be >= 1, got {self.p_out}, {self.d_out}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.conv_tol < 0 or self.reg_eps <= 0:
            raise ValueError("conv_tol must be >= 0 and reg_eps > 0")

    def check_against(self, parts: int, width: int) -> None:
        if self.p_out > parts:
            raise ShapeMismatchError(f"p_out={self.p_out} exceeds the {parts} parts of mode 1")
        if self.d_out > width:
            raise ShapeMismatchError(f"d_out={self.d_out} exceeds the part width {width} of mode 2")


@dataclass(frozen=True)
class TxqdaModel:
    U1: Matrix                  # P x p_out
    U2: Matrix                  # w x d_out
    M: Matrix                   # (p_out*d_out) square
    iterations_run: int
    convergence_trace: tuple[float, ...]
    config: TxqdaConfig
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def parts(self) -> int:
        return self.U1.shape[0]

    @property
    def part_width(self) -> int:
        return self.U2.shape[0]

    def describe(self) -> dict[str, Any]:
        return {
            "config": asdict(self.config),
            "iterations_run": self.iterations_run,
            "convergence_trace": list(self.convergence_trace),
            **self.metadata,
        }


def _moment_sums(
    samples_a: list[Matrix], labels_a: Sequence[int], samples_b: list[Matrix], labels_b: Sequence[int]
) -> tuple[Matrix, Matrix, int, int]:
    intra = total = None
    n_i = n_all = 0
    for xa, xb in zip(samples_a, samples_b):
        part_intra, part_total, n_i, n_all = pair_sums(xa, labels_a, xb, labels_b)
        intra = part_intra if intra is None else intra + part_intra
        total = part_total if total is None else total + part_total
    return intra, total, n_i, n_all


def mode_scatter(
    slices_a: Tensor3,
    slices_b: Tensor3,
    labels_a: Sequence[int],
    labels_b: Sequence[int],
    u_other: ArrayLike,
    mode: int,
) -> ScatterPair:
    """
    Mode-wise intra/extra moments after projecting the other mode.

    Mode 1 projects features with u_other (w x d_out) and averages the P x P
    moments of each projected column; mode 2 projects parts with u_other
    (P x p_out) and averages the w x w moments of each projected row.
    """
    if mode not in (1, 2):
        raise InvalidModeError(f"scatter is defined for modes 1 and 2, got {mode}")
    if slices_a.dims[:2] != slices_b.dims[:2]:
        raise ShapeMismatchError(f"views have different part layouts {slices_a.dims} vs {slices_b.dims}")
    if slices_a.dims[2] != len(labels_a) or slices_b.dims[2] != len(labels_b):
        raise ShapeMismatchError("one label per person is required in each view")

    u = np.asarray(u_other, dtype=np.float64)
    other_axis = 1 if mode == 1 else 0
    if u.ndim != 2 or u.shape[0] != slices_a.dims[other_axis]:
        raise ShapeMismatchError(
            f"u_other must have {slices_a.dims[other_axis]} rows for mode {mode}, got {u.shape}"
        )

    if mode == 1:
        # B_k = A_k U2 -> (P, d_out, N); one P-dim sample per projected column
        pa = np.einsum("pwn,wc->pcn", slices_a.data, u)
        pb = np.einsum("pwn,wc->pcn", slices_b.data, u)
        samples_a = [pa[:, c, :].T for c in range(u.shape[1])]
        samples_b = [pb[:, c, :].T for c in range(u.shape[1])]
    else:
        # C_k = U1^T A_k -> (p_out, w, N); one w-dim sample per projected row
        pa = np.einsum("pr,pwn->rwn", u, slices_a.data)
        pb = np.einsum("pr,pwn->rwn", u, slices_b.data)
        samples_a = [pa[r, :, :].T for r in range(u.shape[1])]
        samples_b = [pb[r, :, :].T for r in range(u.shape[1])]

    intra, total, n_i, n_all = _moment_sums(samples_a, labels_a, samples_b, labels_b)
    _check_pairs(labels_a, labels_b, n_i, n_all)
    n_e = n_all - n_i
    spread = u.shape[1]
    return ScatterPair(
        sigma_i=_symmetrize(intra / (n_i * spread)),
        sigma_e=_symmetrize((total - intra) / (n_e * spread)),
        n_i=n_i,
        n_e=n_e,
    )


def _projector_delta(new: Matrix, old: Matrix) -> float:
    return float(np.linalg.norm(new @ new.T - old @ old.T, ord="fro") / new.shape[0])


def _mode_step(
    ta: Tensor3, tb: Tensor3, labels_a: Sequence[int], labels_b: Sequence[int],
    u_other: Matrix, mode: int, out_dim: int, eps: float,
) -> tuple[Matrix, Spectrum]:
    scatter = mode_scatter(ta, tb, labels_a, labels_b, u_other, mode)
    spectrum = solve_gen_eig(scatter.sigma_e, regularize(scatter.sigma_i, eps), positive_only=False)
    return spectrum.top(out_dim), spectrum


def _reduce(t: Tensor3, u1: Matrix, u2: Matrix) -> Matrix:
    reduced = mode_product(mode_product(t, u1, 1), u2, 2)
    # mode-3 unfolding rows are column-major vectorized person slices
    return unfold(reduced, 3)


def project(model: TxqdaModel, t: Tensor3) -> Matrix:
    """N x (p_out*d_out); row k is vec(U1^T A_k U2)."""
    if t.dims[:2] != (model.parts, model.part_width):
        raise ShapeMismatchError(
            f"tensor has parts x width {t.dims[:2]}, model expects {(model.parts, model.part_width)}"
        )
    return _reduce(t, model.U1, model.U2)


def txqda_train(
    tensor_a: Tensor3,
    tensor_b: Tensor3,
    labels_a: Sequence[int],
    labels_b: Sequence[int] | None = None,
    config: TxqdaConfig | None = None,
) -> TxqdaModel:
    if config is None:
        raise ValueError("txqda_train needs a TxqdaConfig")
    labels_b = labels_a if labels_b is None else labels_b
    if tensor_a.dims[:2] != tensor_b.dims[:2]:
        raise ShapeMismatchError(f"views have different part layouts {tensor_a.dims} vs {tensor_b.dims}")
    parts, width, _ = tensor_a.dims
    config.check_against(parts, width)

    u1 = np.eye(parts)[:, : config.p_out]
    u2 = np.eye(width)[:, : config.d_out]
    trace: list[float] = []
    spectra: dict[str, Spectrum] = {}

    for iteration in range(1, config.max_iters + 1):
        new_u1, spectra["mode1"] = _mode_step(
            tensor_a, tensor_b, labels_a, labels_b, u2, 1, config.p_out, config.reg_eps
        )
        new_u2, spectra["mode2"] = _mode_step(
            tensor_a, tensor_b, labels_a, labels_b, new_u1, 2, config.d_out, config.reg_eps
        )
        delta = max(_projector_delta(new_u1, u1), _projector_delta(new_u2, u2))
        u1, u2 = new_u1, new_u2
        trace.append(delta)
        log.debug("txqda iteration %d: subspace delta %.3e", iteration, delta)
        if delta < config.conv_tol:
            break
    else:
        log.info("txqda stopped at max_iters=%d (last delta %.3e)", config.max_iters, trace[-1])

    ya = _reduce(tensor_a, u1, u2)
    yb = _reduce(tensor_b, u1, u2)
    final = difference_moments(ya, labels_a, yb, labels_b)

    metadata = {
        "lambda_gt_one": {
            mode: int(np.count_nonzero(spectrum.eigenvalues > 1.0)) for mode, spectrum in spectra.items()
        },
        "train_persons": int(tensor_a.dims[2]),
    }
    return TxqdaModel(
        U1=u1,
        U2=u2,
        M=subspace_metric(final),
        iterations_run=len(trace),
        convergence_trace=tuple(trace),
        config=config,
        metadata=metadata,
    )
