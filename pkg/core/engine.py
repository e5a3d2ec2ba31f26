from __future__ import annotations

import asyncio
import logging
import time
from dataclasses import asdict, dataclass
from typing import Any, Callable, Literal, Sequence

import numpy as np

from core.errors import FoldFailedError, ShapeMismatchError
from core.evaluation import CmcCurve, ExperimentReport, Fold, aggregate_cmc, compute_cmc, make_folds, summarize
from core.matching import distance_matrix, rank_distances
from core.tensor import Matrix, Tensor3, unfold
from core.txqda import TxqdaConfig, project, txqda_train
from core.xqda import XqdaConfig, xqda_train
from features.base import FoldTensors, TensorSource

log = logging.getLogger("txreid.engine")

Method = Literal["txqda", "xqda", "euclidean"]
Direction = Literal["a_to_b", "b_to_a", "both"]


@dataclass(frozen=True)
class ProtocolConfig:
    dims: tuple[int, ...]           # d_out for txqda, r for xqda
    p_out: int = 1
    method: Method = "txqda"
    max_iters: int = 5
    conv_tol: float = 1e-6
    reg_eps: float = 1e-3
    folds: int = 10
    train_fraction: float = 0.5
    seed: int = 0
    direction: Direction = "a_to_b"
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.dims:
            raise ValueError("dims sweep must not be empty")
        if self.method not in ("txqda", "xqda", "euclidean"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.direction not in ("a_to_b", "b_to_a", "both"):
            raise ValueError(f"unknown direction {self.direction!r}")

    def snapshot(self) -> dict[str, Any]:
        data = asdict(self)
        data["dims"] = list(self.dims)
        data.pop("workers")     # parallelism never changes results
        return data


@dataclass(frozen=True)
class TensorPair:
    """Prebuilt paired tensors (mode 3 aligned with `ids`), used without preprocessing."""

    tensor_a: Tensor3
    tensor_b: Tensor3
    ids: tuple[int, ...]
    label: str = "tensor"

    def __post_init__(self) -> None:
        if self.tensor_a.dims != self.tensor_b.dims:
            raise ShapeMismatchError(f"paired tensors differ: {self.tensor_a.dims} vs {self.tensor_b.dims}")
        if self.tensor_a.dims[2] != len(self.ids):
            raise ShapeMismatchError(f"{len(self.ids)} ids for {self.tensor_a.dims[2]} persons")

    @property
    def person_ids(self) -> tuple[int, ...]:
        return self.ids

    def _take(self, t: Tensor3, ids: Sequence[int]) -> Tensor3:
        position = {pid: k for k, pid in enumerate(self.ids)}
        return Tensor3(t.data[:, :, [position[pid] for pid in ids]])

    def prepare(self, train_ids: Sequence[int], test_ids: Sequence[int]) -> FoldTensors:
        return FoldTensors(
            train_a=self._take(self.tensor_a, train_ids),
            train_b=self._take(self.tensor_b, train_ids),
            train_ids=tuple(train_ids),
            test_a=self._take(self.tensor_a, test_ids) if test_ids else None,
            test_b=self._take(self.tensor_b, test_ids) if test_ids else None,
            test_ids=tuple(test_ids),
        )


@dataclass(frozen=True)
class Matcher:
    embed: Callable[[Tensor3], Matrix]
    form: Matrix


def fit_matcher(tensors: FoldTensors, dim: int, proto: ProtocolConfig) -> Matcher:
    ids = tensors.train_ids
    if proto.method == "txqda":
        config = TxqdaConfig(
            p_out=proto.p_out,
            d_out=dim,
            max_iters=proto.max_iters,
            conv_tol=proto.conv_tol,
            reg_eps=proto.reg_eps,
        )
        model = txqda_train(tensors.train_a, tensors.train_b, ids, ids, config)
        return Matcher(embed=lambda t: project(model, t), form=model.M)

    xa = unfold(tensors.train_a, 3)
    if proto.method == "xqda":
        model = xqda_train(xa, unfold(tensors.train_b, 3), ids, ids, XqdaConfig(r=dim, eps=proto.reg_eps))
        return Matcher(embed=lambda t: model.transform(unfold(t, 3)), form=model.M)

    return Matcher(embed=lambda t: unfold(t, 3), form=np.eye(xa.shape[1]))


def _cmc(probes: Matrix, gallery: Matrix, form: Matrix) -> CmcCurve:
    distances = distance_matrix(probes, gallery, form)
    rankings = [rank_distances(row) for row in distances]
    # probes and gallery are both laid out in test-id order
    return compute_cmc(rankings, list(range(len(rankings))))


def evaluate_fold(tensors: FoldTensors, dim: int, proto: ProtocolConfig) -> CmcCurve:
    if tensors.test_a is None or tensors.test_b is None:
        raise ValueError("fold has no test persons")
    matcher = fit_matcher(tensors, dim, proto)
    ya = matcher.embed(tensors.test_a)
    yb = matcher.embed(tensors.test_b)
    curves = []
    if proto.direction in ("a_to_b", "both"):
        curves.append(_cmc(ya, yb, matcher.form))
    if proto.direction in ("b_to_a", "both"):
        curves.append(_cmc(yb, ya, matcher.form))
    return aggregate_cmc(curves)


@dataclass(frozen=True)
class FoldOutcome:
    fold: int
    curves: dict[int, CmcCurve]     # by dim
    seconds: dict[int, float]


def _run_fold(source: TensorSource, fold: Fold, proto: ProtocolConfig) -> FoldOutcome:
    try:
        tensors = source.prepare(fold.train_ids, fold.test_ids)
    except Exception as exc:
        raise FoldFailedError(fold.index, None, exc) from exc
    curves: dict[int, CmcCurve] = {}
    seconds: dict[int, float] = {}
    for dim in proto.dims:
        start = time.perf_counter()
        try:
            curves[dim] = evaluate_fold(tensors, dim, proto)
        except Exception as exc:
            raise FoldFailedError(fold.index, dim, exc) from exc
        seconds[dim] = time.perf_counter() - start
        log.debug("fold %d dim %d: rank-1 %.4f", fold.index, dim, curves[dim].at(1))
    return FoldOutcome(fold=fold.index, curves=curves, seconds=seconds)


class ExperimentEngine:
    """
    Cross-validated evaluation of one tensor source over a Dim sweep.

    Folds run concurrently on worker threads (numpy releases the GIL in
    BLAS/LAPACK); reports are assembled in fold order once every fold is done.
    """

    def __init__(self, *, workers: int = 1) -> None:
        self.workers = max(1, workers)

    async def run(self, source: TensorSource, proto: ProtocolConfig) -> list[ExperimentReport]:
        start = time.perf_counter()
        plan = make_folds(source.person_ids, proto.folds, proto.train_fraction, proto.seed)
        gate = asyncio.Semaphore(self.workers)

        async def run_one(fold: Fold) -> FoldOutcome:
            async with gate:
                return await asyncio.to_thread(_run_fold, source, fold, proto)

        outcomes = await asyncio.gather(*(run_one(fold) for fold in plan), return_exceptions=True)

        failures = [o for o in outcomes if isinstance(o, BaseException)]
        if failures:
            first = failures[0]
            if isinstance(first, FoldFailedError):
                log.error("%s", first, exc_info=first.cause)
            raise first

        reports = [self._assemble(source, proto, dim, outcomes) for dim in proto.dims]
        log.info(
            "%s/%s: %d folds x %d dims in %d ms",
            source.label, proto.method, len(plan), len(proto.dims), int((time.perf_counter() - start) * 1000),
        )
        return reports

    @staticmethod
    def _assemble(
        source: TensorSource, proto: ProtocolConfig, dim: int, outcomes: Sequence[FoldOutcome]
    ) -> ExperimentReport:
        fold_curves = tuple(outcome.curves[dim] for outcome in outcomes)
        mean = aggregate_cmc(fold_curves)
        config = {**proto.snapshot(), "features": source.label, "persons": len(source.person_ids)}
        return ExperimentReport(
            features=source.label,
            method=proto.method,
            dim=dim,
            config=config,
            fold_curves=fold_curves,
            mean_curve=mean,
            summary=summarize(mean),
            runtimes=tuple(outcome.seconds[dim] for outcome in outcomes),
        )


def run_protocol(source: TensorSource, proto: ProtocolConfig) -> list[ExperimentReport]:
    """Synchronous entry point: one report per Dim in `proto.dims`."""
    return asyncio.run(ExperimentEngine(workers=proto.workers).run(source, proto))
