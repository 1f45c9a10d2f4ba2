"""
gradsight.layers.gis
~~~~~~~~~~~~~~~~~~~~
Gradient Integration and Sum (GIS) layer: 3n input channels are split into
(S, Ex, Ey) triples and each triple becomes S + integrate_gradient(Ex, Ey).
No weights; the inputs are expected to be weighted upstream.
"""

import concurrent.futures
import time
from typing import Optional

import numpy as np
from loguru import logger

from ..errors import DimensionMismatchError, FieldValidationError
from ..models import ChannelLayout, FeatureBatch, GisConfig, ScalarField, TimingReport
from ..solver.gfc import DEFAULT_MARGIN, solve_laplacian, solve_laplacian_adjoint_array, solve_laplacian_array
from ..solver.green import GreenOperatorCache
from ..solver.stencils import divergence_array, forward_gradient_array
from .base import BaseLinearLayer

MIN_BENCH_SIZE = 8
WARMUP_RUNS = 3


def channel_indices(n: int, layout: ChannelLayout) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Input channel indices of the S, Ex and Ey slots of each triple."""
    k = np.arange(n)
    if layout == ChannelLayout.INTERLEAVED:
        return 3 * k, 3 * k + 1, 3 * k + 2
    return k, n + k, 2 * n + k


class GisLayer(BaseLinearLayer):

    def __init__(
        self,
        config: Optional[GisConfig] = None,
        op_cache: Optional[GreenOperatorCache] = None,
        margin: int = DEFAULT_MARGIN,
        workers: int = 1,
    ):
        super().__init__(op_cache=op_cache, margin=margin)
        self.config = config or GisConfig()
        self.workers = workers

    def _map_items(self, fn, n_items: int) -> None:
        # 各アイテムは独立。出力は index で書き込むのでスケジュールに依存しない
        if self.workers <= 1 or n_items == 1:
            for i in range(n_items):
                fn(i)
            return
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.workers) as ex:
            list(ex.map(fn, range(n_items)))

    def forward(self, batch: FeatureBatch) -> FeatureBatch:
        if batch.n_channels % 3 != 0:
            raise DimensionMismatchError(
                f"GIS input needs a multiple of 3 channels, got {batch.n_channels}"
            )
        n = batch.n_channels // 3
        s_idx, ex_idx, ey_idx = channel_indices(n, self.config.channel_layout)
        x = batch.values
        out = np.empty((batch.n_items, n, batch.height, batch.width))

        def _item(i: int) -> None:
            for k in range(n):
                lap = divergence_array(x[i, ex_idx[k]], x[i, ey_idx[k]])
                out[i, k] = x[i, s_idx[k]] + solve_laplacian_array(lap, self.op_cache, self.margin)

        self._map_items(_item, batch.n_items)
        return FeatureBatch.from_array(out)

    def adjoint(self, upstream: FeatureBatch) -> FeatureBatch:
        n = upstream.n_channels
        s_idx, ex_idx, ey_idx = channel_indices(n, self.config.channel_layout)
        y = upstream.values
        grad = np.empty((upstream.n_items, 3 * n, upstream.height, upstream.width))

        def _item(i: int) -> None:
            for k in range(n):
                grad[i, s_idx[k]] = y[i, k]
                solved = solve_laplacian_adjoint_array(y[i, k], self.op_cache, self.margin)
                grad[i, ex_idx[k]], grad[i, ey_idx[k]] = forward_gradient_array(solved)

        self._map_items(_item, upstream.n_items)
        return FeatureBatch.from_array(grad)


def gis_forward(
    batch: FeatureBatch,
    cfg: Optional[GisConfig] = None,
    op_cache: Optional[GreenOperatorCache] = None,
) -> FeatureBatch:
    return GisLayer(cfg, op_cache).forward(batch)


def gis_adjoint(
    upstream: FeatureBatch,
    cfg: Optional[GisConfig] = None,
    op_cache: Optional[GreenOperatorCache] = None,
) -> FeatureBatch:
    return GisLayer(cfg, op_cache).adjoint(upstream)


def _check_bench_size(height: int, width: int) -> None:
    if height < MIN_BENCH_SIZE or width < MIN_BENCH_SIZE:
        raise FieldValidationError(
            f"Benchmark sizes must be >= {MIN_BENCH_SIZE}, got {height}x{width}"
        )


def gis_timing_bench(
    height: int,
    width: int,
    batch: int,
    repeats: int,
    cfg: Optional[GisConfig] = None,
    seed: int = 0,
) -> TimingReport:
    """
    Time gis_forward on a random batch of single-triple items.
    The first run starts from an empty operator cache (cold); the next
    WARMUP_RUNS runs are discarded, then ``repeats`` warm runs are measured.
    """
    _check_bench_size(height, width)
    rng = np.random.default_rng(seed)
    x = FeatureBatch.from_array(rng.standard_normal((batch, 3, height, width)))
    layer = GisLayer(cfg, GreenOperatorCache())

    start = time.perf_counter()
    layer.forward(x)
    cold = time.perf_counter() - start

    for _ in range(WARMUP_RUNS):
        layer.forward(x)

    samples = []
    for _ in range(max(repeats, 1)):
        start = time.perf_counter()
        layer.forward(x)
        samples.append(time.perf_counter() - start)

    report = TimingReport(
        height=height,
        width=width,
        batch=batch,
        repeats=len(samples),
        solves_per_run=batch,
        cold_seconds=cold,
        warm_mean_seconds=float(np.mean(samples)),
        warm_std_seconds=float(np.std(samples)),
    )
    logger.debug(f"GIS bench {height}x{width} batch={batch}: cold {cold:.4f}s, warm {report.warm_mean_seconds:.4f}s")
    return report


def solve_timing_bench(height: int, width: int, count: int, seed: int = 0) -> TimingReport:
    """Baseline: ``count`` warm solve_laplacian calls on one field, timed one by one."""
    _check_bench_size(height, width)
    rng = np.random.default_rng(seed)
    lap = ScalarField.from_array(rng.standard_normal((height, width)))
    cache = GreenOperatorCache()

    start = time.perf_counter()
    solve_laplacian(lap, cache)
    cold = time.perf_counter() - start

    for _ in range(WARMUP_RUNS):
        solve_laplacian(lap, cache)

    samples = []
    for _ in range(max(count, 1)):
        start = time.perf_counter()
        solve_laplacian(lap, cache)
        samples.append(time.perf_counter() - start)

    return TimingReport(
        height=height,
        width=width,
        batch=1,
        repeats=len(samples),
        solves_per_run=1,
        cold_seconds=cold,
        warm_mean_seconds=float(np.mean(samples)),
        warm_std_seconds=float(np.std(samples)),
    )
