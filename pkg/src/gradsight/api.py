import zlib
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from loguru import logger
from pydantic import BaseModel, ConfigDict

from .config import Settings
from .errors import DimensionMismatchError
from .layers.gis import GisLayer, gis_timing_bench, solve_timing_bench
from .metrics.saliency import evaluate_batch, pr_curve
from .models import (
    ChannelLayout,
    FeatureBatch,
    GisConfig,
    GroundTruth,
    MetricReport,
    NoiseSpec,
    PRCurve,
    ScalarField,
    TimingReport,
    ValidMask,
    VectorField,
)
from .perturbation import darken, salt_pepper
from .solver.gfc import integrate_gradient
from .solver.green import GreenOperatorCache
from .utils.geometry import minmax_normalize
from .utils.image import list_images, load_image, save_image


class EvaluationResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    reports: List[MetricReport]
    aggregate: MetricReport
    curves: Dict[str, PRCurve]


class BenchResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    solve: TimingReport
    gis: TimingReport

    @property
    def gis_overhead(self) -> float:
        """Per-solve cost of gis_forward relative to a bare solve_laplacian."""
        return self.gis.per_solve_seconds / self.solve.per_solve_seconds


def image_seed(seed: int, name: str) -> int:
    """Per-image seed: independent of directory order, stable across runs."""
    return (seed + zlib.crc32(name.encode("utf-8"))) % (1 << 64)


class GradSight:
    """
    GradSight API Client.

    High-level entry point shared by the CLI. Holds one Green operator cache so
    that every solve of a given size reuses the same spectrum.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings.from_env()
        self.op_cache = GreenOperatorCache()

    # --- GFC ---

    def integrate(self, field: VectorField) -> ScalarField:
        return integrate_gradient(field, self.op_cache, self.settings.pad_margin)

    def gis(self, batch: FeatureBatch, layout: ChannelLayout = ChannelLayout.GROUPED) -> FeatureBatch:
        layer = GisLayer(
            GisConfig(channel_layout=layout),
            op_cache=self.op_cache,
            margin=self.settings.pad_margin,
            workers=self.settings.workers,
        )
        return layer.forward(batch)

    # --- Evaluation ---

    def evaluate_dirs(
        self,
        pred_dir: str | Path,
        gt_dir: str | Path,
        mask_dir: Optional[str | Path] = None,
        levels: Optional[int] = None,
        beta_squared: Optional[float] = None,
        normalize: bool = False,
        with_curves: bool = False,
    ) -> EvaluationResult:
        """
        Score every prediction whose stem matches a ground-truth stem (case-sensitive).
        Masks, when given, are matched by stem as well; non-zero mask pixels are counted.
        """
        levels = levels if levels is not None else self.settings.pr_levels
        beta_squared = beta_squared if beta_squared is not None else self.settings.beta_squared

        preds = list_images(pred_dir)
        gts = list_images(gt_dir)
        masks = list_images(mask_dir) if mask_dir is not None else {}

        for name in sorted(set(preds) - set(gts)):
            logger.warning(f"No ground truth for prediction '{name}', skipped")
        names = sorted(set(preds) & set(gts))
        if not names:
            raise FileNotFoundError(f"No prediction in {pred_dir} matches a ground truth in {gt_dir}")

        items: List[Tuple[str, ScalarField, GroundTruth, Optional[ValidMask]]] = []
        for name in names:
            s = load_image(preds[name])
            if normalize:
                s = minmax_normalize(s)
            g = GroundTruth.from_field(load_image(gts[name]), binarize=True)
            if s.shape != g.shape:
                raise DimensionMismatchError(f"{name}: prediction {s.shape} vs ground truth {g.shape}")
            mask = None
            if mask_dir is not None:
                if name not in masks:
                    raise FileNotFoundError(f"No mask for '{name}' in {mask_dir}")
                mask = ValidMask.from_array(load_image(masks[name]).values > 0)
            items.append((name, s, g, mask))

        logger.info(f"🚀 Evaluating {len(items)} map(s) at {levels} levels (beta^2={beta_squared})")
        reports, aggregate = evaluate_batch(
            items, levels, beta_squared, self.settings.ce_epsilon, workers=self.settings.workers
        )

        curves: Dict[str, PRCurve] = {}
        if with_curves:
            for name, s, g, mask in items:
                curves[name] = pr_curve(s, g, mask, levels)
        return EvaluationResult(reports=reports, aggregate=aggregate, curves=curves)

    # --- Perturbation ---

    def perturb_dir(
        self,
        in_dir: str | Path,
        out_dir: str | Path,
        noise: Optional[float] = None,
        seed: int = 0,
        darken_factor: Optional[float] = None,
    ) -> List[Path]:
        """Noise is applied first, then darkening. Files keep their names."""
        images = list_images(in_dir)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

        written = []
        for name, path in images.items():
            field = load_image(path)
            if noise is not None:
                field = salt_pepper(field, NoiseSpec(fraction=noise, seed=image_seed(seed, name)))
            if darken_factor is not None:
                field = darken(field, darken_factor)
            target = out / path.name
            save_image(field, target)
            written.append(target)
        logger.info(f"💾 Perturbed {len(written)} image(s) into {out}")
        return written

    # --- Benchmark ---

    def bench(self, size: int, count: int, batch: int = 10) -> BenchResult:
        solve = solve_timing_bench(size, size, count)
        gis = gis_timing_bench(size, size, batch, repeats=max(count // max(batch, 1), 1))
        return BenchResult(solve=solve, gis=gis)
