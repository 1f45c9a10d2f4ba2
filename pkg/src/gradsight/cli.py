import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional, Sequence

import typer
from pydantic import ValidationError

from .api import GradSight
from .config import EvaluationPresetName, Settings, configure_logging, get_preset
from .demo import demo_disk, noise_sweep, write_noise_sweep
from .errors import GradSightError
from .models import ChannelLayout, VectorField
from .utils.geometry import minmax_normalize
from .utils.image import IMAGE_SUFFIXES, save_image
from .utils.report import write_curve_csv, write_metrics_csv
from .utils.tensor import load_batch, load_field, save_tensor

app = typer.Typer(no_args_is_help=True, add_completion=False)

# 終了コード: 0 成功 / 1 使い方 / 2 I/O / 3 数値・次元
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

# typer の版ごとに click 例外クラスの実体が異なる
_UsageError = next(c for c in typer.BadParameter.__mro__ if c.__name__ == "UsageError")


@contextmanager
def _handle_errors():
    try:
        yield
    except GradSightError as e:
        typer.secho(f"❌ {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=e.exit_code)
    except OSError as e:
        typer.secho(f"❌ {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=EXIT_IO)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
        typer.secho(f"❌ Invalid value: {problems}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=EXIT_NUMERIC)
    except ValueError as e:
        typer.secho(f"❌ {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=EXIT_NUMERIC)


def _require_file(path: Path) -> None:
    if not path.is_file():
        raise FileNotFoundError(f"File not found: {path}")


def _require_dir(path: Path) -> None:
    if not path.is_dir():
        raise FileNotFoundError(f"Directory not found: {path}")


def _client() -> GradSight:
    return GradSight(Settings.from_env())


@app.callback()
def _callback(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log numeric internals (DEBUG)."),
):
    with _handle_errors():
        settings = Settings.from_env()
        configure_logging("DEBUG" if verbose else settings.log_level)


@app.command("integrate")
def integrate_cmd(
    ex: Path = typer.Option(..., "--ex", help="Tensor file with the x component of the field"),
    ey: Path = typer.Option(..., "--ey", help="Tensor file with the y component of the field"),
    out: Path = typer.Option(..., "--out", help="Output tensor (or .pgm/.png for a normalized image)"),
):
    """
    Integrate a gradient field (Ex, Ey) with the Green's function solver.
    """
    with _handle_errors():
        _require_file(ex)
        _require_file(ey)
        field = VectorField.from_arrays(load_field(ex).values, load_field(ey).values)

        result = _client().integrate(field)

        out.parent.mkdir(parents=True, exist_ok=True)
        if out.suffix.lower() in IMAGE_SUFFIXES:
            save_image(minmax_normalize(result), out)
        else:
            save_tensor(result.values, out)
        typer.echo(f"💾 Saved integrated {result.height}x{result.width} field to {out}")


@app.command("gis")
def gis_cmd(
    in_path: Path = typer.Option(..., "--in", help="N x 3n x H x W input tensor"),
    out: Path = typer.Option(..., "--out", help="N x n x H x W output tensor"),
    layout: ChannelLayout = typer.Option(ChannelLayout.GROUPED, "--layout", help="Channel layout of the (S, Ex, Ey) triples"),
    report_time: bool = typer.Option(False, "--time", help="Report wall-clock time of the layer"),
):
    """
    Apply the gradient integration and sum (GIS) layer to a tensor file.
    """
    with _handle_errors():
        _require_file(in_path)
        batch = load_batch(in_path)

        client = _client()
        start = time.perf_counter()
        result = client.gis(batch, layout)
        elapsed = time.perf_counter() - start

        out.parent.mkdir(parents=True, exist_ok=True)
        save_tensor(result.values, out)
        typer.echo(f"💾 Saved {result.n_items}x{result.n_channels}x{result.height}x{result.width} output to {out}")
        if report_time:
            solves = result.n_items * result.n_channels
            typer.echo(f"⏱️  {elapsed:.6f} s total, {elapsed / solves * 1e3:.4f} ms per solve ({solves} solves)")


@app.command("eval")
def eval_cmd(
    pred: Path = typer.Option(..., "--pred", help="Directory of saliency maps"),
    gt: Path = typer.Option(..., "--gt", help="Directory of ground-truth masks (matched by file stem)"),
    out: Path = typer.Option(..., "--out", help="Per-image metrics CSV (plus an aggregate 'mean' row)"),
    mask: Optional[Path] = typer.Option(None, "--mask", help="Directory of valid-pixel masks"),
    preset: EvaluationPresetName = typer.Option(EvaluationPresetName.STANDARD, "--preset", help="Threshold grid and beta^2 preset"),
    levels: Optional[int] = typer.Option(None, "--levels", min=2, help="Threshold levels (256 standard, 51 fast)"),
    beta2: Optional[float] = typer.Option(None, "--beta2", min=0.0, help="beta^2 of the F-measure"),
    curves: Optional[Path] = typer.Option(None, "--curves", help="Directory for per-image curve CSVs"),
    normalize: bool = typer.Option(False, "--normalize", help="Min-max normalize each prediction first"),
):
    """
    Evaluate saliency maps: Fm, Pmax, meanPR, AUC, MAE, RMSE, CE.
    """
    with _handle_errors():
        _require_dir(pred)
        _require_dir(gt)
        if mask is not None:
            _require_dir(mask)

        chosen = get_preset(preset)
        result = _client().evaluate_dirs(
            pred,
            gt,
            mask,
            levels=levels if levels is not None else chosen.levels,
            beta_squared=beta2 if beta2 is not None else chosen.beta_squared,
            normalize=normalize,
            with_curves=curves is not None,
        )

        out.parent.mkdir(parents=True, exist_ok=True)
        write_metrics_csv([*result.reports, result.aggregate], out)
        if curves is not None:
            curves.mkdir(parents=True, exist_ok=True)
            for name, curve in result.curves.items():
                write_curve_csv(curve, curves / f"{name}.csv")

        agg = result.aggregate
        typer.echo(
            f"✨ {len(result.reports)} map(s): Fm={agg.f_measure:.4f} AUC={agg.auc:.4f} "
            f"MAE={agg.mae:.4f} RMSE={agg.rmse:.4f} CE={agg.cross_entropy:.4f}"
        )
        typer.echo(f"💾 Saved metrics to {out}")


@app.command("perturb")
def perturb_cmd(
    in_dir: Path = typer.Option(..., "--in", help="Input image directory"),
    out_dir: Path = typer.Option(..., "--out", help="Output image directory"),
    noise: Optional[float] = typer.Option(None, "--noise", min=0.0, max=1.0, help="Fraction of pixels set to 0/1"),
    seed: int = typer.Option(0, "--seed", min=0, help="Seed of the noise stream"),
    darken_factor: Optional[float] = typer.Option(None, "--darken", min=0.0, max=1.0, help="Brightness multiplier (0.2 = reduced by 80%)"),
):
    """
    Degrade a directory of images with salt-and-pepper noise and/or darkening.
    """
    if in_dir.resolve() == out_dir.resolve():
        raise typer.BadParameter("--out must differ from --in (inputs are never overwritten)")
    with _handle_errors():
        _require_dir(in_dir)
        written = _client().perturb_dir(in_dir, out_dir, noise=noise, seed=seed, darken_factor=darken_factor)
        typer.echo(f"💾 Wrote {len(written)} image(s) to {out_dir}")


def _parse_levels(raw: Optional[str]) -> List[float]:
    if not raw:
        return []
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise typer.BadParameter(f"--noise-levels expects comma separated numbers, got '{raw}'")


@app.command("demo-disk")
def demo_disk_cmd(
    size: int = typer.Option(64, "--size", min=3, help="Grid size in pixels"),
    radius: float = typer.Option(16, "--radius", help="Disk radius in pixels (0 < r < size/2)"),
    out: Path = typer.Option(..., "--out", help="Output directory"),
    noise_levels: Optional[str] = typer.Option(None, "--noise-levels", help="e.g. 0.1,0.3,0.5 to add a noise sweep"),
    seed: int = typer.Option(0, "--seed", min=0, help="Seed of the noise sweep"),
):
    """
    Fill an analytic disk from its edges and score the result.
    """
    levels = _parse_levels(noise_levels)
    with _handle_errors():
        client = _client()
        result = demo_disk(size, radius, out, client.op_cache)
        typer.echo(f"✨ Fm={result.report.f_measure:.4f} AUC={result.report.auc:.4f} MAE={result.report.mae:.6f}")
        if levels:
            rows = noise_sweep(size, radius, levels, seed, client.op_cache)
            path = write_noise_sweep(rows, out)
            typer.echo(f"💾 Saved noise sweep ({len(rows)} levels) to {path}")
        typer.echo(f"💾 Saved demo artifacts to {out}")


@app.command("bench")
def bench_cmd(
    size: int = typer.Option(64, "--size", min=8, help="Field size (size x size)"),
    count: int = typer.Option(100, "--count", min=1, help="Number of timed solves"),
    batch: int = typer.Option(10, "--batch", min=1, help="GIS batch size"),
):
    """
    Time warm-cache solves and the GIS layer (first 3 runs excluded).
    """
    with _handle_errors():
        result = _client().bench(size, count, batch)
        s, g = result.solve, result.gis
        total = s.warm_mean_seconds * s.repeats
        typer.echo(f"⏱️  solve_laplacian {size}x{size}: mean {s.warm_mean_seconds * 1e3:.4f} ms ± {s.warm_std_seconds * 1e3:.4f} ms")
        typer.echo(f"   total {total:.4f} s for {s.repeats} solves (cold first solve {s.cold_seconds * 1e3:.3f} ms)")
        typer.echo(f"   gis_forward per solve {g.per_solve_seconds * 1e3:.4f} ms (batch {g.batch}), overhead x{result.gis_overhead:.2f}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit status instead of exiting."""
    try:
        rv = app(args=list(argv) if argv is not None else None, prog_name="gradsight", standalone_mode=False)
    except _UsageError as e:
        typer.secho(f"❌ {e.format_message()}", fg=typer.colors.RED, err=True)
        return EXIT_USAGE
    except typer.Exit as e:
        return e.exit_code
    except typer.Abort:
        return EXIT_USAGE
    return rv if isinstance(rv, int) else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
