import numpy as np
import pytest
from loguru import logger

from gradsight.cli import run
from gradsight.layers.gis import gis_forward
from gradsight.models import FeatureBatch, ScalarField
from gradsight.solver.stencils import forward_gradient_array
from gradsight.utils.image import load_image, save_image
from gradsight.utils.report import read_rows
from gradsight.utils.tensor import load_tensor, save_tensor


@pytest.fixture(autouse=True)
def _detach_log_sinks():
    # CLI のコールバックが capsys 中の stderr に sink を張るので、テスト後に外す
    yield
    logger.remove()


def _write_images(directory, images: dict) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name, values in images.items():
        save_image(ScalarField.from_array(values), directory / f"{name}.pgm")


def _blob(size: int = 24) -> np.ndarray:
    g = np.zeros((size, size))
    g[6:16, 8:18] = 1.0
    return g


# --- integrate ---

def test_integrate_tensor_round_trip(tmp_path, rng, border_zero_image):
    img = border_zero_image(rng, 32, 24)
    gx, gy = forward_gradient_array(img)
    save_tensor(gx, tmp_path / "ex.tensor")
    save_tensor(gy, tmp_path / "ey.tensor")

    code = run(["integrate", "--ex", str(tmp_path / "ex.tensor"), "--ey", str(tmp_path / "ey.tensor"),
                "--out", str(tmp_path / "out.tensor")])
    assert code == 0
    assert np.max(np.abs(load_tensor(tmp_path / "out.tensor") - img)) <= 1e-3

    code = run(["integrate", "--ex", str(tmp_path / "ex.tensor"), "--ey", str(tmp_path / "ey.tensor"),
                "--out", str(tmp_path / "out.pgm")])
    assert code == 0
    assert load_image(tmp_path / "out.pgm").shape == (32, 24)


def test_integrate_exit_codes(tmp_path):
    save_tensor(np.zeros((4, 4)), tmp_path / "a.tensor")
    save_tensor(np.zeros((4, 5)), tmp_path / "b.tensor")
    out = str(tmp_path / "o.tensor")

    assert run(["integrate", "--ex", str(tmp_path / "a.tensor")]) == 1
    assert run(["integrate", "--ex", str(tmp_path / "missing.tensor"), "--ey", str(tmp_path / "a.tensor"), "--out", out]) == 2
    assert run(["integrate", "--ex", str(tmp_path / "a.tensor"), "--ey", str(tmp_path / "b.tensor"), "--out", out]) == 3

    (tmp_path / "junk.tensor").write_bytes(b"garbage")
    assert run(["integrate", "--ex", str(tmp_path / "junk.tensor"), "--ey", str(tmp_path / "a.tensor"), "--out", out]) == 2


def test_unknown_command_is_a_usage_error():
    assert run(["no-such-command"]) == 1


def test_unknown_option_is_a_usage_error(capsys):
    assert run(["bench", "--bogus"]) == 1
    assert "--bogus" in capsys.readouterr().err


def test_malformed_environment_value_is_reported(monkeypatch, tmp_path, capsys):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("GRADSIGHT_PR_LEVELS", "many")
    assert run(["bench", "--size", "8", "--count", "1", "--batch", "1"]) == 3
    err = capsys.readouterr().err.strip()
    assert "pr_levels" in err
    assert len(err.splitlines()) == 1


# --- gis ---

def test_gis_command_matches_library(tmp_path, rng, capsys):
    x = rng.standard_normal((2, 6, 12, 10))
    save_tensor(x, tmp_path / "in.tensor")

    code = run(["gis", "--in", str(tmp_path / "in.tensor"), "--out", str(tmp_path / "out.tensor"), "--time"])
    assert code == 0
    out = load_tensor(tmp_path / "out.tensor")
    assert out.shape == (2, 2, 12, 10)
    np.testing.assert_allclose(out, gis_forward(FeatureBatch.from_array(x)).values, atol=1e-12)
    assert "ms per solve" in capsys.readouterr().out


def test_gis_interleaved_layout(tmp_path, rng):
    x = np.zeros((1, 3, 8, 8))
    x[0, 0] = rng.random((8, 8))
    save_tensor(x, tmp_path / "in.tensor")
    code = run(["gis", "--in", str(tmp_path / "in.tensor"), "--out", str(tmp_path / "out.tensor"),
                "--layout", "interleaved"])
    assert code == 0
    assert np.array_equal(load_tensor(tmp_path / "out.tensor")[0, 0], x[0, 0])


def test_gis_channel_count_error(tmp_path):
    save_tensor(np.zeros((1, 4, 8, 8)), tmp_path / "in.tensor")
    assert run(["gis", "--in", str(tmp_path / "in.tensor"), "--out", str(tmp_path / "out.tensor")]) == 3


# --- eval ---

def test_eval_identical_maps(tmp_path):
    maps = {"a": _blob(), "b": 1.0 - _blob()}
    _write_images(tmp_path / "pred", maps)
    _write_images(tmp_path / "gt", maps)

    code = run(["eval", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt"),
                "--out", str(tmp_path / "metrics.csv"), "--curves", str(tmp_path / "curves")])
    assert code == 0

    rows = read_rows(tmp_path / "metrics.csv")
    assert [r["name"] for r in rows] == ["a", "b", "mean"]
    for row in rows:
        assert float(row["Fm"]) == pytest.approx(1.0)
        assert float(row["AUC"]) == pytest.approx(1.0)
        assert float(row["MAE"]) == 0.0

    curve = read_rows(tmp_path / "curves" / "a.csv")
    assert len(curve) == 256
    assert list(curve[0]) == ["threshold", "P", "R", "notR"]


def test_eval_fast_preset_and_mask(tmp_path):
    pred = _blob() * 0.8
    gt = _blob()
    valid = np.ones_like(gt)
    valid[:, :4] = 0
    _write_images(tmp_path / "pred", {"x": pred})
    _write_images(tmp_path / "gt", {"x": gt})
    _write_images(tmp_path / "mask", {"x": valid})

    code = run(["eval", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt"),
                "--mask", str(tmp_path / "mask"), "--preset", "fast",
                "--out", str(tmp_path / "m.csv"), "--curves", str(tmp_path / "c")])
    assert code == 0
    assert len(read_rows(tmp_path / "c" / "x.csv")) == 51
    row = read_rows(tmp_path / "m.csv")[0]
    assert float(row["Fm"]) == pytest.approx(1.0)
    assert float(row["MAE"]) > 0.0


def test_eval_errors(tmp_path):
    _write_images(tmp_path / "pred", {"a": _blob(24)})
    _write_images(tmp_path / "gt", {"a": _blob(20)})
    _write_images(tmp_path / "other", {"zzz": _blob(24)})
    out = str(tmp_path / "m.csv")

    assert run(["eval", "--pred", str(tmp_path / "missing"), "--gt", str(tmp_path / "gt"), "--out", out]) == 2
    assert run(["eval", "--pred", str(tmp_path / "other"), "--gt", str(tmp_path / "gt"), "--out", out]) == 2
    assert run(["eval", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt"), "--out", out]) == 3
    assert run(["eval", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt"), "--out", out,
                "--levels", "1"]) == 1
    assert run(["eval", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt"), "--out", out,
                "--preset", "standrad"]) == 1


# --- perturb ---

def test_perturb_directory(tmp_path, rng):
    images = {"p": rng.random((20, 20)), "q": rng.random((10, 30))}
    _write_images(tmp_path / "in", images)
    before = {f.name: f.read_bytes() for f in (tmp_path / "in").iterdir()}

    args = ["perturb", "--in", str(tmp_path / "in"), "--noise", "0.3", "--seed", "4", "--darken", "0.2"]
    assert run([*args, "--out", str(tmp_path / "o1")]) == 0
    assert run([*args, "--out", str(tmp_path / "o2")]) == 0

    assert {f.name: f.read_bytes() for f in (tmp_path / "in").iterdir()} == before
    for name in before:
        assert (tmp_path / "o1" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()
        out = load_image(tmp_path / "o1" / name).values
        # ノイズの後に暗くするので値は 0.2 以下
        assert out.max() <= 0.2 + 1 / 255


def test_perturb_refuses_to_overwrite_inputs(tmp_path, rng):
    _write_images(tmp_path / "in", {"p": rng.random((8, 8))})
    assert run(["perturb", "--in", str(tmp_path / "in"), "--out", str(tmp_path / "in"), "--noise", "0.1"]) == 1
    assert run(["perturb", "--in", str(tmp_path / "in"), "--out", str(tmp_path / "o"), "--noise", "1.5"]) == 1


# --- demo-disk ---

def test_demo_disk(tmp_path):
    assert run(["demo-disk", "--size", "64", "--radius", "16", "--out", str(tmp_path / "d1")]) == 0
    assert run(["demo-disk", "--size", "64", "--radius", "16", "--out", str(tmp_path / "d2")]) == 0

    row = read_rows(tmp_path / "d1" / "metrics.csv")[0]
    assert float(row["Fm"]) >= 0.95
    assert float(row["AUC"]) >= 0.99

    names = ["edges_x.tensor", "edges_y.tensor", "edges.pgm", "integrated.pgm", "ground_truth.pgm", "metrics.csv"]
    for name in names:
        assert (tmp_path / "d1" / name).read_bytes() == (tmp_path / "d2" / name).read_bytes()


def test_demo_disk_small_radius_and_noise_sweep(tmp_path):
    code = run(["demo-disk", "--size", "64", "--radius", "1", "--out", str(tmp_path),
                "--noise-levels", "0.1,0.3,0.5", "--seed", "2"])
    assert code == 0
    sweep = read_rows(tmp_path / "noise_sweep.csv")
    assert [float(r["noise"]) for r in sweep] == [0.1, 0.3, 0.5]


def test_demo_disk_rejects_bad_radius(tmp_path, capsys):
    assert run(["demo-disk", "--size", "64", "--radius", "40", "--out", str(tmp_path)]) == 3
    assert run(["demo-disk", "--size", "64", "--radius", "0.5", "--out", str(tmp_path)]) == 3
    assert "covers no pixel" in capsys.readouterr().err


# --- reruns ---

def test_reruns_are_byte_identical_and_inputs_untouched(tmp_path, rng):
    save_tensor(rng.standard_normal((10, 12)), tmp_path / "ex.tensor")
    save_tensor(rng.standard_normal((10, 12)), tmp_path / "ey.tensor")
    save_tensor(rng.standard_normal((1, 3, 10, 12)), tmp_path / "in.tensor")
    _write_images(tmp_path / "pred", {"a": _blob() * 0.7, "b": rng.random((24, 24))})
    _write_images(tmp_path / "gt", {"a": _blob(), "b": _blob()})
    inputs = sorted(p for p in tmp_path.rglob("*") if p.is_file())
    before = {p: p.read_bytes() for p in inputs}

    def commands(out):
        return [
            ["integrate", "--ex", str(tmp_path / "ex.tensor"), "--ey", str(tmp_path / "ey.tensor"),
             "--out", str(out / "int.tensor")],
            ["gis", "--in", str(tmp_path / "in.tensor"), "--out", str(out / "gis.tensor")],
            ["eval", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt"),
             "--out", str(out / "m.csv"), "--curves", str(out / "curves")],
        ]

    for out in (tmp_path / "r1", tmp_path / "r2"):
        for argv in commands(out):
            assert run(argv) == 0

    for p in inputs:
        assert p.read_bytes() == before[p]
    for name in ["int.tensor", "gis.tensor", "m.csv", "curves/a.csv", "curves/b.csv"]:
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


# --- bench ---

def test_bench_reports_timings(capsys):
    assert run(["bench", "--size", "16", "--count", "5", "--batch", "2"]) == 0
    out = capsys.readouterr().out
    assert "solve_laplacian 16x16" in out
    assert "gis_forward" in out
