import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jtdyn import io
from jtdyn.cli import build_config, main, run
from jtdyn.config import PRESETS, ConfigError, RunConfig, load_preset, parse_config
from jtdyn.series import ObservableSeries

# keeps end-to-end runs to a few seconds
QUICK = ["grid.n=64", "grid.extent=16", "plan.t_final=20", "plan.record_stride=50",
         "twa.n_traj=512", "output.snapshot_times=10, 20", "output.gauge_points=64"]


def test_pgm_normalisation(tmp_path):
    raw, ok = io.pgm_bytes([[0, 1], [1, 0]])
    assert ok and raw == b"P5\n2 2\n255\n" + bytes([0, 255, 255, 0])
    io.emit_heatmap(np.array([[0.0, 1.0], [1.0, 0.0]]), tmp_path / "h")
    assert io.read_pgm(tmp_path / "h.pgm").tolist() == [[0, 255], [255, 0]]


def test_heatmap_zero_and_invalid(tmp_path):
    with pytest.warns(RuntimeWarning):
        io.emit_heatmap(np.zeros((3, 4)), tmp_path / "z")
    assert not io.read_pgm(tmp_path / "z.pgm").any()
    with pytest.raises(ValueError):
        io.pgm_bytes([[-1.0, 0.0]])
    with pytest.raises(ValueError):
        io.pgm_bytes([[np.nan, 0.0]])


def test_gaussian_heatmap_peak(tmp_path):
    x = np.linspace(-5, 5, 41)
    X, Y = np.meshgrid(x, x)
    img = np.exp(-((X - 2) ** 2 + (Y + 1) ** 2))
    io.emit_heatmap(img, tmp_path / "g", x, x)
    pix = io.read_pgm(tmp_path / "g.pgm")
    iy, ix = np.unravel_index(np.argmax(pix), pix.shape)
    assert (x[ix], x[iy]) == (2.0, -1.0)
    a, xs, ys = io.read_grid_csv(tmp_path / "g.csv")
    assert np.array_equal(a, img) and np.array_equal(xs, x) and np.array_equal(ys, x)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (3, 5), elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_grid_csv_roundtrip_bit_exact(tmp_path_factory, a):
    p = tmp_path_factory.mktemp("g") / "a.csv"
    io.write_grid_csv(a, p)
    back, _, _ = io.read_grid_csv(p)
    assert np.array_equal(back, a)


def test_series_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    s = ObservableSeries(np.arange(6) * 0.1, {"y": rng.normal(size=6) * 1e-7, "x": rng.normal(size=6)})
    io.write_series_csv(s, tmp_path / "s.csv")
    text = (tmp_path / "s.csv").read_text().splitlines()
    assert text[0] == "t,y,x"
    back = io.read_series_csv(tmp_path / "s.csv")
    assert np.array_equal(back.t, s.t) and np.array_equal(back["y"], s["y"])


def test_parse_defaults_and_overrides():
    cfg = parse_config("")
    assert cfg == load_preset("fig1-quantum")
    assert cfg.model.omega == 0.02 and cfg.initial.x0 == 10 and cfg.plan.t_final == 15000
    cfg = parse_config("model.k = 0.02  # stronger coupling\n\n# comment\n")
    assert cfg.model.k == 0.02 and cfg.model.omega == 0.02


@pytest.mark.parametrize("text, needle", [
    ("grid.n = 100", "power of two"),
    ("model.q = 1", "unknown key"),
    ("physics.k = 1", "unknown section"),
    ("model.k 0.1", "line 1"),
    ("model.k = abc", "cannot parse"),
    ("model.omega = -1", "omega"),
    ("run.engine = mpi", "engine"),
    ("initial.x0 = 22", "5 sigma"),
])
def test_parse_errors(text, needle):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert needle in str(err.value)


def test_error_reports_line_number():
    with pytest.raises(ConfigError) as err:
        parse_config("model.k = 0.01\n\nbogus line\n")
    assert err.value.line == 3


def test_config_text_roundtrip():
    cfg = build_config("fig1-twa", ["twa.seed=99", "output.snapshot_times=1, 2.5"])
    again = parse_config(cfg.to_text())
    assert again == cfg
    assert again.twa.seed == 99 and again.output.snapshot_times == (1.0, 2.5)


def test_twa_record_interval_matches_quantum():
    spec = RunConfig().ensemble_spec()
    assert spec.dt * spec.record_stride == pytest.approx(10.0)
    assert spec.n_traj == 50_000 and spec.seed == 20240101


@pytest.mark.parametrize("preset", list(PRESETS))
def test_presets_run_end_to_end(preset, tmp_path):
    out = tmp_path / preset
    assert main([preset, "--out", str(out), *sum((["--set", s] for s in QUICK), [])]) == 0
    meta = json.loads((out / "metadata.json").read_text())
    assert not meta["partial"] and meta["engine"] == load_preset(preset).engine
    for name in meta["files"]:
        assert (out / name).is_file()
    assert meta["config"]["grid"]["n"] == 64


def test_quantum_outputs(tmp_path):
    assert main(["fig1-quantum", "--out", str(tmp_path), *sum((["--set", s] for s in QUICK), [])]) == 0
    s = io.read_series_csv(tmp_path / "series.csv")
    assert np.all(s["y"][1:] > 0)
    for tag in ("10", "20"):
        pix = io.read_pgm(tmp_path / f"density_position_t{tag}.pgm")
        assert pix.shape == (64, 64) and pix.max() == 255
        assert (tmp_path / f"marginal_y_t{tag}.csv").is_file()
    rep = json.loads((tmp_path / "conservation.json").read_text())
    assert rep["norm_drift"] < 1e-10


def test_twa_outputs_and_seed(tmp_path):
    args = ["fig1-twa", *sum((["--set", s] for s in QUICK), [])]
    assert main([*args, "--out", str(tmp_path / "a"), "--seed", "5"]) == 0
    meta = json.loads((tmp_path / "a" / "metadata.json").read_text())
    assert meta["seed"] == 5 and meta["config"]["twa"]["seed"] == 5
    counts, _, _ = io.read_grid_csv(tmp_path / "a" / "hist_position.csv")
    assert counts.sum() == 512
    scatter = np.loadtxt(tmp_path / "a" / "final_scatter.csv", delimiter=",", skiprows=1)
    assert scatter.shape == (512, 7)


@pytest.mark.parametrize("preset", ["fig1-quantum", "fig1-twa", "fig1-semiclassical"])
def test_outputs_are_byte_identical(preset, tmp_path):
    args = [preset, *sum((["--set", s] for s in QUICK), []), "--seed", "11"]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--out", str(tmp_path / "b"), "--set", "twa.workers=4"])
    for f in sorted((tmp_path / "a").iterdir()):
        if f.name == "metadata.json":
            continue
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_gauge_report(tmp_path):
    assert main(["gauge-report", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "gauge_report.json").read_text())
    for gamma in rep["berry_phase"].values():
        assert abs(gamma - np.pi) < 1e-6
    assert rep["dual"]["Bz_coefficient"] == 0.5
    assert all(v < 1e-6 for v in rep["field_tensor_norm_richardson"].values())
    assert rep["field_tensor_norm"]["5.0,0.0"] < 1e-6


def test_cli_errors(tmp_path, capsys):
    assert main(["nope"]) == 1
    assert "neither a preset" in capsys.readouterr().err
    assert main(["fig1-quantum", "--set", "grid.n=100"]) == 1
    assert main(["fig1-quantum", "--set", "gridn"]) == 1
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("run.engine = semiclassical\nplan.t_final = 5\nplan.record_stride = 100\n")
    assert main([str(cfg_file), "--out", str(tmp_path / "o")]) == 0
    with pytest.raises(SystemExit):
        main(["fig1-twa", "--seed", "-3"])


def test_engine_failure_is_flagged(tmp_path):
    cfg = build_config("fig1-semiclassical", ["model.k=1e200", "initial.x0=1e200", "plan.dt=1", "plan.t_final=50",
                                              "plan.record_stride=1"])
    assert run(cfg, tmp_path) == 2
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["partial"] and "IntegrationError" in meta["error"]
