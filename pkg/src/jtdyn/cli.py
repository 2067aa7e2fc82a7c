"""``simulate`` command: presets, config files and file emission."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import grid as gr
from . import io
from .analysis import conservation_report
from .config import PRESETS, ConfigError, RunConfig, apply_assignment, load_preset, parse_config, validate
from .model import berry_phase_loop, dual_gauge, field_tensor, wilson_loop
from .propagator import propagate
from .semiclassical import ClassicalState, rk4_integrate
from .twa import ensemble_histogram, run_ensemble

log = logging.getLogger("jtdyn")


def _tag(t: float) -> str:
    return f"{t:g}".replace(".", "p")


def _run_quantum(cfg: RunConfig, out: Path, meta: dict) -> None:
    grid = cfg.grid2d()
    params = cfg.model_params()
    plan = cfg.propagation_plan()
    field0 = gr.make_gaussian(grid, (cfg.initial.x0, cfg.initial.y0), cfg.initial.sigma, cfg.initial.channel)
    snaps = tuple(cfg.output.snapshot_times) or (plan.t_final,)
    series, final, snapshots = propagate(field0, params, plan, snapshot_times=snaps)
    io.write_series_csv(series, out / "series.csv")
    meta["files"].append("series.csv")
    p_sorted = grid.p_sorted
    for t, fld in sorted(snapshots.items()):
        pos, mom = gr.densities(fld)
        tag = _tag(t)
        for name, arr, axis in ((f"density_position_t{tag}", pos, grid.x), (f"density_momentum_t{tag}", mom, p_sorted)):
            io.emit_heatmap(arr, out / name, axis, axis)
            meta["files"] += [f"{name}.csv", f"{name}.pgm"]
        marg = gr.projected_distribution(fld, "y")
        with (out / f"marginal_y_t{tag}.csv").open("w", encoding="utf-8") as fh:
            fh.write("qy,P\n")
            for q, v in zip(grid.x, marg):
                fh.write(f"{io._fmt(q)},{io._fmt(v)}\n")
        meta["files"].append(f"marginal_y_t{tag}.csv")
    io.write_json(conservation_report(series).as_dict(), out / "conservation.json")
    meta["files"].append("conservation.json")


def _run_semiclassical(cfg: RunConfig, out: Path, meta: dict) -> None:
    params = cfg.model_params()
    s0 = ClassicalState(x=cfg.initial.x0, y=cfg.initial.y0, sx=cfg.initial.spin0[0],
                        sy=cfg.initial.spin0[1], sz=cfg.initial.spin0[2])
    traj = rk4_integrate(s0, params, cfg.plan.dt, cfg.plan.t_final, cfg.plan.spin_factor, cfg.plan.record_stride)
    series = traj.to_series(params)
    io.write_series_csv(series, out / "series.csv")
    io.write_json(conservation_report(series).as_dict(), out / "conservation.json")
    meta["spin_factor"] = cfg.plan.spin_factor
    meta["files"] += ["series.csv", "conservation.json"]


def _run_twa(cfg: RunConfig, out: Path, meta: dict, seed: int | None) -> None:
    params = cfg.model_params()
    spec = cfg.ensemble_spec(seed)
    result = run_ensemble(spec, params, workers=cfg.twa.workers, strict=False)
    meta["seed"] = spec.seed
    meta["spin_factor"] = spec.spin_factor
    meta["n_failed"] = result.n_failed
    if not result.valid:
        meta["partial"] = True
    io.write_series_csv(result.series(), out / "series.csv")
    meta["files"].append("series.csv")
    for space in ("position", "momentum"):
        counts, ue, ve = ensemble_histogram(result, space, cfg.twa.bins)
        uc, vc = (ue[:-1] + ue[1:]) / 2, (ve[:-1] + ve[1:]) / 2
        io.emit_heatmap(counts, out / f"hist_{space}", uc, vc)
        meta["files"] += [f"hist_{space}.csv", f"hist_{space}.pgm"]
    with (out / "final_scatter.csv").open("w", encoding="utf-8") as fh:
        fh.write("x,px,y,py,sx,sy,sz\n")
        for row in result.finals:
            fh.write(",".join(io._fmt(v) for v in row) + "\n")
    meta["files"].append("final_scatter.csv")


def gauge_report(cfg: RunConfig) -> dict:
    params = cfg.model_params()
    dual = dual_gauge(params)
    radii = tuple(cfg.output.gauge_radii)
    points = [(5.0, 0.0), (0.0, -7.0), (1.0, 1.0), (0.5, 0.0), (-3.0, 4.0)]
    return {
        "berry_phase": {str(r): berry_phase_loop(r, cfg.output.gauge_points) for r in radii},
        "wilson_loop": {str(r): wilson_loop(r, cfg.output.gauge_points) for r in radii},
        "field_tensor_norm": {f"{q[0]},{q[1]}": float(np.linalg.norm(field_tensor(q))) for q in points},
        "field_tensor_norm_richardson": {f"{q[0]},{q[1]}": float(np.linalg.norm(field_tensor(q, richardson=True)))
                                         for q in points},
        "dual": {
            "Atilde_x": dual.Atilde_x, "Atilde_y": dual.Atilde_y,
            "Phi_tilde": dual.Phi_tilde, "Bz_coefficient": dual.Bz_coefficient,
        },
    }


def _encode_complex(obj):
    if isinstance(obj, dict):
        return {k: _encode_complex(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray) and np.iscomplexobj(obj):
        return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def run(cfg: RunConfig, out_dir=None, seed: int | None = None) -> int:
    """Run the configured engine and write its outputs; returns a process exit status."""
    validate(cfg)
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    if seed is not None:
        cfg.twa.seed = int(seed)
    meta = {"version": __version__, "engine": cfg.engine, "config": cfg.as_dict(),
            "config_text": cfg.to_text(), "files": [], "partial": False, "warnings": []}
    status = 0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            if cfg.engine == "quantum":
                _run_quantum(cfg, out, meta)
            elif cfg.engine == "semiclassical":
                _run_semiclassical(cfg, out, meta)
            elif cfg.engine == "twa":
                _run_twa(cfg, out, meta, seed)
                if meta["partial"]:
                    status = 3
            else:
                io.write_json(_encode_complex(gauge_report(cfg)), out / "gauge_report.json")
                meta["files"].append("gauge_report.json")
        except Exception as exc:  # noqa: BLE001 - reported in metadata, then re-signalled by exit code
            log.error("engine %s failed: %s", cfg.engine, exc)
            meta["partial"] = True
            meta["error"] = f"{type(exc).__name__}: {exc}"
            status = 2
    meta["warnings"] = [str(w.message) for w in caught]
    io.write_json(meta, out / "metadata.json")
    return status


def build_config(target: str, sets=()) -> RunConfig:
    if target in PRESETS:
        cfg = load_preset(target)
    else:
        path = Path(target)
        if not path.is_file():
            raise ConfigError(f"{target!r} is neither a preset ({', '.join(PRESETS)}) nor a config file")
        cfg = parse_config(path.read_text(encoding="utf-8"), validate_result=False)
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        key, value = item.split("=", 1)
        apply_assignment(cfg, key.strip(), value)
    return validate(cfg)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="simulate", description="Jahn-Teller wave-packet simulations")
    ap.add_argument("target", help=f"preset ({', '.join(PRESETS)}) or path to a config file")
    ap.add_argument("--set", dest="sets", action="append", default=[], metavar="SECTION.KEY=VALUE")
    ap.add_argument("--out", default=None, help="output directory (default: output.dir)")
    ap.add_argument("--seed", type=int, default=None, help="master seed for the TWA ensemble")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        ap.error("--seed must be an unsigned 64-bit integer")
    try:
        cfg = build_config(args.target, args.sets)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    status = run(cfg, args.out, args.seed)
    if status:
        print(f"run finished with status {status}; see metadata.json", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
