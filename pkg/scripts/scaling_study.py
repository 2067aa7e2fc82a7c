"""Short-time transverse drift: how the fitted exponent depends on the fit window and on k.

Compares the quantum <Qy>, the single Wong trajectory (both spin factors) and
the cubic closed form, then checks the 1/sqrt(N) scaling of the TWA error bar.
Writes ``scaling.csv`` and prints a table.

    python scripts/scaling_study.py --out runs/scaling
"""
import argparse
from pathlib import Path

import numpy as np

from jtdyn import grid as gr
from jtdyn.analysis import fit_power_law
from jtdyn.model import ModelParams
from jtdyn.propagator import PropagationPlan, propagate
from jtdyn.semiclassical import ClassicalState, rk4_integrate, short_time_prediction
from jtdyn.twa import EnsembleSpec, run_ensemble

WINDOWS = [(0.5, 2.0), (1.0, 5.0), (2.0, 10.0), (5.0, 30.0), (10.0, 100.0)]


def quantum_y(k, t_final, n, extent):
    grid = gr.Grid2D(n, extent)
    f0 = gr.make_gaussian(grid, (10.0, 0.0), 1.0)
    series, _, _ = propagate(f0, ModelParams(0.02, k), PropagationPlan(0.05, t_final, 10))
    return series


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/scaling")
    ap.add_argument("--ks", default="0.005,0.01,0.02")
    ap.add_argument("--t-final", type=float, default=100.0)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--extent", type=float, default=25.0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for k in (float(v) for v in args.ks.split(",")):
        params = ModelParams(0.02, k)
        sources = {"quantum": quantum_y(k, args.t_final, args.n, args.extent)}
        for f in (1, 2):
            tr = rk4_integrate(ClassicalState(10.0, 0.0), params, dt=0.01, t_final=args.t_final, spin_factor=f, stride=50)
            sources[f"wong_f{f}"] = tr.to_series(params)
        for name, s in sources.items():
            for w in WINDOWS:
                if w[1] > args.t_final:
                    continue
                try:
                    fit = fit_power_law(s, "y", window=w, min_samples=3)
                except ValueError as exc:
                    print(f"k={k} {name} {w}: {exc}")
                    continue
                closed = short_time_prediction(w[0], params, 10.0) / w[0] ** 3
                rows.append((k, name, w[0], w[1], fit.exponent, fit.coefficient, closed))

    with (out / "scaling.csv").open("w") as fh:
        fh.write("k,source,t_lo,t_hi,exponent,coefficient,closed_form_coefficient\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")
    print(f"{'k':>6} {'source':>8} {'window':>12} {'exponent':>9} {'coef/closed':>12}")
    for k, name, lo, hi, p, c, cc in rows:
        print(f"{k:6.3f} {name:>8} {f'[{lo:g},{hi:g}]':>12} {p:9.3f} {c / cc:12.3f}")

    print("\nTWA standard error of y at t=100 (spin factor 2)")
    se = {}
    for n in (500, 5000, 50_000):
        spec = EnsembleSpec(n_traj=n, t_final=100.0, record_stride=1000, spin_factor=2)
        se[n] = run_ensemble(spec, ModelParams(0.02, 0.01)).series()["y_se"][-1]
        print(f"  N={n:6d}  se={se[n]:.3e}  se*sqrt(N)={se[n] * np.sqrt(n):.3f}")


if __name__ == "__main__":
    main()
