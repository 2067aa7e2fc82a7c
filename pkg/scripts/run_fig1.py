"""Run the three default engines end to end: quantum packet, single Wong trajectory and TWA ensemble.

Each engine is run through the ``simulate`` presets so the outputs match what
the CLI writes. The quantum run is the slow part (~20 min at n=256 on one core);
``--t-final`` shortens everything for a quick look.

    python scripts/run_fig1.py --out runs/fig1
    python scripts/run_fig1.py --out runs/quick --t-final 600 --n-traj 5000 --spin-factor 2
"""
import argparse
import json
import logging
import time
from pathlib import Path

import numpy as np

from jtdyn import io
from jtdyn.analysis import compare_series
from jtdyn.cli import build_config, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/fig1")
    ap.add_argument("--t-final", type=float, default=15000.0)
    ap.add_argument("--n-traj", type=int, default=50_000)
    ap.add_argument("--spin-factor", type=int, choices=(1, 2), default=1,
                    help="spin precession factor for the TWA ensemble and the single trajectory")
    ap.add_argument("--antithetic", action="store_true")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--snapshots", default="", help="comma separated snapshot times for the quantum run")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    root = Path(args.out)
    common = [f"plan.t_final={args.t_final}"]
    snaps = args.snapshots or f"{args.t_final:g}"
    jobs = {
        "quantum": ("fig1-quantum", [f"output.snapshot_times={snaps}"]),
        "semiclassical": ("fig1-semiclassical", [f"plan.spin_factor={args.spin_factor}"]),
        "twa": ("fig1-twa", [f"twa.n_traj={args.n_traj}", f"twa.spin_factor={args.spin_factor}",
                             f"twa.antithetic={args.antithetic}", f"twa.workers={args.workers}"]),
    }
    for name, (preset, sets) in jobs.items():
        cfg = build_config(preset, common + sets)
        t0 = time.perf_counter()
        status = run(cfg, root / name)
        logging.info("%s finished with status %d in %.0f s", name, status, time.perf_counter() - t0)

    q = io.read_series_csv(root / "quantum" / "series.csv")
    twa = io.read_series_csv(root / "twa" / "series.csv")
    half = np.pi / 0.02
    cmp = compare_series(q, twa, "y", window=(1.0, min(half, args.t_final)))
    summary = {
        "quantum_y_max": float(np.max(np.abs(q["y"]))),
        "twa_y_max": float(np.max(np.abs(twa["y"]))),
        "first_half_period": {"sign_agreement": cmp.sign_agreement, "correlation": cmp.correlation,
                              "max_abs_deviation": cmp.max_abs_deviation},
        "conservation": json.loads((root / "quantum" / "conservation.json").read_text()),
    }
    io.write_json(summary, root / "summary.json")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
