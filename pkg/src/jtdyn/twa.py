"""Truncated Wigner ensembles built on the semiclassical integrator.

Every trajectory draws its initial phase-space point from a Philox stream
keyed by the master seed with the trajectory index in the high counter word,
so a sample set never depends on how the work is split. Trajectories are
integrated in fixed-size index blocks and block sums are combined by a
pairwise tree in block order, which makes the ensemble means bitwise
independent of the number of workers.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .model import ModelParams
from .semiclassical import STATE_FIELDS, ClassicalState, _integrate_one, classical_energy
from .series import ObservableSeries

log = logging.getLogger(__name__)

BLOCK_SIZE = 256


class EnsembleError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    n_traj: int = 50_000
    center: tuple[float, float] = (10.0, 0.0)
    sigma: float = 1.0
    seed: int = 20240101
    spin0: tuple[float, float, float] = (0.0, 0.0, 1.0)
    dt: float = 0.1
    t_final: float = 15000.0
    spin_factor: int = 1
    record_stride: int = 100
    # mirror (y, py) deviations within index pairs (2j, 2j+1)
    antithetic: bool = False
    # False puts every trajectory exactly at (center, p=0)
    sample_phase_space: bool = True

    def __post_init__(self):
        if int(self.n_traj) < 1:
            raise ValueError("n_traj must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if float(np.dot(self.spin0, self.spin0)) > 1 + 1e-12:
            raise ValueError("spin0 must lie on or inside the unit sphere")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.spin_factor not in (1, 2):
            raise ValueError("spin_factor must be 1 or 2")
        if not self.dt > 0 or not self.t_final >= self.dt:
            raise ValueError("need dt > 0 and t_final >= dt")
        if int(self.record_stride) < 1:
            raise ValueError("record_stride must be >= 1")
        if self.antithetic and self.n_traj % 2:
            raise ValueError("antithetic sampling needs an even n_traj")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


def _draws(seed: int, index: int) -> np.ndarray:
    bitgen = np.random.Philox(key=int(seed), counter=[0, 0, 0, int(index)])
    return np.random.Generator(bitgen).standard_normal(4)


def _initial_block(spec: EnsembleSpec, start: int, stop: int) -> np.ndarray:
    out = np.empty((stop - start, 7))
    sq = spec.sigma / np.sqrt(2)
    sp = 1 / (spec.sigma * np.sqrt(2))
    cx, cy = spec.center
    for row, i in enumerate(range(start, stop)):
        if spec.sample_phase_space:
            if spec.antithetic:
                z = _draws(spec.seed, i // 2)
                if i % 2:
                    z[2:] = -z[2:]
            else:
                z = _draws(spec.seed, i)
        else:
            z = np.zeros(4)
        out[row, 0] = cx + sq * z[0]
        out[row, 1] = sp * z[1]
        out[row, 2] = cy + sq * z[2]
        out[row, 3] = sp * z[3]
        out[row, 4:] = spec.spin0
    return out


def sample_initial(spec: EnsembleSpec, start: int = 0, stop: int | None = None) -> list[ClassicalState]:
    """Initial states for trajectories ``start..stop-1``.

    Positions: normal with mean ``center`` and variance ``sigma^2/2`` per axis.
    Momenta: normal with mean 0 and variance ``1/(2 sigma^2)`` per axis.
    """
    stop = spec.n_traj if stop is None else stop
    return [ClassicalState.from_array(row) for row in _initial_block(spec, start, stop)]


@numba.njit(cache=True, nogil=True)
def _run_block(init, omega, k, f, dt, n_steps, stride, paired, sums, sumsq, finals):
    n_rec = sums.shape[0]
    rec = np.empty((n_rec, 7))
    rec2 = np.empty((n_rec, 7))
    failed = 0
    m = init.shape[0]
    step = 2 if paired else 1
    for j in range(0, m, step):
        s = init[j].copy()
        done = _integrate_one(s, omega, k, f, dt, n_steps, stride, rec)
        if done < n_steps:
            failed += 1
        finals[j] = s
        if paired:
            s2 = init[j + 1].copy()
            done2 = _integrate_one(s2, omega, k, f, dt, n_steps, stride, rec2)
            if done2 < n_steps:
                failed += 1
            finals[j + 1] = s2
            for r in range(n_rec):
                for c in range(7):
                    u = 0.5 * (rec[r, c] + rec2[r, c])
                    sums[r, c] += rec[r, c] + rec2[r, c]
                    sumsq[r, c] += u * u
        else:
            for r in range(n_rec):
                for c in range(7):
                    v = rec[r, c]
                    sums[r, c] += v
                    sumsq[r, c] += v * v
    return failed


def _tree_sum(parts: list[np.ndarray]) -> np.ndarray:
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


@dataclass
class EnsembleResult:
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    finals: np.ndarray
    initials: np.ndarray
    spec: EnsembleSpec
    n_failed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_traj(self) -> int:
        return self.finals.shape[0]

    @property
    def valid(self) -> bool:
        return self.n_failed == 0

    def series(self) -> ObservableSeries:
        channels = {name: self.mean[:, i] for i, name in enumerate(STATE_FIELDS)}
        channels.update({f"{name}_se": self.stderr[:, i] for i, name in enumerate(STATE_FIELDS)})
        meta = {"engine": "twa", "n_traj": self.n_traj, "spin_factor": self.spec.spin_factor,
                "seed": self.spec.seed, **self.meta}
        return ObservableSeries(self.t, channels, meta=meta)

    def final_energies(self, params: ModelParams) -> np.ndarray:
        return classical_energy(self.finals, params)


def run_ensemble(spec: EnsembleSpec, params: ModelParams, workers: int = 1,
                 block_size: int = BLOCK_SIZE, strict: bool = True) -> EnsembleResult:
    """Integrate every sampled trajectory and average on the shared record stride.

    ``workers`` threads process whole index blocks; the result does not depend
    on it. With ``strict`` a non-finite trajectory raises ``EnsembleError``.
    """
    if block_size < 2 or block_size % 2:
        raise ValueError("block_size must be an even number >= 2")
    n = int(spec.n_traj)
    stride = int(spec.record_stride)
    n_steps = spec.n_steps
    n_rec = n_steps // stride + 1
    bounds = [(a, min(a + block_size, n)) for a in range(0, n, block_size)]
    finals = np.empty((n, 7))
    initials = np.empty((n, 7))

    def work(bound):
        a, b = bound
        init = _initial_block(spec, a, b)
        initials[a:b] = init
        sums = np.zeros((n_rec, 7))
        sumsq = np.zeros((n_rec, 7))
        failed = _run_block(init, float(params.omega), float(params.k), float(spec.spin_factor), float(spec.dt),
                            n_steps, stride, bool(spec.antithetic), sums, sumsq, finals[a:b])
        return sums, sumsq, failed

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(bd) for bd in bounds]

    n_failed = sum(p[2] for p in parts)
    if n_failed and strict:
        raise EnsembleError(f"{n_failed} of {n} trajectories became non-finite")
    total = _tree_sum([p[0] for p in parts])
    total_sq = _tree_sum([p[1] for p in parts])
    mean = total / n
    units = n // 2 if spec.antithetic else n
    unit_mean = mean
    with np.errstate(over="ignore", invalid="ignore"):
        var = np.maximum(total_sq / units - unit_mean ** 2, 0.0) * units / max(units - 1, 1)
    stderr = np.sqrt(var / units)
    t = spec.dt * stride * np.arange(n_rec)
    log.info("ensemble of %d trajectories done (%d failed)", n, n_failed)
    return EnsembleResult(t=t, mean=mean, stderr=stderr, finals=finals, initials=initials, spec=spec,
                          n_failed=n_failed)


def ensemble_histogram(result: EnsembleResult, space: str = "position", bins: int = 64, extent=None):
    """Final-time scatter binned on a rectangle; returns ``(counts, x_edges, y_edges)``.

    ``counts`` is indexed ``[iy, ix]`` like the grid arrays. The default
    rectangle is the padded bounding box of the scatter, so counts sum to
    ``n_traj``.
    """
    if int(bins) < 2:
        raise ValueError("bins must be >= 2")
    cols = {"position": (0, 2), "momentum": (1, 3)}
    if space not in cols:
        raise ValueError("space must be 'position' or 'momentum'")
    ix, iy = cols[space]
    u, v = result.finals[:, ix], result.finals[:, iy]
    if extent is None:
        pad_u = 1e-9 + 0.01 * (u.max() - u.min())
        pad_v = 1e-9 + 0.01 * (v.max() - v.min())
        extent = ((u.min() - pad_u, u.max() + pad_u), (v.min() - pad_v, v.max() + pad_v))
    counts, ue, ve = np.histogram2d(u, v, bins=int(bins), range=extent)
    return counts.T, ue, ve
