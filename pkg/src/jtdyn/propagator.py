"""Strang-split spectral propagation of a two-channel wave packet."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from . import grid as gr
from .grid import Grid2D, SpinorField
from .model import ModelParams
from .series import ObservableSeries

log = logging.getLogger(__name__)

QUANTUM_CHANNELS = ("x", "y", "px", "py", "sx", "sy", "sz", "norm", "energy", "jz", "pop_minus", "pop_plus")


class NonFiniteError(FloatingPointError):
    pass


@dataclass(frozen=True)
class PropagationPlan:
    dt: float = 0.1
    t_final: float = 15000.0
    record_stride: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.t_final >= self.dt:
            raise ValueError("t_final must be >= dt")
        if int(self.record_stride) < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


def kinetic_phase(grid: Grid2D, params: ModelParams, dt_eff: float) -> np.ndarray:
    px, py = grid.pmesh
    return np.exp(-1j * dt_eff * params.omega * (px ** 2 + py ** 2) / 2)


def potential_propagator(grid: Grid2D, params: ModelParams, dt: float):
    """Pointwise ``exp(-i dt V)`` as ``(diag, upper, lower)`` arrays.

    With ``a = omega rho^2/2`` and ``r = k rho``:
    ``exp(-i a dt) [cos(r dt) I - i sin(r dt) (b.sigma)/r]``.
    """
    X, Y = grid.mesh
    rho = np.hypot(X, Y)
    a = params.omega * rho ** 2 / 2
    r = params.k * rho
    phase = np.exp(-1j * a * dt)
    # sin(r dt)/r -> dt at r = 0
    safe_r = np.where(r > 0, r, 1.0)
    sinc = np.where(r > 0, np.sin(r * dt) / safe_r, dt)
    diag = phase * np.cos(r * dt)
    upper = -1j * phase * sinc * params.k * (X - 1j * Y)
    lower = -1j * phase * sinc * params.k * (X + 1j * Y)
    return diag, upper, lower


def _apply_potential(psi: np.ndarray, prop, out: np.ndarray | None = None) -> np.ndarray:
    diag, upper, lower = prop
    c1, c2 = psi
    if out is None:
        out = np.empty_like(psi)
    tmp = upper * c2
    np.multiply(diag, c1, out=out[0])
    out[0] += tmp
    np.multiply(lower, c1, out=tmp)
    np.multiply(diag, c2, out=out[1])
    out[1] += tmp
    return out


def _apply_kinetic(psi: np.ndarray, phase: np.ndarray, overwrite: bool = False) -> np.ndarray:
    spec = sfft.fft2(psi, axes=(-2, -1), overwrite_x=overwrite)
    spec *= phase
    return sfft.ifft2(spec, axes=(-2, -1), overwrite_x=True)


def kinetic_step(field_: SpinorField, params: ModelParams, dt_eff: float) -> SpinorField:
    psi = _apply_kinetic(field_.stack, kinetic_phase(field_.grid, params, dt_eff))
    return SpinorField.from_stack(field_.grid, psi)


def potential_step(field_: SpinorField, params: ModelParams, dt: float) -> SpinorField:
    psi = _apply_potential(field_.stack, potential_propagator(field_.grid, params, dt))
    return SpinorField.from_stack(field_.grid, psi)


def strang_step(field_: SpinorField, params: ModelParams, dt: float) -> SpinorField:
    half = kinetic_step(field_, params, dt / 2)
    return kinetic_step(potential_step(half, params, dt), params, dt / 2)


def observe(field_: SpinorField, params: ModelParams) -> dict[str, float]:
    pos = gr.expectation_position(field_)
    mom = gr.expectation_momentum(field_)
    spin = gr.spin_expectations(field_)
    p_minus, p_plus = gr.adiabatic_populations(field_)
    return {
        "x": pos[0], "y": pos[1], "px": mom[0], "py": mom[1],
        "sx": spin[0], "sy": spin[1], "sz": spin[2],
        "norm": gr.norm(field_),
        "energy": gr.energy(field_, params),
        "jz": gr.expectation_Jz(field_),
        "pop_minus": p_minus, "pop_plus": p_plus,
    }


Observer = Callable[[float, SpinorField], None]


class SplitOperator:
    """Caches the phase arrays for one ``(grid, params, dt)`` combination.

    Steps are kinetic(dt/2) - potential(dt) - kinetic(dt/2); between records
    the two half kicks are fused into one full kick.
    """

    def __init__(self, grid: Grid2D, params: ModelParams, dt: float):
        self.grid = grid
        self.params = params
        self.dt = dt
        self.half_kick = kinetic_phase(grid, params, dt / 2)
        self.full_kick = kinetic_phase(grid, params, dt)
        self.potential = potential_propagator(grid, params, dt)

    def advance(self, psi: np.ndarray, n_steps: int) -> np.ndarray:
        """Advance ``n_steps`` full Strang steps, returning the state at the end point."""
        if n_steps <= 0:
            return psi
        psi = _apply_kinetic(psi, self.half_kick)
        buf = np.empty_like(psi)
        for _ in range(n_steps - 1):
            buf = _apply_potential(psi, self.potential, out=buf)
            psi, buf = _apply_kinetic(buf, self.full_kick, overwrite=True), psi
        psi = _apply_potential(psi, self.potential, out=buf)
        return _apply_kinetic(psi, self.half_kick, overwrite=True)


def propagate(field_: SpinorField, params: ModelParams, plan: PropagationPlan,
              observers: Sequence[Observer] = (), snapshot_times: Sequence[float] = (),
              support_threshold: float = 1e-8):
    """Propagate to ``plan.t_final``; returns ``(series, final_field, snapshots)``.

    ``snapshots`` maps each requested time (rounded to the record grid) to the
    field at that time. Observers are called at every record point.
    """
    engine = SplitOperator(field_.grid, params, plan.dt)
    n_steps = plan.n_steps
    stride = int(plan.record_stride)
    record_steps = list(range(0, n_steps + 1, stride))
    if record_steps[-1] != n_steps:
        record_steps.append(n_steps)
    snap_steps = {}
    for ts in snapshot_times:
        step = int(round(ts / plan.dt))
        nearest = min(record_steps, key=lambda s: abs(s - step))
        snap_steps[nearest] = ts

    rows: list[dict[str, float]] = []
    times: list[float] = []
    snapshots: dict[float, SpinorField] = {}
    psi = field_.stack.astype(complex)
    done = 0
    for step in record_steps:
        psi = engine.advance(psi, step - done)
        done = step
        if not np.all(np.isfinite(psi)):
            raise NonFiniteError(f"non-finite amplitudes at t={step * plan.dt}")
        current = SpinorField.from_stack(field_.grid, psi)
        t = step * plan.dt
        times.append(t)
        rows.append(observe(current, params))
        gr.check_support(current, support_threshold)
        for obs in observers:
            obs(t, current)
        if step in snap_steps:
            snapshots[snap_steps[step]] = current
        log.debug("t=%.1f x=%.6f y=%.6e", t, rows[-1]["x"], rows[-1]["y"])

    channels = {name: np.array([r[name] for r in rows]) for name in QUANTUM_CHANNELS}
    series = ObservableSeries(np.array(times), channels, meta={"engine": "quantum"})
    return series, SpinorField.from_stack(field_.grid, psi), snapshots
