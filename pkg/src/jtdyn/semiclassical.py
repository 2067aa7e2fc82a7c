"""Wong-type semiclassical equations for a phase-space point carrying a spin isovector.

State ordering throughout is ``(x, px, y, py, sx, sy, sz)``.

``spin_factor=1`` is the system exactly as written in the source model:
spin precession at rate ``k``. ``spin_factor=2`` doubles the spin equations,
which is what Heisenberg's equations give for ``<sigma>`` under the quantum
Hamiltonian; the forces on ``(px, py)`` are the same in both variants.
"""
from __future__ import annotations

from dataclasses import astuple, dataclass

import numba
import numpy as np

from .model import ModelParams
from .series import ObservableSeries

STATE_FIELDS = ("x", "px", "y", "py", "sx", "sy", "sz")


class IntegrationError(FloatingPointError):
    pass


@dataclass(frozen=True)
class ClassicalState:
    x: float
    y: float
    px: float = 0.0
    py: float = 0.0
    sx: float = 0.0
    sy: float = 0.0
    sz: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.px, self.y, self.py, self.sx, self.sy, self.sz], dtype=float)

    @classmethod
    def from_array(cls, v) -> "ClassicalState":
        x, px, y, py, sx, sy, sz = (float(c) for c in v)
        return cls(x=x, y=y, px=px, py=py, sx=sx, sy=sy, sz=sz)

    @property
    def spin_norm(self) -> float:
        return float(np.sqrt(self.sx ** 2 + self.sy ** 2 + self.sz ** 2))

    def __iter__(self):
        return iter(astuple(self))


def _check_factor(spin_factor):
    if spin_factor not in (1, 2):
        raise ValueError("spin_factor must be 1 or 2")


@numba.njit(cache=True, nogil=True)
def _rhs(s, out, omega, k, f):
    x, px, y, py, sx, sy, sz = s[0], s[1], s[2], s[3], s[4], s[5], s[6]
    out[0] = omega * px
    out[1] = -omega * x - k * sx
    out[2] = omega * py
    out[3] = -omega * y - k * sy
    out[4] = f * k * y * sz
    out[5] = -f * k * x * sz
    out[6] = f * k * (x * sy - y * sx)


@numba.njit(cache=True, nogil=True)
def _rk4_step(s, omega, k, f, dt, k1, k2, k3, k4, tmp):
    _rhs(s, k1, omega, k, f)
    for i in range(7):
        tmp[i] = s[i] + 0.5 * dt * k1[i]
    _rhs(tmp, k2, omega, k, f)
    for i in range(7):
        tmp[i] = s[i] + 0.5 * dt * k2[i]
    _rhs(tmp, k3, omega, k, f)
    for i in range(7):
        tmp[i] = s[i] + dt * k3[i]
    _rhs(tmp, k4, omega, k, f)
    for i in range(7):
        s[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@numba.njit(cache=True, nogil=True)
def _integrate_one(s, omega, k, f, dt, n_steps, stride, rec):
    """Integrates ``s`` in place, writing every ``stride``-th state into ``rec``.

    Returns the number of completed steps (less than ``n_steps`` if the state
    became non-finite).
    """
    k1 = np.empty(7)
    k2 = np.empty(7)
    k3 = np.empty(7)
    k4 = np.empty(7)
    tmp = np.empty(7)
    for i in range(7):
        rec[0, i] = s[i]
    r = 1
    for step in range(1, n_steps + 1):
        _rk4_step(s, omega, k, f, dt, k1, k2, k3, k4, tmp)
        for i in range(7):
            if not np.isfinite(s[i]):
                return step
        if step % stride == 0:
            for i in range(7):
                rec[r, i] = s[i]
            r += 1
    return n_steps


def wong_rhs(state: ClassicalState, params: ModelParams, spin_factor: int = 1) -> ClassicalState:
    """Time derivative of ``state``, returned as a ``ClassicalState`` of rates."""
    _check_factor(spin_factor)
    out = np.empty(7)
    _rhs(state.as_array(), out, float(params.omega), float(params.k), float(spin_factor))
    return ClassicalState.from_array(out)


def classical_energy(states: np.ndarray, params: ModelParams) -> np.ndarray:
    """``omega (p^2 + q^2)/2 + k (x sx + y sy)`` for rows in state ordering."""
    x, px, y, py, sx, sy = (states[..., i] for i in range(6))
    return params.omega * (px ** 2 + py ** 2 + x ** 2 + y ** 2) / 2 + params.k * (x * sx + y * sy)


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    spin_factor: int

    def __getitem__(self, name: str) -> np.ndarray:
        return self.states[:, STATE_FIELDS.index(name)]

    @property
    def final(self) -> ClassicalState:
        return ClassicalState.from_array(self.states[-1])

    def to_series(self, params: ModelParams) -> ObservableSeries:
        channels = {name: self.states[:, i] for i, name in enumerate(STATE_FIELDS)}
        channels["spin_norm"] = np.sqrt(np.sum(self.states[:, 4:] ** 2, axis=1))
        channels["energy"] = classical_energy(self.states, params)
        return ObservableSeries(self.t, channels, meta={"engine": "semiclassical", "spin_factor": self.spin_factor})


def rk4_integrate(state0: ClassicalState, params: ModelParams, dt: float = 0.01, t_final: float = 15000.0,
                  spin_factor: int = 1, stride: int = 1) -> Trajectory:
    """Fixed-step classical RK4; records the initial state and every ``stride``-th step."""
    _check_factor(spin_factor)
    if not dt > 0:
        raise ValueError("dt must be > 0")
    n_steps = int(round(t_final / dt))
    stride = max(int(stride), 1)
    n_rec = n_steps // stride + 1
    rec = np.empty((n_rec, 7))
    s = state0.as_array()
    done = _integrate_one(s, float(params.omega), float(params.k), float(spin_factor), float(dt),
                          n_steps, stride, rec)
    if done < n_steps:
        raise IntegrationError(f"state became non-finite at step {done} (t={done * dt}): {s}")
    t = dt * stride * np.arange(n_rec)
    return Trajectory(t=t, states=rec, spin_factor=spin_factor)


def short_time_prediction(t, params: ModelParams, x0: float):
    """Leading short-time transverse displacement ``omega k^2 x0 t^3 / 6`` (``spin_factor=1``, sz=+1).

    Valid while both ``omega*t`` and ``k*x0*t`` are small.
    """
    t = np.asarray(t, dtype=float)
    return params.omega * params.k ** 2 * x0 * t ** 3 / 6
