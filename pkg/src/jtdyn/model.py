"""Algebra of the linear E x e Jahn-Teller model.

Diabatic basis: ``|1> = (1, 0)``, ``|2> = (0, 1)``. The Pauli matrices are the
standard ones, so ``|1>`` carries ``sigma_z = +1`` and the Jz-conserving
combination is ``L_z + sigma_z / 2``.

All functions here are pure; points are ``(qx, qy)`` pairs in atomic units.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class SingularPointError(ValueError):
    """Raised when a quantity is requested at (or too close to) the conical intersection."""


@dataclass(frozen=True)
class ModelParams:
    omega: float = 0.02
    k: float = 0.01

    def __post_init__(self):
        if not np.isfinite(self.omega) or self.omega <= 0:
            raise ValueError(f"omega must be finite and > 0, got {self.omega!r}")
        if not np.isfinite(self.k) or self.k < 0:
            raise ValueError(f"k must be finite and >= 0, got {self.k!r}")

    @property
    def ratio(self) -> float:
        return self.k / self.omega


@dataclass(frozen=True)
class PauliDecomposition:
    """Hermitian 2x2 matrix ``a*I + b . sigma``."""

    a: float
    b: tuple[float, float, float]

    def matrix(self) -> np.ndarray:
        bx, by, bz = self.b
        return self.a * SIGMA_0 + bx * SIGMA_X + by * SIGMA_Y + bz * SIGMA_Z

    @classmethod
    def from_matrix(cls, m) -> "PauliDecomposition":
        m = np.asarray(m, dtype=complex)
        if not np.allclose(m, m.conj().T, rtol=0, atol=1e-14 * max(1.0, np.abs(m).max())):
            raise ValueError("matrix is not Hermitian")
        a = 0.5 * np.trace(m).real
        b = tuple(0.5 * np.trace(s @ m).real for s in PAULI)
        return cls(a=float(a), b=b)


@dataclass(frozen=True)
class GaugeSample:
    Ax: np.ndarray
    Ay: np.ndarray
    Phi: float


@dataclass(frozen=True)
class DualGauge:
    Atilde_x: np.ndarray
    Atilde_y: np.ndarray
    Phi_tilde: float
    Bz_coefficient: float

    @property
    def Bz(self) -> np.ndarray:
        return self.Bz_coefficient * SIGMA_Z


def _point(q) -> tuple[float, float]:
    qx, qy = q
    return float(qx), float(qy)


def _require_off_ci(qx: float, qy: float, min_radius: float = 0.0):
    rho = np.hypot(qx, qy)
    if rho == 0.0 or rho < min_radius:
        raise SingularPointError(f"point ({qx}, {qy}) is at or too close to the conical intersection")
    return rho


def diabatic_potential(q, params: ModelParams) -> PauliDecomposition:
    qx, qy = _point(q)
    a = params.omega * (qx * qx + qy * qy) / 2
    return PauliDecomposition(a=a, b=(params.k * qx, params.k * qy, 0.0))


def adiabatic_energies(q, params: ModelParams) -> tuple[float, float]:
    """Lower and upper adiabatic surfaces ``V_-``, ``V_+`` at ``q``."""
    qx, qy = _point(q)
    rho = np.hypot(qx, qy)
    base = params.omega * rho * rho / 2
    return base - params.k * rho, base + params.k * rho


def adiabatic_states_at_angle(phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Adiabatic frame as a smooth function of the polar angle ``phi``.

    Not single valued: ``phi -> phi + 2*pi`` flips the sign of both states.
    The lower state is ``(e^{-i phi/2}, -e^{i phi/2}) / sqrt(2)``.
    """
    lo = np.exp(-0.5j * phi)
    hi = np.exp(0.5j * phi)
    psi_minus = np.array([lo, -hi]) / np.sqrt(2)
    psi_plus = np.array([lo, hi]) / np.sqrt(2)
    return psi_minus, psi_plus


def adiabatic_states(q) -> tuple[np.ndarray, np.ndarray]:
    """Energy-ordered adiabatic spinors ``(psi_minus, psi_plus)`` with ``phi = atan2(qy, qx)``."""
    qx, qy = _point(q)
    _require_off_ci(qx, qy)
    return adiabatic_states_at_angle(np.arctan2(qy, qx))


def gauge_potential(q) -> GaugeSample:
    """Position-picture gauge potentials in the printed form ``A = (qy, -qx)/rho^2 sigma_y``."""
    qx, qy = _point(q)
    rho = _require_off_ci(qx, qy)
    rho2 = rho * rho
    return GaugeSample(Ax=qy / rho2 * SIGMA_Y, Ay=-qx / rho2 * SIGMA_Y, Phi=1.0 / (8.0 * rho2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _field_tensor_cd(qx: float, qy: float, step: float) -> np.ndarray:
    d_ay_dx = (gauge_potential((qx + step, qy)).Ay - gauge_potential((qx - step, qy)).Ay) / (2 * step)
    d_ax_dy = (gauge_potential((qx, qy + step)).Ax - gauge_potential((qx, qy - step)).Ax) / (2 * step)
    g = gauge_potential((qx, qy))
    return d_ay_dx - d_ax_dy - 1j * commutator(g.Ax, g.Ay)


def field_tensor(q, step: float = 1e-3, richardson: bool = False) -> np.ndarray:
    """``F_xy = dAy/dx - dAx/dy - i[Ax, Ay]`` from central differences of ``gauge_potential``.

    Plain central differences converge as ``step**2``. With ``richardson`` the
    result is the extrapolation ``(4 F(step/2) - F(step)) / 3``.
    """
    qx, qy = _point(q)
    if step <= 0:
        raise ValueError("step must be positive")
    _require_off_ci(qx, qy, min_radius=2 * step)
    coarse = _field_tensor_cd(qx, qy, step)
    if not richardson:
        return coarse
    return (4 * _field_tensor_cd(qx, qy, step / 2) - coarse) / 3


def wilson_loop(radius: float, n_points: int, gauge_phases=None) -> complex:
    """Ordered product of lower-state overlaps ``<psi(phi_{j+1})|psi(phi_j)>`` around a circle.

    The loop is closed with the state at ``phi_0`` itself, so the product is
    gauge invariant. ``gauge_phases`` (length ``n_points``) multiplies each
    state by ``exp(i*chi_j)``; the result must not depend on it.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n_points < 16:
        raise ValueError("n_points must be >= 16")
    phis = 2 * np.pi * np.arange(n_points) / n_points
    # the adiabatic states do not depend on the radius; the loop only fixes the path
    states = np.array([adiabatic_states_at_angle(p)[0] for p in phis])
    if gauge_phases is not None:
        states = states * np.exp(1j * np.asarray(gauge_phases, dtype=float))[:, None]
    nxt = np.roll(states, -1, axis=0)
    overlaps = np.einsum("ji,ji->j", nxt.conj(), states)
    return complex(np.prod(overlaps))


def berry_phase_loop(radius: float, n_points: int = 1000) -> float:
    """Geometric phase of the lower adiabatic state around a circle centred on the CI, in (-pi, pi]."""
    gamma = float(np.angle(wilson_loop(radius, n_points)))
    if gamma <= -np.pi:
        gamma += 2 * np.pi
    return gamma


def dual_gauge(params: ModelParams) -> DualGauge:
    r = params.k / params.omega
    return DualGauge(
        Atilde_x=-r * SIGMA_X,
        Atilde_y=-r * SIGMA_Y,
        # cancels the +k^2/omega left over when the shifted quadratic form is expanded
        Phi_tilde=-params.k * params.k / params.omega,
        Bz_coefficient=2 * r * r,
    )


def dual_lorentz_force(q, spin_z: float, params: ModelParams) -> np.ndarray:
    qx, qy = _point(q)
    coeff = dual_gauge(params).Bz_coefficient
    return coeff * spin_z * np.array([-qy, qx])


def dual_hamiltonian_potential(q, params: ModelParams) -> np.ndarray:
    """Position-dependent part of the dual form ``omega/2 (q - A~)^2 + Phi~`` as a 2x2 matrix.

    Equals ``diabatic_potential(q).matrix()`` identically.
    """
    qx, qy = _point(q)
    g = dual_gauge(params)
    sx = qx * SIGMA_0 - g.Atilde_x
    sy = qy * SIGMA_0 - g.Atilde_y
    return params.omega * (sx @ sx + sy @ sy) / 2 + g.Phi_tilde * SIGMA_0
