"""Periodic 2D grids, two-channel spinor fields and field-level observables.

Arrays are indexed ``[iy, ix]``: rows hold a fixed ``Qy``, columns run along
``Qx``. Positions are ``-L + j*dx`` for ``j = 0..n-1`` so the origin sits
exactly on the node ``(n/2, n/2)``.

Fourier convention: forward transform with kernel ``exp(-i p.q)`` (numpy /
scipy ordering internally), inverse carries the ``1/n^2``. The continuum
momentum amplitude is ``phi(p) = dx^2/(2 pi) * exp(i p.L) * FFT[psi]``; files
always store momentum axes in monotonic order.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .model import ModelParams, adiabatic_states_at_angle


class SupportError(ValueError):
    """Wave packet does not fit inside the grid with the required margin."""


class ZeroNormError(ValueError):
    pass


class SupportWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Grid2D:
    n: int = 256
    extent: float = 25.0

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n!r}")
        if not self.extent > 0:
            raise ValueError(f"extent must be > 0, got {self.extent!r}")

    @property
    def dx(self) -> float:
        return 2 * self.extent / self.n

    @property
    def dp(self) -> float:
        return np.pi / self.extent

    @cached_property
    def x(self) -> np.ndarray:
        return -self.extent + self.dx * np.arange(self.n)

    @cached_property
    def p(self) -> np.ndarray:
        """Momenta in FFT order."""
        return 2 * np.pi * sfft.fftfreq(self.n, self.dx)

    @property
    def p_sorted(self) -> np.ndarray:
        return sfft.fftshift(self.p)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="xy")

    @cached_property
    def pmesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.p, self.p, indexing="xy")

    @cached_property
    def origin_index(self) -> tuple[int, int]:
        return self.n // 2, self.n // 2

    @cached_property
    def _momentum_phase(self) -> np.ndarray:
        px, py = self.pmesh
        return np.exp(1j * (px + py) * self.extent)


@dataclass(frozen=True, eq=False)
class SpinorField:
    grid: Grid2D
    c1: np.ndarray
    c2: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.grid.n, self.grid.n)
        if self.c1.shape != shape or self.c2.shape != shape:
            raise ValueError(f"channel arrays must have shape {shape}")

    @classmethod
    def from_stack(cls, grid: Grid2D, psi: np.ndarray) -> "SpinorField":
        return cls(grid, psi[0], psi[1])

    @property
    def stack(self) -> np.ndarray:
        return np.stack([self.c1, self.c2])

    def scaled(self, factor) -> "SpinorField":
        return SpinorField(self.grid, self.c1 * factor, self.c2 * factor)


def to_momentum(psi: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Continuum-normalised momentum amplitudes (FFT order) of one or more channels."""
    return sfft.fft2(psi, axes=(-2, -1)) * (grid.dx ** 2 / (2 * np.pi)) * grid._momentum_phase


def from_momentum(phi: np.ndarray, grid: Grid2D) -> np.ndarray:
    return sfft.ifft2(phi / grid._momentum_phase, axes=(-2, -1)) * (2 * np.pi / grid.dx ** 2)


def fourier_derivative(psi: np.ndarray, grid: Grid2D, axis: str) -> np.ndarray:
    """``-i d/dq`` applied spectrally, i.e. the momentum operator along ``axis``."""
    px, py = grid.pmesh
    mult = px if axis == "x" else py
    return sfft.ifft2(mult * sfft.fft2(psi, axes=(-2, -1)), axes=(-2, -1))


def make_gaussian(grid: Grid2D, center=(10.0, 0.0), sigma: float = 1.0, channel: int = 1,
                  momentum=(0.0, 0.0)) -> SpinorField:
    """Gaussian packet ``(pi sigma^2)^{-1/2} exp(-|q - c|^2 / 2 sigma^2)`` in one diabatic channel."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if channel not in (1, 2):
        raise ValueError("channel must be 1 or 2")
    cx, cy = center
    margin = 5 * sigma
    lo, hi = grid.x[0], grid.x[-1]
    if min(cx - lo, hi - cx, cy - lo, hi - cy) < margin:
        raise SupportError(f"packet at {center} with sigma={sigma} is closer than 5 sigma to the grid edge")
    X, Y = grid.mesh
    amp = np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * sigma ** 2)).astype(complex)
    if momentum[0] or momentum[1]:
        amp = amp * np.exp(1j * (momentum[0] * X + momentum[1] * Y))
    amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * grid.dx ** 2)
    zero = np.zeros_like(amp)
    c1, c2 = (amp, zero) if channel == 1 else (zero, amp)
    return SpinorField(grid, c1, c2)


def _density(field_: SpinorField) -> np.ndarray:
    return np.abs(field_.c1) ** 2 + np.abs(field_.c2) ** 2


def norm(field_: SpinorField) -> float:
    return float(np.sum(_density(field_)) * field_.grid.dx ** 2)


def _checked_norm(field_: SpinorField) -> float:
    nrm = norm(field_)
    if not nrm > 0:
        raise ZeroNormError("field has zero norm")
    return nrm


def expectation_position(field_: SpinorField) -> np.ndarray:
    nrm = _checked_norm(field_)
    X, Y = field_.grid.mesh
    rho = _density(field_)
    w = field_.grid.dx ** 2 / nrm
    return np.array([np.sum(rho * X) * w, np.sum(rho * Y) * w])


def momentum_density(field_: SpinorField) -> np.ndarray:
    """``|phi_1|^2 + |phi_2|^2`` in FFT order, normalised so it integrates to the norm with ``dp^2``."""
    phi = to_momentum(field_.stack, field_.grid)
    return np.sum(np.abs(phi) ** 2, axis=0)


def expectation_momentum(field_: SpinorField) -> np.ndarray:
    _checked_norm(field_)
    g = field_.grid
    rho_p = momentum_density(field_)
    total = np.sum(rho_p)
    px, py = g.pmesh
    return np.array([np.sum(rho_p * px) / total, np.sum(rho_p * py) / total])


def densities(field_: SpinorField) -> tuple[np.ndarray, np.ndarray]:
    """Position density and momentum density (momentum axes in monotonic order)."""
    return _density(field_), sfft.fftshift(momentum_density(field_))


def projected_distribution(field_: SpinorField, axis: str = "y") -> np.ndarray:
    """Marginal density along ``axis`` (``'y'`` integrates over ``Qx``)."""
    rho = _density(field_)
    dx = field_.grid.dx
    if axis == "y":
        return rho.sum(axis=1) * dx
    if axis == "x":
        return rho.sum(axis=0) * dx
    raise ValueError("axis must be 'x' or 'y'")


def spin_expectations(field_: SpinorField) -> np.ndarray:
    nrm = _checked_norm(field_)
    w = field_.grid.dx ** 2 / nrm
    cross = np.sum(field_.c1.conj() * field_.c2) * w
    sz = (np.sum(np.abs(field_.c1) ** 2) - np.sum(np.abs(field_.c2) ** 2)) * w
    return np.array([2 * cross.real, 2 * cross.imag, sz])


def _lower_state_angles(grid: Grid2D) -> np.ndarray:
    X, Y = grid.mesh
    phi = np.arctan2(Y, X)
    i0, j0 = grid.origin_index
    # projector undefined at the CI node: borrow the +x neighbour's
    phi[i0, j0] = phi[i0, j0 + 1]
    return phi


def adiabatic_populations(field_: SpinorField) -> tuple[float, float]:
    nrm = _checked_norm(field_)
    phi = _lower_state_angles(field_.grid)
    psi_minus, _ = adiabatic_states_at_angle(phi)
    amp_minus = psi_minus[0].conj() * field_.c1 + psi_minus[1].conj() * field_.c2
    p_minus = float(np.sum(np.abs(amp_minus) ** 2) * field_.grid.dx ** 2 / nrm)
    return p_minus, 1.0 - p_minus


def expectation_Lz(field_: SpinorField) -> float:
    nrm = _checked_norm(field_)
    g = field_.grid
    X, Y = g.mesh
    psi = field_.stack
    lz_psi = X * fourier_derivative(psi, g, "y") - Y * fourier_derivative(psi, g, "x")
    return float(np.sum(psi.conj() * lz_psi).real * g.dx ** 2 / nrm)


def expectation_Jz(field_: SpinorField) -> float:
    return expectation_Lz(field_) + 0.5 * spin_expectations(field_)[2]


def kinetic_energy(field_: SpinorField, params: ModelParams) -> float:
    g = field_.grid
    px, py = g.pmesh
    rho_p = momentum_density(field_)
    return float(params.omega * np.sum(rho_p * (px ** 2 + py ** 2)) / 2 * g.dp ** 2)


def potential_energy(field_: SpinorField, params: ModelParams) -> float:
    g = field_.grid
    X, Y = g.mesh
    a = params.omega * (X ** 2 + Y ** 2) / 2
    coupling = 2 * np.sum((field_.c1.conj() * params.k * (X - 1j * Y) * field_.c2).real)
    return float((np.sum(a * _density(field_)) + coupling) * g.dx ** 2)


def energy(field_: SpinorField, params: ModelParams) -> float:
    """``<H>`` as kinetic (Fourier space) plus potential (position space), unnormalised."""
    return kinetic_energy(field_, params) + potential_energy(field_, params)


def check_support(field_: SpinorField, threshold: float = 1e-8) -> float:
    """Probability within two cells of the grid edge; warns above ``threshold``."""
    rho = _density(field_)
    edge = np.ones_like(rho, dtype=bool)
    edge[2:-2, 2:-2] = False
    weight = float(np.sum(rho[edge]) * field_.grid.dx ** 2)
    if weight > threshold:
        warnings.warn(f"density near grid edge is {weight:.3e} (> {threshold:g})", SupportWarning, stacklevel=2)
    return weight
