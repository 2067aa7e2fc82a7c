import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jtdyn import grid as gr
from jtdyn.grid import Grid2D, SpinorField, SupportError, ZeroNormError

# small grid: dx = 0.375, momenta up to ~8.4
SMALL = Grid2D(64, 12.0)
# production grid
FIG1 = Grid2D(256, 25.0)


@pytest.fixture(scope="module")
def fig1_packet():
    return gr.make_gaussian(FIG1, (10.0, 0.0), 1.0, 1)


def test_grid_validation():
    for n in (100, 4, 0):
        with pytest.raises(ValueError):
            Grid2D(n, 10.0)
    with pytest.raises(ValueError):
        Grid2D(64, 0.0)


def test_grid_geometry():
    g = Grid2D(256, 25.0)
    assert g.dx == pytest.approx(50 / 256)
    assert g.dp == pytest.approx(np.pi / 25)
    assert g.x[0] == -25 and g.x[g.n // 2] == 0
    assert g.p_sorted[0] == pytest.approx(-np.pi / g.dx)
    assert np.all(np.diff(g.p_sorted) > 0)


def test_gaussian_normalised_and_centred(fig1_packet):
    assert gr.norm(fig1_packet) == pytest.approx(1, abs=1e-12)
    assert np.allclose(gr.expectation_position(fig1_packet), (10, 0), atol=1e-10)
    assert np.allclose(gr.expectation_momentum(fig1_packet), (0, 0), atol=1e-12)
    assert not np.any(fig1_packet.c2)


def test_gaussian_moments(fig1_packet):
    # |psi|^2 of a width-sigma packet has variance sigma^2/2 per axis, |phi|^2 has 1/(2 sigma^2)
    X, Y = FIG1.mesh
    rho, _ = gr.densities(fig1_packet)
    w = FIG1.dx ** 2
    assert np.sum(rho * (X - 10) ** 2) * w == pytest.approx(0.5, abs=1e-8)
    assert np.sum(rho * Y ** 2) * w == pytest.approx(0.5, abs=1e-8)
    rho_p = gr.momentum_density(fig1_packet)
    px, py = FIG1.pmesh
    assert np.sum(rho_p * px ** 2) * FIG1.dp ** 2 == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("sigma", [0.5, 2.0])
def test_gaussian_width_variants(sigma):
    f = gr.make_gaussian(FIG1, (8.0, 0.0), sigma)
    X, _ = FIG1.mesh
    rho, _ = gr.densities(f)
    assert np.sum(rho * (X - 8) ** 2) * FIG1.dx ** 2 == pytest.approx(sigma ** 2 / 2, abs=1e-8)


def test_gaussian_support_margin():
    with pytest.raises(SupportError):
        gr.make_gaussian(SMALL, (8.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        gr.make_gaussian(SMALL, (0.0, 0.0), 1.0, channel=3)


def test_global_phase_invariance(fig1_packet):
    rotated = fig1_packet.scaled(np.exp(0.7j))
    for fn in (gr.expectation_position, gr.expectation_momentum, gr.spin_expectations):
        assert np.allclose(fn(rotated), fn(fig1_packet), atol=1e-14)
    assert gr.expectation_Jz(rotated) == pytest.approx(gr.expectation_Jz(fig1_packet), abs=1e-14)
    assert np.allclose(gr.adiabatic_populations(rotated), gr.adiabatic_populations(fig1_packet))


@pytest.mark.parametrize("p0", [(0.7, 0.0), (-1.3, 2.1)])
def test_momentum_shift(p0):
    f = gr.make_gaussian(FIG1, (3.0, -2.0), 1.0, momentum=p0)
    assert np.allclose(gr.expectation_momentum(f), p0, atol=1e-8)
    assert np.allclose(gr.expectation_position(f), (3, -2), atol=1e-10)


def test_fourier_roundtrip_and_parseval(fig1_packet):
    rng = np.random.default_rng(0)
    psi = rng.normal(size=(2, 64, 64)) + 1j * rng.normal(size=(2, 64, 64))
    back = gr.from_momentum(gr.to_momentum(psi, SMALL), SMALL)
    assert np.max(np.abs(back - psi)) / np.max(np.abs(psi)) < 1e-12
    pos_norm = np.sum(np.abs(psi) ** 2) * SMALL.dx ** 2
    mom_norm = np.sum(np.abs(gr.to_momentum(psi, SMALL)) ** 2) * SMALL.dp ** 2
    assert mom_norm == pytest.approx(pos_norm, rel=1e-12)


def test_momentum_amplitude_is_continuum_fourier_transform(fig1_packet):
    # phi(p) of the normalised sigma=1 packet at x0: pi^{-1/2} exp(-p^2/2) exp(-i px x0)
    phi = gr.to_momentum(fig1_packet.c1, FIG1)
    px, py = FIG1.pmesh
    exact = np.exp(-(px ** 2 + py ** 2) / 2) * np.exp(-1j * px * 10) / np.sqrt(np.pi)
    assert np.max(np.abs(phi - exact)) < 1e-10


def test_fourier_derivative_matches_analytic(fig1_packet):
    X, _ = FIG1.mesh
    analytic = -1j * (-(X - 10)) * fig1_packet.c1
    numeric = gr.fourier_derivative(fig1_packet.c1, FIG1, "x")
    assert np.max(np.abs(numeric - analytic)) < 1e-8


def test_densities_integrate_to_norm(fig1_packet):
    rho, rho_p = gr.densities(fig1_packet)
    assert np.sum(rho) * FIG1.dx ** 2 == pytest.approx(1, abs=1e-10)
    assert np.sum(rho_p) * FIG1.dp ** 2 == pytest.approx(1, abs=1e-10)
    iy, ix = np.unravel_index(np.argmax(rho), rho.shape)
    assert FIG1.x[ix] == pytest.approx(10, abs=FIG1.dx) and FIG1.x[iy] == pytest.approx(0, abs=FIG1.dx)
    jy, jx = np.unravel_index(np.argmax(rho_p), rho_p.shape)
    assert FIG1.p_sorted[jx] == pytest.approx(0, abs=FIG1.dp)


def test_projected_distribution(fig1_packet):
    m = gr.projected_distribution(fig1_packet, "y")
    assert np.sum(m) * FIG1.dx == pytest.approx(1, abs=1e-10)
    assert FIG1.x[np.argmax(m)] == 0
    # symmetric about qy = 0 (index n/2 is the origin)
    mid = FIG1.n // 2
    assert np.allclose(m[mid + 1:mid + 40], m[mid - 1:mid - 40:-1], atol=1e-15)
    shifted = gr.make_gaussian(FIG1, (10.0, 2.0), 1.0)
    ms = gr.projected_distribution(shifted, "y")
    assert np.sum(ms * FIG1.x) * FIG1.dx == pytest.approx(2, abs=1e-8)
    with pytest.raises(ValueError):
        gr.projected_distribution(shifted, "z")


def test_spin_and_angular_momentum_of_initial_state(fig1_packet):
    # standard Pauli matrices: |1> has sigma_z = +1
    assert np.allclose(gr.spin_expectations(fig1_packet), (0, 0, 1), atol=1e-15)
    assert gr.expectation_Lz(fig1_packet) == pytest.approx(0, abs=1e-12)
    assert gr.expectation_Jz(fig1_packet) == pytest.approx(0.5, abs=1e-12)
    two = gr.make_gaussian(FIG1, (10.0, 0.0), 1.0, channel=2)
    assert gr.spin_expectations(two)[2] == pytest.approx(-1)


def test_populations_complete(fig1_packet):
    p_minus, p_plus = gr.adiabatic_populations(fig1_packet)
    # |1> is an equal superposition of the two adiabatic states everywhere
    assert p_minus == pytest.approx(0.5, abs=1e-12)
    assert p_minus + p_plus == pytest.approx(1, abs=1e-10)


def test_lower_state_population_of_adiabatic_packet():
    from jtdyn.model import adiabatic_states_at_angle
    X, Y = SMALL.mesh
    env = gr.make_gaussian(SMALL, (3.0, 1.0), 1.0).c1
    psi_m, _ = adiabatic_states_at_angle(np.arctan2(Y, X))
    f = SpinorField(SMALL, env * psi_m[0], env * psi_m[1])
    assert gr.adiabatic_populations(f)[0] == pytest.approx(1, abs=1e-12)


def test_zero_norm_errors():
    z = SpinorField(SMALL, np.zeros((64, 64), complex), np.zeros((64, 64), complex))
    for fn in (gr.expectation_position, gr.expectation_momentum, gr.spin_expectations,
               gr.adiabatic_populations, gr.expectation_Jz):
        with pytest.raises(ZeroNormError):
            fn(z)


@settings(max_examples=25, deadline=None)
@given(st.floats(-4, 4), st.floats(-4, 4), st.floats(0.6, 1.2), st.floats(0, 2 * np.pi))
def test_random_packets_normalised(cx, cy, sigma, theta):
    f = gr.make_gaussian(SMALL, (cx, cy), sigma).scaled(np.exp(1j * theta))
    assert gr.norm(f) == pytest.approx(1, abs=1e-12)
    assert np.allclose(gr.expectation_position(f), (cx, cy), atol=1e-9)


def test_support_monitor_warns():
    f = gr.make_gaussian(SMALL, (0.0, 0.0), 1.0)
    edge = SpinorField(SMALL, np.roll(f.c1, 32, axis=1), f.c2)
    with pytest.warns(gr.SupportWarning):
        gr.check_support(edge)
    assert gr.check_support(f) < 1e-8
