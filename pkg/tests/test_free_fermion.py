import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinbath_dd import free_fermion as ff
from spinbath_dd.cli_experiments import manybody_free_echo
from spinbath_dd.spin_model import ModelConfig


def test_zero_coupling_gives_identical_matrices():
    hp, hm = ff.single_particle_matrices(6, 1.0, 0.0, 3)
    assert np.array_equal(hp, hm)


def test_two_site_hopping_spectrum():
    # XX chain J (SxSx + SySy) maps to hopping J/2
    assert np.allclose(np.linalg.eigvalsh(ff.hopping_matrix(2, 1.0)), [-0.5, 0.5])


def test_single_difference_entry():
    hp, hm = ff.single_particle_matrices(8, 1.0, -0.15, 4)
    d = hp - hm
    assert np.count_nonzero(d) == 1 and math.isclose(d[4, 4], -0.3)
    assert np.allclose(hp, hp.T)
    with pytest.raises(ValueError):
        ff.single_particle_matrices(4, 1.0, 0.1, 4)


def test_correlation_matrix_projector():
    r = ff.correlation_matrix(ff.hopping_matrix(2))
    assert np.allclose(sorted(np.linalg.eigvalsh(r.r)), [0, 1])
    r = ff.correlation_matrix(ff.hopping_matrix(10))
    assert np.max(np.abs(r.r @ r.r - r.r)) < 1e-10
    assert math.isclose(np.trace(r.r), r.n_particles) and r.n_particles == 5


def test_odd_chain_zero_mode_rejected():
    with pytest.raises(ValueError, match="zero-energy"):
        ff.correlation_matrix(ff.hopping_matrix(5))


def test_echo_trivial_limits():
    hp, hm = ff.single_particle_matrices(8, 1.0, -0.15, 4)
    r = ff.correlation_matrix(ff.hopping_matrix(8))
    assert math.isclose(ff.loschmidt_det(r, hp, hm, 0.0), 1.0)
    h0 = ff.hopping_matrix(8)
    assert math.isclose(ff.loschmidt_det(r, h0, h0, 3.0), 1.0)
    with pytest.raises(ValueError):
        ff.loschmidt_det(r, hp, hm, -1.0)


def test_echo_curve_matches_single_point_formula():
    times = np.linspace(0, 3, 7)
    hp, hm = ff.single_particle_matrices(10, 1.0, -0.3, 5)
    r = ff.correlation_matrix(ff.hopping_matrix(10))
    direct = [ff.loschmidt_det(r, hp, hm, t) for t in times]
    assert np.allclose(ff.echo_curve(10, -0.3, times), direct, atol=1e-12)


@given(st.integers(2, 20).map(lambda n: 2 * n), st.floats(-1.0, 1.0), st.floats(0.0, 50.0))
@settings(max_examples=30, deadline=None)
def test_echo_bounded(L, eps, t):
    val = ff.echo_curve(L, eps, [t])[0]
    assert -1e-12 <= val <= 1 + 1e-9


def test_short_time_alpha():
    assert math.isclose(ff.short_time_alpha(-0.15), 0.0225)
    assert ff.short_time_alpha(0.0) == 0.0


def test_fitted_alpha_large_chain():
    times = np.linspace(0, 0.1, 21)
    alpha = ff.fit_alpha(times, ff.echo_curve(40, -0.15, times))
    assert abs(alpha / 0.0225 - 1) < 0.03
    t = 0.02
    val = -math.log(ff.echo_curve(40, -0.15, [t])[0]) / t ** 2
    assert abs(val / 0.0225 - 1) < 0.05


def test_minus_reference_flag():
    # the bath already relaxed into H- gives a slower initial decay than the free chain
    times = np.linspace(0, 0.1, 11)
    a_free = ff.fit_alpha(times, ff.echo_curve(12, -0.15, times, reference="free"))
    a_minus = ff.fit_alpha(times, ff.echo_curve(12, -0.15, times, reference="minus"))
    assert abs(a_free - 0.0225) < abs(a_minus - 0.0225)
    with pytest.raises(ValueError):
        ff.echo_curve(12, -0.15, times, reference="plus")


def test_matches_manybody_engine():
    cfg = ModelConfig(L=8, coupling="ising", epsilon=-0.15)
    times = np.linspace(0, 2, 21)
    mb = manybody_free_echo(cfg, times, dt=0.005)
    assert np.max(np.abs(mb - ff.echo_curve(8, -0.15, times))) < 1e-5


def test_ground_energy_polynomial_scaling():
    # L = 400 is still a small dense eigenproblem
    assert ff.ground_energy(400) < 0
