import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from statmech_mmse.errors import DomainError, InvalidArgument
from statmech_mmse.iid import IidParams, iid_mmse_per_n
from statmech_mmse.numerics import RngStream
from statmech_mmse.relations import derivative
from statmech_mmse.sphere import (
    FROZEN,
    PARAMAGNETIC,
    SphereParams,
    clipped_stationary_rho,
    sphere_beta_r,
    sphere_branch,
    sphere_error_exponent,
    sphere_error_exponent_grid,
    sphere_free_energy_per_n,
    sphere_geometry,
    sphere_gamma,
    sphere_mmse_per_n,
    sphere_mutual_info_per_n,
)

P = SphereParams(1.0, 0.5)


def test_gamma_examples():
    assert sphere_gamma(0.0) == 0.0
    assert sphere_gamma(math.sqrt(1 - math.exp(-2))) == pytest.approx(-1.0, abs=1e-14)
    assert sphere_gamma(0.6) == pytest.approx(0.5 * math.log(0.64), abs=1e-15)
    for bad in (1.0, -1.0, 1.5):
        with pytest.raises(DomainError):
            sphere_gamma(bad)


def test_beta_r_examples():
    assert sphere_beta_r(P) == pytest.approx(math.e - 1, abs=1e-15)
    assert sphere_beta_r(SphereParams(1.0, math.log(2))) == pytest.approx(3.0, abs=1e-14)
    assert sphere_beta_r(SphereParams(2.0, 0.5)) == pytest.approx((math.e - 1) / 2, abs=1e-15)


@given(px=st.floats(0.01, 100), rate=st.floats(0.01, 5))
def test_beta_r_is_where_capacity_meets_rate(px, rate):
    b = sphere_beta_r(SphereParams(px, rate))
    assert 0.5 * math.log1p(b * px) == pytest.approx(rate, rel=1e-12)


def test_free_energy_examples():
    assert sphere_free_energy_per_n(P, 1.0) == pytest.approx((0.5 * math.log(2) + 0.5, PARAMAGNETIC))
    assert sphere_free_energy_per_n(P, 3.0) == (1.0, FROZEN)
    psi, branch = sphere_free_energy_per_n(P, math.e - 1)
    assert psi == pytest.approx(1.0, abs=1e-15)
    assert 0.5 * math.log1p(math.e - 1) + 0.5 == pytest.approx(1.0, abs=1e-15)


def test_mmse_examples():
    assert sphere_mmse_per_n(P, 1.0) == 0.5
    assert sphere_mmse_per_n(P, 2.0) == 0.0
    left = sphere_mmse_per_n(P, math.nextafter(math.e - 1, 0))
    assert left == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert sphere_mmse_per_n(P, sphere_beta_r(P)) == 0.0


def test_error_exponent_closed_vs_grid():
    _, v = sphere_error_exponent_grid(P, 1.0)
    assert sphere_error_exponent(P, 1.0) == pytest.approx(v, abs=1e-8)


def test_rho_beta_example():
    g = sphere_geometry(P, 1.0)
    assert g.rho_beta == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert g.rho_beta == pytest.approx(math.sqrt(1 + g.theta**2) - g.theta, abs=1e-15)


def test_error_exponent_zero_snr_limit():
    # beta p_a -> 1/2 because p_y contains 1/beta; the exponent tends to -1/2 = -psi(0+)
    for beta in (1e-4, 1e-6, 1e-8):
        g = sphere_geometry(P, beta)
        assert beta * g.p_a == pytest.approx(0.5, abs=2 * beta)
        assert sphere_error_exponent(P, beta) == pytest.approx(-0.5, abs=2 * beta)


def test_error_exponent_on_random_triples():
    g = RngStream(2024).generator()
    worst = 0.0
    for px, rate, beta in zip(g.uniform(0.1, 5, 1000), g.uniform(0.05, 2, 1000), np.exp(g.uniform(-3, 3, 1000))):
        p = SphereParams(px, rate)
        _, v = sphere_error_exponent_grid(p, beta)
        worst = max(worst, abs(v - sphere_error_exponent(p, beta)))
    assert worst < 1e-7


@given(px=st.floats(0.1, 10), rate=st.floats(0.05, 3), beta=st.floats(1e-3, 1e3))
def test_geometry_invariants(px, rate, beta):
    p = SphereParams(px, rate)
    g = sphere_geometry(p, beta)
    assert g.p_g <= g.p_a * (1 + 1e-15)
    assert 0 <= g.rho_star < 1
    assert 0 < g.rho_beta < 1
    if beta >= sphere_beta_r(p):
        assert g.rho_beta > g.rho_star


@given(px=st.floats(0.1, 10), rate=st.floats(0.05, 3), beta=st.floats(1e-3, 1e3))
def test_debug_cross_check_and_min_rule(px, rate, beta):
    p = SphereParams(px, rate)
    psi, branch = sphere_free_energy_per_n(p, beta, debug=True)
    assert branch == sphere_branch(p, beta)
    assert psi == pytest.approx(min(0.5 * math.log1p(beta * px), rate) + 0.5, abs=1e-15)


@given(px=st.floats(0.1, 10), rate=st.floats(0.05, 3), beta=st.floats(1e-3, 1e3))
def test_below_threshold_matches_gaussian_input(px, rate, beta):
    p = SphereParams(px, rate)
    if beta < sphere_beta_r(p):
        assert abs(sphere_mmse_per_n(p, beta) - iid_mmse_per_n(IidParams(px), beta)) < 1e-12
    else:
        assert sphere_mmse_per_n(p, beta) == 0.0


@pytest.mark.parametrize("px,rate", [(1.0, 0.5), (2.0, 0.3), (0.5, 1.0)])
def test_kink_at_threshold(px, rate):
    p = SphereParams(px, rate)
    br = sphere_beta_r(p)
    psi = lambda b: sphere_free_energy_per_n(p, b)[0]
    gap = derivative(psi, br, side=-1, h=1e-5) - derivative(psi, br, side=+1, h=1e-5)
    assert gap == pytest.approx(px / (2 * (1 + br * px)), abs=1e-8)
    assert psi(br * (1 - 1e-12)) == pytest.approx(psi(br), abs=1e-11)


def test_mutual_info_and_validation():
    assert sphere_mutual_info_per_n(P, 3.0) == 0.5
    assert clipped_stationary_rho(0.0) == 0.0
    with pytest.raises(InvalidArgument):
        SphereParams(0.0, 0.5)
    with pytest.raises(InvalidArgument):
        SphereParams(1.0, 0.0)
    with pytest.raises(InvalidArgument):
        sphere_free_energy_per_n(P, 0.0)
