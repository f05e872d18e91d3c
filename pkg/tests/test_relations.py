import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from statmech_mmse.errors import InsufficientData, InvalidArgument, OutOfRange, UnsupportedModel
from statmech_mmse.iid import IidParams, iid_effective_entropy_per_n, iid_free_energy_per_n
from statmech_mmse.numerics import RngStream
from statmech_mmse.oracle import GaussianIid, SparseInstance, SphereCode, oracle_identity_suite
from statmech_mmse.relations import (
    FreeEnergyCurve,
    covariance_identity_check,
    derivative,
    fisher_delta_identity,
    mmse_from_free_energy,
    mmse_from_psi,
    sigma_heat_integral,
)
from statmech_mmse.sparse import PriorExponent, SparseParams, sp_free_energy_per_n, sp_mmse_per_n
from statmech_mmse.sphere import SphereParams


def iid_curve(h, px=1.0):
    b = np.array([1.0 - h, 1.0, 1.0 + h])
    return FreeEnergyCurve(b, 0.5 * np.log1p(px * b) + 0.5)


def test_mmse_from_iid_curve():
    assert mmse_from_free_energy(iid_curve(1e-3), 1) == pytest.approx(0.5, abs=1e-6)


def test_mmse_from_constant_curve():
    c = FreeEnergyCurve(np.linspace(0.5, 2.0, 7), np.full(7, 0.3))
    assert all(mmse_from_free_energy(c, i) == 0.0 for i in range(1, 6))


def test_stencil_error_is_second_order():
    e1 = abs(mmse_from_free_energy(iid_curve(0.1), 1) - 0.5)
    e2 = abs(mmse_from_free_energy(iid_curve(0.05), 1) - 0.5)
    assert e1 / e2 == pytest.approx(4.0, rel=0.05)


def test_nonuniform_stencil_is_exact_on_quadratics():
    b = np.array([0.5, 0.8, 1.7])
    c = FreeEnergyCurve(b, 3 * b * b - b + 2)
    assert mmse_from_free_energy(c, 1) == pytest.approx(2 * (6 * 0.8 - 1), abs=1e-12)


def test_curve_errors():
    c = iid_curve(0.1)
    with pytest.raises(OutOfRange):
        mmse_from_free_energy(c, 0)
    with pytest.raises(OutOfRange):
        mmse_from_free_energy(c, 2)
    with pytest.raises(InvalidArgument):
        FreeEnergyCurve([1.0, 0.9, 1.2], [0.0, 0.0, 0.0])
    with pytest.raises(InvalidArgument):
        FreeEnergyCurve([0.0, 0.5, 1.0], [0.0, 0.0, 0.0])


def test_sparse_curve_matches_closed_form_mmse():
    p = SparseParams.quadratic(1.0, 0.5, 1.2)
    b = np.array([1.0 - 1e-3, 1.0, 1.0 + 1e-3])
    c = FreeEnergyCurve(b, [sp_free_energy_per_n(p, x) for x in b])
    assert mmse_from_free_energy(c, 1) == pytest.approx(sp_mmse_per_n(p, 1.0), abs=1e-5)


def test_one_sided_derivatives_at_a_kink():
    f = lambda b: min(b, 2.0)
    assert derivative(f, 2.0, side=-1) == pytest.approx(1.0, abs=1e-12)
    assert derivative(f, 2.0, side=+1) == pytest.approx(0.0, abs=1e-12)
    assert mmse_from_psi(lambda b: b * b, 3.0) == pytest.approx(12.0, abs=1e-9)


def test_iid_identity_monte_carlo():
    r = oracle_identity_suite(GaussianIid(8, 1.0), 1.0, 20000, RngStream(11))
    assert r.holds()
    assert r.mmse_per_n == pytest.approx(0.5, abs=3 * r.mmse_se)
    assert r.raw_noise_per_n + r.covariance_term_per_n == pytest.approx(0.5, abs=4 * r.covariance_se)


def test_deterministic_zero_prior():
    beta, n, k = 1e4, 4, 5000
    u = RngStream(3).generator().chisquare(n, k) / beta
    cols = np.column_stack([u, -0.5 * beta * u, np.zeros(k), u, beta * beta * u])
    r = covariance_identity_check(cols, beta, n)
    assert r.covariance_term_per_n == pytest.approx(-1.0 / beta, rel=0.1)
    assert abs(r.covariance_term_per_n) < 1e-3
    assert r.mmse_per_n == 0.0
    assert r.holds()


def test_single_codeword_cancels_raw_noise():
    r = oracle_identity_suite(SphereCode(6, 0.0), 2.0, 4000, RngStream(5))
    assert r.mmse_per_n == pytest.approx(0.0, abs=1e-12)
    assert r.raw_noise_per_n + r.covariance_term_per_n == pytest.approx(0.0, abs=4 * r.covariance_se)
    assert r.holds()


def test_sparse_identity_matches_asymptotic_mmse():
    prior = PriorExponent.quadratic(1.0, 0.0)
    r = oracle_identity_suite(SparseInstance(8, 1.0, prior), 1.0, 20000, RngStream(2))
    assert r.holds()
    ref = sp_mmse_per_n(SparseParams(1.0, prior), 1.0)
    assert abs(r.mmse_per_n - ref) <= 3 * r.mmse_se


def test_insufficient_samples():
    with pytest.raises(InsufficientData):
        covariance_identity_check(np.zeros((999, 2)), 1.0, 4)
    with pytest.raises(InvalidArgument):
        covariance_identity_check(np.zeros((2000, 3)), 1.0, 4)


def test_two_column_report():
    g = RngStream(8).generator()
    u = g.standard_normal(3000)
    r = covariance_identity_check(np.column_stack([u, -u]), 2.0, 1)
    assert r.covariance_term_per_n == pytest.approx(-1.0, abs=0.1)
    assert r.fisher_trace_per_n == pytest.approx(4.0 * r.delta_per_n, abs=1e-12)


def test_fisher_delta_closed_form():
    r = fisher_delta_identity(IidParams(1.0), 1.0)
    assert (r.delta_per_n, r.fisher_trace_per_n) == pytest.approx((0.5, 0.5), abs=1e-15)
    r0 = fisher_delta_identity(IidParams(0.0), 2.5)
    assert r0.delta_per_n == pytest.approx(1 / 2.5, abs=1e-15)
    assert r0.fisher_trace_per_n == pytest.approx(2.5, abs=1e-15)
    assert r.holds()


@given(px=st.floats(0.0, 20.0), beta=st.floats(1e-2, 1e2))
def test_closed_form_relations_exact(px, beta):
    r = fisher_delta_identity(IidParams(px), beta)
    assert r.mmse_per_n == pytest.approx(r.raw_noise_per_n + r.covariance_term_per_n, rel=1e-12, abs=1e-12)
    assert r.delta_per_n == pytest.approx(1 / (beta * (1 + beta * px)), rel=1e-12)
    assert r.fisher_trace_per_n == pytest.approx(beta / (1 + beta * px), rel=1e-12)
    assert r.fisher_trace_per_n == pytest.approx(beta**2 * r.delta_per_n, rel=1e-12)


def test_fisher_delta_monte_carlo_sparse():
    prior = PriorExponent.quadratic(0.5, 1.2)
    r = fisher_delta_identity(SparseInstance(6, 1.0, prior), 1.0, samples=20000, rng=RngStream(4))
    assert r.holds()
    assert r.fisher_rel_err < 1e-6


def test_fisher_delta_needs_estimator():
    with pytest.raises(UnsupportedModel):
        fisher_delta_identity(SphereParams(), 1.0)
    with pytest.raises(InvalidArgument):
        fisher_delta_identity(GaussianIid(4), 1.0)


def test_heat_integral_iid_example():
    p = IidParams(1.0)
    val = sigma_heat_integral(lambda t: iid_effective_entropy_per_n(p, t), 0.0, 1.0)
    assert val == pytest.approx(0.5 + 0.5 * math.log(2), abs=1e-6)


@pytest.mark.parametrize("beta", np.geomspace(0.1, 10, 7))
def test_heat_integral_reproduces_iid_free_energy(beta):
    p = IidParams(1.0)
    val = sigma_heat_integral(lambda t: iid_effective_entropy_per_n(p, t), 0.0, beta)
    assert val == pytest.approx(iid_free_energy_per_n(p, beta), abs=1e-6)


def test_heat_integral_trivial_cases():
    assert sigma_heat_integral(lambda t: 0.0, 0.0, 2.0) == 0.0
    assert sigma_heat_integral(lambda t: 0.0, 0.7, 2.0) == pytest.approx(1.4, abs=1e-15)
    with pytest.raises(InvalidArgument):
        sigma_heat_integral(lambda t: 0.0, 0.0, 2.0, beta_max=1.0)
