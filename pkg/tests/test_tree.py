import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from statmech_mmse.errors import InvalidArgument
from statmech_mmse.relations import derivative
from statmech_mmse.sphere import SphereParams, sphere_free_energy_per_n, sphere_mmse_per_n
from statmech_mmse.tree import (
    FIRST_SEGMENT,
    FROZEN,
    PARAMAGNETIC,
    TreeParams,
    tree_branch,
    tree_count_exponent,
    tree_count_exponent_max,
    tree_free_energy_per_n,
    tree_mmse_per_n,
    tree_mutual_info_per_n,
    tree_sphere_gap,
    tree_beta_of_rate,
)

TWO = TreeParams(0.5, 0.2, 0.8)
ONE = TreeParams(0.5, 0.8, 0.2)


def rho(x):
    return math.sqrt(1 - math.exp(-2 * x))


def test_beta_of_rate():
    assert tree_beta_of_rate(0.5) == pytest.approx(math.e - 1, rel=1e-15)
    assert tree_beta_of_rate(math.log(2)) == pytest.approx(3.0, rel=1e-15)
    assert tree_beta_of_rate(1e-12) == pytest.approx(0.0, abs=1e-11)


def test_count_exponent_examples():
    assert tree_count_exponent(ONE, 0.0) == pytest.approx(ONE.rate, abs=1e-15)
    knee = rho(TWO.r1)
    below = tree_count_exponent(TWO, knee * (1 - 1e-13))
    at = tree_count_exponent(TWO, knee)
    above = tree_count_exponent(TWO, knee * (1 + 1e-13))
    assert below == pytest.approx(at, abs=1e-9) and above == pytest.approx(at, abs=1e-9)
    edge = 0.5 * rho(0.2) + 0.5 * rho(0.8)
    assert tree_count_exponent(TWO, edge) == pytest.approx(0.0, abs=1e-12)
    assert tree_count_exponent(TWO, min(edge + 1e-6, 1.0)) == -math.inf
    assert tree_count_exponent(ONE, rho(ONE.rate) + 1e-9) == -math.inf


def _grid_exponent(p, r, points=200001):
    # brute force over the first-segment correlation, independent of the library optimizer
    r1 = np.linspace(-rho(p.r1), rho(p.r1), points)
    r2 = (r - p.lambda1 * r1) / p.lambda2
    ok = np.abs(r2) < 1
    with np.errstate(divide="ignore", invalid="ignore"):
        v = p.lambda1 * (p.r1 + 0.5 * np.log1p(-r1**2)) + p.lambda2 * (p.r2 + 0.5 * np.log1p(-r2**2))
    v = np.where(ok, v, -np.inf).max()
    return v if v >= 0 else -math.inf


def test_closed_form_matches_maximization_random():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        p = TreeParams(rng.uniform(0.05, 0.95), rng.uniform(0.02, 1.5), rng.uniform(0.02, 1.5))
        r = rng.uniform(-1, 1)
        a, b = tree_count_exponent(p, r), tree_count_exponent_max(p, r)
        if math.isinf(a) or math.isinf(b):
            # away from the support edge both must agree on emptiness
            edge = p.lambda1 * rho(p.r1) + p.lambda2 * rho(p.r2) if p.two_step else rho(p.rate)
            if abs(abs(r) - edge) > 1e-6:
                assert a == b == -math.inf
            continue
        worst = max(worst, abs(a - b))
    assert worst < 1e-8


@pytest.mark.parametrize("p", [TWO, ONE, TreeParams(0.3, 0.1, 1.2)])
@pytest.mark.parametrize("r", [0.0, 0.2, 0.45, 0.6, 0.75])
def test_closed_form_matches_brute_grid(p, r):
    want = _grid_exponent(p, r)
    got = tree_count_exponent(p, r)
    if math.isinf(want):
        assert math.isinf(got) or got < 1e-6
    else:
        assert got == pytest.approx(want, abs=1e-6)


def test_free_energy_examples():
    psi, branch = tree_free_energy_per_n(TWO, 1.0)
    assert psi == pytest.approx(0.1 + 0.5 * 0.5 * math.log(2) + 0.5, abs=1e-15)
    assert psi == pytest.approx(0.77329, abs=1e-5)
    assert branch == FIRST_SEGMENT
    for beta in (3.96, 10.0, 1e3):
        assert tree_free_energy_per_n(TWO, beta) == (pytest.approx(TWO.rate + 0.5, abs=1e-15), FROZEN)


def test_mmse_examples():
    assert tree_mmse_per_n(TWO, 1.0) == pytest.approx(0.25, abs=1e-15)
    assert tree_mmse_per_n(TWO, 5.0) == 0.0
    assert tree_mmse_per_n(ONE, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_transitions_located_numerically():
    betas = np.geomspace(0.05, 20, 5000)
    m = np.array([tree_mmse_per_n(TWO, b) for b in betas])
    jumps = np.flatnonzero(np.abs(np.diff(m)) > 1e-3)
    assert len(jumps) == 2
    for j, target in zip(jumps, (math.exp(0.4) - 1, math.exp(1.6) - 1)):
        assert betas[j] <= target <= betas[j + 1]
    m = np.array([tree_mmse_per_n(ONE, b) for b in betas])
    jumps = np.flatnonzero(np.abs(np.diff(m)) > 1e-3)
    assert len(jumps) == 1
    assert betas[jumps[0]] <= math.e - 1 <= betas[jumps[0] + 1]


@given(beta=st.floats(0.05, 30.0))
def test_i_mmse_branchwise(beta):
    for p in (TWO, ONE):
        kinks = [tree_beta_of_rate(p.r1), tree_beta_of_rate(p.r2), tree_beta_of_rate(p.rate)]
        if min(abs(beta - k) for k in kinks) < 1e-2 * max(beta, 1):
            continue
        fd = 2 * derivative(lambda b: tree_mutual_info_per_n(p, b), beta)
        assert fd == pytest.approx(tree_mmse_per_n(p, beta), abs=1e-6)


def test_equal_rates_seam():
    p = TreeParams(0.4, 0.5, 0.5)
    for beta in np.geomspace(0.01, 100, 200):
        c = 0.5 * math.log1p(beta)
        one = min(p.rate, c) + 0.5
        two = p.lambda1 * min(p.r1, c) + p.lambda2 * min(p.r2, c) + 0.5
        assert abs(one - two) < 1e-12
        assert abs(tree_free_energy_per_n(p, beta)[0] - one) < 1e-12


@given(l1=st.floats(0.05, 0.95), r=st.floats(0.05, 1.0), beta=st.floats(0.01, 50.0))
def test_psi_continuous_across_seam(l1, r, beta):
    lo = tree_free_energy_per_n(TreeParams(l1, r * (1 - 1e-9), r), beta)[0]
    hi = tree_free_energy_per_n(TreeParams(l1, r * (1 + 1e-9), r), beta)[0]
    assert lo == pytest.approx(hi, abs=1e-8)


@given(l1=st.floats(0.05, 0.95), r2=st.floats(0.01, 1.0), extra=st.floats(0.01, 1.0),
       beta=st.floats(0.01, 100.0))
def test_single_step_equals_sphere(l1, r2, extra, beta):
    p = TreeParams(l1, r2 + extra, r2)
    sp = SphereParams(1.0, p.rate)
    assert tree_sphere_gap(p, beta) < 1e-10
    assert tree_free_energy_per_n(p, beta)[0] == pytest.approx(sphere_free_energy_per_n(sp, beta)[0], abs=1e-10)
    assert tree_mmse_per_n(p, beta) == pytest.approx(sphere_mmse_per_n(sp, beta), abs=1e-10)


def test_branch_labels_and_validation():
    assert [tree_branch(TWO, b) for b in (0.3, 1.0, 5.0)] == [PARAMAGNETIC, FIRST_SEGMENT, FROZEN]
    assert [tree_branch(ONE, b) for b in (1.0, 2.0)] == [PARAMAGNETIC, FROZEN]
    with pytest.raises(InvalidArgument):
        TreeParams(1.0, 0.2, 0.3)
    with pytest.raises(InvalidArgument):
        TreeParams(0.5, 0.0, 0.3)
    with pytest.raises(InvalidArgument):
        tree_count_exponent(TWO, 1.5)
    with pytest.raises(InvalidArgument):
        tree_mmse_per_n(TWO, 0.0)
