"""Two-layer superposition code for the degraded Gaussian broadcast channel.

Cloud centres ``u_i`` (rate ``R1``) and satellites ``v_ij`` (rate ``R2``) are
uniform on the sqrt(n) sphere and combined as ``x = alpha u + sqrt(1-alpha^2) v``,
so the input power is 1. The partition function splits into the correct
codeword, wrong codewords inside the correct cloud, and codewords of other
clouds; the free energy is the smallest of the three exponents.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, RegimeError
from .numerics import maximize_1d
from .sphere import clipped_stationary_rho

log = logging.getLogger(__name__)

PARAMAGNETIC = "paramagnetic"
CLOUD = "cloud"
FROZEN = "frozen"
BRANCHES = (PARAMAGNETIC, CLOUD, FROZEN)

OUTER_GRID = 1024


@dataclass(frozen=True)
class BroadcastParams:
    r1: float = 0.1
    r2: float = 0.6206
    alpha: float = 0.7129

    def __post_init__(self):
        if not (self.r1 > 0 and self.r2 > 0):
            raise InvalidArgument("rates must be positive")
        if not 0 < self.alpha < 1:
            raise InvalidArgument(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def b(self):
        """Refinement-layer power ``1 - alpha^2``."""
        return 1.0 - self.alpha * self.alpha

    @property
    def rate(self):
        return self.r1 + self.r2


@dataclass(frozen=True)
class BroadcastThresholds:
    """Transition SNRs; iterating yields ``(beta1, beta2)``."""

    beta1: float
    beta2: float
    beta2_displayed: float
    two_transitions: bool

    def __iter__(self):
        return iter((self.beta1, self.beta2))


@dataclass(frozen=True)
class Psi2Solution:
    r1_opt: float
    r2_opt: float
    value: float
    at_boundary: tuple


def _check_beta(beta):
    if not beta > 0 or not math.isfinite(beta):
        raise InvalidArgument(f"beta must be positive and finite, got {beta}")


def bc_transition_betas(p: BroadcastParams) -> BroadcastThresholds:
    """SNRs at which the cloud centre, then the full codeword, become decodable.

    ``beta2`` uses the in-cloud threshold ``(e^{2R2} - 1)/b``, which is what
    keeps the piecewise mutual information continuous. The ``1 - b``
    denominator variant is kept in ``beta2_displayed`` for comparison.
    """
    e1 = math.exp(2.0 * p.r1)
    denom = 1.0 - p.b * e1
    if denom <= 0:
        raise RegimeError("cloud rate exceeds cloud channel capacity at all SNR "
                          f"(1 - b e^(2 R1) = {denom:.6g})")
    beta1 = math.expm1(2.0 * p.r1) / denom
    beta2 = math.expm1(2.0 * p.r2) / p.b
    displayed = math.expm1(2.0 * p.r2) / (1.0 - p.b)
    log.debug("broadcast thresholds beta1=%r beta2=%r (1-b form: %r)", beta1, beta2, displayed)
    return BroadcastThresholds(beta1, beta2, displayed, beta1 < beta2)


def _candidates(p, beta):
    return {
        PARAMAGNETIC: 0.5 * math.log1p(beta),
        CLOUD: p.r1 + 0.5 * math.log1p(beta * p.b),
        FROZEN: p.rate,
    }


def bc_branch(p: BroadcastParams, beta: float) -> str:
    _check_beta(beta)
    th = bc_transition_betas(p)
    if th.two_transitions:
        if beta < th.beta1:
            return PARAMAGNETIC
        return CLOUD if beta < th.beta2 else FROZEN
    cands = _candidates(p, beta)
    return min(BRANCHES, key=lambda k: cands[k])


def bc_mutual_info_per_n(p: BroadcastParams, beta: float) -> tuple[float, str]:
    """Piecewise ``lim I/n``: Gaussian input, cloud decoded, both decoded.

    Outside the two-transition regime the same three candidates are combined
    through their minimum, which coincides with the piecewise form whenever
    ``beta1 < beta2``.
    """
    branch = bc_branch(p, beta)
    return _candidates(p, beta)[branch], branch


def bc_mmse_per_n(p: BroadcastParams, beta: float) -> float:
    branch = bc_branch(p, beta)
    if branch == PARAMAGNETIC:
        return 1.0 / (1.0 + beta)
    if branch == CLOUD:
        return p.b / (1.0 + beta * p.b)
    return 0.0


def bc_psi_e1(p: BroadcastParams, beta: float) -> float:
    """``-lim ln Z_e1 / n`` for wrong codewords inside the transmitted cloud."""
    _check_beta(beta)
    b = p.b
    a = b + 1.0 / beta
    p_a = 0.5 * (a + b)
    p_g = math.sqrt(a * b)
    if beta < math.expm1(2.0 * p.r2) / b:
        rho = clipped_stationary_rho(beta * p_g)
        return p.r1 - 0.5 * math.log1p(-rho * rho) + beta * (p_a - rho * p_g)
    rho2 = math.sqrt(-math.expm1(-2.0 * p.r2))
    return p.rate + beta * (p_a - rho2 * p_g)


def _psi_e2_inner(p, beta, r1):
    """Best inner value over ``r2`` for fixed ``r1``; ``(-inf, nan)`` if infeasible."""
    b = p.b
    pa = 0.5 * (1.0 + 1.0 / beta + p.alpha ** 2)
    pg = p.alpha * math.sqrt(1.0 + 1.0 / beta)
    if abs(r1) >= 1.0:
        return -math.inf, math.nan, math.nan
    d = pa - r1 * pg
    rho2_sq = 1.0 - math.exp(-2.0 * p.rate) / (1.0 - r1 * r1)
    if d < 0 or rho2_sq < 0:
        return -math.inf, math.nan, math.nan
    rho2 = math.sqrt(rho2_sq)
    cross = math.sqrt(2.0 * b * d)
    r2 = min(clipped_stationary_rho(beta * cross), rho2)
    val = (0.5 * math.log1p(-r1 * r1) + 0.5 * math.log1p(-r2 * r2)
           - beta * (0.5 * b + d - r2 * cross))
    return val, r2, rho2


def bc_psi_e2_objective(p: BroadcastParams, beta: float, r1: float, r2: float) -> float:
    """The double-maximization objective itself, ``-inf`` outside the feasible box."""
    rho1 = math.sqrt(-math.expm1(-2.0 * p.r1))
    if abs(r1) > rho1:
        return -math.inf
    rho2_sq = 1.0 - math.exp(-2.0 * p.rate) / (1.0 - r1 * r1)
    if rho2_sq < 0 or abs(r2) > math.sqrt(rho2_sq):
        return -math.inf
    b = p.b
    pa = 0.5 * (1.0 + 1.0 / beta + p.alpha ** 2)
    pg = p.alpha * math.sqrt(1.0 + 1.0 / beta)
    d = pa - r1 * pg
    if d < 0:
        return -math.inf
    return (0.5 * math.log1p(-r1 * r1) + 0.5 * math.log1p(-r2 * r2)
            - beta * (0.5 * b + d - r2 * math.sqrt(2.0 * b * d)))


def bc_psi_e2(p: BroadcastParams, beta: float, tol=1e-12) -> Psi2Solution:
    """``-lim ln Z_e2 / n`` for codewords of the other clouds.

    The outer maximization over the cloud correlation ``r1`` is a grid scan
    with golden-section refinement. For fixed ``r1`` the inner objective is
    concave in ``r2`` and its maximizer is the clipped stationary point.
    An entirely infeasible box gives ``value = +inf``.
    """
    _check_beta(beta)
    rho1 = math.sqrt(-math.expm1(-2.0 * p.r1))
    obj = lambda r1: _psi_e2_inner(p, beta, r1)[0]
    r1_opt, best = maximize_1d(obj, -rho1, rho1, tol=tol, grid=OUTER_GRID, allow_neg_inf=True)
    if best == -math.inf:
        return Psi2Solution(math.nan, math.nan, math.inf, (False, False))
    _, r2_opt, rho2 = _psi_e2_inner(p, beta, r1_opt)
    at_boundary = (abs(abs(r1_opt) - rho1) < 1e-9, abs(r2_opt - rho2) < 1e-12)
    return Psi2Solution(r1_opt, r2_opt, -best, at_boundary)


def bc_free_energy_terms(p: BroadcastParams, beta: float) -> dict:
    """The three exponents ``-lim ln Z_x / n`` for x in correct / same cloud / other clouds."""
    return {
        "correct": p.rate + 0.5,
        "same_cloud": bc_psi_e1(p, beta),
        "other_clouds": bc_psi_e2(p, beta).value,
    }


def bc_free_energy_per_n(p: BroadcastParams, beta: float) -> tuple[float, str]:
    """Numerically assembled ``psi(beta)``: the smallest of the three exponents."""
    terms = bc_free_energy_terms(p, beta)
    key = min(terms, key=terms.get)
    return terms[key], key


def bc_capacity_margins(p: BroadcastParams, gamma1: float, gamma2: float,
                        refinement_gain="alpha2") -> tuple[float, float]:
    """Right minus left side of the two decodability inequalities.

    ``refinement_gain="alpha2"`` evaluates the second inequality as
    ``R2 < ln(1 + alpha^2 gamma2)/2``; ``"b"`` uses the refinement power
    ``1 - alpha^2`` instead, which is the threshold the free-energy analysis
    produces.
    """
    if not (gamma1 > 0 and gamma2 > 0):
        raise InvalidArgument("receiver SNRs must be positive")
    a2 = p.alpha ** 2
    m1 = 0.5 * math.log1p(a2 * gamma1 / (1.0 + p.b * gamma1)) - p.r1
    if refinement_gain == "alpha2":
        gain = a2
    elif refinement_gain == "b":
        gain = p.b
    else:
        raise InvalidArgument(f"unknown refinement_gain {refinement_gain!r}")
    m2 = 0.5 * math.log1p(gain * gamma2) - p.r2
    return m1, m2


def bc_capacity_region_check(p: BroadcastParams, gamma1: float, gamma2: float,
                             refinement_gain="alpha2") -> tuple[bool, bool]:
    """Whether receivers at SNRs ``gamma1`` / ``gamma2`` decode their messages."""
    m1, m2 = bc_capacity_margins(p, gamma1, gamma2, refinement_gain)
    return bool(m1 > 0), bool(m2 > 0)


def bc_psi_e2_grid2d(p: BroadcastParams, beta: float, points=801) -> float:
    """Brute-force 2-D grid value of ``psi_e2``; slow, used as a test oracle."""
    rho1 = math.sqrt(-math.expm1(-2.0 * p.r1))
    best = -math.inf
    for r1 in np.linspace(-rho1, rho1, points):
        rho2_sq = 1.0 - math.exp(-2.0 * p.rate) / (1.0 - r1 * r1)
        if rho2_sq < 0:
            continue
        rho2 = math.sqrt(rho2_sq)
        r2 = np.linspace(-rho2, rho2, points)
        vals = [bc_psi_e2_objective(p, beta, float(r1), float(x)) for x in r2]
        best = max(best, max(vals))
    return -best
