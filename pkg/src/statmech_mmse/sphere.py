"""Random codebook drawn uniformly on the sphere of radius sqrt(n px).

The error part of the partition function is handled with the random-energy
argument: incorrect codewords populate correlations ``|rho| <= rho_star`` and
the exponent is a clipped concave maximization over ``rho``. The correct
codeword contributes ``exp(-n(R + 1/2))`` and takes over once the rate drops
below capacity, which makes the MMSE jump to zero at ``beta_R``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import DomainError, InvalidArgument, NumericFailure
from .numerics import maximize_1d

log = logging.getLogger(__name__)

PARAMAGNETIC = "paramagnetic"
FROZEN = "frozen"
BRANCHES = (PARAMAGNETIC, FROZEN)


@dataclass(frozen=True)
class SphereParams:
    px: float = 1.0
    rate: float = 0.5

    def __post_init__(self):
        if not (self.px > 0 and math.isfinite(self.px)):
            raise InvalidArgument(f"px must be positive, got {self.px}")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise InvalidArgument(f"rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class SphereGeometry:
    p_y: float
    p_a: float
    p_g: float
    rho_star: float
    rho_beta: float
    theta: float


def _check_beta(beta):
    if not beta > 0 or not math.isfinite(beta):
        raise InvalidArgument(f"beta must be positive and finite, got {beta}")


def sphere_gamma(rho: float) -> float:
    """Exponent ``ln(1 - rho^2)/2`` of the probability of correlation ``rho``."""
    if not abs(rho) < 1:
        raise DomainError(f"|rho| must be < 1, got {rho}")
    return 0.5 * math.log1p(-rho * rho)


def clipped_stationary_rho(slope: float) -> float:
    """Maximizer over ``(-1, 1)`` of ``ln(1-rho^2)/2 + slope*rho`` for ``slope >= 0``."""
    if slope <= 0:
        return 0.0
    theta = 1.0 / (2.0 * slope)
    # sqrt(1+t^2) - t rewritten to avoid cancellation for large t
    return 1.0 / (math.sqrt(1.0 + theta * theta) + theta)


def sphere_beta_r(p: SphereParams) -> float:
    """SNR at which capacity ``ln(1 + beta px)/2`` equals the rate."""
    return math.expm1(2.0 * p.rate) / p.px


def sphere_geometry(p: SphereParams, beta: float) -> SphereGeometry:
    _check_beta(beta)
    p_y = p.px + 1.0 / beta
    p_a = 0.5 * (p.px + p_y)
    p_g = math.sqrt(p.px * p_y)
    theta = 1.0 / (2.0 * beta * p_g)
    return SphereGeometry(
        p_y=p_y,
        p_a=p_a,
        p_g=p_g,
        rho_star=math.sqrt(-math.expm1(-2.0 * p.rate)),
        rho_beta=clipped_stationary_rho(beta * p_g),
        theta=theta,
    )


def sphere_error_exponent(p: SphereParams, beta: float) -> float:
    """Typical ``lim ln Z_e / n`` from the incorrect codewords (closed form)."""
    g = sphere_geometry(p, beta)
    if beta < sphere_beta_r(p):
        return sphere_gamma(g.rho_beta) - beta * (g.p_a - g.rho_beta * g.p_g)
    return -p.rate - beta * (g.p_a - g.rho_star * g.p_g)


def sphere_error_exponent_grid(p: SphereParams, beta: float, tol=1e-12) -> tuple[float, float]:
    """Same exponent by direct maximization over the populated correlations.

    Returns ``(rho_opt, exponent)``.
    """
    g = sphere_geometry(p, beta)
    obj = lambda r: 0.5 * math.log1p(-r * r) - beta * (g.p_a - r * g.p_g)
    return maximize_1d(obj, -g.rho_star, g.rho_star, tol=tol)


def sphere_branch_exponents(p: SphereParams, beta: float) -> dict:
    """Free-energy candidates ``-lim ln Z_x / n`` of the correct and incorrect parts."""
    return {FROZEN: p.rate + 0.5, PARAMAGNETIC: -sphere_error_exponent(p, beta)}


def sphere_branch(p: SphereParams, beta: float) -> str:
    _check_beta(beta)
    return PARAMAGNETIC if beta < sphere_beta_r(p) else FROZEN


def sphere_free_energy_per_n(p: SphereParams, beta: float, debug=False) -> tuple[float, str]:
    """``psi(beta) = -lim E ln Z / n`` and the dominating branch label.

    The branch comes from comparing ``beta`` with ``beta_R`` analytically. With
    ``debug=True`` the result is cross-checked against the minimum of the two
    exponent candidates.
    """
    branch = sphere_branch(p, beta)
    if branch == PARAMAGNETIC:
        psi = 0.5 * math.log1p(beta * p.px) + 0.5
    else:
        psi = p.rate + 0.5
    if debug:
        cands = sphere_branch_exponents(p, beta)
        alt = min(cands.values())
        log.debug("sphere beta=%r candidates=%r", beta, cands)
        if abs(alt - psi) > 1e-9:
            raise NumericFailure(f"branch rule and exponent minimum disagree at beta={beta}: {psi} vs {alt}")
    return psi, branch


def sphere_mutual_info_per_n(p: SphereParams, beta: float) -> float:
    return sphere_free_energy_per_n(p, beta)[0] - 0.5


def sphere_mmse_per_n(p: SphereParams, beta: float) -> float:
    """``px/(1 + beta px)`` below ``beta_R`` and zero from ``beta_R`` on."""
    if sphere_branch(p, beta) == PARAMAGNETIC:
        return p.px / (1.0 + beta * p.px)
    return 0.0
