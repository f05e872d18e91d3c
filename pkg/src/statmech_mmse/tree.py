"""Two-segment tree-structured code with unit input power.

The first ``lambda1 n`` symbols carry a rate-``R1`` message, and each of those
codewords roots its own codebook of rate ``R2`` for the remaining symbols.
When ``R1 > R2`` the code behaves like an ordinary spherical ensemble of rate
``R``; when ``R1 <= R2`` the first segment becomes decodable earlier and the
MMSE drops in two steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgument
from .numerics import maximize_1d
from .sphere import SphereParams, sphere_free_energy_per_n, sphere_mmse_per_n

PARAMAGNETIC = "paramagnetic"
FIRST_SEGMENT = "first-segment"
FROZEN = "frozen"
BRANCHES = (PARAMAGNETIC, FIRST_SEGMENT, FROZEN)


@dataclass(frozen=True)
class TreeParams:
    lambda1: float = 0.5
    r1: float = 0.2
    r2: float = 0.8

    def __post_init__(self):
        if not 0 < self.lambda1 < 1:
            raise InvalidArgument(f"lambda1 must lie in (0, 1), got {self.lambda1}")
        if not (self.r1 > 0 and self.r2 > 0):
            raise InvalidArgument("rates must be positive")

    @property
    def lambda2(self):
        return 1.0 - self.lambda1

    @property
    def rate(self):
        return self.lambda1 * self.r1 + self.lambda2 * self.r2

    @property
    def two_step(self):
        """True on the ``R1 <= R2`` side of the dichotomy."""
        return self.r1 <= self.r2


def _rho(rate):
    return math.sqrt(-math.expm1(-2.0 * rate))


def _gamma(r):
    if abs(r) >= 1.0:
        return -math.inf
    return 0.5 * math.log1p(-r * r)


def tree_beta_of_rate(r: float) -> float:
    """SNR at which ``ln(1 + beta)/2 = r``."""
    if r < 0:
        raise InvalidArgument(f"rate must be non-negative, got {r}")
    return math.expm1(2.0 * r)


def _capacity(beta):
    return 0.5 * math.log1p(beta)


def _check_beta(beta):
    if not beta > 0 or not math.isfinite(beta):
        raise InvalidArgument(f"beta must be positive and finite, got {beta}")


def tree_count_exponent(p: TreeParams, r: float) -> float:
    """Exponent of the typical number of codewords at overall correlation ``r``.

    Returns ``-inf`` where the typical count is zero.
    """
    if abs(r) > 1:
        raise InvalidArgument(f"|r| must be <= 1, got {r}")
    r = abs(r)
    if p.r1 > p.r2:
        return p.rate + _gamma(r) if r <= _rho(p.rate) else -math.inf
    rho1, rho2 = _rho(p.r1), _rho(p.r2)
    if r <= rho1:
        return p.rate + _gamma(r)
    if r <= p.lambda1 * rho1 + p.lambda2 * rho2:
        return max(p.lambda2 * (p.r2 + _gamma((r - p.lambda1 * rho1) / p.lambda2)), 0.0)
    return -math.inf


def tree_count_exponent_max(p: TreeParams, r: float, tol=1e-12) -> float:
    """Same exponent from the maximization over the first-segment correlation."""
    if abs(r) > 1:
        raise InvalidArgument(f"|r| must be <= 1, got {r}")
    l1, l2 = p.lambda1, p.lambda2

    def obj(r1):
        return l1 * (p.r1 + _gamma(r1)) + l2 * (p.r2 + _gamma((r - l1 * r1) / l2))

    rho1 = _rho(p.r1)
    _, v = maximize_1d(obj, -rho1, rho1, tol=tol, grid=1024, allow_neg_inf=True)
    return v if v >= 0 else -math.inf


def tree_branch(p: TreeParams, beta: float) -> str:
    _check_beta(beta)
    if not p.two_step:
        return PARAMAGNETIC if beta < tree_beta_of_rate(p.rate) else FROZEN
    if beta <= tree_beta_of_rate(p.r1):
        return PARAMAGNETIC
    return FIRST_SEGMENT if beta <= tree_beta_of_rate(p.r2) else FROZEN


def tree_free_energy_per_n(p: TreeParams, beta: float) -> tuple[float, str]:
    """``psi(beta)`` and the branch label, following the rate ordering."""
    branch = tree_branch(p, beta)
    c = _capacity(beta)
    if not p.two_step:
        return min(p.rate, c) + 0.5, branch
    return p.lambda1 * min(p.r1, c) + p.lambda2 * min(p.r2, c) + 0.5, branch


def tree_mutual_info_per_n(p: TreeParams, beta: float) -> float:
    return tree_free_energy_per_n(p, beta)[0] - 0.5


def tree_mmse_per_n(p: TreeParams, beta: float) -> float:
    if not p.two_step:
        return sphere_mmse_per_n(SphereParams(1.0, p.rate), beta)
    branch = tree_branch(p, beta)
    if branch == PARAMAGNETIC:
        return 1.0 / (1.0 + beta)
    if branch == FIRST_SEGMENT:
        return p.lambda2 / (1.0 + beta)
    return 0.0


def tree_as_sphere(p: TreeParams) -> SphereParams:
    """The single-layer ensemble a ``R1 > R2`` tree code reduces to."""
    return SphereParams(1.0, p.rate)


def tree_sphere_gap(p: TreeParams, beta: float) -> float:
    """``|psi_tree - psi_sphere|`` at rate ``R``; zero whenever ``R1 > R2``."""
    return abs(tree_free_energy_per_n(p, beta)[0] - sphere_free_energy_per_n(tree_as_sphere(p), beta)[0])
