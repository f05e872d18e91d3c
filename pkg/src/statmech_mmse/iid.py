"""Gaussian i.i.d. input: every quantity in closed form."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgument


@dataclass(frozen=True)
class IidParams:
    """Prior variance ``px`` of each input component; ``px = 0`` is the all-zero signal."""

    px: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.px) and self.px >= 0):
            raise InvalidArgument(f"px must be finite and >= 0, got {self.px}")


def _check_beta(beta):
    if not beta > 0 or not math.isfinite(beta):
        raise InvalidArgument(f"beta must be positive and finite, got {beta}")


def iid_free_energy_per_n(p: IidParams, beta: float) -> float:
    """``-E ln Z / n = ln(1 + beta px)/2 + 1/2``."""
    _check_beta(beta)
    return 0.5 * math.log1p(beta * p.px) + 0.5


def iid_mutual_info_per_n(p: IidParams, beta: float) -> float:
    _check_beta(beta)
    return 0.5 * math.log1p(beta * p.px)


def iid_mmse_per_n(p: IidParams, beta: float) -> float:
    _check_beta(beta)
    return p.px / (1.0 + beta * p.px)


def iid_delta_and_fisher(p: IidParams, beta: float) -> tuple[float, float]:
    """Noise suppression ``Delta/n`` and Fisher trace ``tr J(Y)/n``.

    The second is ``beta**2`` times the first and equals the reciprocal of the
    output variance ``px + 1/beta``.
    """
    _check_beta(beta)
    delta = 1.0 / (beta * (1.0 + beta * p.px))
    fisher = beta / (1.0 + beta * p.px)
    return delta, fisher


def iid_covariance_term_per_n(p: IidParams, beta: float) -> float:
    """``Cov{||Y-X||^2, ln Z} / n``, equal to ``-Delta/n``."""
    return -iid_delta_and_fisher(p, beta)[0]


def iid_effective_entropy_per_n(p: IidParams, beta: float) -> float:
    """``Sigma(beta)/n = (beta/2) Cov/n - I/n``."""
    return 0.5 * beta * iid_covariance_term_per_n(p, beta) - iid_mutual_info_per_n(p, beta)
