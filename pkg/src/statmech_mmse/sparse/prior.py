"""Magnetization priors ``P(mu) = C_n exp{n f(m(mu))}`` on spin configurations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import DomainError, InvalidArgument
from ..numerics import binary_entropy, find_roots_1d

TIE_TOL = 1e-10


@dataclass(frozen=True)
class PriorExponent:
    """Exponent ``f(m)`` of the prior with its first two derivatives.

    Use :meth:`quadratic` for ``f(m) = a m + b m^2 / 2`` or :meth:`custom`
    for arbitrary smooth exponents with bounded ``f'`` on ``[-1, 1]``.
    Callables must accept numpy arrays.
    """

    kind: str = "quadratic"
    a: float = 0.0
    b: float = 0.0
    f_fn: Optional[Callable] = None
    fp_fn: Optional[Callable] = None
    fpp_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.kind == "quadratic":
            if not (math.isfinite(self.a) and math.isfinite(self.b)):
                raise InvalidArgument("a and b must be finite")
        elif self.kind == "custom":
            if None in (self.f_fn, self.fp_fn, self.fpp_fn):
                raise InvalidArgument("custom prior needs f, f' and f''")
            _check_derivatives(self)
        else:
            raise InvalidArgument(f"unknown prior kind {self.kind!r}")

    @classmethod
    def quadratic(cls, a=0.0, b=0.0):
        return cls("quadratic", float(a), float(b))

    @classmethod
    def custom(cls, f, fp, fpp):
        return cls("custom", f_fn=f, fp_fn=fp, fpp_fn=fpp)

    @property
    def is_quadratic(self):
        return self.kind == "quadratic"

    def f(self, m):
        if self.is_quadratic:
            m = np.asarray(m, dtype=float)
            return self.a * m + 0.5 * self.b * m * m
        return np.asarray(self.f_fn(m), dtype=float)

    def fp(self, m):
        if self.is_quadratic:
            return self.a + self.b * np.asarray(m, dtype=float)
        return np.asarray(self.fp_fn(m), dtype=float)

    def fpp(self, m):
        if self.is_quadratic:
            return np.full_like(np.asarray(m, dtype=float), self.b)
        return np.asarray(self.fpp_fn(m), dtype=float)

    def with_a(self, a):
        return PriorExponent.quadratic(a, self.b)

    def with_b(self, b):
        return PriorExponent.quadratic(self.a, b)


def _check_derivatives(prior, h=1e-4, tol=1e-6):
    m = np.linspace(-0.9, 0.9, 7)
    d1 = (prior.f(m + h) - prior.f(m - h)) / (2 * h)
    d2 = (prior.fp(m + h) - prior.fp(m - h)) / (2 * h)
    if np.max(np.abs(d1 - prior.fp(m))) > tol or np.max(np.abs(d2 - prior.fpp(m))) > tol:
        raise InvalidArgument("custom prior derivatives are inconsistent with f")


@dataclass(frozen=True)
class MagnetizationPrior:
    """A-priori magnetization and the exponent ``ln C_n / n``.

    ``tie`` is set when several magnetizations maximize the prior exponent;
    ``m_a`` is then the leftmost of them.
    """

    m_a: float
    log_cn_per_n: float
    tie: bool = False


def prior_objective(prior: PriorExponent, m):
    """``H2((1+m)/2) + f(m)``, the exponent of the unnormalized prior mass at ``m``."""
    m = np.asarray(m, dtype=float)
    return binary_entropy(0.5 * (1.0 + m)) + prior.f(m)


def sp_prior_magnetization(prior: PriorExponent) -> MagnetizationPrior:
    """Magnetization that dominates the prior.

    Candidates are the stationary points ``m = tanh(f'(m))``; the one with the
    largest ``H2((1+m)/2) + f(m)`` wins, ties going to the smaller ``m``.
    """
    g = lambda m: np.asarray(m) - np.tanh(prior.fp(m))
    roots = find_roots_1d(g, -1.0, 1.0, grid=2048, tol=1e-14, vectorized=True)
    vals = [float(prior_objective(prior, r)) for r in roots]
    best = max(vals)
    winners = [r for r, v in zip(roots, vals) if v >= best - TIE_TOL]
    m_a = min(winners)
    return MagnetizationPrior(m_a=float(m_a), log_cn_per_n=-float(prior_objective(prior, m_a)),
                              tie=len(winners) > 1)


def sp_curie_weiss_approx(prior) -> float:
    """Small-coupling estimate ``(1/b) sqrt(3 (1 - 1/b))`` of the spontaneous magnetization.

    Accepts a quadratic :class:`PriorExponent` or the coupling ``b`` itself.
    """
    b = prior.b if isinstance(prior, PriorExponent) else float(prior)
    if isinstance(prior, PriorExponent) and not prior.is_quadratic:
        raise InvalidArgument("Curie-Weiss estimate needs a quadratic prior")
    if b <= 1.0:
        raise DomainError(f"no spontaneous magnetization for b <= 1 (b = {b})")
    return math.sqrt(3.0 * (1.0 - 1.0 / b)) / b
