"""Laws of the random local field ``H`` felt by each spin.

Every field exposes ``atoms() -> (h, w)``: a finite set of field values with
probability weights. Continuous laws are atomized with Gauss-Hermite nodes,
so all fixed-point and free-energy computations reduce to weighted sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm

from ..errors import InvalidArgument
from ..numerics import gauss_hermite

DEFAULT_QUAD_ORDER = 200


@dataclass(frozen=True)
class AtomicField:
    """Field taking value ``h[k]`` with probability ``w[k]``."""

    h: tuple
    w: tuple

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float).ravel()
        if h.shape != w.shape or h.size == 0:
            raise InvalidArgument("field values and weights must be non-empty and aligned")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidArgument("field weights must be positive and sum to 1")
        if not np.all(np.isfinite(h)):
            raise InvalidArgument("field values must be finite")
        object.__setattr__(self, "h", tuple(h))
        object.__setattr__(self, "w", tuple(w))

    def atoms(self):
        return np.array(self.h), np.array(self.w)

    def expect(self, g):
        h, w = self.atoms()
        return float(w @ np.asarray(g(h), dtype=float))


ZERO_FIELD = AtomicField((0.0,), (1.0,))


@dataclass(frozen=True)
class GaussianField:
    """``H ~ N(mean, std^2)``, atomized by Gauss-Hermite nodes or equal-mass quantile bins."""

    mean: float = 0.0
    std: float = 1.0
    order: int = DEFAULT_QUAD_ORDER
    quantile: bool = False

    def atoms(self):
        if self.quantile:
            # equal-mass bins, each represented by its conditional mean
            edges = norm.ppf(np.linspace(0.0, 1.0, self.order + 1))
            z = self.order * -np.diff(norm.pdf(edges))
            w = np.full(self.order, 1.0 / self.order)
        else:
            rule = gauss_hermite(self.order)
            z, w = rule.nodes, rule.weights
        return self.mean + self.std * z, np.array(w)

    def expect(self, g):
        h, w = self.atoms()
        return float(w @ np.asarray(g(h), dtype=float))


@dataclass(frozen=True)
class SparseLocalField:
    """Field induced by ``y = x + noise`` under the sparse Gaussian prior.

    With ``q = beta sigma2`` the field is
    ``H(y) = -beta q y^2 / (4 (1+q)) + ln(1+q)/4`` and ``Y`` is a two-component
    Gaussian mixture: variance ``1/beta`` with weight ``(1+m_a)/2`` (inactive)
    and ``sigma2 + 1/beta`` with weight ``(1-m_a)/2`` (active).
    """

    sigma2: float
    beta: float
    m_a: float
    order: int = DEFAULT_QUAD_ORDER

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise InvalidArgument("sigma2 must be positive")
        if not self.beta > 0:
            raise InvalidArgument("beta must be positive")
        if not -1.0 <= self.m_a <= 1.0:
            raise InvalidArgument("m_a must lie in [-1, 1]")

    @property
    def q(self):
        return self.beta * self.sigma2

    @property
    def weights(self):
        return 0.5 * (1.0 + self.m_a), 0.5 * (1.0 - self.m_a)

    def variance(self, s):
        return s * self.sigma2 + 1.0 / self.beta

    def h(self, y):
        q = self.q
        y = np.asarray(y, dtype=float)
        return -self.beta * q * y * y / (4.0 * (1.0 + q)) + 0.25 * math.log1p(q)

    def h_prime(self, y):
        """``-2 dH/dbeta`` at fixed ``y``, the normalization the MMSE expression uses."""
        q = self.q
        y = np.asarray(y, dtype=float)
        return -self.sigma2 / (2.0 * (1.0 + q)) + q * (q + 2.0) * y * y / (2.0 * (1.0 + q) ** 2)

    def component(self, s):
        """Quadrature nodes in ``y`` and weights for mixture component ``s``."""
        rule = gauss_hermite(self.order)
        return math.sqrt(self.variance(s)) * rule.nodes, rule.weights

    def atoms(self):
        hs, ws = [], []
        for s, mix in enumerate(self.weights):
            if mix == 0.0:
                continue
            y, w = self.component(s)
            hs.append(self.h(y))
            ws.append(mix * w)
        return np.concatenate(hs), np.concatenate(ws)

    def expect(self, g):
        """``E g(H)`` under the mixture."""
        h, w = self.atoms()
        vals = np.asarray(g(h), dtype=float)
        return float(w @ vals)

    def expect_y(self, g):
        """``E g(Y)`` under the mixture; ``g`` acts on arrays of ``y``."""
        total = 0.0
        for s, mix in enumerate(self.weights):
            if mix == 0.0:
                continue
            y, w = self.component(s)
            total += mix * float(w @ np.asarray(g(y), dtype=float))
        return total

    def sample(self, size, generator):
        """Draw ``size`` field values with a numpy ``Generator``."""
        active = generator.random(size) < self.weights[1]
        std = np.where(active, math.sqrt(self.variance(1)), math.sqrt(self.variance(0)))
        return self.h(std * generator.standard_normal(size))


def sp_field_expectation(dist, g, quad_order=None):
    """``E g(H)`` for any field law; ``quad_order`` overrides the atomization order."""
    if quad_order is not None and hasattr(dist, "order"):
        dist = replace(dist, order=int(quad_order))
    return dist.expect(g)
