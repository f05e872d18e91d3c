"""Shared numerical kernels.

Gaussian expectations are written against the standard normal measure
(probabilist Hermite convention): a variable ``Y ~ N(mu, s^2)`` is integrated
as ``E f(Y) = sum_i w_i f(mu + s * z_i)`` with ``sum_i w_i = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import entr, roots_hermitenorm

from .errors import InvalidArgument, NumericFailure

DEFAULT_TOL = 1e-10
DEFAULT_GRID = 512

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Quadrature:
    """Nodes and weights for expectations under N(0, 1)."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def expect(self, f, mean=0.0, std=1.0):
        """E f(mean + std * Z) for Z ~ N(0, 1); ``f`` must accept arrays."""
        vals = np.asarray(f(mean + std * self.nodes), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NumericFailure("integrand is not finite on quadrature nodes")
        return float(self.weights @ vals)


@lru_cache(maxsize=64)
def _hermite_e(order):
    # scipy's Golub-Welsch rule stays finite at orders where numpy's recursion overflows
    x, w = roots_hermitenorm(order)
    w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_hermite(order: int) -> Quadrature:
    """Gauss-Hermite rule exact for polynomials of degree <= 2*order-1 under N(0,1)."""
    if int(order) != order or order < 2:
        raise InvalidArgument(f"quadrature order must be an integer >= 2, got {order!r}")
    x, w = _hermite_e(int(order))
    return Quadrature(nodes=x, weights=w, order=int(order))


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidArgument("bracket requires lo < hi")

    @property
    def is_root_bracket(self):
        return np.sign(self.f_lo) != np.sign(self.f_hi)


def _golden_max(f, lo, hi, tol):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        # ">=" keeps the left point on ties, matching the leftmost tie rule
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    if fc >= fd:
        return c, fc
    return d, fd


def maximize_1d(f, lo, hi, tol=DEFAULT_TOL, grid=DEFAULT_GRID, allow_neg_inf=False):
    """Global maximum of a scalar function on ``[lo, hi]``.

    A uniform scan over ``grid`` points locates the best sample; golden-section
    search then refines inside the two neighbouring grid cells. Ties resolve to
    the smallest argument.

    Parameters
    ----------
    f : callable
        Scalar function of one float.
    lo, hi : float
        Search interval, ``lo < hi``.
    tol : float
        Width at which golden-section refinement stops.
    grid : int
        Number of scan points (at least 512 is recommended).
    allow_neg_inf : bool
        Treat ``-inf`` as an infeasible point instead of an error. Used by
        objectives that encode constraints by returning ``-inf``.

    Returns
    -------
    (argmax, max) : tuple of float
    """
    if not lo < hi:
        raise InvalidArgument(f"maximize_1d requires lo < hi, got [{lo}, {hi}]")
    if tol <= 0:
        raise InvalidArgument("tol must be positive")

    def checked(x):
        v = float(f(x))
        if math.isnan(v) or v == math.inf or (v == -math.inf and not allow_neg_inf):
            raise NumericFailure(f"objective is not finite at x={x!r}: {v}")
        return v

    xs = np.linspace(lo, hi, max(int(grid), 3))
    vals = np.array([checked(x) for x in xs])
    i = int(np.argmax(vals))  # first occurrence = leftmost tie
    best_x, best_v = float(xs[i]), float(vals[i])
    if best_v == -math.inf:
        return best_x, best_v
    if np.all(vals == best_v):
        return best_x, best_v
    a = float(xs[max(i - 1, 0)])
    b = float(xs[min(i + 1, len(xs) - 1)])
    x, v = _golden_max(checked, a, b, tol)
    if v > best_v:
        return float(x), float(v)
    return best_x, best_v


def _bisect(f, a, b, fa, tol, max_iter=200):
    for _ in range(max_iter):
        if b - a < tol:
            break
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def find_roots_1d(f, lo, hi, grid=256, tol=DEFAULT_TOL, vectorized=False, refine=10):
    """All roots of ``f`` on ``[lo, hi]`` visible as sign changes on a scan grid.

    Each sign change is bisected to an interval shorter than ``tol``. Grid
    points where ``|f|`` has a local minimum without a sign change are rescanned
    at ``refine`` times the resolution so that closely spaced root pairs are
    not lost. Returns roots sorted ascending.
    """
    if not lo < hi:
        raise InvalidArgument(f"find_roots_1d requires lo < hi, got [{lo}, {hi}]")
    if grid < 16:
        raise InvalidArgument("grid must be >= 16")
    xs = np.linspace(lo, hi, int(grid) + 1)
    if vectorized:
        vals = np.asarray(f(xs), dtype=float)
        scalar = lambda x: float(f(np.array([x]))[0])
    else:
        vals = np.array([float(f(x)) for x in xs])
        scalar = lambda x: float(f(x))
    if not np.all(np.isfinite(vals)):
        raise NumericFailure("root function is not finite on the scan grid")

    roots = []

    def scan(xs, vals):
        found = []
        for j, v in enumerate(vals):
            if v == 0.0:
                found.append(float(xs[j]))
        for j in range(len(xs) - 1):
            va, vb = vals[j], vals[j + 1]
            if va != 0.0 and vb != 0.0 and np.sign(va) != np.sign(vb):
                found.append(_bisect(scalar, float(xs[j]), float(xs[j + 1]), va, tol))
        return found

    roots.extend(scan(xs, vals))
    if refine and refine > 1:
        absv = np.abs(vals)
        for j in range(1, len(xs) - 1):
            if absv[j] <= absv[j - 1] and absv[j] <= absv[j + 1] and absv[j] > 0.0:
                if np.sign(vals[j - 1]) == np.sign(vals[j]) == np.sign(vals[j + 1]):
                    sub = np.linspace(xs[j - 1], xs[j + 1], 2 * int(refine) + 1)
                    sv = np.asarray(f(sub), dtype=float) if vectorized else np.array(
                        [float(f(x)) for x in sub])
                    roots.extend(r for r in scan(sub, sv) if r not in (sub[0], sub[-1]))
    roots.sort()
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > 2.0 * tol:
            merged.append(r)
    return merged


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id, path)``.

    Distinct ids or paths give independent streams (numpy ``SeedSequence``
    spawn keys); the same triple always yields the same draws.
    """

    seed: int
    stream_id: int = 0
    path: tuple = ()

    def __post_init__(self):
        for v in (self.seed, self.stream_id, *self.path):
            if int(v) != v or v < 0 or v >= 2**64:
                raise InvalidArgument("seed, stream_id and path entries must be 64-bit unsigned")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *map(int, self.path)))
        return np.random.Generator(np.random.PCG64(ss))

    def spawn(self, index):
        return RngStream(self.seed, self.stream_id, self.path + (int(index),))

    def normal(self, size):
        return self.generator().standard_normal(size)


@dataclass
class RunningMoments:
    """Streaming means and co-moments of ``k`` jointly observed variables.

    Batches are combined with the pairwise update of Chan et al., so merging
    accumulators built on disjoint batches gives the same result as one pass.
    """

    k: int
    count: int = 0
    mean: np.ndarray = field(default=None)
    comoment: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.mean is None:
            self.mean = np.zeros(self.k)
        if self.comoment is None:
            self.comoment = np.zeros((self.k, self.k))

    def update(self, batch):
        batch = np.asarray(batch, dtype=float)
        if batch.ndim == 1:
            batch = batch[:, None]
        if batch.shape[1] != self.k:
            raise InvalidArgument(f"expected {self.k} columns, got {batch.shape[1]}")
        other = RunningMoments(self.k)
        other.count = batch.shape[0]
        if other.count:
            other.mean = batch.mean(axis=0)
            centered = batch - other.mean
            other.comoment = centered.T @ centered
        self.merge(other)
        return self

    def merge(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.comoment = other.count, other.mean.copy(), other.comoment.copy()
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.comoment = self.comoment + other.comoment + np.outer(delta, delta) * (self.count * other.count / n)
        self.mean = self.mean + delta * (other.count / n)
        self.count = n
        return self

    def cov(self):
        if self.count < 2:
            raise InvalidArgument("need at least two samples for a covariance")
        return self.comoment / (self.count - 1)

    def std_err(self):
        """Standard errors of the means."""
        return np.sqrt(np.diag(self.cov()) / self.count)


def log2cosh(x):
    """``log(2 cosh x)`` without overflow."""
    x = np.asarray(x, dtype=float)
    return np.logaddexp(x, -x)


def binary_entropy(p):
    """Binary entropy in nats; 0 at the endpoints."""
    return entr(p) + entr(1.0 - np.asarray(p, dtype=float))
