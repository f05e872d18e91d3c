"""Exact finite-n posterior computations and Monte Carlo over the channel noise.

Every finite instance reduces to a weighted set of atoms: codewords for the
code ensembles, binary supports for the sparse model. For an observation
``y`` the log-posterior weight of atom ``k`` is affine in a feature vector of
``y``, so ``ln Z`` and posterior means are streamed over atom chunks with a
running log-sum-exp.

Monte Carlo runs are split into fixed-size batches, batch ``j`` drawing from
the stream ``rng.spawn(j)``. Results therefore depend only on the seed and the
sample count, never on how batches are scheduled across threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import OracleEstimate
from .errors import InvalidArgument, TooLarge
from .numerics import RngStream, RunningMoments
from .relations import RelationReport, covariance_identity_check
from .sparse.prior import PriorExponent

MAX_CODEBOOK = 2**20
MAX_SUPPORT_BITS = 24
BATCH = 500
MIN_SAMPLES = 100
_CELLS = 2**22  # atoms x observations per chunk
_FD_STEP = 1e-5
_CODEBOOK_STREAM = 1


def _codebook_size(n, rate):
    if rate == 0:
        return 1
    return max(2, int(round(math.exp(n * rate))))


def _check_size(dimension, size, limit):
    if size > limit:
        raise TooLarge(f"{dimension} = {size} exceeds the enumeration limit {limit}", dimension=dimension)


def _sphere_points(gen, count, n, radius):
    g = gen.standard_normal((count, n))
    return radius * g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class SphereCode:
    """``M = max(2, round(e^{nR}))`` codewords uniform on the sphere of radius ``sqrt(n px)``.

    ``rate = 0`` gives a single codeword.
    """

    n: int
    rate: float
    px: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.rate < 0 or not self.px > 0:
            raise InvalidArgument("need n >= 1, rate >= 0, px > 0")
        _check_size("codebook size", self.size, MAX_CODEBOOK)

    @property
    def size(self):
        return _codebook_size(self.n, self.rate)

    def build(self):
        gen = RngStream(self.seed, _CODEBOOK_STREAM).generator()
        return _sphere_points(gen, self.size, self.n, math.sqrt(self.n * self.px))


@dataclass(frozen=True)
class BroadcastCode:
    """Superposition codebook ``alpha u_i + sqrt(1 - alpha^2) v_ij`` with unit power."""

    n: int
    r1: float
    r2: float
    alpha: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.r1 < 0 or self.r2 < 0 or not 0 < self.alpha < 1:
            raise InvalidArgument("need n >= 1, rates >= 0, 0 < alpha < 1")
        _check_size("codebook size", self.size, MAX_CODEBOOK)

    @property
    def size(self):
        return _codebook_size(self.n, self.r1) * _codebook_size(self.n, self.r2)

    def build(self):
        gen = RngStream(self.seed, _CODEBOOK_STREAM).generator()
        m1, m2 = _codebook_size(self.n, self.r1), _codebook_size(self.n, self.r2)
        r = math.sqrt(self.n)
        u = _sphere_points(gen, m1, self.n, r)
        v = _sphere_points(gen, m1 * m2, self.n, r).reshape(m1, m2, self.n)
        x = self.alpha * u[:, None, :] + math.sqrt(1.0 - self.alpha**2) * v
        return x.reshape(m1 * m2, self.n)


@dataclass(frozen=True)
class TreeCode:
    """Two-segment tree code: each first-segment codeword roots its own second-segment codebook."""

    n: int
    lambda1: float
    r1: float
    r2: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or not 0 < self.lambda1 < 1 or self.r1 < 0 or self.r2 < 0:
            raise InvalidArgument("need n >= 2, 0 < lambda1 < 1, rates >= 0")
        if not 0 < self.n1 < self.n:
            raise InvalidArgument("both segments must be non-empty")
        _check_size("codebook size", self.size, MAX_CODEBOOK)

    @property
    def n1(self):
        return int(round(self.lambda1 * self.n))

    @property
    def size(self):
        return _codebook_size(self.n1, self.r1) * _codebook_size(self.n - self.n1, self.r2)

    def build(self):
        gen = RngStream(self.seed, _CODEBOOK_STREAM).generator()
        n1, n2 = self.n1, self.n - self.n1
        m1, m2 = _codebook_size(n1, self.r1), _codebook_size(n2, self.r2)
        first = _sphere_points(gen, m1, n1, math.sqrt(n1))
        second = _sphere_points(gen, m1 * m2, n2, math.sqrt(n2))
        return np.hstack([np.repeat(first, m2, axis=0), second])


@dataclass(frozen=True)
class SparseInstance:
    """Sparse Gaussian signal of length ``n`` with support prior ``C_n exp{n f(m)}``."""

    n: int
    sigma2: float = 1.0
    prior: PriorExponent = field(default_factory=PriorExponent.quadratic)

    def __post_init__(self):
        if self.n < 1 or not self.sigma2 > 0:
            raise InvalidArgument("need n >= 1 and sigma2 > 0")
        _check_size("support count 2^n", 2**self.n, 2**MAX_SUPPORT_BITS)

    @property
    def size(self):
        return 2**self.n

    def count_log_probs(self):
        """Log-probability of one particular support with ``k`` active entries, k = 0..n."""
        k = np.arange(self.n + 1)
        m = 1.0 - 2.0 * k / self.n
        logw = self.n * self.prior.f(m)
        log_total = logsumexp(logw + gammaln(self.n + 1) - gammaln(k + 1) - gammaln(self.n - k + 1))
        return logw - log_total


@dataclass(frozen=True)
class GaussianIid:
    """I.i.d. ``N(0, px)`` input; everything is available in closed form."""

    n: int
    px: float = 1.0

    def __post_init__(self):
        if self.n < 1 or not self.px >= 0:
            raise InvalidArgument("need n >= 1 and px >= 0")


FINITE_INSTANCE_TYPES = (SphereCode, BroadcastCode, TreeCode, SparseInstance, GaussianIid)
CODE_TYPES = (SphereCode, BroadcastCode, TreeCode)


@lru_cache(maxsize=8)
def _codebook(inst):
    cb = inst.build()
    cb.setflags(write=False)
    return cb


def _supports(start, stop, n):
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(float)


def _check_instance(inst):
    if not isinstance(inst, FINITE_INSTANCE_TYPES):
        raise InvalidArgument(f"not a finite instance: {type(inst).__name__}")


def _stream_posterior(count, chunk_fn, feats):
    """Log-sum-exp and posterior mean over ``count`` atoms.

    ``chunk_fn(start, stop)`` returns the atoms in that index range and their
    log-prior offsets; atom ``k`` has logit ``offset_k + atom_k @ feat``.
    """
    b = feats.shape[0]
    chunk = max(1, _CELLS // max(b, 1))
    run_max = np.full(b, -np.inf)
    run_sum = np.zeros(b)
    run_vec = None
    for start in range(0, count, chunk):
        a, off = chunk_fn(start, min(start + chunk, count))
        logits = off[:, None] + a @ feats.T
        new_max = np.maximum(run_max, logits.max(axis=0))
        scale = np.exp(run_max - new_max)
        w = np.exp(logits - new_max)
        run_sum = run_sum * scale + w.sum(axis=0)
        run_vec = w.T @ a if run_vec is None else run_vec * scale[:, None] + w.T @ a
        run_max = new_max
    return run_max + np.log(run_sum), run_vec / run_sum[:, None]


def _posterior_batch(inst, y, beta):
    """``(xhat, ln Z)`` for a batch of observations ``y`` of shape (B, n)."""
    if isinstance(inst, GaussianIid):
        g = 1.0 + beta * inst.px
        lnz = -0.5 * inst.n * math.log(g) - 0.5 * beta * np.sum(y * y, axis=1) / g
        return (beta * inst.px / g) * y, lnz
    if isinstance(inst, SparseInstance):
        q = beta * inst.sigma2
        c0 = -0.5 * beta * y * y
        c1 = -0.5 * math.log1p(q) - 0.5 * beta * y * y / (1.0 + q)
        logp = inst.count_log_probs()

        def chunk(start, stop):
            sup = _supports(start, stop, inst.n)
            return sup, logp[sup.sum(axis=1).astype(int)]

        lse, p_active = _stream_posterior(inst.size, chunk, c1 - c0)
        return p_active * (q / (1.0 + q)) * y, c0.sum(axis=1) + lse
    cb = _codebook(inst)
    offsets = -0.5 * beta * np.sum(cb * cb, axis=1) - math.log(cb.shape[0])
    lse, xhat = _stream_posterior(cb.shape[0], lambda i, j: (cb[i:j], offsets[i:j]), beta * y)
    return xhat, lse - 0.5 * beta * np.sum(y * y, axis=1)


def oracle_exact_posterior_mean(inst, y, beta: float):
    """Exact ``E(X|y)`` and ``ln Z(beta|y)`` by enumeration of the prior's atoms."""
    _check_instance(inst)
    y = np.asarray(y, dtype=float)
    if y.shape != (inst.n,) or not np.all(np.isfinite(y)):
        raise InvalidArgument("y must be a finite vector of length n")
    if not beta > 0:
        raise InvalidArgument("beta must be positive")
    xhat, lnz = _posterior_batch(inst, y[None, :], beta)
    return xhat[0], float(lnz[0])


def _draw_inputs(inst, gen, count):
    n = inst.n
    if isinstance(inst, GaussianIid):
        return math.sqrt(inst.px) * gen.standard_normal((count, n))
    if isinstance(inst, SparseInstance):
        logp = inst.count_log_probs()
        k = np.arange(n + 1)
        logc = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
        pk = np.exp(logp + logc)
        ks = gen.choice(n + 1, size=count, p=pk / pk.sum())
        ranks = np.argsort(np.argsort(gen.random((count, n)), axis=1), axis=1)
        s = (ranks < ks[:, None]).astype(float)
        u = math.sqrt(inst.sigma2) * gen.standard_normal((count, n))
        return s * u
    cb = _codebook(inst)
    return cb[gen.integers(cb.shape[0], size=count)]


def _score_sq(inst, y, beta):
    """``|grad_y ln Z|^2`` by central differences of ``ln Z`` in each coordinate."""
    total = np.zeros(y.shape[0])
    for i in range(y.shape[1]):
        e = np.zeros(y.shape[1])
        e[i] = _FD_STEP
        _, up = _posterior_batch(inst, y + e, beta)
        _, dn = _posterior_batch(inst, y - e, beta)
        total += ((up - dn) / (2.0 * _FD_STEP)) ** 2
    return total


def _batch_columns(inst, beta, stream, count, with_score):
    gen = stream.generator()
    x = _draw_inputs(inst, gen, count)
    y = x + gen.standard_normal(x.shape) / math.sqrt(beta)
    xhat, lnz = _posterior_batch(inst, y, beta)
    cols = [np.sum((y - x) ** 2, axis=1), lnz, np.sum((x - xhat) ** 2, axis=1),
            np.sum((y - xhat) ** 2, axis=1)]
    if with_score:
        cols.append(_score_sq(inst, y, beta))
    return np.column_stack(cols)


def _run(inst, beta, samples, rng, with_score=False, threads=1, keep=False):
    _check_instance(inst)
    if samples < MIN_SAMPLES:
        raise InvalidArgument(f"need at least {MIN_SAMPLES} samples")
    if not beta > 0:
        raise InvalidArgument("beta must be positive")
    if not isinstance(rng, RngStream):
        raise InvalidArgument("rng must be an RngStream")
    counts = [BATCH] * (samples // BATCH)
    if samples % BATCH:
        counts.append(samples % BATCH)
    jobs = [(rng.spawn(j), c) for j, c in enumerate(counts)]
    work = lambda job: _batch_columns(inst, beta, job[0], job[1], with_score)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            blocks = list(pool.map(work, jobs))
    else:
        blocks = [work(j) for j in jobs]
    if keep:
        return np.vstack(blocks)
    acc = RunningMoments(blocks[0].shape[1])
    for blk in blocks:
        acc.update(blk)
    return acc


def oracle_mmse(inst, beta: float, samples: int, rng: RngStream, threads=1) -> OracleEstimate:
    """Monte Carlo ``E|X - E(X|Y)|^2 / n`` with exact posterior means."""
    acc = _run(inst, beta, samples, rng, threads=threads)
    n = inst.n
    return OracleEstimate(float(acc.mean[2] / n), float(acc.std_err()[2] / n), n, samples, rng.seed)


def oracle_free_energy(inst, beta: float, samples: int, rng: RngStream, threads=1) -> OracleEstimate:
    """Monte Carlo ``-E ln Z(beta|Y) / n``; subtract 1/2 for ``I/n``."""
    acc = _run(inst, beta, samples, rng, threads=threads)
    n = inst.n
    return OracleEstimate(float(-acc.mean[1] / n), float(acc.std_err()[1] / n), n, samples, rng.seed)


def oracle_identity_suite(inst, beta: float, samples: int, rng: RngStream, threads=1) -> RelationReport:
    """Joint estimate of the MMSE, the covariance term, Delta and the Fisher trace."""
    cols = _run(inst, beta, samples, rng, with_score=True, threads=threads, keep=True)
    return covariance_identity_check(cols, beta, inst.n)


def metadata(inst) -> dict:
    """Describes the instance, including codebook-size rounding."""
    out = {"kind": type(inst).__name__, **{k: getattr(inst, k) for k in inst.__dataclass_fields__ if k != "prior"}}
    if isinstance(inst, SparseInstance):
        out["prior"] = {"kind": inst.prior.kind, "a": inst.prior.a, "b": inst.prior.b}
    if hasattr(inst, "size"):
        out["size"] = inst.size
    return out
