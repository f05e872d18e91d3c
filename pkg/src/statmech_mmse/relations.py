"""General identities tying MMSE to the free energy of the posterior.

All quantities are per symbol. With ``Z(beta|y) = sum_x Q(x) exp(-beta |y-x|^2 / 2)``
and ``psi = -E ln Z / n``:

* ``mmse = 2 dpsi/dbeta``
* ``mmse = 1/beta + Cov{|Y-X|^2, ln Z} / n``
* ``Delta = E|Y - E(X|Y)|^2 / n = -Cov / n`` and ``tr J(Y) / n = beta^2 Delta``
* ``Sigma = (beta/2) Cov / n - I / n`` and
  ``psi = beta E0 - beta * int_beta^inf Sigma(t) / t^2 dt``
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import InsufficientData, InvalidArgument, NumericFailure, OutOfRange, UnsupportedModel
from .iid import IidParams, iid_delta_and_fisher, iid_effective_entropy_per_n, iid_mmse_per_n

MIN_IDENTITY_SAMPLES = 1000


@dataclass(frozen=True)
class FreeEnergyCurve:
    betas: np.ndarray
    psi_per_n: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float)
        v = np.asarray(self.psi_per_n, dtype=float)
        if b.ndim != 1 or b.shape != v.shape:
            raise InvalidArgument("betas and psi_per_n must be 1-D arrays of equal length")
        if np.any(b <= 0) or np.any(np.diff(b) <= 0):
            raise InvalidArgument("betas must be positive and strictly increasing")
        if not np.all(np.isfinite(v)):
            raise InvalidArgument("psi_per_n must be finite")
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "psi_per_n", v)


@dataclass(frozen=True)
class RelationReport:
    """Per-symbol terms of the MMSE decomposition with their standard errors.

    ``*_se`` fields are zero for closed-form reports. ``identity_z`` and
    ``delta_z`` are the paired z-scores of ``mmse - (1/beta + cov)`` and
    ``delta + cov``. The score is a deterministic function of ``y``, so the
    Fisher trace is compared with ``beta^2 Delta`` by relative error.
    """

    mmse_per_n: float
    raw_noise_per_n: float
    covariance_term_per_n: float
    delta_per_n: float
    fisher_trace_per_n: float
    sigma_beta_per_n: float
    mmse_se: float = 0.0
    covariance_se: float = 0.0
    delta_se: float = 0.0
    fisher_se: float = 0.0
    identity_z: float = 0.0
    delta_z: float = 0.0
    fisher_rel_err: float = 0.0
    samples: int = 0

    def holds(self, z=3.0, rel=1e-6):
        return abs(self.identity_z) <= z and abs(self.delta_z) <= z and self.fisher_rel_err <= rel


def derivative(fn, beta, side=0, h=None):
    """Second-order finite-difference ``d fn / d beta``.

    ``side=0`` is the central stencil; ``side=-1`` / ``+1`` use three points on
    one side only, which gives the left / right limit at a jump of the
    derivative. The default step is ``max(1e-4, 1e-3 beta)``, capped so that
    left stencils stay at positive ``beta``.
    """
    if h is None:
        h = max(1e-4, 1e-3 * beta)
    if side == 0:
        h = min(h, 0.5 * beta)
        return (fn(beta + h) - fn(beta - h)) / (2.0 * h)
    if side < 0:
        h = min(h, 0.25 * beta)
        return (3.0 * fn(beta) - 4.0 * fn(beta - h) + fn(beta - 2.0 * h)) / (2.0 * h)
    return (-3.0 * fn(beta) + 4.0 * fn(beta + h) - fn(beta + 2.0 * h)) / (2.0 * h)


def mmse_from_psi(psi_fn, beta, side=0, h=None):
    """``2 dpsi/dbeta`` for a free energy given as a function of ``beta``."""
    return 2.0 * derivative(psi_fn, beta, side=side, h=h)


def mmse_from_free_energy(curve: FreeEnergyCurve, index: int) -> float:
    """``2 dpsi/dbeta`` at an interior grid point (three-point, nonuniform grid)."""
    n = len(curve.betas)
    if not 0 < index < n - 1:
        raise OutOfRange(f"index {index} is not interior to a grid of {n} points")
    b0, b1, b2 = curve.betas[index - 1:index + 2]
    f0, f1, f2 = curve.psi_per_n[index - 1:index + 2]
    h0, h1 = b1 - b0, b2 - b1
    d = (-h1 / (h0 * (h0 + h1))) * f0 + ((h1 - h0) / (h0 * h1)) * f1 + (h0 / (h1 * (h0 + h1))) * f2
    return 2.0 * float(d)


def _influence_se(*columns):
    """Standard error of the mean of a per-sample influence column."""
    col = sum(columns)
    return float(np.std(col, ddof=1) / math.sqrt(len(col)))


def covariance_identity_check(samples, beta: float, n: int) -> RelationReport:
    """Monte Carlo report of the covariance decomposition of the MMSE.

    Parameters
    ----------
    samples : array, shape (k, 2) or (k, 5)
        Columns ``|y-x|^2`` and ``ln Z(beta|y)``; optionally followed by
        ``|x - xhat|^2``, ``|y - xhat|^2`` and ``|grad_y ln Z|^2`` (a score
        estimate) for the direct MMSE, Delta and Fisher-trace estimates.
    beta : float
    n : int
        Block length; everything is reported per symbol.

    Notes
    -----
    The z-scores use the paired influence function of each difference on the
    shared samples, so correlated estimation errors cancel.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[1] not in (2, 5):
        raise InvalidArgument("samples must have 2 or 5 columns")
    k = s.shape[0]
    if k < MIN_IDENTITY_SAMPLES:
        raise InsufficientData(f"need at least {MIN_IDENTITY_SAMPLES} samples, got {k}")
    if not beta > 0:
        raise InvalidArgument("beta must be positive")
    u, v = s[:, 0], s[:, 1]
    uc, vc = u - u.mean(), v - v.mean()
    prod = uc * vc
    cov = float(prod.sum() / (k - 1))
    cov_se = _influence_se(prod)
    raw = 1.0 / beta
    ln_z_n = float(v.mean()) / n
    i_per_n = -0.5 - ln_z_n
    sigma = 0.5 * beta * cov / n - i_per_n
    if s.shape[1] == 2:
        return RelationReport(
            mmse_per_n=raw + cov / n, raw_noise_per_n=raw, covariance_term_per_n=cov / n,
            delta_per_n=-cov / n, fisher_trace_per_n=-beta * beta * cov / n,
            sigma_beta_per_n=sigma, covariance_se=cov_se / n, samples=k)
    e, d, g = s[:, 2], s[:, 3], s[:, 4]
    mmse = float(e.mean())
    delta = float(d.mean())
    fisher = float(g.mean())
    z1 = (mmse - n * raw - cov) / _influence_se(e - e.mean(), -prod)
    z2 = (delta + cov) / _influence_se(d - d.mean(), prod)
    rel = abs(fisher / beta**2 - delta) / max(abs(delta), 1e-300)
    return RelationReport(
        mmse_per_n=mmse / n, raw_noise_per_n=raw, covariance_term_per_n=cov / n,
        delta_per_n=delta / n, fisher_trace_per_n=fisher / n, sigma_beta_per_n=sigma,
        mmse_se=_influence_se(e - e.mean()) / n, covariance_se=cov_se / n,
        delta_se=_influence_se(d - d.mean()) / n, fisher_se=_influence_se(g - g.mean()) / n,
        identity_z=float(z1), delta_z=float(z2), fisher_rel_err=float(rel), samples=k)


def fisher_delta_identity(model, beta: float, samples=None, rng=None) -> RelationReport:
    """Delta and the Fisher trace for a model, closed form when available.

    ``IidParams`` are handled exactly. Finite instances from the oracle module
    are estimated by Monte Carlo, the Fisher trace coming from a finite
    difference score of ``ln Z`` in ``y``; ``samples`` and ``rng`` are then
    required.
    """
    if isinstance(model, IidParams):
        delta, fisher = iid_delta_and_fisher(model, beta)
        return RelationReport(
            mmse_per_n=iid_mmse_per_n(model, beta), raw_noise_per_n=1.0 / beta,
            covariance_term_per_n=-delta, delta_per_n=delta, fisher_trace_per_n=fisher,
            sigma_beta_per_n=iid_effective_entropy_per_n(model, beta))
    from . import oracle

    if isinstance(model, oracle.FINITE_INSTANCE_TYPES):
        if samples is None or rng is None:
            raise InvalidArgument("Monte Carlo estimation needs samples and rng")
        return oracle.oracle_identity_suite(model, beta, samples, rng)
    raise UnsupportedModel(f"no Fisher-trace estimator for {type(model).__name__}")


def _tail_fit(entropy_like, beta_max):
    """Fit ``c ln t + d + e/t + g/t^2`` on ``[beta_max/10, beta_max]`` and integrate ``S/t^2`` beyond."""
    t = np.geomspace(beta_max / 10.0, beta_max, 12)
    s = np.array([float(entropy_like(x)) for x in t])
    design = np.column_stack([np.log(t), np.ones_like(t), 1.0 / t, 1.0 / t**2])
    (c, d, e, g), *_ = np.linalg.lstsq(design, s, rcond=None)
    b = beta_max
    return c * (math.log(b) + 1.0) / b + d / b + e / (2.0 * b * b) + g / (3.0 * b**3)


def sigma_heat_integral(entropy_like, e0_per_n: float, beta: float, beta_max=None,
                        tail=True) -> float:
    """Free energy from the effective entropy: ``beta E0 - beta int_beta^inf S(t)/t^2 dt``.

    The finite part runs to ``beta_max`` (default ``1e3 beta``) in the variable
    ``u = ln t``; the remainder is estimated from an asymptotic fit
    ``S(t) ~ c ln t + d + e/t + g/t^2`` unless ``tail=False``.
    """
    if not beta > 0:
        raise InvalidArgument("beta must be positive")
    if beta_max is None:
        beta_max = 1e3 * beta
    if not beta_max > beta:
        raise InvalidArgument("beta_max must exceed beta")

    def integrand(u):
        t = math.exp(u)
        return float(entropy_like(t)) / t

    val, err = integrate.quad(integrand, math.log(beta), math.log(beta_max),
                              epsabs=1e-12, epsrel=1e-11, limit=200)
    if not (math.isfinite(val) and math.isfinite(err)) or err > 1e-6 * max(1.0, abs(val)):
        raise NumericFailure(f"heat integral did not converge (value {val}, error {err})")
    if tail:
        val += _tail_fit(entropy_like, beta_max)
    return beta * e0_per_n - beta * val
