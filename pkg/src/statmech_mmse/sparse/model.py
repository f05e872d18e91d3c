"""Mean-field solution of the sparse Gaussian signal model.

Each component is ``x_i = s_i u_i`` with ``u_i ~ N(0, sigma2)`` and a binary
support ``s_i``; the spins ``mu_i = 1 - 2 s_i`` follow
``P(mu) = C_n exp{n f(m(mu))}``. Conditioned on ``y``, the spins feel local
fields ``h_i`` and the posterior is dominated by a magnetization ``m*``
solving ``m = E tanh(f'(m) + H)``.

Sign convention: ``psi(m) = f'(m) m - f(m) - E ln 2cosh(f'(m) + H)`` is
minimized over the fixed points, so that ``-(1/n) ln Zhat -> min psi -
(1/n) ln C_n``. The maximization form of the same exponent over per-group
magnetizations takes the value ``-psi`` at its stationary points; solutions
of that form are reported in this convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ..core import PhaseTransition
from ..errors import AmbiguousPhase, InvalidArgument, NumericFailure, UnsupportedModel
from ..numerics import RngStream, binary_entropy, find_roots_1d, log2cosh, maximize_1d
from .field import DEFAULT_QUAD_ORDER, AtomicField, SparseLocalField
from .prior import MagnetizationPrior, PriorExponent, sp_prior_magnetization

EDGE = 1e-9
ROOT_GRID = 2048
ROOT_TOL = 1e-14
CRITICAL_TOL = 1e-10
COEXIST_TOL = 1e-10


@dataclass(frozen=True)
class SparseParams:
    sigma2: float = 1.0
    prior: PriorExponent = field(default_factory=PriorExponent.quadratic)
    quad_order: int = DEFAULT_QUAD_ORDER

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise InvalidArgument(f"sigma2 must be positive, got {self.sigma2}")
        if not isinstance(self.prior, PriorExponent):
            raise InvalidArgument("prior must be a PriorExponent")

    def q(self, beta):
        return beta * self.sigma2

    @classmethod
    def quadratic(cls, sigma2=1.0, a=0.0, b=0.0, quad_order=DEFAULT_QUAD_ORDER):
        return cls(sigma2, PriorExponent.quadratic(a, b), quad_order)


@dataclass(frozen=True)
class FixedPointBranch:
    """One solution of the magnetization equation.

    ``margin = f''(m) (1 - E tanh^2) - 1``: negative is stable, positive is
    unstable, within ``1e-10`` of zero is critical. ``group_m`` holds the
    per-atom magnetizations ``tanh(f'(m) + h_k)`` for discrete fields.
    """

    m: float
    stable: bool
    psi_value: float
    margin: float = 0.0
    critical: bool = False
    residual: float = 0.0
    coexistence: bool = False
    group_m: Optional[tuple] = None

    @property
    def stability(self):
        if self.critical:
            return "critical"
        return "stable" if self.stable else "unstable"


@dataclass(frozen=True)
class SparseState:
    """Everything the evaluators need at one SNR."""

    beta: float
    prior_mag: MagnetizationPrior
    field: SparseLocalField
    branches: tuple
    dominant: FixedPointBranch


def _check_beta(beta):
    if not beta > 0 or not math.isfinite(beta):
        raise InvalidArgument(f"beta must be positive and finite, got {beta}")


def sp_local_field(p: SparseParams, beta: float, prior_mag=None) -> SparseLocalField:
    _check_beta(beta)
    if prior_mag is None:
        prior_mag = sp_prior_magnetization(p.prior)
    return SparseLocalField(p.sigma2, beta, prior_mag.m_a, p.quad_order)


def psi_of_m(prior: PriorExponent, field, m):
    """``f'(m) m - f(m) - E ln 2cosh(f'(m) + H)``, vectorized over ``m``."""
    h, w = field.atoms()
    m = np.atleast_1d(np.asarray(m, dtype=float))
    fp = prior.fp(m)
    return fp * m - prior.f(m) - log2cosh(fp[:, None] + h[None, :]) @ w


def _fixed_point_map(prior, field):
    h, w = field.atoms()

    def resid(m):
        m = np.atleast_1d(np.asarray(m, dtype=float))
        return m - np.tanh(prior.fp(m)[:, None] + h[None, :]) @ w

    return resid


def _branch_at(prior, field, m, group=False):
    h, w = field.atoms()
    fp = float(prior.fp(m))
    t = np.tanh(fp + h)
    t1 = float(w @ t)
    t2 = float(w @ (t * t))
    margin = float(prior.fpp(m)) * (1.0 - t2) - 1.0
    critical = abs(margin) <= CRITICAL_TOL
    psi = fp * m - float(prior.f(m)) - float(w @ log2cosh(fp + h))
    return FixedPointBranch(
        m=float(m), stable=(margin < -CRITICAL_TOL), psi_value=psi, margin=margin,
        critical=critical, residual=abs(m - t1), group_m=tuple(t) if group else None)


def _edge_roots(resid):
    """Roots squeezed into the slivers outside the scan window.

    Strong fields push ``m*`` within ``EDGE`` of +-1; the residual is
    non-positive at -1 and non-negative at +1, so a wrong sign at the window
    edge pins a root in the sliver.
    """
    r = lambda m: float(resid(m)[0])
    out = []
    if r(-1.0 + EDGE) > 0:
        out.append(brentq(r, -1.0, -1.0 + EDGE, xtol=1e-300, rtol=4 * np.finfo(float).eps))
    if r(1.0 - EDGE) < 0:
        out.append(brentq(r, 1.0 - EDGE, 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps))
    return out


def fixed_points_for_field(prior: PriorExponent, field, group=False):
    """All fixed points for an arbitrary field law, sorted by ``psi`` ascending."""
    resid = _fixed_point_map(prior, field)
    roots = find_roots_1d(resid, -1.0 + EDGE, 1.0 - EDGE, grid=ROOT_GRID, tol=ROOT_TOL,
                          vectorized=True, refine=10)
    roots.extend(_edge_roots(resid))
    if not roots:
        raise NumericFailure("no fixed point found; the magnetization map must have one")
    branches = [_branch_at(prior, field, r, group) for r in roots]
    return sorted(branches, key=lambda br: (br.psi_value, br.m))


def sp_fixed_points(p: SparseParams, beta: float, field=None) -> list:
    """Solutions of ``m = E tanh(f'(m) + H)`` with stability and ``psi``.

    ``field`` overrides the sparse-model field law (for instance ``ZERO_FIELD``
    to study the bare Curie-Weiss prior).
    """
    if field is None:
        field = sp_local_field(p, beta)
    return fixed_points_for_field(p.prior, field)


def sp_fixed_points_discrete(fields, prior: PriorExponent) -> list:
    """Fixed points for a field taking values ``h_k`` with weights ``q_k``.

    ``fields`` is a sequence of ``(h_k, q_k)`` pairs; each branch carries the
    group magnetizations ``m_k = tanh(f'(m) + h_k)``.
    """
    pairs = list(fields)
    if not pairs:
        raise InvalidArgument("at least one field atom is required")
    h, q = zip(*pairs)
    return fixed_points_for_field(prior, AtomicField(h, q), group=True)


def sp_dominant(branches) -> FixedPointBranch:
    """Branch with the smallest ``psi``; ties mark coexistence and keep the smaller ``m``."""
    branches = list(branches)
    if not branches:
        raise InvalidArgument("empty branch list")
    low = min(br.psi_value for br in branches)
    tied = [br for br in branches if br.psi_value - low <= COEXIST_TOL]
    best = min(tied, key=lambda br: br.m)
    if any(abs(br.m - best.m) > 1e-6 for br in tied):
        return replace(best, coexistence=True)
    return best


def sp_state(p: SparseParams, beta: float, field=None) -> SparseState:
    _check_beta(beta)
    prior_mag = sp_prior_magnetization(p.prior)
    fld = field if field is not None else sp_local_field(p, beta, prior_mag)
    branches = tuple(fixed_points_for_field(p.prior, fld))
    return SparseState(beta, prior_mag, fld, branches, sp_dominant(branches))


def sp_mutual_info_per_n(p: SparseParams, beta: float, form="general", check_convergence=False) -> float:
    """Asymptotic ``I(X;Y)/n`` at the dominant magnetization.

    ``form="general"`` combines the prior exponent with ``psi(m*)`` and takes
    ``E Y^2`` by quadrature; ``form="quadratic"`` uses the expansion specific
    to ``f = a m + b m^2 / 2``. With ``check_convergence`` the value is
    recomputed at twice the quadrature order and must move by less than 1e-9.
    """
    st = sp_state(p, beta)
    q = p.q(beta)
    m_a = st.prior_mag.m_a
    ms = st.dominant.m
    base = -0.5 + 0.25 * math.log1p(q)
    if form == "general":
        ey2 = st.field.expect_y(lambda y: y * y)
        val = (base + beta * (1.0 + 0.5 * q) * ey2 / (2.0 * (1.0 + q))
               - st.prior_mag.log_cn_per_n + st.dominant.psi_value)
    elif form == "quadratic":
        if not p.prior.is_quadratic:
            raise UnsupportedModel("the expanded form needs a quadratic prior")
        a, b = p.prior.a, p.prior.b
        e_log = st.field.expect(lambda h: log2cosh(b * ms + a + h))
        val = (base + (1.0 + 0.5 * q) / (2.0 * (1.0 + q)) * (1.0 + 0.5 * (1.0 - m_a) * q)
               + float(binary_entropy(0.5 * (1.0 + m_a))) + a * m_a + 0.5 * b * m_a * m_a
               - e_log + 0.5 * b * ms * ms)
    else:
        raise InvalidArgument(f"unknown form {form!r}")
    if check_convergence:
        finer = replace(p, quad_order=2 * p.quad_order)
        alt = sp_mutual_info_per_n(finer, beta, form)
        if abs(alt - val) > 1e-9:
            raise NumericFailure(f"quadrature not converged at order {p.quad_order}: change {abs(alt - val):.3g}")
    return float(val)


def sp_free_energy_per_n(p: SparseParams, beta: float) -> float:
    """``-E ln Z / n`` for the channel, i.e. ``I/n + 1/2``."""
    return sp_mutual_info_per_n(p, beta) + 0.5


def sp_log_zhat_fixed_point(p: SparseParams, beta: float, field=None) -> float:
    """``lim (1/n) ln sum_mu P(mu) exp(sum_i mu_i h_i)`` from the fixed-point route."""
    st = sp_state(p, beta, field)
    return -st.dominant.psi_value + st.prior_mag.log_cn_per_n


def _hs_max(a, b, h, w):
    obj = lambda t: -0.5 * b * t * t + float(w @ log2cosh(a + b * t + h))
    return maximize_1d(obj, -1.5, 1.5, tol=1e-12, grid=2048)[1]


def sp_free_energy_hs(p: SparseParams, beta: float, field_samples: int = 0, rng: RngStream = None,
                      field=None) -> float:
    """``lim (1/n) ln sum_mu P(mu) exp(sum_i mu_i h_i)`` via the Gaussian-integral route.

    The quadratic coupling is linearized with an auxiliary Gaussian variable
    and the resulting one-dimensional integral is evaluated by Laplace's
    method, both for the field-dependent sum and for the normalization
    ``C_n`` (the same sum at zero field). The field average is the population
    expectation, or an empirical average over ``field_samples`` draws when
    that is positive.
    """
    if not p.prior.is_quadratic or p.prior.b <= 0:
        raise UnsupportedModel("the Gaussian-integral route needs a quadratic prior with b > 0")
    _check_beta(beta)
    a, b = p.prior.a, p.prior.b
    fld = field if field is not None else sp_local_field(p, beta)
    if field_samples and field_samples > 0:
        if rng is None:
            raise InvalidArgument("field_samples > 0 requires an rng")
        if not isinstance(fld, SparseLocalField):
            raise InvalidArgument("sampling is only defined for the sparse field")
        h = fld.sample(int(field_samples), rng.generator())
        w = np.full(h.size, 1.0 / h.size)
    else:
        h, w = fld.atoms()
    with_field = _hs_max(a, b, h, w)
    no_field = _hs_max(a, b, np.zeros(1), np.ones(1))
    return with_field - no_field


def _mmse_given_m(p: SparseParams, beta: float, m_a: float, m: float) -> float:
    a, b = p.prior.a, p.prior.b
    s2 = p.sigma2
    q = p.q(beta)
    fld = SparseLocalField(s2, beta, m_a, p.quad_order)
    big_a = s2 * q / (2.0 * (1.0 + q) ** 2) + 0.5 * (1.0 - m_a) * s2 * (
        1.0 - q * (1.0 + 0.5 * q) / (1.0 + q) ** 2)
    terms = []
    for s in (0, 1):
        y, w = fld.component(s)
        x = b * m + a + fld.h(y)
        lg = log2cosh(x)
        y2 = y * y
        cov = float(w @ (y2 * lg)) - float(w @ y2) * float(w @ lg)
        e_ht = float(w @ (fld.h_prime(y) * np.tanh(x)))
        terms.append((cov, e_ht))
    w0, w1 = fld.weights
    big_b = w0 * (terms[0][0] + terms[0][1]) + w1 * (terms[1][0] / (1.0 + q) ** 2 + terms[1][1])
    return big_a + big_b


def sp_mmse_per_n(p: SparseParams, beta: float) -> float:
    """Asymptotic MMSE per component at the dominant magnetization (quadratic prior).

    Raises :class:`AmbiguousPhase` when two magnetizations are equally
    dominant; ``values`` holds one ``(m, mmse)`` pair per tied branch.
    """
    if not p.prior.is_quadratic:
        raise UnsupportedModel("closed-form MMSE needs a quadratic prior; differentiate I/n instead")
    st = sp_state(p, beta)
    if st.dominant.coexistence:
        tied = [br for br in st.branches if abs(br.psi_value - st.dominant.psi_value) <= COEXIST_TOL]
        vals = [(br.m, _mmse_given_m(p, beta, st.prior_mag.m_a, br.m)) for br in tied]
        raise AmbiguousPhase(f"coexisting phases at beta={beta}", values=vals)
    return _mmse_given_m(p, beta, st.prior_mag.m_a, st.dominant.m)


def sp_extreme_cases(p: SparseParams, beta: float) -> tuple[float, float]:
    """Wiener prediction ``sigma2/(1+q)`` and the all-zero estimator's error ``(1-m_a) sigma2 / 2``."""
    if not p.prior.is_quadratic:
        raise UnsupportedModel("extreme cases are stated for quadratic priors")
    _check_beta(beta)
    m_a = sp_prior_magnetization(p.prior).m_a
    return p.sigma2 / (1.0 + p.q(beta)), 0.5 * (1.0 - m_a) * p.sigma2


# ---------------------------------------------------------------------------
# parameter scans

AXES = ("beta", "a", "b", "sigma2")


def _at(p, beta, axis, x):
    if axis == "beta":
        return p, x
    if axis == "a":
        return replace(p, prior=p.prior.with_a(x)), beta
    if axis == "b":
        return replace(p, prior=p.prior.with_b(x)), beta
    return replace(p, sigma2=x), beta


class _Scan:
    def __init__(self, p, beta, axis, field):
        self.p, self.beta, self.axis, self.field = p, beta, axis, field
        self.cache = {}

    def state(self, x):
        if x not in self.cache:
            p, beta = _at(self.p, self.beta, self.axis, x)
            self.cache[x] = (p, beta, sp_state(p, beta, self.field))
        return self.cache[x]

    def nearest(self, x, m):
        branches = self.state(x)[2].branches
        return min(branches, key=lambda br: abs(br.m - m))

    def mmse(self, x, m):
        p, beta, st = self.state(x)
        if self.field is not None or not p.prior.is_quadratic:
            return None
        return _mmse_given_m(p, beta, st.prior_mag.m_a, m)


def _bisect_sign(g, lo, hi, tol):
    """Locate a sign change of ``g`` between ``lo`` and ``hi``."""
    left_neg = g(lo) < 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (g(mid) < 0) == left_neg:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sp_critical_point(p: SparseParams, axis: str, lo: float, hi: float, beta: float = 1.0,
                      points: int = 101, field=None, tol=1e-10) -> list:
    """Transitions of the dominant magnetization along one parameter axis.

    Two events are reported. A critical point is where the stability margin
    of the dominant branch, followed by continuation, changes sign (the
    branch stops being a local minimum of ``psi``); it is labelled second
    order when ``m*`` is continuous there. A dominance switch is where two
    coexisting branches exchange the smallest ``psi``; ``m*`` jumps and the
    transition is first order. Locations are refined by bisection to ``tol``.

    Parameters
    ----------
    axis : {"beta", "a", "b", "sigma2"}
        Parameter varied; ``a`` and ``b`` require a quadratic prior.
    beta : float
        SNR used when ``axis`` is not ``"beta"``.
    field : optional
        Fixed field law (e.g. ``ZERO_FIELD``) replacing the sparse-model field.
    """
    if axis not in AXES:
        raise InvalidArgument(f"axis must be one of {AXES}")
    if axis in ("a", "b") and not p.prior.is_quadratic:
        raise UnsupportedModel("scanning a or b needs a quadratic prior")
    if not lo < hi or points < 3:
        raise InvalidArgument("need lo < hi and at least 3 points")
    if axis in ("beta", "sigma2") and lo <= 0:
        raise InvalidArgument(f"{axis} must stay positive")
    scan = _Scan(p, beta, axis, field)
    xs = [float(x) for x in np.linspace(lo, hi, int(points))]
    found = []
    for x0, x1 in zip(xs[:-1], xs[1:]):
        d0, d1 = scan.state(x0)[2].dominant, scan.state(x1)[2].dominant
        fwd = scan.nearest(x1, d0.m)
        bwd = scan.nearest(x0, d1.m)
        crit = None
        if (d0.margin < 0) != (fwd.margin < 0):
            crit = d0
        elif (d1.margin < 0) != (bwd.margin < 0):
            crit = d1
        if crit is not None:
            ref = crit
            loc = _bisect_sign(lambda x: scan.nearest(x, ref.m).margin, x0, x1, tol)
            lm = scan.nearest(loc, d0.m).m
            rm = scan.nearest(loc, d1.m).m
            found.append(PhaseTransition(
                location=loc, order="second" if abs(lm - rm) < 1e-3 else "first",
                left_mmse=scan.mmse(loc, lm), right_mmse=scan.mmse(loc, rm),
                branch_labels=("critical",), axis=axis, left_m=lm, right_m=rm))
            continue
        if abs(fwd.m - d1.m) <= 1e-9 or abs(d0.m - d1.m) <= 1e-9:
            continue
        # dominance switch between two coexisting branches
        ma, mb = d0.m, d1.m

        def diff(x):
            return scan.nearest(x, ma).psi_value - scan.nearest(x, mb).psi_value

        if not (diff(x0) <= COEXIST_TOL < diff(x1)):
            continue
        loc = _bisect_sign(lambda x: 1.0 if diff(x) > COEXIST_TOL else -1.0, x0, x1, tol)
        left = scan.nearest(loc, ma)
        right = scan.nearest(loc, mb)
        if abs(left.m - right.m) <= 1e-6:
            continue
        found.append(PhaseTransition(
            location=loc, order="first",
            left_mmse=scan.mmse(loc, left.m), right_mmse=scan.mmse(loc, right.m),
            branch_labels=(f"m={left.m:+.6f}", f"m={right.m:+.6f}"), axis=axis,
            left_m=left.m, right_m=right.m))
    merged = []
    step = (hi - lo) / (points - 1)
    for t in found:
        if merged and t.order == merged[-1].order and t.location - merged[-1].location < 0.5 * step:
            continue
        merged.append(t)
    return merged
