"""SNR sweeps, transition detection, comparison runs and CSV/JSON emission."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .core import CurvePoint, PhaseTransition
from .errors import InvalidArgument, OutputError, StatMechError
from .iid import IidParams
from .models import branch_rule, evaluate, mmse_function, model_name, model_parameters
from .numerics import RngStream
from .oracle import GaussianIid, SparseInstance, metadata, oracle_free_energy, oracle_mmse
from .sparse import SparseParams

CURVE_COLUMNS = ("beta", "psi_per_n", "i_per_n", "mmse_per_n", "m_star", "branch")
REPORT_COLUMNS = ("beta_c", "order", "left_mmse", "right_mmse", "jump", "branch_labels")
COMPARE_COLUMNS = ("beta", "asymptotic_mmse", "oracle_mmse", "std_err", "z")
ORACLE_COLUMNS = ("beta", "mmse_per_n", "mmse_se", "psi_per_n", "psi_se", "i_per_n")

DEFAULT_JUMP_TOL = 1e-3
DEFAULT_KINK_TOL = 1e-2
MIN_DETECT_POINTS = 8
HARD_FAIL_Z = 4.0
_ISOLATION = 4.0  # a candidate must dominate the residuals around it by this factor
_BISECT_REL = 1e-14


@dataclass(frozen=True)
class SweepSpec:
    beta_min: float
    beta_max: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if not (0 < self.beta_min < self.beta_max) or not math.isfinite(self.beta_max):
            raise InvalidArgument("need 0 < beta_min < beta_max < inf")
        if int(self.points) != self.points or self.points < 2:
            raise InvalidArgument("points must be an integer >= 2")
        if self.scale not in ("linear", "log"):
            raise InvalidArgument(f"scale must be 'linear' or 'log', got {self.scale!r}")

    def betas(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.beta_min, self.beta_max, int(self.points))
        return np.linspace(self.beta_min, self.beta_max, int(self.points))


@dataclass(frozen=True)
class TransitionReport:
    transitions: tuple = ()

    def __len__(self):
        return len(self.transitions)

    def __iter__(self):
        return iter(self.transitions)


@dataclass(frozen=True)
class ComparisonRow:
    beta: float
    asymptotic_mmse: Optional[float]
    oracle_mmse: float
    std_err: float
    z: Optional[float]


@dataclass(frozen=True)
class ComparisonTable:
    """Oracle-vs-asymptotic rows; ``exact`` marks branches where finite-n equality holds."""

    rows: tuple
    exact: bool

    def failures(self, z=HARD_FAIL_Z):
        return [r for r in self.rows if r.z is not None and abs(r.z) > z]

    @property
    def hard_failure(self):
        return self.exact and bool(self.failures())


@dataclass(frozen=True)
class OracleRow:
    beta: float
    mmse_per_n: float
    mmse_se: float
    psi_per_n: float
    psi_se: float
    i_per_n: float


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _attach_beta(err, beta):
    err.beta = beta
    if err.args:
        err.args = (f"{err.args[0]} (at beta={beta:.17g})",) + tuple(err.args[1:])
    return err


def run_sweep(model, sweep: SweepSpec, threads=1) -> list:
    """Evaluate ``model`` on every SNR of ``sweep``; rows come back in ``beta`` order."""
    def one(b):
        try:
            return evaluate(model, float(b))
        except StatMechError as e:
            raise _attach_beta(e, float(b))
    return _map(one, sweep.betas(), threads)


# ---------------------------------------------------------------- detection

def _extrapolation_residuals(b, m):
    """Per-interval mismatch of each side's linear trend at the opposite endpoint."""
    k = len(b) - 1
    res = np.full(k, np.inf)
    for i in range(k):
        cands = []
        if i >= 1:
            slope = (m[i] - m[i - 1]) / (b[i] - b[i - 1])
            cands.append(abs(m[i + 1] - (m[i] + slope * (b[i + 1] - b[i]))))
        if i + 2 <= k:
            slope = (m[i + 2] - m[i + 1]) / (b[i + 2] - b[i + 1])
            cands.append(abs(m[i] - (m[i + 1] - slope * (b[i + 1] - b[i]))))
        res[i] = min(cands) if cands else abs(m[i + 1] - m[i])
    return res


def _neighbour_scale(values, i, reach):
    idx = [j for j in range(i - reach, i + reach + 1) if j != i and 0 <= j < len(values)]
    vals = [values[j] for j in idx if math.isfinite(values[j])]
    return max(vals) if vals else 0.0


def _bisect_label(rule, lo, hi):
    left = rule(lo)
    for _ in range(200):
        if hi - lo <= _BISECT_REL * hi:
            break
        mid = 0.5 * (lo + hi)
        if rule(mid) == left:
            lo = mid
        else:
            hi = mid
    return lo, hi


def detect_transitions(curve, jump_tol=DEFAULT_JUMP_TOL, kink_tol=DEFAULT_KINK_TOL, model=None) -> TransitionReport:
    """Locate MMSE discontinuities (first order) and slope breaks (second order).

    A jump is the mismatch between an interval's endpoint and the linear trend
    extrapolated from the neighbouring interval, so steep smooth stretches do
    not count. Unless the model's analytic branch rule changes inside the
    interval, the jump must also dominate the residuals of nearby intervals.
    With ``model`` given, first-order locations are bisected on that rule and
    the one-sided limits recomputed.
    """
    if len(curve) < MIN_DETECT_POINTS:
        raise InvalidArgument(f"need at least {MIN_DETECT_POINTS} curve points")
    betas = np.array([p.beta for p in curve], dtype=float)
    if np.any(np.diff(betas) <= 0):
        raise InvalidArgument("curve must be sorted by strictly increasing beta")
    valid = [i for i, p in enumerate(curve) if p.mmse_per_n is not None and math.isfinite(p.mmse_per_n)]
    if len(valid) < 4:
        return TransitionReport(())
    b = betas[valid]
    m = np.array([curve[i].mmse_per_n for i in valid])
    rule = branch_rule(model) if model is not None else None
    mfn = mmse_function(model) if model is not None else None

    res = _extrapolation_residuals(b, m)
    out = []
    first_at = set()
    for k in range(len(b) - 1):
        i, j = valid[k], valid[k + 1]
        left, right = curve[i], curve[j]
        relabel = rule is not None and rule(left.beta) != rule(right.beta)
        if res[k] <= jump_tol:
            continue
        if not relabel and res[k] <= _ISOLATION * _neighbour_scale(res, k, 2):
            continue
        first_at.add(k)
        loc, lm, rm = 0.5 * (left.beta + right.beta), left.mmse_per_n, right.mmse_per_n
        if relabel:
            lo, hi = _bisect_label(rule, left.beta, right.beta)
            loc, lm, rm = 0.5 * (lo + hi), mfn(lo), mfn(hi)
        order = "first"
        if lm is not None and rm is not None and abs(rm - lm) <= jump_tol:
            order = "second"
        out.append(PhaseTransition(loc, order, lm, rm, (left.branch, right.branch),
                                   left_m=left.m_star, right_m=right.m_star))

    # slope breaks: compare the slopes of the intervals on either side of interval k
    s = np.diff(m) / np.diff(b)
    change = np.full(len(s), np.nan)
    for k in range(1, len(s) - 1):
        change[k] = abs(s[k + 1] - s[k - 1])
    kinks = set()
    for k in range(1, len(s) - 1):
        if any(abs(k - f) <= 2 for f in first_at) or k - 1 in kinks:
            continue
        scale = max(abs(m[k]), abs(m[k + 1]), 1e-12) / b[k + 1]
        if change[k] <= kink_tol * scale:
            continue
        around = [change[j] for j in (k - 2, k + 2) if 0 <= j < len(s) and math.isfinite(change[j])]
        if around and change[k] <= _ISOLATION * max(around):
            continue
        if k - 1 >= 0 and math.isfinite(change[k - 1]) and change[k - 1] > change[k]:
            continue
        if k + 1 < len(s) and math.isfinite(change[k + 1]) and change[k + 1] > change[k]:
            continue
        # intersection of the two side lines, kept inside the interval
        x0, x1 = b[k], b[k + 1]
        y0, y1 = m[k], m[k + 1]
        denom = s[k - 1] - s[k + 1]
        loc = (y1 - y0 + s[k - 1] * x0 - s[k + 1] * x1) / denom if denom != 0 else 0.5 * (x0 + x1)
        loc = min(max(loc, x0), x1)
        val = y0 + s[k - 1] * (loc - x0)
        i, j = valid[k], valid[k + 1]
        kinks.add(k)
        out.append(PhaseTransition(float(loc), "second", float(val), float(val),
                                   (curve[i].branch, curve[j].branch),
                                   left_m=curve[i].m_star, right_m=curve[j].m_star))
    out.sort(key=lambda t: t.location)
    return TransitionReport(tuple(out))


# ---------------------------------------------------------------- oracle runs

def _is_exact(model, inst):
    if isinstance(model, IidParams) and isinstance(inst, GaussianIid):
        return True
    return (isinstance(model, SparseParams) and isinstance(inst, SparseInstance)
            and model.prior.is_quadratic and model.prior.b == 0.0)


def compare_oracle(model, inst, sweep: SweepSpec, samples: int, seed: int, threads=1) -> ComparisonTable:
    """Asymptotic MMSE against the finite-n oracle on every SNR of ``sweep``.

    Point ``k`` draws from the stream ``(seed, k)``, so each row depends only
    on its own index and the seed.
    """
    rows = []
    for k, beta in enumerate(sweep.betas()):
        beta = float(beta)
        try:
            asym = evaluate(model, beta).mmse_per_n
        except StatMechError as e:
            raise _attach_beta(e, beta)
        est = oracle_mmse(inst, beta, samples, RngStream(seed, k), threads=threads)
        z = None
        if asym is not None and est.std_err > 0:
            z = (est.value - asym) / est.std_err
        rows.append(ComparisonRow(beta, asym, est.value, est.std_err, z))
    return ComparisonTable(tuple(rows), _is_exact(model, inst))


def oracle_sweep(inst, sweep: SweepSpec, samples: int, seed: int, threads=1) -> list:
    """Oracle MMSE and free energy per SNR, point ``k`` on stream ``(seed, k)``."""
    rows = []
    for k, beta in enumerate(sweep.betas()):
        beta = float(beta)
        mm = oracle_mmse(inst, beta, samples, RngStream(seed, k), threads=threads)
        fe = oracle_free_energy(inst, beta, samples, RngStream(seed, k), threads=threads)
        rows.append(OracleRow(beta, mm.value, mm.std_err, fe.value, fe.std_err, fe.value - 0.5))
    return rows


# ---------------------------------------------------------------- emission

def _table(obj):
    if isinstance(obj, TransitionReport):
        rows = [{"beta_c": t.location, "order": t.order, "left_mmse": t.left_mmse,
                 "right_mmse": t.right_mmse, "jump": t.jump, "branch_labels": list(t.branch_labels)}
                for t in obj.transitions]
        return REPORT_COLUMNS, rows
    if isinstance(obj, ComparisonTable):
        return COMPARE_COLUMNS, [{c: getattr(r, c) for c in COMPARE_COLUMNS} for r in obj.rows]
    items = list(obj)
    if all(isinstance(p, CurvePoint) for p in items):
        return CURVE_COLUMNS, [{c: getattr(p, c) for c in CURVE_COLUMNS} for p in items]
    if all(isinstance(p, OracleRow) for p in items):
        return ORACLE_COLUMNS, [{c: getattr(p, c) for c in ORACLE_COLUMNS} for p in items]
    raise InvalidArgument(f"cannot emit {type(obj).__name__}")


def _fmt_float(v):
    return "%.17g" % v


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return _fmt_float(float(v))
    if isinstance(v, (list, tuple)):
        return "|".join(map(str, v))
    return str(v)


def _json_text(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return _fmt_float(v) if math.isfinite(v) else "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_text(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_text(x) for x in v) + "]"
    return json.dumps(str(v))


def run_metadata(model=None, seed=None, inst=None, **extra) -> dict:
    """Header record: model, parameters, seed and tool version."""
    meta = {"tool": "statmech-mmse", "version": __version__}
    if model is not None:
        meta["model"] = model_name(model)
        meta["parameters"] = model_parameters(model)
    if inst is not None:
        meta["instance"] = metadata(inst)
    meta["seed"] = seed
    meta.update(extra)
    return meta


def render(obj, fmt="csv", meta=None) -> str:
    """Text form of a curve, transition report, comparison table or oracle rows."""
    columns, rows = _table(obj)
    meta = meta if meta is not None else run_metadata()
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("# " + _json_text(meta) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_csv_cell(r[c]) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        body = ",\n".join("  " + _json_text({c: r[c] for c in columns}) for r in rows)
        return "{\"meta\": " + _json_text(meta) + ",\n\"rows\": [\n" + body + ("\n" if rows else "") + "]}\n"
    raise InvalidArgument(f"format must be 'csv' or 'json', got {fmt!r}")


def emit(obj, fmt="csv", destination=None, meta=None) -> None:
    """Write ``obj`` to ``destination`` (a path) or standard output when ``None`` or ``-``."""
    text = render(obj, fmt, meta)
    if destination in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise OutputError(f"cannot write {destination}: {e.strerror or e}", path=str(destination)) from e
