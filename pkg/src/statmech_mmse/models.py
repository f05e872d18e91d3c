"""Uniform per-SNR evaluation across the five asymptotic models."""
from __future__ import annotations

import dataclasses
import math

from . import broadcast as bc
from . import sphere as sph
from . import tree as tr
from .core import CurvePoint
from .errors import AmbiguousPhase, InvalidArgument
from .iid import IidParams, iid_free_energy_per_n, iid_mmse_per_n
from .relations import mmse_from_psi
from .sparse import SparseParams, sp_mmse_per_n, sp_mutual_info_per_n, sp_state

MODEL_TYPES = (IidParams, sph.SphereParams, bc.BroadcastParams, tr.TreeParams, SparseParams)

GAUSSIAN = "gaussian"
SPARSE_UNIQUE = "unique"
SPARSE_UPPER = "upper"
SPARSE_LOWER = "lower"
COEXISTENCE = "coexistence"

BRANCH_VOCABULARY = {
    "iid": (GAUSSIAN,),
    "sphere": sph.BRANCHES,
    "broadcast": bc.BRANCHES,
    "tree": tr.BRANCHES,
    "sparse": (SPARSE_UNIQUE, SPARSE_UPPER, SPARSE_LOWER, COEXISTENCE),
}


def model_name(model) -> str:
    names = {IidParams: "iid", sph.SphereParams: "sphere", bc.BroadcastParams: "broadcast",
             tr.TreeParams: "tree", SparseParams: "sparse"}
    try:
        return names[type(model)]
    except KeyError:
        raise InvalidArgument(f"unknown model type {type(model).__name__}") from None


def model_parameters(model) -> dict:
    out = {}
    for f in dataclasses.fields(model):
        v = getattr(model, f.name)
        if f.name == "prior":
            out.update({"prior": v.kind, "a": v.a, "b": v.b})
        else:
            out[f.name] = v
    return out


def _sparse_label(state):
    """Which fixed point dominates: the only one, the largest or the smallest magnetization."""
    ms = [br.m for br in state.branches]
    if len(ms) == 1:
        return SPARSE_UNIQUE
    return SPARSE_UPPER if state.dominant.m >= max(ms) else SPARSE_LOWER


def evaluate(model, beta: float) -> CurvePoint:
    """All per-symbol curve quantities for one model at one SNR."""
    if not beta > 0 or not math.isfinite(beta):
        raise InvalidArgument(f"beta must be positive and finite, got {beta}")
    if isinstance(model, IidParams):
        psi = iid_free_energy_per_n(model, beta)
        return CurvePoint(beta, psi, psi - 0.5, iid_mmse_per_n(model, beta), GAUSSIAN)
    if isinstance(model, sph.SphereParams):
        psi, branch = sph.sphere_free_energy_per_n(model, beta)
        return CurvePoint(beta, psi, psi - 0.5, sph.sphere_mmse_per_n(model, beta), branch)
    if isinstance(model, bc.BroadcastParams):
        # free energy assembled from the three exponents, branch from the piecewise rule
        psi, _ = bc.bc_free_energy_per_n(model, beta)
        return CurvePoint(beta, psi, psi - 0.5, bc.bc_mmse_per_n(model, beta), bc.bc_branch(model, beta))
    if isinstance(model, tr.TreeParams):
        psi, branch = tr.tree_free_energy_per_n(model, beta)
        return CurvePoint(beta, psi, psi - 0.5, tr.tree_mmse_per_n(model, beta), branch)
    if isinstance(model, SparseParams):
        st = sp_state(model, beta)
        i = sp_mutual_info_per_n(model, beta)
        if st.dominant.coexistence:
            return CurvePoint(beta, i + 0.5, i, None, COEXISTENCE, st.dominant.m)
        if model.prior.is_quadratic:
            mmse = sp_mmse_per_n(model, beta)
        else:
            mmse = mmse_from_psi(lambda b: sp_mutual_info_per_n(model, b), beta)
        return CurvePoint(beta, i + 0.5, i, mmse, _sparse_label(st), st.dominant.m)
    raise InvalidArgument(f"unknown model type {type(model).__name__}")


def branch_rule(model):
    """Analytic branch-label function of ``beta``, or ``None`` when there is none."""
    if isinstance(model, sph.SphereParams):
        return lambda b: sph.sphere_branch(model, b)
    if isinstance(model, bc.BroadcastParams):
        return lambda b: bc.bc_branch(model, b)
    if isinstance(model, tr.TreeParams):
        return lambda b: tr.tree_branch(model, b)
    return None


def mmse_function(model):
    """``beta -> mmse`` used for one-sided limits at located transitions."""
    if isinstance(model, SparseParams):
        def f(b):
            try:
                return sp_mmse_per_n(model, b)
            except AmbiguousPhase:
                return None
        return f
    return lambda b: evaluate(model, b).mmse_per_n
