"""Record types shared by the ensembles, the sweep driver and the CLI."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class CurvePoint:
    """Asymptotic per-symbol quantities at one SNR.

    ``psi_per_n`` is ``-E ln Z / n`` and ``i_per_n = psi_per_n - 1/2``.
    """

    beta: float
    psi_per_n: float
    i_per_n: float
    mmse_per_n: float
    branch: str
    m_star: Optional[float] = None


@dataclass(frozen=True)
class PhaseTransition:
    """A located transition along one parameter axis (``beta`` unless stated).

    ``order`` is ``"first"`` when the MMSE (or the dominant magnetization)
    jumps and ``"second"`` when it is continuous with a slope discontinuity.
    """

    location: float
    order: str
    left_mmse: Optional[float] = None
    right_mmse: Optional[float] = None
    branch_labels: tuple = ()
    axis: str = "beta"
    left_m: Optional[float] = None
    right_m: Optional[float] = None

    @property
    def beta_c(self):
        return self.location

    @property
    def jump(self):
        if self.left_mmse is None or self.right_mmse is None:
            return None
        return self.right_mmse - self.left_mmse


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    std_err: float
    n: int
    samples: int
    seed: int
