"""Free energies, mutual information and MMSE of Gaussian channels via statistical mechanics."""
__version__ = "0.1.0"

from .core import CurvePoint, OracleEstimate, PhaseTransition
from .errors import (
    AmbiguousPhase,
    DomainError,
    InsufficientData,
    InvalidArgument,
    NumericFailure,
    OutOfRange,
    OutputError,
    RegimeError,
    StatMechError,
    TooLarge,
    UnsupportedModel,
)
from .iid import IidParams
from .sphere import SphereParams
from .broadcast import BroadcastParams
from .tree import TreeParams
from .sparse import PriorExponent, SparseParams
from .models import evaluate
from .numerics import RngStream
