"""Semiclassical eigenvalue asymptotics for -h^2 Laplacian + i V with
Dirichlet conditions: expansion engines, model operators, discretizations,
and resolvent/semigroup probes, with certified numerics throughout."""

__version__ = "0.1.0"

from .airy import AiryEval, ai, ai_zero, airy_moment  # noqa: F401
from .models import (  # noqa: F401
    EigenPair,
    HalfLineAiryModel,
    HarmonicModel,
    TensorSumModel,
    airy_halfline_eigenfunction,
    airy_halfline_spectrum,
    harmonic_ground,
    harmonic_ground_value,
    project,
    tensor_sum_spectrum,
)
from .errors import (  # noqa: F401
    AccuracyError,
    AirylayerError,
    CapabilityError,
    ConfigError,
    HypothesisViolation,
)
