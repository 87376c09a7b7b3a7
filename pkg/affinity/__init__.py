__version__ = "0.1.0"

from .cones import ConePair, ProjectiveInterval, find_invariant_cone, pressure_bounds
from .config import DEFAULT_LIMITS, Limits
from .dimension import (
    DimensionBounds,
    affinity_dimension_bounds,
    affinity_dimension_upper,
    joint_spectral_radius_bounds,
    similarity_dimension,
)
from .exceptions import AffinityError, AffinityWarning, InputError, NumericalError, ResourceError
from .linalg import exterior_norm, singular_values, spectral_radius_bounds, svf
from .main import AsyncAffinity
from .measures import BernoulliWeights, entropy, lyapunov_mc, variational_lower
from .pressure import LinearTuple, PressureBounds, partition_sum, pressure_upper
from .selfaffine import AffineIFS, chaos_game

__all__ = [
    "__version__",
    "AffineIFS",
    "AffinityError",
    "AffinityWarning",
    "AsyncAffinity",
    "BernoulliWeights",
    "ConePair",
    "DEFAULT_LIMITS",
    "DimensionBounds",
    "InputError",
    "Limits",
    "LinearTuple",
    "NumericalError",
    "PressureBounds",
    "ProjectiveInterval",
    "ResourceError",
    "affinity_dimension_bounds",
    "affinity_dimension_upper",
    "chaos_game",
    "entropy",
    "exterior_norm",
    "find_invariant_cone",
    "joint_spectral_radius_bounds",
    "lyapunov_mc",
    "partition_sum",
    "pressure_bounds",
    "pressure_upper",
    "similarity_dimension",
    "singular_values",
    "spectral_radius_bounds",
    "svf",
    "variational_lower",
]
