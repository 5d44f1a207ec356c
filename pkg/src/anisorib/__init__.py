"""Near-optimal 1D Dirichlet rib sets in anisotropic membranes.

Synthesis of rib patterns by periodic tile constructions, first-eigenvalue
computation of divergence-form operators by P1 finite elements, closed-form
spectral bounds, and the limit functional that the patterns optimize.
"""

from .tensor import (
    SpdTensor2,
    SpectralData,
    TensorField,
    ConstantField,
    PiecewiseConstantField,
    SampledField,
    eig2,
    riemannian_norm,
    ellipticity_constant,
)
from .geometry import (
    Segment,
    Continuum,
    Square,
    Domain2D,
    Checkerboard,
    total_length,
    riemannian_length,
    is_connected,
    component_count,
    clip,
    checkerboard,
    merge_collinear,
    unit_square,
)

__version__ = "0.1.0"
