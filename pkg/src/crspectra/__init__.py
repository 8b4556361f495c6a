"""Pseudohermitian invariants and Kohn-Laplacian eigenvalue bounds.

Compute transverse curvature, the Fefferman determinant, Webster scalar
curvature and related invariants of strictly pseudoconvex hypersurfaces in
C^{n+1} (n = 1, 2) from user-supplied defining functions, evaluate sharp
upper and lower bounds for the first positive eigenvalue of the Kohn
Laplacian, and cross-check them against a desk-scale Galerkin spectral
solver.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    Decomposition,
    lower_bound,
    pullback_defining_function,
    reilly_bound,
    special_bound,
    upper_bound,
    validate_decomposition,
)
from .expressions import Expression, check_holomorphic, eval_jet, parse
from .frames import DEFAULT_TOLERANCES, CRFrame, FrameTolerances, build_frame, frame_from_jet
from .jets import MAX_ORDER, Jet, MultiIndex, jet_compose, jet_space, jet_variable, partial
from .operators import (
    D_functional,
    curvature_functional,
    curvature_quantities,
    dbar_pairing,
    delta_tilde,
    fefferman_det_jet,
    first_normalization,
    kohn_laplacian,
    log_fefferman_jet,
    normal_derivative,
    normalized_scalar,
    ricci_tensor,
    sub_laplacian,
    webster_scalar,
)
from .quadrature import (
    QuadratureRule,
    QuadratureSettings,
    SurfacePoint,
    build_quadrature,
    integrate,
    pfaffian,
    points_on_surface,
    project_rays,
    radial_point,
    re_densify,
    volume_density,
)
from .spectral import (
    MonomialBasis,
    SpectralProblem,
    SpectralReport,
    assemble,
    estimate_lambda1,
    jacobi_eigh,
    solve,
)

__all__ = [name for name in dir() if not name.startswith("_")]
