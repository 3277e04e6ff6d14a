"""Numerical geometry of the warped products dt^2 + e^{2 phi_{a,b}(t)} h on R x H^{n-1}."""

from .flows import (
    DomainExitError,
    GeodesicPath,
    IntegrationError,
    StepUnderflowError,
    TransportedField,
    exp_map,
    geodesic_integrate,
    geodesic_residual,
    map_through_semicircle_chart,
    parallel_transport,
)
from .geometry import (
    DegeneracyError,
    DomainError,
    HalfSpace,
    Point,
    Tangent,
    gram_schmidt,
    inner,
    metric_at,
    normalize,
    plane_angle,
    pullback_residual,
    semicircle_chart,
)
from .tensor import (
    BoundaryError,
    Christoffel,
    RiemannValue,
    UnsupportedFiberError,
    christoffel_at,
    christoffel_fd_check,
    gauss_curvature_2d,
    riemann_at,
    sectional,
    sectional_closed_form,
)
from .verify import (
    CheckReport,
    Dilation,
    FiberIsometry,
    HorizontalTranslation,
    Inversion,
    Rotation,
    check_plane_property,
    check_sigma_hyperbolic,
    check_sigma_totally_geodesic,
    constant_curvature_detect,
    extremal_curvatures,
    hyperbolic_rank_check,
    isometry_pullback_residual,
    lift_isometry,
    run_suite,
    symmetry_center,
)
from .warp import FiberKind, WarpParams, ode_residual, phi_d1, phi_d2, phi_eval, warp_factor

__version__ = "0.1.0"
