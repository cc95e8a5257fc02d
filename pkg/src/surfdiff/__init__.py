"""Intrinsic image filtering on surfaces via banded closest point grids.

The package solves isotropic and anisotropic diffusion equations for
images defined on curved surfaces (analytic shapes or triangle meshes),
embedding the surface PDE in a thin Cartesian band through the closest
point extension. See the README for the full tour.
"""

from .band import BandedGrid, GridSpec, build_band, compute_band_radius, dump_band, read_band
from .errors import (
    BandTouchesBoxBoundary,
    ConfigError,
    ConstantInput,
    DegenerateQuery,
    EmptyBand,
    FootprintEscapesBand,
    IllConditioned,
    MissingColors,
    NonFiniteState,
    NotUnit,
    SurfdiffError,
)
from .filters import (
    AdaptedParams,
    FilterConfig,
    FilterResult,
    adapt_parameters,
    filter_step_count,
    gaussian_std_to_time,
    pixel_to_surface_parameters,
    run_anisotropic,
    run_filter,
    run_gaussian,
    run_perona_malik,
)
from .geometry import (
    PlanePatch,
    Sphere,
    SurfaceOfRevolution,
    Torus,
    tangent_basis_from_cp_jacobian,
    tangent_basis_householder,
    vase_profile,
)
from .imaging import apply_noise, map_texture, mesh_colors_to_band, psnr
from .mesh import TriangleMesh, icosphere, load_mesh
from .operators import (
    anisotropic_divergence,
    build_extension_matrix,
    interpolate_at,
    isotropic_divergence,
)
from .structure import (
    build_diffusion_tensor,
    eigen_sym2,
    heat_smooth,
    structure_eigen,
    structure_tensor,
    surface_gradient,
    tensor_from_eigen,
)
from .workspace import Workspace

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
