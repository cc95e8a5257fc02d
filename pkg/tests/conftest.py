import numpy as np
import pytest

import surfdiff as sd

# Default box is +/-1.5; coarse grids push the band past it, so widen.
BOX2 = ((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0))


@pytest.fixture(scope="session")
def sphere_ws():
    """Coarse unit-sphere workspace shared by read-only tests."""
    return sd.Workspace(sd.Sphere(1.0), 0.1, box=BOX2)


@pytest.fixture(scope="session")
def torus_ws():
    # h=0.1 would give band radius 0.69 > the 0.4 tube reach and hit the
    # degenerate center ring; h=0.05 keeps radius 0.346 safely inside
    return sd.Workspace(sd.Torus(1.0, 0.4), 0.05, box=BOX2)


@pytest.fixture(scope="session")
def plane_ws():
    # flat patch, generous margins so the band is far from the box rim
    return sd.Workspace(sd.PlanePatch(half_extent=1.0), 0.1, box=BOX2)


@pytest.fixture(scope="session")
def mesh_ws():
    """Colored icosphere mesh workspace for export and color transfer."""
    base = sd.icosphere(subdivisions=3)
    cols = np.clip(0.5 + 0.5 * base.vertices, 0.0, 1.0)
    mesh = sd.TriangleMesh(base.vertices, base.faces, vertex_colors=cols)
    return sd.Workspace(mesh, 0.1, box=BOX2)


def on_surface_samples(surface, n, seed=0):
    """Deterministic cloud of points exactly on the surface."""
    u = sd.rng.random_uniform(seed, 101, np.arange(3 * n)).reshape(n, 3)
    probe = 4.0 * u - 2.0
    return surface.closest_point(probe).points
