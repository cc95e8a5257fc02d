"""Exception types shared across the package."""


class SurfdiffError(Exception):
    """Base class for all package-specific errors."""


class DegenerateQuery(SurfdiffError):
    """A closest point query hit a point with no unique nearest surface point."""


class NotUnit(SurfdiffError):
    """A vector expected to be unit length is not."""


class IllConditioned(SurfdiffError):
    """A numerically derived quantity failed its conditioning check."""


class EmptyBand(SurfdiffError):
    """Band construction found no grid points within the band radius."""


class BandTouchesBoxBoundary(SurfdiffError):
    """The computational band reaches the edge of the bounding box."""


class FootprintEscapesBand(SurfdiffError):
    """An interpolation footprint requires a grid point outside the band."""


class ConstantInput(SurfdiffError):
    """Parameter adaptation needs a non-constant field to set its scale."""


class NonFiniteState(SurfdiffError):
    """A filtering iteration produced NaN or Inf values."""


class MissingColors(SurfdiffError):
    """A mesh operation needs per-vertex colors the file does not provide."""


class ConfigError(SurfdiffError):
    """A run configuration file is malformed or inconsistent."""
