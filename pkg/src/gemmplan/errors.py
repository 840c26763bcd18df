"""Exception types shared across the package."""


class GemmplanError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(GemmplanError):
    """Inputs are malformed or mutually inconsistent (bad extents, mismatched
    resource kinds, dimension mismatches)."""


class SpecFileError(ConfigurationError):
    """A hardware description file failed to parse or violated the schema."""


class UnsupportedTypeError(ConfigurationError):
    """A data type cannot be realized on the described hardware (e.g. wider
    than every available memory port) or cannot be simulated numerically."""


class InfeasibleConfigError(GemmplanError):
    """A tile configuration cannot be mapped onto the described hardware, or
    a search space contains no feasible candidate.  The message names the
    binding constraint."""
