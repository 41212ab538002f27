"""Exception types raised across the package."""


class ScatterError(Exception):
    """Base class for all package errors."""


class BranchError(ScatterError, ValueError):
    """A spinor ratio or momentum branch is undefined (vanishing denominator)."""


class PoleError(ScatterError, ValueError):
    """A Gamma-function argument sits on a pole."""


class SingularError(ScatterError, ZeroDivisionError):
    """A step or barrier amplitude has a vanishing denominator or singular system."""


class DivergenceError(ScatterError):
    """Resummation requested for a multiple scattering series that diverges."""


class StabilityError(ScatterError, ValueError):
    """Time step exceeds the stability bound of a finite-difference propagator."""


class InstabilityError(ScatterError, FloatingPointError):
    """NaN or overflow detected during time evolution."""


class GridMismatchError(ScatterError, ValueError):
    """Two fields live on incompatible grids or at different times."""


class ConfigError(ScatterError, ValueError):
    """Invalid scenario configuration."""
