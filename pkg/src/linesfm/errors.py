"""Exception types shared across the package."""


class LineEstimationError(Exception):
    """Base class for every error raised by this package."""


class DegenerateLine(LineEstimationError):
    """The line passes through the camera's optical center: its moment vector
    is undefined and its depth is zero."""


class PoleSingularity(LineEstimationError):
    """The moment vector is too close to the vertical axis, where the azimuth
    angle is ill-defined and the elevation cosine vanishes in denominators."""


class ConstraintViolation(LineEstimationError):
    """A structural invariant (unit norm, orthogonality, positivity) does not
    hold on the supplied values."""


class InfiniteDepth(LineEstimationError):
    """Both inverse-depth components are zero, so no finite-depth line can be
    reconstructed."""


class ScenarioExhausted(LineEstimationError):
    """Random scenario generation failed to produce a valid line within the
    retry budget."""


class ConfigError(LineEstimationError):
    """A configuration file could not be parsed or holds invalid values."""
