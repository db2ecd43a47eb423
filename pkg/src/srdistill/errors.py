"""Exception types shared across the package."""


class SRDistillError(Exception):
    """Base class for all srdistill errors."""


class ShapeError(SRDistillError, ValueError):
    """Array has the wrong rank, channel count, or mismatched dimensions."""


class DivisibilityError(SRDistillError, ValueError):
    """Image dimensions are not divisible by the requested scale."""


class SizeError(SRDistillError, ValueError):
    """Requested crop/shave region does not fit inside the image."""


class ConfigError(SRDistillError, ValueError):
    """Invalid or inconsistent configuration."""


class DataError(SRDistillError, ValueError):
    """Dataset is empty, unreadable, or otherwise unusable."""


class CheckpointError(SRDistillError, ValueError):
    """Checkpoint file is missing, corrupted, or incompatible."""


class GradientError(SRDistillError, RuntimeError):
    """A non-finite gradient was produced; the update step was aborted."""
