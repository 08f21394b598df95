"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConfigurationError(ValueError):
    """A configuration object is inconsistent or incomplete."""


class FramingError(ValueError):
    """A waveform or bit stream does not align with symbol/frame boundaries."""


class ShapeError(ValueError):
    """An array has the wrong dimensions for the model it is fed to."""


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


class ModelFileError(ValueError):
    """Base class for model persistence failures."""


class ModelVersionError(ModelFileError):
    pass


class ModelFormatError(ModelFileError):
    pass


class ModelDimensionError(ModelFileError):
    pass


class NearFieldWarning(UserWarning):
    """Receiver is too close to the transmitter for the closed-form voltage law."""
