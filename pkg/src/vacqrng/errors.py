"""Exception types shared across the toolkit."""


class ParameterError(ValueError):
    """A value passed to an operation violates its contract."""


class ConfigError(ParameterError):
    """A configuration file failed to parse or validate."""


class DegenerateDeviceError(ParameterError):
    """Device parameters make the interference term vanish, so the phase
    modulator cannot influence the detector bias."""


class NoExtractableEntropyError(ValueError):
    """Measured variances or budget parameters leave no extractable bits."""


class DataError(ValueError):
    """Input data is missing, malformed, or insufficient for the operation."""
