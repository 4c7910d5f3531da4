EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ESTIMATION = 3
EXIT_IO = 4


class MultipathError(Exception):
    """Base class for every error raised by multipathga."""
    exit_code = EXIT_CONFIG

    def __init__(self, reason=None, **kwargs):
        self.error = kwargs.get('error', type(self).__name__)
        self.reason = reason
        super().__init__(reason)


class DomainError(MultipathError, ValueError):
    """A precondition of an operation does not hold"""
    pass


class EstimationError(MultipathError):
    exit_code = EXIT_ESTIMATION


class NoUsableBandError(EstimationError):
    """The threshold leaves no spectral bin to fit against"""

    def __init__(self, reason='no usable band', **kwargs):
        self.threshold = kwargs.get('threshold', None)
        super().__init__(reason, **kwargs)


class ConditioningError(EstimationError):
    """The projection matrix is numerically rank deficient"""

    def __init__(self, reason=None, **kwargs):
        self.condition = kwargs.get('condition', float('inf'))
        super().__init__(reason or f'rank-deficient projection matrix (condition estimate {self.condition:.3e})', **kwargs)


class GaRunError(EstimationError):
    """The objective returned a non-finite value"""

    def __init__(self, reason=None, **kwargs):
        self.params = kwargs.get('params', None)
        super().__init__(reason or f'objective is not finite at {self.params!r}', **kwargs)


class ConfigError(MultipathError):
    def __init__(self, reason=None, **kwargs):
        self.path = kwargs.get('path', None)
        self.line = kwargs.get('line', None)

        location = ''
        if self.path is not None:
            location = f'{self.path}:{self.line}: ' if self.line is not None else f'{self.path}: '

        super().__init__(f'{location}{reason}', **kwargs)


class InvalidKeysException(ConfigError):
    """The passed data contains keys that are not allowed"""
    pass
