"""
exception hierarchy for lame-spectra

every error raised by the library derives from LameSpectraError and from
the built-in exception that best describes it, so callers can catch either
"""


class LameSpectraError(Exception):
    pass


# poly


class ZeroPolynomialError(LameSpectraError, ValueError):
    def __init__(self, message='zero polynomial'):
        super().__init__(message)


class RootFindingError(LameSpectraError, RuntimeError):
    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class EmptyPointSetError(LameSpectraError, ValueError):
    pass


# linalg


class SingularMatrixError(LameSpectraError, ValueError):
    def __init__(self, message='numerically singular'):
        super().__init__(message)


class EigenConvergenceError(LameSpectraError, RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = [] if partial is None else list(partial)


class InverseIterationError(LameSpectraError, RuntimeError):
    pass


# operator and spectral


class OperatorError(LameSpectraError, ValueError):
    pass


class ResonanceError(LameSpectraError, ValueError):
    pass


class UnsupportedEnumerationError(LameSpectraError, ValueError):
    pass


class SpectralError(LameSpectraError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# measure


class MeasureError(LameSpectraError, ValueError):
    pass


class OnSupportError(LameSpectraError, ValueError):
    def __init__(self, message='on support'):
        super().__init__(message)


class ProbeStandoffError(LameSpectraError, ValueError):
    def __init__(self, message, probe=None):
        super().__init__(message)
        self.probe = probe


# forest


class BranchError(LameSpectraError, ValueError):
    def __init__(self, message, segment=None):
        super().__init__(message)
        self.segment = segment


class QuadratureError(LameSpectraError, RuntimeError):
    pass


class TrajectoryError(LameSpectraError, RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ForestError(LameSpectraError, ValueError):
    pass


# cli


class ConfigError(LameSpectraError, ValueError):
    def __init__(self, message, field_path=None):
        super().__init__(message)
        self.field_path = field_path
