"""Exception hierarchy shared by every module of the package."""


class GGADError(Exception):
    """Base class for all errors raised by ggad."""


# graph construction / lookup
class EndpointOutOfRange(GGADError, ValueError):
    pass


class FeatureShapeMismatch(GGADError, ValueError):
    pass


class NonFiniteFeature(GGADError, ValueError):
    pass


class NodeOutOfRange(GGADError, IndexError):
    pass


# numerics
class ShapeMismatch(GGADError, ValueError):
    pass


class LengthMismatch(GGADError, ValueError):
    pass


class NegativeStd(GGADError, ValueError):
    pass


# model / training
class EmptyEgoNetwork(GGADError, ValueError):
    pass


class StaleCache(GGADError, RuntimeError):
    pass


class EmptySet(GGADError, ValueError):
    pass


class NoEligibleAnchors(GGADError, ValueError):
    pass


class BatchTooSmall(GGADError, ValueError):
    pass


class NonFiniteLoss(GGADError, FloatingPointError):
    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


# evaluation
class DegenerateLabels(GGADError, ValueError):
    pass


# data files
class MissingFile(GGADError, FileNotFoundError):
    pass


class ParseError(GGADError, ValueError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class CountMismatch(GGADError, ValueError):
    pass


class InvalidParams(GGADError, ValueError):
    pass


class InsufficientNodes(GGADError, ValueError):
    pass
