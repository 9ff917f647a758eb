"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`ClusteringError`, so callers (and the CLI) can tell library
failures apart from bugs.
"""


class ClusteringError(Exception):
    """Base class for all package errors."""


class EmptySet(ClusteringError):
    pass


class NotNormalized(ClusteringError):
    def __init__(self, row, norm=None):
        self.row = row
        self.norm = norm
        msg = f"row {row} is not unit-norm"
        if norm is not None:
            msg += f" (norm={norm:.6g})"
        super().__init__(msg)


class NonFinite(ClusteringError):
    def __init__(self, row, col):
        self.row = row
        self.col = col
        super().__init__(f"non-finite entry at row {row}, col {col}")


class KTooLarge(ClusteringError):
    pass


class ShapeMismatch(ClusteringError):
    pass


class LengthMismatch(ClusteringError):
    pass


class IndexOutOfRange(ClusteringError):
    pass


class EmptyBatch(ClusteringError):
    pass


class NotEnoughClusters(ClusteringError):
    pass


class GraphNotSymmetric(ClusteringError):
    pass


class SelfLoopPresent(ClusteringError):
    pass


class DivergedLoss(ClusteringError):
    """Training produced a non-finite loss.

    ``model`` holds the parameters from the last step whose loss was finite.
    """

    def __init__(self, step, model):
        self.step = step
        self.model = model
        super().__init__(f"loss became non-finite at step {step}")


class IoError(ClusteringError):
    pass


class BadMagic(IoError):
    pass


class FormatVersionMismatch(IoError):
    pass


class CrcMismatch(IoError):
    pass
