"""Error types shared across the package.

Each maps onto one CLI exit code: configuration problems exit with 2, bad
input data with 3 and numerical failures with 4.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class GraphDataError(ValueError):
    """Malformed or inconsistent graph, label or feature data."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateDegreeError(GraphDataError):
    """A normalization hit zero-degree nodes."""

    def __init__(self, nodes):
        self.nodes = [int(v) for v in nodes]
        shown = ", ".join(map(str, self.nodes[:20]))
        more = "" if len(self.nodes) <= 20 else f" (+{len(self.nodes) - 20} more)"
        super().__init__(f"isolated nodes under degree normalization: {shown}{more}")


class NumericalError(ArithmeticError):
    """Non-finite values during training or estimation."""


class TrainingDivergedError(NumericalError):
    def __init__(self, epoch, lr):
        self.epoch = epoch
        self.lr = lr
        super().__init__(f"non-finite loss at epoch {epoch} with lr={lr:g}; lower the learning rate")
