"""
Exception hierarchy for bbjump numerics.
"""


class QuantumError(Exception):
    """Base class for simulator errors."""
    pass


class DimensionMismatchError(QuantumError, ValueError):
    """Operands act on different numbers of qubits."""
    pass


class QubitIndexError(QuantumError, IndexError):
    """Qubit index outside 1..num_qubits."""
    pass


class NonFiniteError(QuantumError, ValueError):
    """Matrix contains NaN or infinite entries."""
    pass


class NormalizationError(QuantumError, ValueError):
    """State is required to be normalized but is not."""
    pass


class StepSizeError(QuantumError, ValueError):
    """Integration or sampling step is too large for the requested accuracy."""
    pass


class CaseError(QuantumError, ValueError):
    """A control case cannot realize the requested generator."""
    pass
