"""
Parameter validation for bbjump.
Checks noise, detector, schedule and code parameters before they reach the numerics.
"""

import math
from typing import Any, Optional, Sequence, Tuple

import numpy as np


class ValidationError(Exception):
    """Raised when a parameter fails validation.

    Attributes:
        field: Dotted path of the offending field, when known
    """

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        self.reason = message
        super().__init__(f"{field}: {message}" if field else message)


class Validator:
    """Validation helpers returning (is_valid, error_message) tuples."""

    MAX_QUBITS = 12
    MAX_CODE_SIZE = 6
    MAX_SEED = 2 ** 64

    @staticmethod
    def require(check: Tuple[bool, Optional[str]], field: Optional[str] = None) -> None:
        """Raise ValidationError when a check tuple reports failure."""
        is_valid, error = check
        if not is_valid:
            raise ValidationError(error or "invalid value", field)

    @staticmethod
    def validate_finite(value: Any, name: str = "value") -> Tuple[bool, Optional[str]]:
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            return False, f"{name} must be a number"
        if not math.isfinite(float(value)):
            return False, f"{name} must be finite"
        return True, None

    @staticmethod
    def validate_nonnegative(value: Any, name: str = "value", allow_zero: bool = True) -> Tuple[bool, Optional[str]]:
        """
        Validate a real, finite, nonnegative quantity such as a rate or duration.

        Args:
            value: Number to check
            name: Name used in the error message
            allow_zero: Whether zero is acceptable

        Returns:
            Tuple of (is_valid, error_message)
        """
        ok, error = Validator.validate_finite(value, name)
        if not ok:
            return ok, error
        if value < 0:
            return False, f"{name} cannot be negative"
        if not allow_zero and value == 0:
            return False, f"{name} must be positive"
        return True, None

    @staticmethod
    def validate_probability(p: Any, name: str = "probability") -> Tuple[bool, Optional[str]]:
        ok, error = Validator.validate_finite(p, name)
        if not ok:
            return ok, error
        if p < 0 or p > 1:
            return False, f"{name} must lie in [0, 1]"
        return True, None

    @staticmethod
    def validate_detector(p_undetected: Any, p_misidentify: Any) -> Tuple[bool, Optional[str]]:
        for value, name in ((p_undetected, "p_undetected"), (p_misidentify, "p_misidentify")):
            ok, error = Validator.validate_probability(value, name)
            if not ok:
                return ok, error
        if p_undetected + p_misidentify > 1 + 1e-12:
            return False, "p_undetected + p_misidentify cannot exceed 1"
        return True, None

    @staticmethod
    def validate_rates(rates: Sequence[float], num_qubits: Optional[int] = None) -> Tuple[bool, Optional[str]]:
        """Per-qubit emission rates: finite, nonnegative, one per qubit."""
        if len(rates) == 0:
            return False, "rates must not be empty"
        if num_qubits is not None and len(rates) != num_qubits:
            return False, f"expected {num_qubits} rates, got {len(rates)}"
        for index, rate in enumerate(rates):
            ok, error = Validator.validate_nonnegative(rate, f"rate[{index}]")
            if not ok:
                return ok, error
        return True, None

    @staticmethod
    def validate_seed(seed: Any) -> Tuple[bool, Optional[str]]:
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            return False, "seed must be an integer"
        if seed < 0 or seed >= Validator.MAX_SEED:
            return False, "seed must lie in [0, 2^64)"
        return True, None

    @staticmethod
    def validate_qubit_index(index: Any, num_qubits: int) -> Tuple[bool, Optional[str]]:
        if isinstance(index, bool) or not isinstance(index, (int, np.integer)):
            return False, "qubit index must be an integer"
        if not 1 <= index <= num_qubits:
            return False, f"qubit index {index} outside 1..{num_qubits}"
        return True, None

    @staticmethod
    def validate_distinct_qubits(qubits: Sequence[int], num_qubits: int) -> Tuple[bool, Optional[str]]:
        for q in qubits:
            ok, error = Validator.validate_qubit_index(q, num_qubits)
            if not ok:
                return ok, error
        if len(set(qubits)) != len(qubits):
            return False, f"qubits {tuple(qubits)} are not distinct"
        return True, None

    @staticmethod
    def validate_bitstring(bits: Any, length: int) -> Tuple[bool, Optional[str]]:
        if not isinstance(bits, str):
            return False, "bitstring must be a string"
        if len(bits) != length:
            return False, f"bitstring {bits!r} must have length {length}"
        if any(b not in '01' for b in bits):
            return False, f"bitstring {bits!r} may only contain 0 and 1"
        return True, None

    @staticmethod
    def validate_code_size(n: Any) -> Tuple[bool, Optional[str]]:
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            return False, "n must be an integer"
        if n < 1:
            return False, "n must be >= 1"
        if n + 1 > Validator.MAX_QUBITS:
            return False, f"n + 1 physical qubits exceeds the dense limit of {Validator.MAX_QUBITS}"
        return True, None

    @staticmethod
    def validate_unit_axis(axis: Sequence[float], tol: float = 1e-12) -> Tuple[bool, Optional[str]]:
        if len(axis) != 3:
            return False, "axis must have three components"
        norm = float(np.linalg.norm(np.asarray(axis, dtype=float)))
        if abs(norm - 1.0) > tol:
            return False, f"axis norm {norm:.15g} is not 1"
        return True, None
