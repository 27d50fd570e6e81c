"""
Error hierarchy for the quantization toolkit
Every error carries the CLI exit code it maps to
"""


class QuantizationError(Exception):
    """Base class for all computation errors (CLI exit code 3)"""
    exit_code: int = 3


# ============================================
# Operator algebra
# ============================================

class InvalidOperator(QuantizationError):
    """Raised when an operator is not a finite square complex matrix"""
    pass


class NonHermitianInput(QuantizationError):
    """Raised when a Hermitian operator was required"""
    pass


class NonUnitaryConjugator(QuantizationError):
    """Raised when conjugating by a matrix that is not unitary"""
    pass


class InvalidDensityOperator(QuantizationError):
    """Raised when an operator fails the density-operator gate"""
    pass


class InvalidEffect(QuantizationError):
    """Raised when an operator is not an effect (0 <= E <= I)"""
    pass


class DimensionMismatch(QuantizationError):
    """Raised when operands live on different Hilbert spaces"""
    pass


class NotPositive(QuantizationError):
    """Raised when a positive operator was required"""
    pass


# ============================================
# Group systems
# ============================================

class InvalidGrid(QuantizationError):
    """Raised when grid parameters are inconsistent"""
    pass


class OffGridElement(QuantizationError):
    """Raised when a group element is not on the carrier"""
    pass


class NotRankOneProjection(QuantizationError):
    """Raised when a rank-one projection was required"""
    pass


# ============================================
# Quantization maps
# ============================================

class CarrierMismatch(QuantizationError):
    """Raised when an object belongs to another carrier"""
    pass


class InvalidObservable(QuantizationError):
    """Raised when function values are not finite or exceed the declared bound"""
    pass


class UnsummableFunction(QuantizationError):
    """Raised when a function is neither bounded nor absolutely summable"""
    pass


class TranslationLeavesGrid(QuantizationError):
    """Raised when a translated function loses mass outside the planar window"""
    pass


class IncompleteTable(QuantizationError):
    """Raised when a map table does not cover every carrier point"""
    pass


class NotPositiveRecovered(QuantizationError):
    """Raised when the recovered kernel is not a density operator"""
    pass


class UnboundedSequence(QuantizationError):
    """Raised when a function sequence is not uniformly bounded"""
    pass


class RecoveryDeviationExceeded(QuantizationError):
    """Raised when candidate kernels disagree beyond the allowed deviation"""
    exit_code = 4


# ============================================
# POVMs and operator integrals
# ============================================

class InvalidPartition(QuantizationError):
    """Raised when cells overlap or do not cover the carrier"""
    pass


class InvalidPovm(QuantizationError):
    """Raised when effects do not form a normalized POVM"""
    pass


class NotCellMeasurable(QuantizationError):
    """Raised when a function is not constant on the partition cells"""
    pass


class NotInDomain(QuantizationError):
    """Raised when a vector could not be placed in the operator-integral domain"""
    pass


class NotMonotone(QuantizationError):
    """Raised when a function sequence is not increasing and positive"""
    pass


class InvalidShots(QuantizationError):
    """Raised when a sample size is not a positive integer"""
    pass
