"""Exception hierarchy.

Every error is a ``ValueError`` subclass so callers that only care about
"bad input" can catch one type.
"""


class SparseFunctionalError(ValueError):
    """Base class for all package errors."""


class InvalidDictionaryError(SparseFunctionalError):
    pass


class DimensionError(SparseFunctionalError):
    pass


class RangeError(SparseFunctionalError):
    pass


class DomainError(SparseFunctionalError):
    pass


class SparsityError(SparseFunctionalError):
    pass


class DegenerateSamplingError(SparseFunctionalError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"dictionary element {index} vanishes at every sample point")


class AdmissibilityError(SparseFunctionalError):
    """Sparsity level or contraction factor outside the convergent regime."""


class InputError(SparseFunctionalError):
    pass


class SizeError(SparseFunctionalError):
    """A combinatorial enumeration exceeded its guard."""


class ContractError(SparseFunctionalError):
    """A caller-side contract (normalization, certification, oracle) was violated."""


class ConfigError(SparseFunctionalError):
    pass
