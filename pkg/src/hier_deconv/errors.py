"""
Errors and Exceptions module
"""


class HierDeconvException(Exception):
    """
    Base Exception for the hier_deconv library
    """
    pass


class ShapeMismatchError(HierDeconvException, ValueError):
    """
    A signal, operator, measurement or sparsity pattern does not fit the
    shape it is combined with.
    """
    pass


class ConfigurationError(HierDeconvException, ValueError):
    """
    Invalid dimensions, sparsity levels, tolerances or experiment grids.
    """
    pass


class SupportError(HierDeconvException, IndexError):
    """
    A support entry is out of range or duplicated, or a restricted vector
    does not match the length of its support.
    """
    pass


class GuardExceededError(HierDeconvException):
    """
    An exhaustive enumeration or a dense matrix would exceed its size guard.
    """
    pass


class NonFiniteError(HierDeconvException, ArithmeticError):
    """
    NaN or infinite values were met during a solve.
    """
    pass
