"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class SubspaceCompError(Exception):
    """Base class for all package errors."""


class InputError(SubspaceCompError, ValueError):
    """Malformed or inconsistent input (bad pmf, wrong dimensions, non-prime q)."""


class BudgetError(SubspaceCompError):
    """An enumeration or decoding budget would be exceeded."""


class ConsistencyError(SubspaceCompError):
    """An internal invariant failed, e.g. the chain closure check."""
