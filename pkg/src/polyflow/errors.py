"""Exception hierarchy shared across the library and the CLI exit codes."""


class PolyflowError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InputError(PolyflowError):
    """Malformed or out-of-contract input (bad file, bad argument, bad vector)."""

    exit_code = 2


class CapabilityError(PolyflowError):
    """Instance exceeds a documented brute-force or enumeration limit."""

    exit_code = 3


class InternalError(PolyflowError):
    """An invariant the library guarantees failed; indicates a bug."""

    exit_code = 4


class SolverError(PolyflowError):
    """The LP backend failed to produce a usable solution."""

    exit_code = 4


class SparsityUndefinedError(InputError):
    """Sparsity requested for a cut that separates zero demand."""
