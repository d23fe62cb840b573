"""Exception hierarchy shared by the library and the CLI."""


class TensorIsingError(Exception):
    """Base class for all library errors."""


class DomainError(TensorIsingError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class NoInteriorMaximizer(TensorIsingError):
    """The free-energy landscape has no positive global maximizer (beta at or below threshold)."""


class NonConvergence(TensorIsingError):
    """A root search or polish step failed to reach its tolerance."""


class BudgetExceeded(TensorIsingError):
    """A requested hypergraph would exceed the configured edge budget."""


class WindowUndefined(TensorIsingError):
    """The inefficiency window is empty by construction (p = 2)."""


class ConsistencyError(TensorIsingError):
    """Two independent evaluation routes of the same quantity disagree."""
