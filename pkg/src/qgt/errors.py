"""Exception types shared across modules."""


class ParameterError(ValueError):
    """Invalid or inconsistent parameters."""


class DomainError(ParameterError):
    """Argument outside the mathematical domain of an operation."""


class SamplingError(RuntimeError):
    """Graph sampler could not produce a simple graph within its retry budget."""


class IntegrityError(RuntimeError):
    """Syndrome inconsistent with any defect vector on the graph."""


class BracketError(RuntimeError):
    """Threshold bisection bracket does not straddle the threshold."""


class InfeasibleError(RuntimeError):
    """No admissible parameter satisfies the request."""
