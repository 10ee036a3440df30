"""Exception types shared across the package.

Every guard that protects a mathematical precondition raises one of these
instead of returning garbage, so callers (and the CLI) can distinguish
"the bound does not apply here" from "the computation failed".
"""


class DivergentRegimeError(ValueError):
    """A remainder series is evaluated outside its radius of convergence."""


class EpsilonTooLargeError(ValueError):
    """Requested per-step tolerance violates a cost formula's validity range."""


class SchemeLookupError(KeyError):
    """Unknown scheme identifier."""


class DataIntegrityError(ValueError):
    """A coefficient file is malformed or fails a structural invariant."""


class GridTooFineError(ValueError):
    """Order verification ran into the numerical noise floor."""


class AsymptoticRegimeError(ValueError):
    """Order verification grid lies outside the asymptotic regime."""


class ReferenceConvergenceError(RuntimeError):
    """The reference propagator could not certify the requested tolerance."""


class InfeasiblePlanError(RuntimeError):
    """No step count within the search budget meets the error target."""
