"""Exception types shared across the package."""


class DataError(ValueError):
    """Malformed or degenerate input data: unparseable files, constant
    columns, too few samples for the requested statistic."""


class DegeneracyError(RuntimeError):
    """A population-level test cannot decide: Gaussian-like cumulant
    degeneracy, tables inconsistent with a polytree, or an empty
    correlation-threshold interval."""
