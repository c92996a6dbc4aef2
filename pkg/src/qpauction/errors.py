"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the documented domain of the callable."""


class DegenerateProfileError(ValueError):
    """A bid profile puts zero total weight (or zero opposing weight) on the item.

    Allocation probabilities are undefined in this case; callers must treat it
    as an error rather than fall back to a uniform split.
    """
