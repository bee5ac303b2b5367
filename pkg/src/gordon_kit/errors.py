"""Exception types shared across modules."""


class WindowError(IndexError):
    """An index or position fell outside the window a coefficient source covers."""


class PrecisionBudgetError(ArithmeticError):
    """Exact arithmetic would exceed the configured size or precision budget."""

