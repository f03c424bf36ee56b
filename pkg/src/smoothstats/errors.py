"""Shared exception types."""


class CapacityError(Exception):
    """A requested range exceeds the configured sieving/memory budget."""


class BracketError(Exception):
    """A root bracket could not be established; carries the endpoint values."""

    def __init__(self, msg, lo, f_lo, hi, f_hi):
        super().__init__(f"{msg}: f({lo})={f_lo}, f({hi})={f_hi}")
        self.lo, self.f_lo, self.hi, self.f_hi = lo, f_lo, hi, f_hi


class ConsistencyError(Exception):
    """An internal cross-check failed (usually signals a counting bug)."""
