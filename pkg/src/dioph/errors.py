"""Package-wide error types.

These map onto the CLI exit codes: invalid input (2), cost guard (3),
verification failure (4), precision exhaustion (5).
"""


class InvalidInput(Exception):
    """A plan or configuration violates its stated preconditions."""


class CostGuardExceeded(Exception):
    """A search was refused, not truncated: its cost bound was exceeded."""


class VerificationFailed(Exception):
    """A stored witness or certificate failed re-verification."""


class PrecisionExhausted(Exception):
    """A certified answer could not be reached within the precision budget."""


class StreamExhausted(Exception):
    """A partial-quotient or exponent stream ended before the requested term."""


class SearchMismatch(Exception):
    """Two independent search routes disagreed; that is a bug, not noise."""


class BoundViolation(Exception):
    """An exact arithmetic bound failed; this would contradict a theorem."""
