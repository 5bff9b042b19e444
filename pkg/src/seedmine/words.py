"""Number-word tables shared by prompt rendering and answer parsing."""

from __future__ import annotations

# Words we both render and parse. Parsing additionally accepts digit strings.
ONES = (
    "zero", "one", "two", "three", "four", "five", "six", "seven",
    "eight", "nine", "ten", "eleven", "twelve", "thirteen", "fourteen",
    "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
)

WORD_TO_VALUE = {w: i for i, w in enumerate(ONES)}

# Beyond this, counts are reported as "numerous" under the mining convention
# and clamped under the evaluation convention.
COUNT_CEILING = 19

NUMEROUS = "numerous"


def value_to_word(value: int) -> str:
    """Canonical word for a count: zero..ten spelled out, 11..19 as digits,
    anything above the ceiling is "numerous"."""
    if value < 0:
        raise ValueError(f"negative count {value}")
    if value <= 10:
        return ONES[value]
    if value <= COUNT_CEILING:
        return str(value)
    return NUMEROUS


def quantity_word(value: int) -> str:
    """Spelled-out quantity used at the head of a prompt (capitalized)."""
    if not 1 <= value <= len(ONES) - 1:
        raise ValueError(f"quantity {value} out of prompt range")
    return ONES[value].capitalize()
