from typing import Any, List


def split_csv(value: Any) -> Any:
    """
    Splits a comma separated string into a list of stripped, non-empty items. Used by ``mode="before"`` validators so
    list-valued config fields can be written as ``a, b, c`` on one line. Values that are not strings pass through.

    Args:
        value: the raw field value.

    Returns:
        The list of items, or the value unchanged.
    """
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def mean_of(values: List[float]) -> float:
    """
    Arithmetic mean with a plain left-to-right sum, so recomputing from a persisted log reproduces the live value
    bit for bit. Empty input gives 0.0.
    """
    if not values:
        return 0.0
    return sum(values) / len(values)


def clamp(value: float, low: float, high: float) -> float:
    return max(low, min(high, value))
