import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import pandas as pd

from cxflow.common.streams import StreamId
from cxflow.common.utils import mean_of
from cxflow.perception.models import EMPTY_STATS, StreamStats

log = logging.getLogger(__name__)

QUANTITIES = ("l", "w")


def estimation_error(actual: float, estimated: float) -> Optional[float]:
    """
    Relative estimation error in percent.

    Returns:
        Optional[float]: ``|actual - estimated| / |actual| * 100``; 0 when both are 0; None when the actual value is 0
        but the estimate is not, since such samples have no relative error.
    """
    if actual == 0:
        return 0.0 if estimated == 0 else None
    return abs(actual - estimated) / abs(actual) * 100.0


@dataclass
class EstimationErrorTracker:
    """
    Accumulates estimation errors of V2V statistics against ground truth over a run.

    Attributes:
        errors (Dict[str, List[float]]): per quantity (``l`` or ``w``) every counted sample, percent.
        excluded (Dict[str, int]): per quantity the samples with zero actual and non-zero estimate.
    """

    errors: Dict[str, List[float]] = field(default_factory=lambda: {q: [] for q in QUANTITIES})
    excluded: Dict[str, int] = field(default_factory=lambda: {q: 0 for q in QUANTITIES})

    def record(self, actual: Mapping[StreamId, StreamStats], estimated: Mapping[StreamId, StreamStats]) -> None:
        """Adds one receiver's view of every direction in ``actual``."""
        for stream, truth in actual.items():
            guess = estimated.get(stream, EMPTY_STATS)
            for quantity, a, e in (("l", truth.l, guess.l), ("w", truth.w, guess.w)):
                error = estimation_error(a, e)
                if error is None:
                    self.excluded[quantity] += 1
                else:
                    self.errors[quantity].append(error)

    def extend(self, other: "EstimationErrorTracker") -> None:
        """Adds the samples of another tracker, e.g. another rollout of the same config."""
        for quantity in QUANTITIES:
            self.errors[quantity].extend(other.errors[quantity])
            self.excluded[quantity] += other.excluded[quantity]

    def mean(self, quantity: str) -> float:
        return mean_of(self.errors[quantity])

    def report(self) -> pd.DataFrame:
        """Mean error, counted samples and excluded samples per quantity."""
        for quantity in QUANTITIES:
            if self.excluded[quantity]:
                log.warning(
                    f"{self.excluded[quantity]} {quantity} samples with zero actual value excluded from the mean error"
                )
        return pd.DataFrame(
            {
                "quantity": list(QUANTITIES),
                "mean_error": [self.mean(q) for q in QUANTITIES],
                "samples": [len(self.errors[q]) for q in QUANTITIES],
                "excluded": [self.excluded[q] for q in QUANTITIES],
            }
        )


def estimation_error_report(tracker: EstimationErrorTracker) -> Dict[str, float]:
    """Mean error per quantity."""
    return {q: tracker.mean(q) for q in QUANTITIES}
