"""Power-family step-size schedules and their asymptotic ratios."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class TimescaleError(ValueError):
    """Raised when two schedules do not share an exponent."""


@dataclass(frozen=True)
class StepSchedule:
    """Step size scale * (1 + dilation * c)^(-exponent) at update count c.

    scale lies in (0, 1] so every step lies in (0, 1]; dilation is positive;
    exponent lies in (0, 1] so steps vanish without being summable.
    Square-summability is deliberately not required, which admits
    exponent 1/2.
    """

    scale: float
    dilation: float
    exponent: float

    def __post_init__(self):
        if not 0.0 < self.scale <= 1.0:
            raise ValueError(f"scale must lie in (0, 1], got {self.scale}")
        if not self.dilation > 0.0:
            raise ValueError(f"dilation must be positive, got {self.dilation}")
        if not 0.0 < self.exponent <= 1.0:
            raise ValueError(f"exponent must lie in (0, 1], got {self.exponent}")

    def __call__(self, count) -> float:
        if np.any(np.asarray(count) < 0):
            raise ValueError(f"update count must be nonnegative, got {count}")
        # same power routine as table(), so both agree bit for bit
        return float(self._eval(np.asarray(count, dtype=np.float64)))

    def table(self, n: int) -> np.ndarray:
        """Steps at counts 0..n-1, precomputed so hot loops avoid pow calls."""
        return self._eval(np.arange(n, dtype=np.float64))

    def _eval(self, counts: np.ndarray) -> np.ndarray:
        return self.scale * np.power(1.0 + self.dilation * counts, -self.exponent)


def schedule_eval(schedule: StepSchedule, count) -> float:
    """Step size of the schedule at the given update count."""
    return schedule(count)


def asymptotic_ratio(num: StepSchedule, den: StepSchedule) -> float:
    """Limit of the step ratio between two same-exponent schedules, folded into (0, 1].

    For power schedules with a common exponent rho the ratio tends to
    (a1 / a2) * (b2 / b1)^rho.  The reciprocal is taken when that limit
    exceeds one, so the result is orientation-free.
    """
    if num.exponent != den.exponent:
        raise TimescaleError(
            f"schedules with exponents {num.exponent} and {den.exponent} "
            "separate timescales; their step ratio has no finite nonzero limit"
        )
    ratio = (num.scale / den.scale) * (den.dilation / num.dilation) ** num.exponent
    if ratio > 1.0:
        ratio = 1.0 / ratio
    return ratio
