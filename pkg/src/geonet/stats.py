"""Binomial interval estimation for Monte Carlo counters."""
from __future__ import annotations

import math

Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    phat = successes / trials
    z2 = z * z
    centre = phat + z2 / (2 * trials)
    spread = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials))
    denom = 1 + z2 / trials
    lo = 0.0 if successes == 0 else max(0.0, (centre - spread) / denom)
    hi = 1.0 if successes == trials else min(1.0, (centre + spread) / denom)
    return lo, hi
