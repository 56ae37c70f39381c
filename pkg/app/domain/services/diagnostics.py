from typing import List, Sequence, Tuple

import numpy as np
from scipy import stats

from app.exceptions.tensorciq_exceptions import InvalidInputException


def qq_points(samples: Sequence[float]) -> List[Tuple[float, float]]:
    """Sorted samples paired with standard normal quantiles at plotting positions (i - 0.5) / n."""
    values = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = values.shape[0]
    if n < 2:
        raise InvalidInputException(f"Q-Q data needs at least 2 samples, got {n}")
    if not np.all(np.isfinite(values)):
        raise InvalidInputException("Q-Q samples must be finite")
    theoretical = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    return list(zip(theoretical.tolist(), values.tolist()))


def ks_statistic(samples: Sequence[float]) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF and the standard normal CDF."""
    values = np.asarray(samples, dtype=float).reshape(-1)
    if values.shape[0] < 1:
        raise InvalidInputException("KS statistic needs at least one sample")
    return float(stats.kstest(values, 'norm').statistic)
