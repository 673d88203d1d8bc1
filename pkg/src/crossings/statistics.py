import math

Z95 = 1.959963984540054


def wilson_interval(successes: int, total: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for Bernoulli outcomes."""
    if total <= 0:
        return (0.0, 1.0)
    p = successes / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (p + z2 / (2.0 * total)) / denom
    margin = (z * math.sqrt(p * (1.0 - p) / total + z2 / (4.0 * total * total))) / denom
    return (max(0.0, center - margin), min(1.0, center + margin))


def mean_and_stderr(total: int, total_sq: int, n: int) -> tuple[float, float]:
    """Sample mean and its standard error from exact integer moments."""
    mean = total / n
    if n < 2:
        return mean, 0.0
    variance = max(0.0, (total_sq - total * total / n) / (n - 1))
    return mean, math.sqrt(variance / n)
