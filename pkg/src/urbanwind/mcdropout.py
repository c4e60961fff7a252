"""Monte-Carlo dropout uncertainty over the trained generator.

n stochastic forward passes with independently sampled decoder dropout masks
give a per-cell predictive mean and a population (1/n) variance computed as
mean(f^2) - mean(f)^2; negative values from floating-point cancellation are
clamped to zero.  Aggregation happens in decoded wind-factor space, and each
pass i draws its masks from the RNG substream seeded by (seed, i), so a
repeated call is bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .checkpoint import Surrogate


@dataclass(frozen=True)
class UncertaintyResult:
    mean: np.ndarray  # (H, W) float32 wind factors
    variance: np.ndarray  # (H, W) float32, >= 0
    n: int
    p: float
    seed: int

    @property
    def stddev(self) -> np.ndarray:
        return np.sqrt(self.variance)


def aggregate_samples(samples: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Mean and clamped 1/n variance of the sample stack, in float64."""
    if not samples:
        raise ValueError("need at least one sample")
    n = len(samples)
    sum_f = np.zeros(samples[0].shape, dtype=np.float64)
    sum_f2 = np.zeros(samples[0].shape, dtype=np.float64)
    for f in samples:
        f64 = np.asarray(f, dtype=np.float64)
        sum_f += f64
        sum_f2 += f64 * f64
    mean = sum_f / n
    var = sum_f2 / n - mean * mean
    return mean, np.maximum(var, 0.0)


def mc_samples(predict: Callable[[np.random.Generator | None], np.ndarray],
               n: int, seed: int, p: float) -> list[np.ndarray]:
    """Run n stochastic passes; pass i gets the (seed, i) RNG substream."""
    out = []
    for i in range(n):
        rng = np.random.default_rng([seed, i]) if p > 0 else None
        out.append(predict(rng))
    return out


def mc_predict(surrogate: Surrogate, channels: np.ndarray, n: int = 30, p: float = 0.5,
               seed: int = 0) -> UncertaintyResult:
    """Predictive mean and variance for one raw 4-channel geometry stack."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout p must be in [0, 1), got {p}")
    samples = mc_samples(
        lambda rng: surrogate.predict(channels, dropout_rng=rng, dropout_p=p),
        n, seed, p,
    )
    mean, var = aggregate_samples(samples)
    return UncertaintyResult(
        mean=mean.astype(np.float32),
        variance=var.astype(np.float32),
        n=n,
        p=p,
        seed=seed,
    )
