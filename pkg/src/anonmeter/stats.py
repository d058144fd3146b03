"""Synthetic reading generation and distribution fitting.

Generation draws from a documented uniform stream (PCG64) through each
family's inverse CDF, so identical seeds reproduce identical matrices.
Fitting uses unbiased estimators and ranks candidate families by the
one-sample Cramer-von Mises statistic, compared raw (no p-values).
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .model import ReadingMatrix

FAMILIES = ("exponential", "normal")


@dataclass(frozen=True)
class DistributionSpec:
    """A candidate reading distribution: exponential (mean, in Wh) or normal (mean, sd)."""

    family: str
    mean: float
    sd: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.family == "exponential":
            if not self.mean > 0:
                raise ValueError(f"exponential mean must be positive, got {self.mean}")
            if self.sd is not None:
                raise ValueError("exponential spec takes no standard deviation")
        else:
            if self.sd is None or not self.sd > 0:
                raise ValueError(f"normal standard deviation must be positive, got {self.sd}")

    def cdf(self, x: float) -> float:
        if self.family == "exponential":
            return -math.expm1(-x / self.mean) if x > 0 else 0.0
        return NormalDist(self.mean, self.sd).cdf(x)


@dataclass(frozen=True)
class FitResult:
    """A fitted spec with its Cramer-von Mises statistic over m samples."""

    spec: DistributionSpec
    cvm: float
    sample_size: int

    def __post_init__(self):
        floor = 1.0 / (12.0 * self.sample_size)
        if self.cvm < floor - 1e-12:
            raise ValueError(f"W2 = {self.cvm} below its floor 1/(12m) = {floor}")


def _inverse_cdf_draws(spec: DistributionSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(count)
    if spec.family == "exponential":
        return -spec.mean * np.log1p(-u)
    nd = NormalDist(spec.mean, spec.sd)
    u = np.maximum(u, 2.0**-64)  # inv_cdf needs the open interval
    return np.array([nd.inv_cdf(p) for p in u])


def sample_reading_matrix(
    n: int,
    t: int,
    target_spec: DistributionSpec,
    others_spec: DistributionSpec,
    seed: int,
) -> ReadingMatrix:
    """Draw meter 0 from target_spec and meters 1..n-1 from others_spec.

    Continuous draws are rounded half-up to integer Wh and clamped at 0
    (only normal draws can go negative). Deterministic per seed: one PCG64
    stream, consumed row by row.
    """
    if n < 1 or t < 1:
        raise ValueError(f"need n >= 1 and t >= 1, got n={n}, t={t}")
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for i in range(n):
        spec = target_spec if i == 0 else others_spec
        draws = _inverse_cdf_draws(spec, t, rng)
        wh = np.maximum(np.floor(draws + 0.5), 0.0).astype(np.int64)
        rows.append(tuple(int(x) for x in wh))
    return ReadingMatrix(n=n, t=t, readings=tuple(rows))


def _clean_samples(samples, minimum: int) -> list[float]:
    vals = [float(x) for x in samples]
    if len(vals) < minimum:
        raise ValueError(f"need at least {minimum} samples, got {len(vals)}")
    return vals


def fit_exponential(samples) -> DistributionSpec:
    """Unbiased exponential fit: the estimated mean is the sample mean."""
    vals = _clean_samples(samples, 2)
    if any(v < 0 for v in vals):
        raise ValueError("exponential samples must be non-negative")
    mean = math.fsum(vals) / len(vals)
    if mean == 0:
        raise ValueError("cannot fit an exponential to all-zero samples")
    return DistributionSpec(family="exponential", mean=mean)


def unbiased_rate(samples) -> float:
    """Unbiased rate estimate from m samples: (m - 1) / (m * sample mean)."""
    vals = _clean_samples(samples, 2)
    total = math.fsum(vals)
    if total == 0:
        raise ValueError("rate is undefined for all-zero samples")
    return (len(vals) - 1) / total


def fit_normal(samples) -> DistributionSpec:
    """Normal fit: sample mean and the unbiased (m - 1 divisor) standard deviation."""
    vals = _clean_samples(samples, 2)
    mean = statistics.fmean(vals)
    var = statistics.variance(vals, xbar=mean)
    if var == 0:
        raise ValueError("cannot fit a normal to zero-variance samples")
    return DistributionSpec(family="normal", mean=mean, sd=math.sqrt(var))


def cvm_statistic(samples, spec: DistributionSpec) -> float:
    """One-sample Cramer-von Mises statistic W2 against the spec's CDF.

    W2 = 1/(12m) + sum over sorted samples of ((2i - 1)/(2m) - F(x_(i)))**2;
    its floor 1/(12m) is reached exactly on the spec's quantile grid.
    """
    vals = sorted(float(x) for x in samples)
    m = len(vals)
    if m < 1:
        raise ValueError("need at least one sample")
    terms = (
        ((2 * i - 1) / (2 * m) - spec.cdf(x)) ** 2
        for i, x in enumerate(vals, start=1)
    )
    return 1.0 / (12.0 * m) + math.fsum(terms)


DEFAULT_FITTERS = (fit_exponential, fit_normal)


def rank_distributions(samples, fitters=DEFAULT_FITTERS) -> list[FitResult]:
    """Fit every candidate family and order the results by W2, best first.

    Additional families plug in as extra fitters: any callable taking the
    samples and returning an object with a `cdf(x)` method participates.
    """
    vals = _clean_samples(samples, 2)
    results = []
    for fitter in fitters:
        spec = fitter(vals)
        results.append(
            FitResult(spec=spec, cvm=cvm_statistic(vals, spec), sample_size=len(vals))
        )
    results.sort(key=lambda r: r.cvm)
    return results
