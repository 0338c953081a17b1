"""Probability primitives for the penalised random-partition model.

Groups follow a Dirichlet-process style partition prior whose predictive
weights are damped by a squared-exponential penalty between an edge
centroid and the group's latent location; per-edge counts follow a
unit-shifted Poisson kernel (support starting at 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import gammaln

from .errors import DomainError


@dataclass(frozen=True)
class GammaPrior:
    """Gamma distribution in shape/rate form."""

    shape: float
    rate: float

    def __post_init__(self) -> None:
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ValueError("gamma shape must be positive and finite")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError("gamma rate must be positive and finite")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.gamma(self.shape, 1.0 / self.rate))

    def logpdf(self, x: float) -> float:
        if x <= 0:
            return -math.inf
        return (
            self.shape * math.log(self.rate)
            - float(gammaln(self.shape))
            + (self.shape - 1.0) * math.log(x)
            - self.rate * x
        )


@dataclass(frozen=True)
class FixedValue:
    """A degenerate prior pinning a scalar at a positive constant."""

    value: float

    def __post_init__(self) -> None:
        if not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError("fixed value must be positive and finite")

    @property
    def mean(self) -> float:
        return self.value


ScalarPrior = Union[GammaPrior, FixedValue]


@dataclass(frozen=True)
class Hyperparams:
    """Priors for the intensity kernel, the total mass, and the penalty rate."""

    lambda_prior: GammaPrior = GammaPrior(1.1, 0.1)
    theta_prior: ScalarPrior = GammaPrior(1.1, 0.1)
    tau_prior: ScalarPrior = GammaPrior(1e11, 1e4)


class Partition:
    """A partition of items 0..n-1 stored as canonical group labels.

    Labels are integers 1..k, and label j appears in ``d`` before label
    j+1 (first-appearance order), so two equal partitions always compare
    equal as label tuples.
    """

    __slots__ = ("d", "_sizes")

    def __init__(self, d: Iterable[int]):
        d = tuple(int(l) for l in d)
        if not d:
            raise ValueError("a partition needs at least one item")
        top = 0
        for l in d:
            if l < 1 or l > top + 1:
                raise ValueError(f"labels are not canonical: {d}")
            top = max(top, l)
        object.__setattr__(self, "d", d)
        sizes = [0] * top
        for l in d:
            sizes[l - 1] += 1
        object.__setattr__(self, "_sizes", tuple(sizes))

    @classmethod
    def from_labels(cls, labels: Iterable[object]) -> "Partition":
        """Canonicalise arbitrary hashable labels by first appearance."""
        labels = list(labels)
        order: dict[object, int] = {}
        for l in labels:
            if l not in order:
                order[l] = len(order) + 1
        return cls(order[l] for l in labels)

    @property
    def n(self) -> int:
        return len(self.d)

    @property
    def k(self) -> int:
        return len(self._sizes)

    @property
    def sizes(self) -> tuple[int, ...]:
        return self._sizes

    def members(self, label: int) -> tuple[int, ...]:
        return tuple(i for i, l in enumerate(self.d) if l == label)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Partition) and self.d == other.d

    def __hash__(self) -> int:
        return hash(self.d)

    def __repr__(self) -> str:
        return f"Partition({list(self.d)})"


def _xy(p) -> tuple[float, float]:
    x, y = (p.x, p.y) if hasattr(p, "x") else (p[0], p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError(f"non-finite point ({x}, {y})")
    return float(x), float(y)


def penalty_w(e, u, tau: float) -> float:
    """exp(-tau * squared distance) damping between a centroid and a location.

    tau = 0 disables the penalty (weight 1 everywhere); tau must be
    finite and nonnegative.
    """
    if not (tau >= 0 and math.isfinite(tau)):
        raise DomainError(f"tau must be finite and nonnegative, got {tau}")
    ex, ey = _xy(e)
    ux, uy = _xy(u)
    return math.exp(-tau * ((ex - ux) ** 2 + (ey - uy) ** 2))


def shifted_poisson_logpmf(y: int, lam: float) -> float:
    """Log pmf of the count kernel: lam^(y-1) e^(-lam) / (y-1)!, y >= 1."""
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError(f"lam must be positive and finite, got {lam}")
    if y != int(y) or y < 1:
        raise DomainError(f"count must be an integer >= 1, got {y}")
    y = int(y)
    return (y - 1) * math.log(lam) - lam - math.lgamma(y)


def sample_shifted_poisson(rng: np.random.Generator, lam: float, size=None):
    """Draw counts with mean lam + 1 (i.e. 1 + Poisson(lam))."""
    if not (lam >= 0 and math.isfinite(lam)):
        raise DomainError(f"lam must be nonnegative and finite, got {lam}")
    draw = rng.poisson(lam, size)
    return 1 + draw


def eppf_logprob(partition: Partition, theta: float) -> float:
    """Log probability of a partition under the unpenalised prior.

    Equals k*log(theta) - log((theta)(theta+1)...(theta+n-1)) plus the sum
    of log (n_j - 1)! over groups; sums to 1 over all partitions of n items.
    """
    if not (theta > 0 and math.isfinite(theta)):
        raise DomainError(f"theta must be positive and finite, got {theta}")
    n, k = partition.n, partition.k
    rising = float(gammaln(theta + n) - gammaln(theta))
    return k * math.log(theta) - rising + float(sum(gammaln(s) for s in partition.sizes))


def predictive_log_weights(
    e,
    sizes: Sequence[int],
    locations: Sequence,
    new_location,
    theta: float,
    tau: float,
) -> np.ndarray:
    """Log of the unnormalised allocation weights for one item.

    ``sizes`` and ``locations`` describe the existing groups with the item
    removed; the last entry of the result is the new-group option at
    ``new_location``. Existing group j gets n_j * penalty, the new group
    gets theta * penalty.
    """
    if not (theta > 0 and math.isfinite(theta)):
        raise DomainError(f"theta must be positive and finite, got {theta}")
    if not (tau >= 0 and math.isfinite(tau)):
        raise DomainError(f"tau must be finite and nonnegative, got {tau}")
    if len(sizes) != len(locations):
        raise DomainError("sizes and locations must align")
    ex, ey = _xy(e)
    out = np.empty(len(sizes) + 1)
    for j, (n_j, u) in enumerate(zip(sizes, locations)):
        if n_j < 1:
            raise DomainError("existing group sizes must be >= 1")
        ux, uy = _xy(u)
        out[j] = math.log(n_j) - tau * ((ex - ux) ** 2 + (ey - uy) ** 2)
    ux, uy = _xy(new_location)
    out[-1] = math.log(theta) - tau * ((ex - ux) ** 2 + (ey - uy) ** 2)
    return out


def predictive_weights(
    e,
    sizes: Sequence[int],
    locations: Sequence,
    new_location,
    theta: float,
    tau: float,
) -> np.ndarray:
    """Unnormalised allocation weights on the linear scale.

    Exact for moderate penalties (tau = 0 reduces to (n_1, ..., n_k,
    theta)); extreme tau can underflow entries to 0 on this scale, so the
    sampler itself always works with :func:`predictive_log_weights`.
    """
    return np.exp(predictive_log_weights(e, sizes, locations, new_location, theta, tau))


def expected_num_groups(n: int, theta: float) -> float:
    """Prior mean number of groups among n items: sum of theta/(theta+i)."""
    if n != int(n) or n < 1:
        raise DomainError(f"n must be an integer >= 1, got {n}")
    if not (theta > 0 and math.isfinite(theta)):
        raise DomainError(f"theta must be positive and finite, got {theta}")
    i = np.arange(int(n), dtype=float)
    return float(np.sum(theta / (theta + i)))
