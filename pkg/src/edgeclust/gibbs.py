"""Gibbs sampler over partitions, intensities, locations, and scalar rates.

Sweep order is fixed: memberships, then per-group intensities, then
per-group locations, then the total-mass parameter, then the penalty
rate. All weight arithmetic runs in log space and exponentiates only
after subtracting the max, so penalty rates up to ~1e9 stay finite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import truncnorm

from .aggregation import Dataset
from .errors import UsageError
from .model import FixedValue, GammaPrior, Hyperparams, Partition


@dataclass(frozen=True)
class SamplerConfig:
    """Run length, thinning, seed, and priors for one chain."""

    iterations: int = 15000
    burnin: int = 10000
    thin: int = 1
    seed: int = 0
    hyper: Hyperparams = Hyperparams()

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= self.burnin < self.iterations:
            raise ValueError("burnin must satisfy 0 <= burnin < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")


@dataclass(frozen=True)
class SamplerState:
    """Current partition and parameters of one chain.

    ``lambdas`` and ``locations`` are aligned with the partition's group
    labels (entry j belongs to label j+1). The random generator rides
    along so every update draws from one deterministic stream, and the
    priors ride along so each update can read its own conditional.
    """

    partition: Partition
    lambdas: tuple[float, ...]
    locations: tuple[tuple[float, float], ...]
    theta: float
    tau: float
    rng: np.random.Generator
    hyper: Hyperparams = Hyperparams()

    def __post_init__(self) -> None:
        k = self.partition.k
        if len(self.lambdas) != k or len(self.locations) != k:
            raise ValueError("lambdas and locations must have one entry per group")
        if not all(l > 0 and math.isfinite(l) for l in self.lambdas):
            raise ValueError("intensities must be positive and finite")
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ValueError("theta must be positive and finite")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError("tau must be positive and finite")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    partition: Partition
    lambdas: tuple[float, ...]
    locations: tuple[tuple[float, float], ...]
    theta: float
    tau: float


@dataclass(frozen=True)
class Trace:
    """Post-burnin records; ``config`` is None for traces loaded from disk."""

    records: tuple[TraceRecord, ...]
    config: SamplerConfig | None = None


def _prior_initial(prior) -> float:
    return prior.value if isinstance(prior, FixedValue) else prior.mean


def init_state(dataset: Dataset, config: SamplerConfig) -> SamplerState:
    """Start with every edge in one group.

    The single group's intensity is a draw from its prior and its
    location a uniform draw over the region (in that order); theta and
    tau start at their prior means when random.
    """
    rng = np.random.default_rng(config.seed)
    hyper = config.hyper
    lam = hyper.lambda_prior.sample(rng)
    u = dataset.region.sample(rng)
    return SamplerState(
        partition=Partition([1] * dataset.n),
        lambdas=(lam,),
        locations=((u.x, u.y),),
        theta=_prior_initial(hyper.theta_prior),
        tau=_prior_initial(hyper.tau_prior),
        rng=rng,
        hyper=hyper,
    )


# ---------------------------------------------------------------------------
# Full-conditional parameters (exposed so tests can check them against
# quadrature of the unnormalised densities)


def lambda_conditional(count_sum: int, size: int, prior: GammaPrior) -> tuple[float, float]:
    """Gamma(shape, rate) of one group's intensity given its members."""
    if size < 1 or count_sum < size:
        raise UsageError("a group needs size >= 1 and counts >= 1 each")
    return (count_sum - size + prior.shape, size + prior.rate)


def tau_conditional(sse: float, prior: GammaPrior) -> tuple[float, float]:
    """Gamma(shape, rate) of the penalty rate given squared residuals."""
    if sse < 0 or not math.isfinite(sse):
        raise UsageError("sse must be finite and nonnegative")
    return (prior.shape, prior.rate + sse)


def location_conditional(
    centroid_mean: tuple[float, float], size: int, tau: float
) -> tuple[tuple[float, float], float]:
    """Mean and per-coordinate sd of one group's location before truncation."""
    if size < 1:
        raise UsageError("a group needs size >= 1")
    if not (tau > 0 and math.isfinite(tau)):
        raise UsageError("tau must be positive and finite")
    return centroid_mean, math.sqrt(1.0 / (2.0 * tau * size))


def sum_sq_error(state: SamplerState, dataset: Dataset) -> float:
    """Sum over edges of squared distance to their group's location."""
    locs = np.asarray(state.locations)
    d = np.asarray(state.partition.d) - 1
    diff = dataset.centroids - locs[d]
    return float(np.sum(diff * diff))


def sample_truncated_normal(
    rng: np.random.Generator, mean: float, sd: float, lo: float, hi: float
) -> float:
    """Exact inverse-CDF draw from a normal restricted to [lo, hi].

    When the mean lies inside the interval the two tail probabilities
    never cancel, so a direct ndtr/ndtri inversion is safe (and much
    faster than the generic routine). A mean outside the interval puts
    both bounds in one tail; that case is delegated to scipy's ppf,
    which is built to stay accurate there.
    """
    u = rng.random()
    a = (lo - mean) / sd
    b = (hi - mean) / sd
    if a <= 0.0 <= b:
        fa = ndtr(a)
        x = mean + sd * float(ndtri(fa + u * (ndtr(b) - fa)))
    else:
        x = float(truncnorm.ppf(u, a, b, loc=mean, scale=sd))
    return min(max(x, lo), hi)


def membership_log_weights(
    y: int,
    e: np.ndarray,
    sizes: np.ndarray,
    lambdas: np.ndarray,
    locations: np.ndarray,
    new_lambda: float,
    new_location: np.ndarray,
    theta: float,
    tau: float,
) -> np.ndarray:
    """Log allocation weights for one edge: existing groups then the new option.

    Existing group j carries size_j * penalty * kernel evaluated at that
    group's (lambda, u); the last entry is theta * penalty * kernel at the
    auxiliary pair. Inputs describe the groups with the edge removed.
    """
    lgam = math.lgamma(y)
    out = np.empty(len(sizes) + 1)
    if len(sizes):
        d2 = np.sum((locations - e) ** 2, axis=1)
        out[:-1] = (
            np.log(sizes)
            - tau * d2
            + (y - 1) * np.log(lambdas)
            - lambdas
            - lgam
        )
    d2new = float(np.sum((new_location - e) ** 2))
    out[-1] = (
        math.log(theta) - tau * d2new + (y - 1) * math.log(new_lambda) - new_lambda - lgam
    )
    return out


def _sample_from_log_weights(rng: np.random.Generator, logw: np.ndarray) -> int:
    p = np.exp(logw - np.max(logw))
    cum = np.cumsum(p)
    r = rng.random() * cum[-1]
    return min(int(np.searchsorted(cum, r, side="right")), len(p) - 1)


# ---------------------------------------------------------------------------
# Updates


def update_memberships(state: SamplerState, dataset: Dataset) -> SamplerState:
    """Reassign every edge in index order, then re-canonicalise labels.

    Removing an edge that was alone in its group hands that group's
    (lambda, u) pair to the new-group option for this step; otherwise a
    fresh auxiliary pair is drawn (location first, then intensity). Using
    the vacated pair as the auxiliary is what keeps the kernel exactly
    invariant; a fresh draw there would forget the pair the reverse move
    needs to propose.
    """
    rng = state.rng
    region = dataset.region
    y = dataset.counts
    cents = dataset.centroids

    labels = [l - 1 for l in state.partition.d]
    sizes = list(state.partition.sizes)
    lams = list(state.lambdas)
    locs = [np.array(loc) for loc in state.locations]

    for i in range(len(labels)):
        c = labels[i]
        sizes[c] -= 1
        if sizes[c] == 0:
            aux_lam = lams.pop(c)
            aux_loc = locs.pop(c)
            sizes.pop(c)
            labels = [l - 1 if l > c else l for l in labels]
        else:
            p = region.sample(rng)
            aux_loc = np.array([p.x, p.y])
            aux_lam = state.hyper.lambda_prior.sample(rng)
        labels[i] = -1

        logw = membership_log_weights(
            int(y[i]),
            cents[i],
            np.array(sizes, dtype=float),
            np.array(lams),
            np.array(locs).reshape(len(locs), 2),
            aux_lam,
            np.asarray(aux_loc, dtype=float),
            state.theta,
            state.tau,
        )
        choice = _sample_from_log_weights(rng, logw)
        if choice == len(sizes):
            lams.append(aux_lam)
            locs.append(np.asarray(aux_loc, dtype=float))
            sizes.append(1)
        else:
            sizes[choice] += 1
        labels[i] = choice

    order: list[int] = []
    seen: set[int] = set()
    for l in labels:
        if l not in seen:
            seen.add(l)
            order.append(l)
    rank = {old: new for new, old in enumerate(order)}
    partition = Partition(rank[l] + 1 for l in labels)
    return replace(
        state,
        partition=partition,
        lambdas=tuple(lams[old] for old in order),
        locations=tuple((float(locs[old][0]), float(locs[old][1])) for old in order),
    )


def update_lambdas(state: SamplerState, dataset: Dataset) -> SamplerState:
    """Redraw each group's intensity from its gamma full conditional."""
    rng = state.rng
    prior = state.hyper.lambda_prior
    y = dataset.counts
    d = np.asarray(state.partition.d)
    new = []
    for j in range(1, state.partition.k + 1):
        mask = d == j
        shape, rate = lambda_conditional(int(y[mask].sum()), int(mask.sum()), prior)
        new.append(float(rng.gamma(shape, 1.0 / rate)))
    return replace(state, lambdas=tuple(new))


def update_locations(state: SamplerState, dataset: Dataset) -> SamplerState:
    """Redraw each group's location, coordinate-wise truncated to the region."""
    rng = state.rng
    region = dataset.region
    d = np.asarray(state.partition.d)
    cents = dataset.centroids
    new = []
    for j in range(1, state.partition.k + 1):
        mask = d == j
        mean = cents[mask].mean(axis=0)
        (_, _), sd = location_conditional((float(mean[0]), float(mean[1])), int(mask.sum()), state.tau)
        x = sample_truncated_normal(rng, float(mean[0]), sd, region.xmin, region.xmax)
        yloc = sample_truncated_normal(rng, float(mean[1]), sd, region.ymin, region.ymax)
        new.append((x, yloc))
    return replace(state, locations=tuple(new))


def update_theta(state: SamplerState) -> SamplerState:
    """Mixture-of-gammas update of the total mass via a beta auxiliary.

    No-op when the prior is a FixedValue (no randomness is consumed).
    """
    prior = state.hyper.theta_prior
    if isinstance(prior, FixedValue):
        return state
    rng = state.rng
    n = state.partition.n
    k = state.partition.k
    eta = float(rng.beta(state.theta + 1.0, n))
    rate = prior.rate - math.log(eta)
    odds = (prior.shape + k - 1.0) / (n * rate)
    shape = prior.shape + k if rng.random() < odds / (1.0 + odds) else prior.shape + k - 1.0
    return replace(state, theta=float(rng.gamma(shape, 1.0 / rate)))


def update_tau(state: SamplerState, dataset: Dataset) -> SamplerState:
    """Gamma update of the penalty rate from the squared residuals.

    No-op when the prior is a FixedValue (no randomness is consumed).
    """
    prior = state.hyper.tau_prior
    if isinstance(prior, FixedValue):
        return state
    rng = state.rng
    shape, rate = tau_conditional(sum_sq_error(state, dataset), prior)
    return replace(state, tau=float(rng.gamma(shape, 1.0 / rate)))


def sweep(state: SamplerState, dataset: Dataset) -> SamplerState:
    state = update_memberships(state, dataset)
    state = update_lambdas(state, dataset)
    state = update_locations(state, dataset)
    state = update_theta(state)
    state = update_tau(state, dataset)
    return state


def run(dataset: Dataset, config: SamplerConfig) -> Trace:
    """Run one chain and keep every ``thin``-th state after ``burnin``.

    The number of records is ceil((iterations - burnin) / thin).
    """
    state = init_state(dataset, config)
    records = []
    for t in range(1, config.iterations + 1):
        state = sweep(state, dataset)
        if t > config.burnin and (t - config.burnin - 1) % config.thin == 0:
            records.append(
                TraceRecord(
                    iteration=t,
                    partition=state.partition,
                    lambdas=state.lambdas,
                    locations=state.locations,
                    theta=state.theta,
                    tau=state.tau,
                )
            )
    return Trace(tuple(records), config)


# ---------------------------------------------------------------------------
# Trace persistence (one JSON object per line)


def write_trace_jsonl(path: str, trace: Trace) -> None:
    with open(path, "w") as fh:
        for rec in trace.records:
            fh.write(
                json.dumps(
                    {
                        "iter": rec.iteration,
                        "d": list(rec.partition.d),
                        "lambda": list(rec.lambdas),
                        "ux": [loc[0] for loc in rec.locations],
                        "uy": [loc[1] for loc in rec.locations],
                        "theta": rec.theta,
                        "tau": rec.tau,
                    }
                )
            )
            fh.write("\n")


def read_trace_jsonl(path: str) -> Trace:
    records = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            records.append(
                TraceRecord(
                    iteration=int(obj["iter"]),
                    partition=Partition(obj["d"]),
                    lambdas=tuple(float(v) for v in obj["lambda"]),
                    locations=tuple(
                        (float(x), float(yv)) for x, yv in zip(obj["ux"], obj["uy"])
                    ),
                    theta=float(obj["theta"]),
                    tau=float(obj["tau"]),
                )
            )
    return Trace(tuple(records), None)
