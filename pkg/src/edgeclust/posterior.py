"""Summaries of a sampled trace: modal partition, intensities, hot-spots.

The modal partition is the point estimate; intensity summaries condition
on it. Its empirical frequency is always carried along, because modal
partitions of large traces can be rare (a mode holding well under 1% of
the records is normal) and users need to see that.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UsageError
from .gibbs import Trace, TraceRecord
from .model import Partition


@dataclass(frozen=True)
class PartitionEstimate:
    """The modal partition with intensity samples from its matching records.

    ``records_matched`` is the number of trace records carrying exactly
    this partition; intensity summaries average over those records only.
    """

    partition: Partition
    frequency: float
    per_cluster_lambda_samples: tuple[tuple[float, ...], ...]
    mean_intensity: tuple[float, ...]
    records_matched: int

    def __post_init__(self) -> None:
        if not 0.0 < self.frequency <= 1.0:
            raise ValueError("frequency must be in (0, 1]")
        if self.records_matched < 1:
            raise ValueError("the modal partition must occur at least once")
        k = self.partition.k
        if len(self.per_cluster_lambda_samples) != k or len(self.mean_intensity) != k:
            raise ValueError("intensity summaries must have one entry per group")


@dataclass(frozen=True)
class HotspotSelection:
    """Groups of the modal partition whose mean intensity reaches a threshold."""

    lambda_star: float
    selected_groups: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.lambda_star < 0:
            raise ValueError("lambda_star must be nonnegative")


def _records(trace: Trace | Sequence[TraceRecord]) -> tuple[TraceRecord, ...]:
    recs = tuple(trace.records if isinstance(trace, Trace) else trace)
    if not recs:
        raise UsageError("trace has no records")
    return recs


def modal_partition(trace: Trace | Sequence[TraceRecord]) -> PartitionEstimate:
    """Most frequent partition in the trace, ties going to the earliest seen.

    Intensity samples are collected from exactly the records whose
    partition equals the mode, aligned by the canonical group labels.
    """
    recs = _records(trace)
    counts: dict[Partition, int] = {}
    first_seen: dict[Partition, int] = {}
    for idx, rec in enumerate(recs):
        counts[rec.partition] = counts.get(rec.partition, 0) + 1
        first_seen.setdefault(rec.partition, idx)
    mode = min(counts, key=lambda p: (-counts[p], first_seen[p]))
    matched = [rec for rec in recs if rec.partition == mode]
    samples = tuple(
        tuple(rec.lambdas[j] for rec in matched) for j in range(mode.k)
    )
    means = tuple(float(np.mean(s)) for s in samples)
    return PartitionEstimate(
        partition=mode,
        frequency=counts[mode] / len(recs),
        per_cluster_lambda_samples=samples,
        mean_intensity=means,
        records_matched=len(matched),
    )


def restrict(estimate: PartitionEstimate, lambda_star: float) -> HotspotSelection:
    """Keep exactly the groups with mean intensity >= lambda_star."""
    if lambda_star < 0 or not np.isfinite(lambda_star):
        raise UsageError("lambda_star must be finite and nonnegative")
    selected = tuple(
        j + 1 for j, lam in enumerate(estimate.mean_intensity) if lam >= lambda_star
    )
    return HotspotSelection(lambda_star=float(lambda_star), selected_groups=selected)


def num_groups_posterior(trace: Trace | Sequence[TraceRecord]) -> dict[int, float]:
    """Empirical distribution of the number of groups across records."""
    recs = _records(trace)
    counts: dict[int, int] = {}
    for rec in recs:
        counts[rec.partition.k] = counts.get(rec.partition.k, 0) + 1
    return {k: c / len(recs) for k, c in sorted(counts.items())}


@dataclass(frozen=True)
class RestrictedGroupCounts:
    """Distribution of per-record counts of groups at or above a threshold.

    ``mean`` is the plain average of those counts, reported alongside the
    distribution because the two answer different questions.
    """

    masses: dict[int, float]
    mean: float


def num_groups_posterior_restricted(
    trace: Trace | Sequence[TraceRecord], lambda_star: float
) -> RestrictedGroupCounts:
    """Per record, count groups with intensity >= lambda_star; summarise."""
    if lambda_star < 0 or not np.isfinite(lambda_star):
        raise UsageError("lambda_star must be finite and nonnegative")
    recs = _records(trace)
    per_record = [sum(1 for lam in rec.lambdas if lam >= lambda_star) for rec in recs]
    counts: dict[int, int] = {}
    for c in per_record:
        counts[c] = counts.get(c, 0) + 1
    masses = {c: m / len(recs) for c, m in sorted(counts.items())}
    return RestrictedGroupCounts(masses=masses, mean=float(np.mean(per_record)))


def rand_index(p: Partition, q: Partition) -> float:
    """Fraction of item pairs grouped the same way (together/apart) by p and q."""
    if p.n != q.n:
        raise UsageError(f"partitions cover {p.n} and {q.n} items")
    if p.n < 2:
        return 1.0
    dp = np.asarray(p.d)
    dq = np.asarray(q.d)
    same_p = dp[:, None] == dp[None, :]
    same_q = dq[:, None] == dq[None, :]
    iu = np.triu_indices(p.n, k=1)
    return float(np.mean(same_p[iu] == same_q[iu]))


# ---------------------------------------------------------------------------
# CSV exports


def write_cluster_summary_csv(
    path: str,
    edge_ids: Sequence[int],
    estimate: PartitionEstimate,
    selection: HotspotSelection | None = None,
) -> None:
    """Per-edge rows `edge_id,cluster,lambda_bar[,selected]`.

    The ``selected`` column appears when a hot-spot selection is given
    (1 for edges in a selected group, else 0).
    """
    d = estimate.partition.d
    if len(edge_ids) != len(d):
        raise UsageError("edge ids must align with the partition items")
    chosen = set(selection.selected_groups) if selection is not None else None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if chosen is None:
            w.writerow(["edge_id", "cluster", "lambda_bar"])
        else:
            w.writerow(["edge_id", "cluster", "lambda_bar", "selected"])
        for eid, label in zip(edge_ids, d):
            row = [eid, label, repr(estimate.mean_intensity[label - 1])]
            if chosen is not None:
                row.append(1 if label in chosen else 0)
            w.writerow(row)


def write_distribution_csv(path: str, masses: dict[int, float]) -> None:
    """Rows `k,mass` in increasing k."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "mass"])
        for k in sorted(masses):
            w.writerow([k, repr(masses[k])])


def write_lambda_samples_csv(path: str, estimate: PartitionEstimate) -> None:
    """Rows `cluster,draw,lambda` for every retained intensity sample."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cluster", "draw", "lambda"])
        for j, samples in enumerate(estimate.per_cluster_lambda_samples, start=1):
            for t, lam in enumerate(samples):
                w.writerow([j, t, repr(lam)])
