"""Collapse an assigned event pattern into per-edge counts and centroids."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import UsageError
from .geometry import EventPattern, LinearNetwork, Point2, Region


@dataclass(frozen=True)
class EdgeSummary:
    """Count and event centroid for one edge that received at least one event."""

    edge_id: int
    count: int
    centroid: Point2

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("an edge summary needs a positive count")


@dataclass(frozen=True)
class Dataset:
    """Per-edge summaries ordered by edge id, plus the study region."""

    summaries: tuple[EdgeSummary, ...]
    region: Region

    def __post_init__(self) -> None:
        if not self.summaries:
            raise ValueError("a dataset needs at least one summarised edge")
        ids = [s.edge_id for s in self.summaries]
        if ids != sorted(ids) or len(set(ids)) != len(ids):
            raise ValueError("summaries must be strictly ordered by edge id")
        for s in self.summaries:
            if not self.region.contains(s.centroid):
                raise ValueError(
                    f"centroid of edge {s.edge_id} lies outside the region"
                )

    @property
    def n(self) -> int:
        return len(self.summaries)

    @cached_property
    def counts(self) -> np.ndarray:
        return np.array([s.count for s in self.summaries], dtype=np.int64)

    @cached_property
    def centroids(self) -> np.ndarray:
        return np.array([[s.centroid.x, s.centroid.y] for s in self.summaries])

    @cached_property
    def edge_ids(self) -> tuple[int, ...]:
        return tuple(s.edge_id for s in self.summaries)


def aggregate(network: LinearNetwork, pattern: EventPattern, region: Region) -> Dataset:
    """Group events by assigned edge into counts and coordinate means.

    Requires every event to carry an assignment to an edge of ``network``
    and to lie inside ``region``; violations raise :class:`UsageError`.
    Edges without events are omitted, and summaries come out ordered by
    edge id regardless of event order.
    """
    if pattern.assignments is None:
        raise UsageError("pattern has no edge assignments; snap it first")
    if len(pattern) == 0:
        raise UsageError("pattern has no events")
    groups: dict[int, list[Point2]] = {}
    for idx, (p, eid) in enumerate(zip(pattern.events, pattern.assignments)):
        if eid not in network._by_id:
            raise UsageError(f"event {idx} assigned to unknown edge {eid}")
        if not region.contains(p):
            raise UsageError(f"event {idx} lies outside the region")
        groups.setdefault(eid, []).append(p)
    summaries = []
    for eid in sorted(groups):
        pts = groups[eid]
        cx = sum(p.x for p in pts) / len(pts)
        cy = sum(p.y for p in pts) / len(pts)
        summaries.append(EdgeSummary(eid, len(pts), Point2(cx, cy)))
    return Dataset(tuple(summaries), region)


def write_dataset_csv(path: str, dataset: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_id", "count", "cx", "cy"])
        for s in dataset.summaries:
            w.writerow([s.edge_id, s.count, repr(s.centroid.x), repr(s.centroid.y)])


def read_dataset_csv(path: str, region: Region | None = None) -> Dataset:
    """Load a dataset export.

    The CSV does not store the region; pass the original one when known,
    otherwise a box around the centroids (with a 5% margin) is used. That
    fallback is fine for summarisation, which never samples locations.
    """
    summaries = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header[:4]] != ["edge_id", "count", "cx", "cy"]:
            raise UsageError(f"{path}: expected header edge_id,count,cx,cy")
        for lineno, row in enumerate(r, start=2):
            if not row:
                continue
            try:
                summaries.append(
                    EdgeSummary(int(row[0]), int(row[1]), Point2(float(row[2]), float(row[3])))
                )
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad dataset row: {exc}") from exc
    if not summaries:
        raise UsageError(f"{path}: no rows")
    if region is None:
        from .geometry import _expand

        xs = [s.centroid.x for s in summaries]
        ys = [s.centroid.y for s in summaries]
        lo_x, hi_x = _expand(min(xs), max(xs), 0.05)
        lo_y, hi_y = _expand(min(ys), max(ys), 0.05)
        region = Region(lo_x, hi_x, lo_y, hi_y)
    return Dataset(tuple(summaries), region)
