"""Linear-network primitives: points, edges, regions, events, and snapping."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import SnapError, UsageError

# An event whose distance to an edge is below this fraction of the edge
# length is treated as lying on the edge, so points constructed exactly on
# a segment survive a tolerance of 0 despite float rounding.
_ON_EDGE_RTOL = 1e-9


@dataclass(frozen=True)
class Point2:
    """A point in the plane. Coordinates must be finite."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")


@dataclass(frozen=True)
class Edge:
    """A straight segment with a unique integer id and distinct endpoints."""

    id: int
    a: Point2
    b: Point2

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError(f"edge {self.id} has zero length")

    @property
    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)

    @property
    def midpoint(self) -> Point2:
        return Point2((self.a.x + self.b.x) / 2.0, (self.a.y + self.b.y) / 2.0)


@dataclass(frozen=True)
class LinearNetwork:
    """A nonempty collection of edges with unique ids, held sorted by id."""

    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        if not self.edges:
            raise ValueError("a network needs at least one edge")
        ids = [e.id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise ValueError("edge ids must be unique")
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: e.id)))

    def __len__(self) -> int:
        return len(self.edges)

    def edge(self, edge_id: int) -> Edge:
        try:
            return self._by_id[edge_id]
        except KeyError:
            raise UsageError(f"no edge with id {edge_id}") from None

    @cached_property
    def _by_id(self) -> dict[int, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def _segment_arrays(self) -> tuple[np.ndarray, ...]:
        # endpoints packed for vectorised snapping; order matches self.edges
        ax = np.array([e.a.x for e in self.edges])
        ay = np.array([e.a.y for e in self.edges])
        dx = np.array([e.b.x - e.a.x for e in self.edges])
        dy = np.array([e.b.y - e.a.y for e in self.edges])
        lengths = np.hypot(dx, dy)
        return ax, ay, dx, dy, lengths


@dataclass(frozen=True)
class Region:
    """An axis-aligned rectangle with positive area."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, (self.xmin, self.xmax, self.ymin, self.ymax))):
            raise ValueError("region bounds must be finite")
        if self.xmin >= self.xmax or self.ymin >= self.ymax:
            raise ValueError("region must have positive width and height")

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def contains(self, p: Point2) -> bool:
        return self.xmin <= p.x <= self.xmax and self.ymin <= p.y <= self.ymax

    def sample(self, rng: np.random.Generator) -> Point2:
        """Draw a uniform point; x is drawn before y."""
        x = rng.uniform(self.xmin, self.xmax)
        y = rng.uniform(self.ymin, self.ymax)
        return Point2(float(x), float(y))


@dataclass(frozen=True)
class EventPattern:
    """Observed event locations, optionally assigned to edges by id."""

    events: tuple[Point2, ...]
    assignments: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.assignments is not None and len(self.assignments) != len(self.events):
            raise ValueError("assignments must match events one to one")

    def __len__(self) -> int:
        return len(self.events)


def bounding_region(network: LinearNetwork, margin: float = 0.05) -> Region:
    """Tight bounding box of all edge endpoints, expanded by ``margin``.

    Each side is widened by ``margin`` times its own length. A side with
    zero extent (all endpoints collinear along an axis) is widened by a
    small epsilon scaled to the coordinate magnitude so the region keeps
    positive area.
    """
    if margin < 0 or not math.isfinite(margin):
        raise ValueError("margin must be finite and nonnegative")
    xs = [p.x for e in network.edges for p in (e.a, e.b)]
    ys = [p.y for e in network.edges for p in (e.a, e.b)]
    lo_x, hi_x = _expand(min(xs), max(xs), margin)
    lo_y, hi_y = _expand(min(ys), max(ys), margin)
    return Region(lo_x, hi_x, lo_y, hi_y)


def _expand(lo: float, hi: float, margin: float) -> tuple[float, float]:
    span = hi - lo
    if span == 0.0:
        eps = 1e-9 * max(1.0, abs(lo), abs(hi))
        return lo - eps, hi + eps
    pad = margin * span
    return lo - pad, hi + pad


def snap_events(
    network: LinearNetwork,
    events: EventPattern | Sequence[Point2],
    tolerance: float = math.inf,
) -> EventPattern:
    """Assign every event to its nearest edge and move it onto that edge.

    Each event is orthogonally projected onto every segment (projection
    parameter clamped to [0, 1]); the nearest edge wins, with exact
    distance ties broken by the smallest edge id. An event farther than
    ``tolerance`` from every edge raises :class:`SnapError` carrying the
    event's index.

    Snapping an already snapped pattern with the same tolerance is a
    no-op up to float round-off.
    """
    if tolerance < 0 or math.isnan(tolerance):
        raise ValueError("tolerance must be nonnegative")
    pts = events.events if isinstance(events, EventPattern) else tuple(events)
    ax, ay, dx, dy, lengths = network._segment_arrays
    seg_len_sq = dx * dx + dy * dy

    snapped: list[Point2] = []
    assigned: list[int] = []
    for idx, p in enumerate(pts):
        t = ((p.x - ax) * dx + (p.y - ay) * dy) / seg_len_sq
        np.clip(t, 0.0, 1.0, out=t)
        px = ax + t * dx
        py = ay + t * dy
        dist = np.hypot(px - p.x, py - p.y)
        j = int(np.argmin(dist))  # ids are sorted, so ties pick the smallest id
        d = float(dist[j])
        if d > tolerance and d > _ON_EDGE_RTOL * float(lengths[j]):
            raise SnapError(idx, d, tolerance)
        snapped.append(Point2(float(px[j]), float(py[j])))
        assigned.append(network.edges[j].id)
    return EventPattern(tuple(snapped), tuple(assigned))


# ---------------------------------------------------------------------------
# CSV interfaces


def write_edges_csv(path: str, network: LinearNetwork) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_id", "x1", "y1", "x2", "y2"])
        for e in network.edges:
            w.writerow([e.id, repr(e.a.x), repr(e.a.y), repr(e.b.x), repr(e.b.y)])


def read_edges_csv(path: str) -> LinearNetwork:
    edges = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header[:5]] != ["edge_id", "x1", "y1", "x2", "y2"]:
            raise UsageError(f"{path}: expected header edge_id,x1,y1,x2,y2")
        for lineno, row in enumerate(r, start=2):
            if not row:
                continue
            try:
                eid, x1, y1, x2, y2 = row[:5]
                edges.append(
                    Edge(int(eid), Point2(float(x1), float(y1)), Point2(float(x2), float(y2)))
                )
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad edge row: {exc}") from exc
    if not edges:
        raise UsageError(f"{path}: no edges")
    return LinearNetwork(tuple(edges))


def write_events_csv(path: str, pattern: EventPattern) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if pattern.assignments is None:
            w.writerow(["x", "y"])
            for p in pattern.events:
                w.writerow([repr(p.x), repr(p.y)])
        else:
            w.writerow(["x", "y", "edge_id"])
            for p, eid in zip(pattern.events, pattern.assignments):
                w.writerow([repr(p.x), repr(p.y), eid])


def read_events_csv(path: str) -> EventPattern:
    pts: list[Point2] = []
    assigned: list[int] = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header[:2]] != ["x", "y"]:
            raise UsageError(f"{path}: expected header x,y[,edge_id]")
        has_ids = len(header) >= 3 and header[2].strip() == "edge_id"
        for lineno, row in enumerate(r, start=2):
            if not row:
                continue
            try:
                pts.append(Point2(float(row[0]), float(row[1])))
                if has_ids:
                    assigned.append(int(row[2]))
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad event row: {exc}") from exc
    return EventPattern(tuple(pts), tuple(assigned) if assigned else None)
