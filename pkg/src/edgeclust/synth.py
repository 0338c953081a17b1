"""Synthetic grid networks and event patterns with planted groups."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import Edge, EventPattern, LinearNetwork, Point2


@dataclass(frozen=True)
class ClusterSpec:
    """One planted group: a disc, a per-edge mean count, and a size."""

    center: Point2
    radius: float
    intensity: float
    edge_count: int

    def __post_init__(self) -> None:
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ConfigError("radius must be positive and finite")
        if not (self.intensity > 0 and math.isfinite(self.intensity)):
            raise ConfigError("intensity must be positive and finite")
        if self.edge_count < 1:
            raise ConfigError("edge_count must be >= 1")


@dataclass(frozen=True)
class Scenario:
    """A grid plus planted clusters, loadable from a flat JSON document."""

    rows: int
    cols: int
    spacing: float
    clusters: tuple[ClusterSpec, ...]

    def __post_init__(self) -> None:
        if not self.clusters:
            raise ConfigError("a scenario needs at least one cluster")


def make_grid_network(rows: int, cols: int, spacing: float) -> LinearNetwork:
    """Axis-aligned lattice: rows*(cols-1) + cols*(rows-1) edges of equal length.

    Vertex (r, c) sits at (c*spacing, r*spacing). Horizontal edges are
    numbered first, row by row, then vertical edges, so ids are stable
    for a given shape.
    """
    if rows < 2 or cols < 2:
        raise ConfigError("a grid needs rows >= 2 and cols >= 2")
    if not (spacing > 0 and math.isfinite(spacing)):
        raise ConfigError("spacing must be positive and finite")
    edges = []
    eid = 0
    for r in range(rows):
        for c in range(cols - 1):
            a = Point2(c * spacing, r * spacing)
            b = Point2((c + 1) * spacing, r * spacing)
            edges.append(Edge(eid, a, b))
            eid += 1
    for r in range(rows - 1):
        for c in range(cols):
            a = Point2(c * spacing, r * spacing)
            b = Point2(c * spacing, (r + 1) * spacing)
            edges.append(Edge(eid, a, b))
            eid += 1
    return LinearNetwork(tuple(edges))


def simulate_events(
    network: LinearNetwork, specs: list[ClusterSpec] | tuple[ClusterSpec, ...], seed: int
) -> tuple[EventPattern, dict[int, int]]:
    """Plant events on the grid; returns the pattern and edge -> spec labels.

    Each spec claims the ``edge_count`` unclaimed edges whose midpoints
    are nearest its center (all must lie within the disc, otherwise the
    spec is infeasible). Each claimed edge receives 1 + Poisson(intensity
    - 1) events placed uniformly along the segment, so per-edge counts
    have mean ``intensity`` and are always at least 1. Intensities below
    1 cannot be realised by that family and raise ConfigError.
    """
    if not specs:
        raise ConfigError("at least one cluster spec is required")
    rng = np.random.default_rng(seed)
    mids = np.array([[e.midpoint.x, e.midpoint.y] for e in network.edges])
    ids = np.array([e.id for e in network.edges])
    claimed = np.zeros(len(network.edges), dtype=bool)

    events: list[Point2] = []
    assignments: list[int] = []
    truth: dict[int, int] = {}
    for spec_idx, spec in enumerate(specs):
        if spec.intensity < 1.0:
            raise ConfigError(
                f"cluster {spec_idx}: intensity {spec.intensity} < 1 is infeasible"
            )
        dist = np.hypot(mids[:, 0] - spec.center.x, mids[:, 1] - spec.center.y)
        eligible = np.flatnonzero(~claimed & (dist <= spec.radius))
        if len(eligible) < spec.edge_count:
            raise ConfigError(
                f"cluster {spec_idx}: disc covers {len(eligible)} free edges, "
                f"needs {spec.edge_count}"
            )
        order = eligible[np.lexsort((ids[eligible], dist[eligible]))]
        for pos in order[: spec.edge_count]:
            edge = network.edges[pos]
            claimed[pos] = True
            truth[edge.id] = spec_idx
            y = int(1 + rng.poisson(spec.intensity - 1.0))
            ts = rng.random(y)
            for t in ts:
                events.append(
                    Point2(
                        edge.a.x + float(t) * (edge.b.x - edge.a.x),
                        edge.a.y + float(t) * (edge.b.y - edge.a.y),
                    )
                )
                assignments.append(edge.id)
    return EventPattern(tuple(events), tuple(assignments)), truth


# ---------------------------------------------------------------------------
# Scenario files (flat JSON)


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "rows": scenario.rows,
        "cols": scenario.cols,
        "spacing": scenario.spacing,
        "clusters": [
            {
                "center": [c.center.x, c.center.y],
                "radius": c.radius,
                "intensity": c.intensity,
                "edge_count": c.edge_count,
            }
            for c in scenario.clusters
        ],
    }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        clusters = tuple(
            ClusterSpec(
                center=Point2(float(c["center"][0]), float(c["center"][1])),
                radius=float(c["radius"]),
                intensity=float(c["intensity"]),
                edge_count=int(c["edge_count"]),
            )
            for c in doc["clusters"]
        )
        return Scenario(
            rows=int(doc["rows"]),
            cols=int(doc["cols"]),
            spacing=float(doc["spacing"]),
            clusters=clusters,
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise ConfigError(f"malformed scenario document: {exc}") from exc


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def save_scenario(path: str, scenario: Scenario) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2)
        fh.write("\n")
