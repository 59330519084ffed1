"""Directed road network, shortest paths and demand-to-station cost matrices."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import InvalidInput, UnknownMode, UnknownNode, Unreachable

Metric = Literal["time", "distance"]


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    length_m: float


@dataclass(frozen=True)
class TravelMode:
    """Per-mode travel parameters.

    ``cost_per_mile`` and ``tau_s`` are only consumed by the accessibility
    index; routing needs the speed alone.
    """

    speed_mps: float
    cost_per_mile: float = 0.0
    tau_s: float = 900.0


@dataclass(frozen=True)
class PointOfInterest:
    node: str
    service_type: str


@dataclass(frozen=True)
class PathCost:
    time_s: float
    distance_m: float
    route: tuple[str, ...]


@dataclass(frozen=True)
class RoadNetwork:
    """Immutable directed graph with per-mode speeds.

    Undirected streets must already be expanded into two directed edges;
    the scenario loader does this for edges flagged ``bidirectional``.
    """

    nodes: frozenset[str]
    edges: tuple[Edge, ...]
    modes: dict[str, TravelMode]
    services: tuple[PointOfInterest, ...] = ()
    _adjacency: dict = field(init=False, repr=False, compare=False)
    _trees: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "services", tuple(self.services))
        adjacency: dict[str, list[tuple[str, float]]] = {n: [] for n in self.nodes}
        for e in self.edges:
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise InvalidInput(f"edge {e.src}->{e.dst} references an undeclared node")
            if not e.length_m > 0:
                raise InvalidInput(f"edge {e.src}->{e.dst} has non-positive length {e.length_m}")
            adjacency[e.src].append((e.dst, float(e.length_m)))
        for mode_id, mode in self.modes.items():
            if not mode.speed_mps > 0:
                raise InvalidInput(f"mode {mode_id!r} has non-positive speed")
        for poi in self.services:
            if poi.node not in self.nodes:
                raise InvalidInput(f"service {poi.service_type!r} at undeclared node {poi.node!r}")
        object.__setattr__(self, "_adjacency", adjacency)
        object.__setattr__(self, "_trees", {})

    def speed(self, mode: str) -> float:
        try:
            return self.modes[mode].speed_mps
        except KeyError:
            raise UnknownMode(f"mode {mode!r} has no declared speed") from None

    def require_node(self, node: str) -> None:
        if node not in self.nodes:
            raise UnknownNode(f"node {node!r} is not in the network")

    def shortest_tree(self, origin: str) -> dict[str, tuple[float, tuple[str, ...]]]:
        """Shortest distance and route from ``origin`` to every reachable node.

        Routing is by length; every mode has a single constant speed, so the
        minimum-length path is also the minimum-time path. Among equal-length
        paths the lexicographically smallest node sequence wins.
        """
        self.require_node(origin)
        tree = self._trees.get(origin)
        if tree is None:
            tree = _dijkstra(self._adjacency, origin)
            self._trees[origin] = tree
        return tree

    def with_scaled_lengths(self, factor: float) -> RoadNetwork:
        return RoadNetwork(
            self.nodes,
            tuple(Edge(e.src, e.dst, e.length_m * factor) for e in self.edges),
            dict(self.modes),
            self.services,
        )


def _dijkstra(adjacency, origin):
    settled: dict[str, tuple[float, tuple[str, ...]]] = {}
    best: dict[str, tuple[float, tuple[str, ...]]] = {origin: (0.0, (origin,))}
    heap = [(0.0, (origin,))]
    while heap:
        dist, route = heapq.heappop(heap)
        u = route[-1]
        if u in settled:
            continue
        settled[u] = (dist, route)
        for v, length in adjacency[u]:
            if v in settled:
                continue
            candidate = (dist + length, route + (v,))
            if v not in best or candidate < best[v]:
                best[v] = candidate
                heapq.heappush(heap, candidate)
    return settled


def shortest_path_cost(net: RoadNetwork, origin: str, dest: str, mode: str) -> PathCost:
    """Minimum-time path from ``origin`` to ``dest`` under ``mode``."""
    speed = net.speed(mode)
    net.require_node(dest)
    tree = net.shortest_tree(origin)
    if dest not in tree:
        raise Unreachable(f"no directed path from {origin!r} to {dest!r}")
    dist, route = tree[dest]
    return PathCost(dist / speed, dist, route)


def cost_matrix(
    net: RoadNetwork,
    demand_nodes: Sequence[str],
    station_nodes: Sequence[str],
    mode: str,
    metric: Metric = "time",
    allow_unreachable: bool = False,
) -> np.ndarray:
    """|I| x |J| matrix of travel costs from demand nodes to station nodes.

    Unreachable pairs raise :class:`Unreachable` unless ``allow_unreachable``
    is set, in which case they are stored as ``inf`` (a forbidden assignment).
    """
    if metric not in ("time", "distance"):
        raise ValueError(f"unknown metric {metric!r}")
    speed = net.speed(mode)
    for node in (*demand_nodes, *station_nodes):
        net.require_node(node)
    out = np.zeros((len(demand_nodes), len(station_nodes)))
    for i, origin in enumerate(demand_nodes):
        tree = net.shortest_tree(origin)
        for j, dest in enumerate(station_nodes):
            if dest not in tree:
                if not allow_unreachable:
                    raise Unreachable(f"no directed path from {origin!r} to {dest!r}")
                out[i, j] = np.inf
                continue
            dist = tree[dest][0]
            out[i, j] = dist / speed if metric == "time" else dist
    return out
