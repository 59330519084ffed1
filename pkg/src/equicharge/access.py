"""Mobility Index (per-node accessibility) and the MEM equity score."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateInput, InvalidInput
from .network import RoadNetwork


@dataclass(frozen=True)
class ModeTerms:
    mode: str
    cost_per_mile: float
    tau_s: float


@dataclass(frozen=True)
class AccessibilityProfile:
    """Modes, service priorities and normalizers feeding :func:`mobility_index`.

    ``normalization`` maps a service type to the count that turns a raw
    reachable count into a fraction. Types left out fall back to the number
    of services of that type in the network.
    """

    modes: tuple[ModeTerms, ...]
    priorities: Mapping[str, float]
    normalization: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if any(b < 0 for b in self.priorities.values()):
            raise InvalidInput("service priorities must be nonnegative")
        if not any(b > 0 for b in self.priorities.values()):
            raise InvalidInput("at least one service priority must be positive")
        for m in self.modes:
            if not m.tau_s > 0:
                raise InvalidInput(f"mode {m.mode!r}: time threshold must be positive")
            if m.cost_per_mile < 0:
                raise InvalidInput(f"mode {m.mode!r}: cost per mile must be nonnegative")
        for s, n in self.normalization.items():
            if n < 1:
                raise InvalidInput(f"normalizer for {s!r} must be at least 1")

    @classmethod
    def from_network(
        cls,
        net: RoadNetwork,
        priorities: Mapping[str, float],
        modes: Sequence[str] | None = None,
        normalization: Mapping[str, int] | None = None,
    ) -> AccessibilityProfile:
        """Profile whose per-mode cost and threshold come from the network's modes."""
        ids = sorted(net.modes) if modes is None else list(modes)
        terms = []
        for m in ids:
            net.speed(m)
            terms.append(ModeTerms(m, net.modes[m].cost_per_mile, net.modes[m].tau_s))
        return cls(tuple(terms), dict(priorities), dict(normalization or {}))

    def normalizer(self, net: RoadNetwork, service_type: str) -> int:
        if service_type in self.normalization:
            return self.normalization[service_type]
        total = sum(1 for poi in net.services if poi.service_type == service_type)
        return max(total, 1)


@dataclass(frozen=True)
class MobilityIndexResult:
    node: str
    epsilon: float
    per_mode_terms: dict[str, float]


def reachable_service_count(
    net: RoadNetwork, node: str, mode: str, tau: float, service_type: str
) -> int:
    """Services of ``service_type`` reachable from ``node`` within ``tau`` seconds."""
    if not tau > 0:
        raise InvalidInput("time threshold must be positive")
    speed = net.speed(mode)
    tree = net.shortest_tree(node)
    count = 0
    for poi in net.services:
        if poi.service_type != service_type or poi.node not in tree:
            continue
        if tree[poi.node][0] / speed <= tau:
            count += 1
    return count


def normalized_sigma(count: int, normalizer: int) -> float:
    if normalizer < 1 or count < 0:
        raise InvalidInput(f"invalid count/normalizer pair ({count}, {normalizer})")
    return min(count / normalizer, 1.0)


def mobility_index(
    net: RoadNetwork, node: str, profile: AccessibilityProfile, kappa: float = 0.0
) -> MobilityIndexResult:
    """Accessibility of ``node``.

    Each mode contributes ``exp(-kappa * c_m)`` times the priority-weighted
    sum of reachable-service fractions within that mode's time threshold.
    """
    if kappa < 0:
        raise InvalidInput("price sensitivity must be nonnegative")
    net.require_node(node)
    terms: dict[str, float] = {}
    for m in profile.modes:
        inner = 0.0
        for s, beta in sorted(profile.priorities.items()):
            count = reachable_service_count(net, node, m.mode, m.tau_s, s)
            inner += beta * normalized_sigma(count, profile.normalizer(net, s))
        terms[m.mode] = math.exp(-kappa * m.cost_per_mile) * inner
    return MobilityIndexResult(node, math.fsum(terms.values()), terms)


def gini(values: Sequence[float]) -> float:
    """Mean-absolute-difference Gini coefficient, computed from sorted values."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n == 0:
        raise DegenerateInput("Gini of an empty population is undefined")
    if np.any(x < 0):
        raise InvalidInput("Gini requires nonnegative values")
    total = x.sum()
    if total == 0:
        raise DegenerateInput("Gini is undefined when every value is zero")
    # sum_{a,b} |x_a - x_b| == 2 * sum_k (2k - n - 1) x_(k), k = 1..n
    ranks = np.arange(1, n + 1)
    pair_sum = 2.0 * np.sum((2 * ranks - n - 1) * x)
    return float(pair_sum / (2.0 * n * total))


def mem_score(epsilons: Sequence[float]) -> float:
    """Equity of a population of mobility indices: 1 - Gini, in [0, 1]."""
    return min(max(1.0 - gini(epsilons), 0.0), 1.0)
