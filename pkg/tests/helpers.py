"""Instance generators and independent oracles shared by the test modules.

Nothing here calls the code paths it is used to check: paths are enumerated
by plain DFS, all-pairs distances come from Floyd-Warshall, the Gini
coefficient is the literal double sum, and plans are enumerated without
touching the solver.
"""

import itertools
import math
import random

import numpy as np

from equicharge.model import DemandPoint, PlacementInstance, Station
from equicharge.network import Edge, PointOfInterest, RoadNetwork, TravelMode

LAMBDAS = (0.0, 0.5, 1.0, 4.0)


def diamond(speed=10.0):
    return RoadNetwork(
        frozenset("ABCD"),
        (Edge("A", "B", 100), Edge("B", "D", 100), Edge("A", "C", 150), Edge("C", "D", 40)),
        {"car": TravelMode(speed, 0.0, 15.0)},
        (PointOfInterest("B", "shop"), PointOfInterest("D", "shop")),
    )


def e1(lam=1.0, **kw):
    return PlacementInstance(
        (DemandPoint("i1"), DemandPoint("i2")),
        (Station("j1", 2, 1.0), Station("j2", 2, 4.0)),
        [[1, 3], [1, 3]],
        lam=lam,
        p=1,
        **kw,
    )


def random_instance(rng, max_demands=6, max_stations=5, unit=False, lam=None,
                    eps=None, indexing="station", d_range=(1, 3), s_range=(1, 6)):
    n = rng.randint(1, max_demands)
    m = rng.randint(1, max_stations)
    demands = tuple(
        DemandPoint(f"i{k}", 1 if unit else rng.randint(*d_range),
                    access_score=float(rng.randint(0, 10)))
        for k in range(n)
    )
    stations = tuple(
        Station(f"j{k}", rng.randint(*s_range),
                float(eps if eps is not None else rng.randint(0, 10)))
        for k in range(m)
    )
    cost = [[float(rng.randint(0, 20)) for _ in range(m)] for _ in range(n)]
    return PlacementInstance(
        demands, stations, cost,
        lam=rng.choice(LAMBDAS) if lam is None else lam,
        p=rng.randint(1, m),
        access_indexing=indexing,
    )


def enumerate_plans(inst):
    """Every feasible (subset, assignment) with its cost and reward terms.

    Works directly from the problem data: exactly p stations, every demand
    assigned to an open station, weighted load within capacity.
    """
    n, m = len(inst.demand_points), len(inst.stations)
    d = [x.weight for x in inst.demand_points]
    out = []
    for subset in itertools.combinations(range(m), inst.p):
        for vec in itertools.product(subset, repeat=n):
            load = [0] * m
            for i, j in enumerate(vec):
                load[j] += d[i]
            if any(load[j] > inst.stations[j].capacity for j in range(m)):
                continue
            if any(not math.isfinite(inst.cost[i, j]) for i, j in enumerate(vec)):
                continue
            cost = sum(d[i] * inst.cost[i, j] for i, j in enumerate(vec))
            if inst.access_indexing == "station":
                reward = sum(inst.stations[j].access_score for j in vec)
            else:
                reward = sum(inst.demand_points[i].access_score for i in range(n))
            out.append((subset, vec, cost, reward))
    return out


def ids(inst, subset):
    return tuple(inst.stations[j].id for j in subset)


def all_simple_paths(edges, src, dst):
    adj = {}
    for e in edges:
        adj.setdefault(e.src, []).append((e.dst, e.length_m))
    stack = [(src, (src,), 0.0)]
    while stack:
        u, path, dist = stack.pop()
        if u == dst:
            yield path, dist
            continue
        for v, w in adj.get(u, []):
            if v not in path:
                stack.append((v, path + (v,), dist + w))


def floyd_warshall(net):
    nodes = sorted(net.nodes)
    k = {n: i for i, n in enumerate(nodes)}
    dist = np.full((len(nodes), len(nodes)), np.inf)
    np.fill_diagonal(dist, 0.0)
    for e in net.edges:
        dist[k[e.src], k[e.dst]] = min(dist[k[e.src], k[e.dst]], e.length_m)
    for mid in range(len(nodes)):
        dist = np.minimum(dist, dist[:, [mid]] + dist[[mid], :])
    return nodes, k, dist


def direct_mobility_index(net, node, modes, priorities, norms, kappa):
    """Definition evaluated from Floyd-Warshall distances."""
    nodes, k, dist = floyd_warshall(net)
    total = 0.0
    for mode_id, cpm, tau in modes:
        speed = net.modes[mode_id].speed_mps
        inner = 0.0
        for s, beta in priorities.items():
            count = sum(
                1 for poi in net.services
                if poi.service_type == s and dist[k[node], k[poi.node]] / speed <= tau
            )
            inner += beta * min(count / norms[s], 1.0)
        total += math.exp(-kappa * cpm) * inner
    return total


def gini_pairwise(values):
    n = len(values)
    mu = sum(values) / n
    return sum(abs(a - b) for a in values for b in values) / (2 * n * n * mu)


def random_network(rng: random.Random, n_nodes=None, n_services=None, service_types=("a", "b", "c")):
    n_nodes = n_nodes or rng.randint(2, 9)
    nodes = [f"n{k}" for k in range(n_nodes)]
    edges = []
    for k in range(n_nodes - 1):  # spanning path keeps most pairs reachable
        w = float(rng.randint(10, 300))
        edges += [Edge(nodes[k], nodes[k + 1], w), Edge(nodes[k + 1], nodes[k], w)]
    for _ in range(rng.randint(0, 2 * n_nodes)):
        a, b = rng.sample(nodes, 2)
        edges.append(Edge(a, b, float(rng.randint(10, 300))))
    modes = {
        "car": TravelMode(rng.uniform(5, 15), rng.uniform(0, 3), rng.uniform(10, 120)),
        "walk": TravelMode(rng.uniform(1, 2), rng.uniform(0, 1), rng.uniform(60, 600)),
    }
    services = tuple(
        PointOfInterest(rng.choice(nodes), rng.choice(service_types))
        for _ in range(n_services if n_services is not None else rng.randint(0, 8))
    )
    return RoadNetwork(frozenset(nodes), tuple(edges), modes, services)
