"""Placement instances, solutions and constraint checking.

Constraint labels used in violation reports::

    (1) each demand point is assigned to exactly one station
    (2) exactly p stations are selected
    (3) demand is assigned only to selected stations
    (4) assigned demand weight at a station does not exceed its capacity
    (5) selected capacity covers total demand
    (6) assignment and selection are binary (structural here; reported for
        unknown ids and forbidden pairs)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import InconsistentSolution, InvalidInput

AccessIndexing = Literal["station", "demand"]

UNIFORM_TOL = 1e-12


@dataclass(frozen=True)
class DemandPoint:
    id: str
    weight: int = 1
    node: str | None = None
    kappa: float = 0.0
    access_score: float = 0.0


@dataclass(frozen=True)
class Station:
    id: str
    capacity: int
    access_score: float = 0.0
    node: str | None = None


@dataclass(frozen=True)
class PlacementInstance:
    """Capacitated p-station placement problem.

    ``cost[i, j]`` may be ``inf`` to forbid assigning demand ``i`` to
    station ``j``. ``access_indexing`` selects which side carries the
    accessibility score in the reward term: ``"station"`` (default) uses
    the chosen station's score, ``"demand"`` the demand point's score.
    """

    demand_points: tuple[DemandPoint, ...]
    stations: tuple[Station, ...]
    cost: np.ndarray
    lam: float = 0.0
    p: int = 1
    access_indexing: AccessIndexing = "station"

    def __post_init__(self):
        object.__setattr__(self, "demand_points", tuple(self.demand_points))
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "lam", float(self.lam))
        cost = np.array(self.cost, dtype=float)
        if cost.size == 0:
            cost = cost.reshape(len(self.demand_points), len(self.stations))
        cost.setflags(write=False)
        object.__setattr__(self, "cost", cost)
        if cost.shape != (len(self.demand_points), len(self.stations)):
            raise InvalidInput(
                f"cost matrix shape {cost.shape} does not match "
                f"{len(self.demand_points)} demand points x {len(self.stations)} stations"
            )
        if np.isnan(cost).any() or (cost < 0).any():
            raise InvalidInput("costs must be nonnegative")
        for kind, items in (("demand point", self.demand_points), ("station", self.stations)):
            ids = [x.id for x in items]
            if len(set(ids)) != len(ids):
                raise InvalidInput(f"duplicate {kind} ids")
        for d in self.demand_points:
            if int(d.weight) != d.weight or d.weight < 1:
                raise InvalidInput(f"demand {d.id!r}: weight must be a positive integer")
            if d.kappa < 0 or d.access_score < 0:
                raise InvalidInput(f"demand {d.id!r}: kappa and access score must be nonnegative")
        for s in self.stations:
            if int(s.capacity) != s.capacity or s.capacity < 1:
                raise InvalidInput(f"station {s.id!r}: capacity must be a positive integer")
            if s.access_score < 0:
                raise InvalidInput(f"station {s.id!r}: access score must be nonnegative")
        if self.lam < 0 or not math.isfinite(self.lam):
            raise InvalidInput("lambda must be finite and nonnegative")
        if int(self.p) != self.p or not 0 <= self.p <= len(self.stations):
            raise InvalidInput(f"p={self.p} must be an integer in [0, {len(self.stations)}]")
        if self.access_indexing not in ("station", "demand"):
            raise InvalidInput(f"unknown access indexing {self.access_indexing!r}")

    @property
    def weights(self) -> np.ndarray:
        return np.array([d.weight for d in self.demand_points], dtype=float)

    @property
    def capacities(self) -> np.ndarray:
        return np.array([s.capacity for s in self.stations], dtype=float)

    def access_matrix(self) -> np.ndarray:
        """Reward earned by assigning demand ``i`` to station ``j``."""
        n, m = self.cost.shape
        if self.access_indexing == "station":
            row = np.array([s.access_score for s in self.stations], dtype=float)
            return np.broadcast_to(row, (n, m))
        col = np.array([d.access_score for d in self.demand_points], dtype=float)
        return np.broadcast_to(col[:, None], (n, m))

    def station_index(self) -> dict[str, int]:
        return {s.id: j for j, s in enumerate(self.stations)}

    def demand_index(self) -> dict[str, int]:
        return {d.id: i for i, d in enumerate(self.demand_points)}


@dataclass(frozen=True)
class PlacementSolution:
    """Selected stations and the demand-to-station assignment.

    ``selected`` is ordered by station position in the instance.
    ``meets_p`` is False only for constructions (the greedy one) that do not
    enforce the station-count equality.
    """

    selected: tuple[str, ...]
    assignment: Mapping[str, str]
    cost_term: float = 0.0
    access_term: float = 0.0
    objective: float = 0.0
    lam: float = 0.0
    meets_p: bool = True

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "assignment": dict(self.assignment),
            "lambda": self.lam,
            "cost_term": self.cost_term,
            "access_term": self.access_term,
            "objective": self.objective,
        }


@dataclass(frozen=True)
class Objective:
    cost_term: float
    access_term: float
    objective: float


@dataclass(frozen=True)
class Violation:
    constraint: str
    detail: str
    ids: tuple[str, ...] = ()
    quantity: float | None = None

    def to_dict(self) -> dict:
        return {"constraint": self.constraint, "detail": self.detail,
                "ids": list(self.ids), "quantity": self.quantity}


def _resolve(inst: PlacementInstance, sol: PlacementSolution):
    sidx, didx = inst.station_index(), inst.demand_index()
    unknown = [s for s in sol.selected if s not in sidx]
    unknown += [k for k in sol.assignment if k not in didx]
    unknown += [v for v in sol.assignment.values() if v not in sidx]
    if unknown:
        raise InconsistentSolution(f"unknown ids in solution: {sorted(set(unknown))}")
    return sidx, didx


def _evaluate(inst: PlacementInstance, pairs: Sequence[tuple[int, int]]) -> Objective:
    access = inst.access_matrix()
    cost_term = math.fsum(inst.demand_points[i].weight * inst.cost[i, j] for i, j in pairs)
    access_term = math.fsum(access[i, j] for i, j in pairs)
    return Objective(cost_term, access_term, cost_term - inst.lam * access_term)


def objective_value(inst: PlacementInstance, sol: PlacementSolution) -> Objective:
    """Decompose the objective into travel cost and accessibility reward.

    On any solution satisfying (3) the bilinear reward ``eps * x_ij * y_j``
    equals ``eps * x_ij``, so the reward is summed over assignments.
    """
    sidx, didx = _resolve(inst, sol)
    chosen = set(sol.selected)
    stray = sorted({s for s in sol.assignment.values() if s not in chosen})
    if stray:
        raise InconsistentSolution(f"assignments to non-selected stations: {stray}")
    pairs = sorted((didx[d], sidx[s]) for d, s in sol.assignment.items())
    return _evaluate(inst, pairs)


def make_solution(
    inst: PlacementInstance,
    selected: Sequence[int],
    assignment: Sequence[int],
    meets_p: bool = True,
) -> PlacementSolution:
    """Build a solution from station positions and a per-demand station vector."""
    obj = _evaluate(inst, list(enumerate(assignment)))
    return PlacementSolution(
        selected=tuple(inst.stations[j].id for j in sorted(selected)),
        assignment={inst.demand_points[i].id: inst.stations[j].id for i, j in enumerate(assignment)},
        cost_term=obj.cost_term,
        access_term=obj.access_term,
        objective=obj.objective,
        lam=inst.lam,
        meets_p=meets_p,
    )


def validate_solution(inst: PlacementInstance, sol: PlacementSolution) -> list[Violation]:
    """Every constraint the solution breaks; an empty list means feasible."""
    sidx, didx = _resolve(inst, sol)
    out: list[Violation] = []
    if len(set(sol.selected)) != len(sol.selected):
        out.append(Violation("6", "station selected more than once", tuple(sol.selected)))
    chosen = set(sol.selected)

    missing = [d.id for d in inst.demand_points if d.id not in sol.assignment]
    if missing:
        out.append(Violation("1", "demand points without a station", tuple(missing), len(missing)))

    if len(chosen) != inst.p:
        out.append(Violation("2", f"{len(chosen)} stations selected, p={inst.p}",
                             tuple(sorted(chosen, key=sidx.get)), len(chosen)))

    load = [0.0] * len(inst.stations)
    for d, s in sol.assignment.items():
        i, j = didx[d], sidx[s]
        if s not in chosen:
            out.append(Violation("3", f"demand {d} assigned to non-selected station {s}", (d, s)))
        if not math.isfinite(inst.cost[i, j]):
            out.append(Violation("6", f"demand {d} assigned to forbidden station {s}", (d, s)))
        load[j] += inst.demand_points[i].weight

    for j, st in enumerate(inst.stations):
        limit = st.capacity if st.id in chosen else 0
        if load[j] > limit:
            out.append(Violation("4", f"station {st.id} load {load[j]:g} exceeds {limit}",
                                 (st.id,), load[j] - limit))

    demand = sum(d.weight for d in inst.demand_points)
    supply = sum(inst.stations[sidx[s]].capacity for s in chosen)
    if supply < demand:
        out.append(Violation("5", f"selected capacity {supply} below total demand {demand}",
                             (), demand - supply))
    return out


@dataclass(frozen=True)
class FeasibilityReport:
    total_demand: int
    total_capacity: int
    feasible_hint: bool
    top_p_capacity: int
    top_p_covers: bool


def check_feasibility_condition(inst: PlacementInstance) -> FeasibilityReport:
    """Aggregate supply-versus-demand check.

    ``feasible_hint`` compares all candidate capacity with total demand.
    Since exactly p stations open, ``top_p_covers`` additionally checks the
    p largest capacities; it is necessary, not sufficient, for feasibility.
    """
    demand = sum(d.weight for d in inst.demand_points)
    caps = sorted((s.capacity for s in inst.stations), reverse=True)
    top = sum(caps[: inst.p])
    return FeasibilityReport(demand, sum(caps), sum(caps) >= demand, top, top >= demand)


@dataclass(frozen=True)
class UniformReduction:
    uniform: bool
    offset: float | None = None
    score: float | None = None


def detect_uniform_reduction(inst: PlacementInstance) -> UniformReduction:
    """Detect equal accessibility scores, which turn the reward into a constant.

    With one common score every feasible plan earns ``score * |I|``, so the
    objective is the cost term minus ``offset = lam * score * |I|``.
    """
    items = inst.stations if inst.access_indexing == "station" else inst.demand_points
    scores = [x.access_score for x in items]
    if not scores:
        return UniformReduction(True, 0.0, 0.0)
    if max(scores) - min(scores) > UNIFORM_TOL:
        return UniformReduction(False)
    score = scores[0]
    return UniformReduction(True, inst.lam * score * len(inst.demand_points), score)


@dataclass(frozen=True)
class DegeneracyReport:
    """Outcome of the demand-indexed constancy diagnostic."""

    constant: bool
    access_term: float
    message: str


def demand_indexing_diagnostic(inst: PlacementInstance) -> DegeneracyReport:
    """Explain whether the reward term can influence the optimum.

    Under demand indexing every feasible plan assigns each demand point once,
    so the reward is always the sum of demand scores and lambda has no
    effect on which plan is optimal.
    """
    if inst.access_indexing == "demand":
        total = math.fsum(d.access_score for d in inst.demand_points)
        return DegeneracyReport(
            True, total,
            f"demand-indexed reward is constant ({total:g}) on every feasible plan; "
            "lambda shifts the objective but never changes the optimal plan",
        )
    uni = detect_uniform_reduction(inst)
    if uni.uniform:
        return DegeneracyReport(
            True, (uni.score or 0.0) * len(inst.demand_points),
            "all station scores are equal; the reward is a constant offset",
        )
    return DegeneracyReport(False, math.nan, "station-indexed reward varies with the plan")


def station_scores(inst: PlacementInstance, scores: Mapping[str, float] | Sequence[float]):
    """Copy of ``inst`` with station access scores replaced."""
    if isinstance(scores, Mapping):
        vals = [scores[s.id] for s in inst.stations]
    else:
        vals = list(scores)
    stations = tuple(
        Station(s.id, s.capacity, float(v), s.node) for s, v in zip(inst.stations, vals)
    )
    return replace(inst, stations=stations)


__all__ = [
    "AccessIndexing", "DemandPoint", "Station", "PlacementInstance", "PlacementSolution",
    "Objective", "Violation", "FeasibilityReport", "UniformReduction", "DegeneracyReport",
    "objective_value", "validate_solution", "check_feasibility_condition",
    "detect_uniform_reduction", "demand_indexing_diagnostic", "make_solution",
    "station_scores",
]
