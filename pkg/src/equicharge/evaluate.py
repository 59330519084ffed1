"""Shortest-path trip evaluator for placement plans.

Every vehicle is identical (same battery, same starting charge, same
consumption per meter), drives the minimum-time route to its assigned
station, and recovers a fraction of traction energy while braking.
Braking is approximated by one event per intermediate route node, each
covering ``stop_window_m`` of road.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

from .errors import (
    CapacityExhausted,
    EmptyGroup,
    InconsistentSolution,
    InsufficientData,
    InvalidInput,
    NoReachableStation,
)
from .model import PlacementInstance, PlacementSolution
from .network import RoadNetwork, shortest_path_cost

OriginClass = Literal["station-adjacent", "edge"]
ROUTE_LABELS = {"station-adjacent": "A", "edge": "B"}


@dataclass(frozen=True)
class VehicleOrigin:
    node: str
    origin_class: OriginClass = "edge"


@dataclass(frozen=True)
class FleetSpec:
    vehicle_count: int
    origins: tuple[VehicleOrigin, ...]
    initial_soc: float = 0.8
    battery_capacity_wh: float = 60_000.0
    consumption_wh_per_m: float = 0.2
    regen_fraction: float = 0.3
    soc_charge_threshold: float = 0.2
    stop_window_m: float = 30.0
    mode: str = "car"

    def __post_init__(self):
        object.__setattr__(self, "origins", tuple(self.origins))
        if self.vehicle_count < 1:
            raise InvalidInput("vehicle_count must be positive")
        if not self.origins:
            raise InvalidInput("fleet needs at least one origin")
        if not 0 < self.initial_soc <= 1:
            raise InvalidInput("initial_soc must lie in (0, 1]")
        if not self.battery_capacity_wh > 0 or not self.consumption_wh_per_m > 0:
            raise InvalidInput("battery capacity and consumption rate must be positive")
        if not 0 <= self.regen_fraction < 1:
            raise InvalidInput("regen_fraction must lie in [0, 1)")
        if not 0 < self.soc_charge_threshold < 1:
            raise InvalidInput("soc_charge_threshold must lie in (0, 1)")
        if self.stop_window_m < 0:
            raise InvalidInput("stop_window_m must be nonnegative")
        for o in self.origins:
            if o.origin_class not in ROUTE_LABELS:
                raise InvalidInput(f"unknown origin class {o.origin_class!r}")

    def vehicles(self) -> list[tuple[str, VehicleOrigin]]:
        """Vehicle ids with their origins; origins are reused cyclically."""
        width = len(str(self.vehicle_count - 1))
        return [
            (f"v{k:0{width}d}", self.origins[k % len(self.origins)])
            for k in range(self.vehicle_count)
        ]


@dataclass(frozen=True)
class TripRecord:
    vehicle_id: str
    origin: str
    station_id: str
    route: tuple[str, ...]
    travel_time_s: float
    distance_m: float
    traction_energy_wh: float
    regen_energy_wh: float
    net_energy_wh: float
    final_soc: float
    origin_class: OriginClass = "edge"
    lam: float = 0.0
    battery_depleted: bool = False
    needs_charge: bool = False

    CSV_FIELDS = (
        "vehicle_id", "lambda", "origin_class", "origin", "station_id", "route",
        "travel_time_s", "distance_m", "traction_energy_wh", "regen_energy_wh",
        "net_energy_wh", "final_soc", "battery_depleted", "needs_charge",
    )

    def csv_row(self) -> list:
        return [
            self.vehicle_id, self.lam, self.origin_class, self.origin, self.station_id,
            " ".join(self.route), self.travel_time_s, self.distance_m,
            self.traction_energy_wh, self.regen_energy_wh, self.net_energy_wh,
            self.final_soc, int(self.battery_depleted), int(self.needs_charge),
        ]


def _station_nodes(inst: PlacementInstance, sol: PlacementSolution) -> list[tuple[str, str, int]]:
    by_id = {s.id: s for s in inst.stations}
    out = []
    for sid in sol.selected:
        if sid not in by_id:
            raise InconsistentSolution(f"selected station {sid!r} is not in the instance")
        st = by_id[sid]
        if st.node is None:
            raise InvalidInput(f"station {sid!r} has no network node")
        out.append((sid, st.node, st.capacity))
    return out


def assign_vehicles(
    fleet: FleetSpec, sol: PlacementSolution, net: RoadNetwork, inst: PlacementInstance
) -> dict[str, str]:
    """Send each vehicle, in id order, to the nearest selected station with a free slot.

    A station offers ``capacity`` slots per run. Distance is travel time
    from the vehicle origin; ties go to the earlier selected station.
    """
    stations = _station_nodes(inst, sol)
    slots = {sid: cap for sid, _, cap in stations}
    out: dict[str, str] = {}
    for vid, origin in fleet.vehicles():
        tree = net.shortest_tree(origin.node)
        options = sorted(
            (tree[node][0], k, sid) for k, (sid, node, _) in enumerate(stations) if node in tree
        )
        if not options:
            raise NoReachableStation(f"vehicle {vid} at {origin.node!r} reaches no selected station")
        for _, _, sid in options:
            if slots[sid] > 0:
                slots[sid] -= 1
                out[vid] = sid
                break
        else:
            raise CapacityExhausted(f"no free station slot left for vehicle {vid}")
    return out


def simulate_trip(
    net: RoadNetwork,
    origin: str,
    station_node: str,
    fleet: FleetSpec,
    vehicle_id: str = "",
    station_id: str = "",
    origin_class: OriginClass = "edge",
    lam: float = 0.0,
) -> TripRecord:
    """Drive the minimum-time route and account for traction and regen energy."""
    path = shortest_path_cost(net, origin, station_node, fleet.mode)
    distance = path.distance_m
    traction = distance * fleet.consumption_wh_per_m
    stops = max(len(path.route) - 2, 0)
    braking_m = min(stops * fleet.stop_window_m, distance)
    regen = fleet.regen_fraction * traction * (braking_m / distance) if distance > 0 else 0.0
    net_energy = traction - regen
    available = fleet.initial_soc * fleet.battery_capacity_wh
    depleted = net_energy > available
    final_soc = 0.0 if depleted else fleet.initial_soc - net_energy / fleet.battery_capacity_wh
    return TripRecord(
        vehicle_id=vehicle_id,
        origin=origin,
        station_id=station_id,
        route=path.route,
        travel_time_s=path.time_s,
        distance_m=distance,
        traction_energy_wh=traction,
        regen_energy_wh=regen,
        net_energy_wh=net_energy,
        final_soc=max(final_soc, 0.0),
        origin_class=origin_class,
        lam=lam,
        battery_depleted=depleted,
        needs_charge=final_soc < fleet.soc_charge_threshold,
    )


def simulate_fleet(
    net: RoadNetwork, inst: PlacementInstance, sol: PlacementSolution, fleet: FleetSpec
) -> list[TripRecord]:
    assignment = assign_vehicles(fleet, sol, net, inst)
    nodes = {s.id: s.node for s in inst.stations}
    records = []
    for vid, origin in fleet.vehicles():
        sid = assignment[vid]
        records.append(simulate_trip(net, origin.node, nodes[sid], fleet, vid, sid,
                                     origin.origin_class, sol.lam))
    return records


@dataclass(frozen=True)
class MetricsRow:
    lam: float | None
    route: str | None
    travel_time_s: float
    distance_m: float
    energy_wh: float
    count: int = field(default=0, compare=False)

    def format(self) -> str:
        """Table precision: 3 decimals for time and distance, 4 for energy."""
        return f"{self.travel_time_s:.3f}, {self.distance_m:.3f}, {self.energy_wh:.4f}"

    def csv_row(self) -> list[str]:
        lam = "" if self.lam is None else f"{self.lam:g}"
        return [lam, self.route or "", f"{self.travel_time_s:.3f}",
                f"{self.distance_m:.3f}", f"{self.energy_wh:.4f}"]


METRICS_HEADER = ("lambda", "route", "travel_time_s", "distance_m", "energy_wh")


def _mean(values: Iterable[float]) -> float:
    vals = list(values)
    return math.fsum(vals) / len(vals)


def aggregate_metrics(
    records: Sequence[TripRecord],
    group_by: Sequence[str] = ("lambda", "route"),
    groups: Sequence[tuple] | None = None,
) -> list[MetricsRow]:
    """Mean travel time, distance and net energy per group.

    ``group_by`` is any subset of ``("lambda", "route")``; route labels are
    ``A`` for station-adjacent origins and ``B`` for edge origins. Passing
    ``groups`` requests specific keys and raises :class:`EmptyGroup` for any
    key without records.
    """
    unknown = set(group_by) - {"lambda", "route"}
    if unknown:
        raise InvalidInput(f"cannot group by {sorted(unknown)}")
    if not records and groups is None:
        raise EmptyGroup("no trip records to aggregate")

    def key(r: TripRecord) -> tuple:
        k = []
        if "lambda" in group_by:
            k.append(r.lam)
        if "route" in group_by:
            k.append(ROUTE_LABELS[r.origin_class])
        return tuple(k)

    buckets: dict[tuple, list[TripRecord]] = {}
    for r in records:
        buckets.setdefault(key(r), []).append(r)
    wanted = sorted(buckets) if groups is None else [tuple(g) for g in groups]
    rows = []
    for g in wanted:
        members = buckets.get(g)
        if not members:
            raise EmptyGroup(f"no records for group {g}")
        labels = dict(zip([x for x in ("lambda", "route") if x in group_by], g))
        rows.append(MetricsRow(
            lam=labels.get("lambda"),
            route=labels.get("route"),
            travel_time_s=_mean(r.travel_time_s for r in members),
            distance_m=_mean(r.distance_m for r in members),
            energy_wh=_mean(r.net_energy_wh for r in members),
            count=len(members),
        ))
    return rows


@dataclass(frozen=True)
class VariabilityReport:
    std_a: float
    std_b: float
    cv_a: float
    cv_b: float
    relative_change: float
    n_a: int
    n_b: int

    def to_dict(self) -> dict:
        return {
            "candidate": {"n": self.n_a, "std_travel_time_s": self.std_a, "cv": self.cv_a},
            "baseline": {"n": self.n_b, "std_travel_time_s": self.std_b, "cv": self.cv_b},
            "relative_change": self.relative_change,
        }


def _cv(std: float, mean: float) -> float:
    if std == 0:
        return 0.0
    return std / mean if mean else math.inf


def variability_report(
    records_a: Sequence[TripRecord], records_b: Sequence[TripRecord]
) -> VariabilityReport:
    """Travel-time spread of a candidate plan (a) against a baseline (b).

    ``relative_change`` is the fractional reduction of the baseline's
    population standard deviation; positive means the candidate is more
    uniform. A zero-spread baseline gives 0 when the candidate is also
    uniform and ``-inf`` otherwise.
    """
    if len(records_a) < 2 or len(records_b) < 2:
        raise InsufficientData("variability needs at least two records per side")
    ta = [r.travel_time_s for r in records_a]
    tb = [r.travel_time_s for r in records_b]
    std_a, std_b = statistics.pstdev(ta), statistics.pstdev(tb)
    if std_b > 0:
        change = (std_b - std_a) / std_b
    else:
        change = 0.0 if std_a == 0 else -math.inf
    return VariabilityReport(
        std_a, std_b, _cv(std_a, statistics.fmean(ta)), _cv(std_b, statistics.fmean(tb)),
        change, len(ta), len(tb),
    )
