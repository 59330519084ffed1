"""JSON scenario, network and solution files.

Schemas are pydantic models with ``extra="forbid"`` so misspelled keys are
rejected instead of silently ignored. ``load_*`` functions convert them to
the frozen domain objects used everywhere else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt
from pydantic import ValidationError, model_validator

from .access import AccessibilityProfile, mobility_index
from .errors import EquichargeError, InvalidInput, ParseError
from .evaluate import FleetSpec, VehicleOrigin
from .model import DemandPoint, PlacementInstance, PlacementSolution, Station
from .network import Edge, PointOfInterest, RoadNetwork, TravelMode, cost_matrix
from .solver import DEFAULT_SWEEP


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ModeModel(_Strict):
    speed_mps: PositiveFloat
    cost_per_mile: NonNegativeFloat = 0.0
    tau_s: PositiveFloat = 900.0


class EdgeModel(_Strict):
    src: str = Field(alias="from")
    dst: str = Field(alias="to")
    length_m: PositiveFloat
    bidirectional: bool = False


class ServiceModel(_Strict):
    node: str
    type: str


class NetworkModel(_Strict):
    nodes: list[str]
    edges: list[EdgeModel]
    modes: dict[str, ModeModel]
    services: list[ServiceModel] = []


class ProfileModel(_Strict):
    priorities: dict[str, NonNegativeFloat]
    modes: Optional[list[str]] = None
    normalization: dict[str, PositiveInt] = {}
    kappa: NonNegativeFloat = 0.0


class DemandModel(_Strict):
    id: str
    node: Optional[str] = None
    weight: PositiveInt = 1
    kappa: NonNegativeFloat = 0.0
    access_score: Optional[NonNegativeFloat] = None


class StationModel(_Strict):
    id: str
    capacity: PositiveInt
    node: Optional[str] = None
    access_score: Optional[NonNegativeFloat] = None


class CostModel(_Strict):
    source: Literal["explicit", "network"]
    # null entries mark forbidden assignments
    matrix: Optional[list[list[Optional[NonNegativeFloat]]]] = None
    mode: Optional[str] = None
    metric: Literal["time", "distance"] = "time"
    allow_unreachable: bool = False

    @model_validator(mode="after")
    def _matrix_iff_explicit(self):
        if (self.source == "explicit") != (self.matrix is not None):
            raise ValueError("'matrix' is required for explicit costs and only allowed there")
        return self


class InstanceModel(_Strict):
    demand_points: list[DemandModel]
    stations: list[StationModel]
    cost: CostModel
    lam: NonNegativeFloat = Field(0.0, alias="lambda")
    p: int = Field(ge=0)
    access_indexing: Literal["station", "demand"] = "station"


class OriginModel(_Strict):
    node: str
    origin_class: Literal["station-adjacent", "edge"] = "edge"


class FleetModel(_Strict):
    vehicle_count: Optional[PositiveInt] = None
    origins: Optional[list[OriginModel]] = None
    initial_soc: float = Field(0.8, gt=0, le=1)
    battery_capacity_wh: PositiveFloat = 60_000.0
    consumption_wh_per_m: PositiveFloat = 0.2
    regen_fraction: float = Field(0.3, ge=0, lt=1)
    soc_charge_threshold: float = Field(0.2, gt=0, lt=1)
    stop_window_m: NonNegativeFloat = 30.0
    mode: str = "car"

    @model_validator(mode="after")
    def _count_or_origins(self):
        if self.vehicle_count is None and not self.origins:
            raise ValueError("give 'origins', 'vehicle_count' or both")
        return self


class ScenarioModel(_Strict):
    network: Union[NetworkModel, str, None] = None
    profile: Optional[ProfileModel] = None
    instance: InstanceModel
    fleet: Optional[FleetModel] = None
    sweep: list[NonNegativeFloat] = list(DEFAULT_SWEEP)
    seed: Optional[int] = None


class SolutionModel(_Strict):
    selected: list[str]
    assignment: dict[str, str]
    lam: float = Field(0.0, alias="lambda")
    status: Optional[str] = None
    cost_term: Optional[float] = None
    access_term: Optional[float] = None
    objective: Optional[float] = None
    audit: Optional[dict] = None
    diagnostics: Optional[dict] = None


@dataclass(frozen=True)
class Scenario:
    instance: PlacementInstance
    network: RoadNetwork | None = None
    profile: AccessibilityProfile | None = None
    fleet: FleetSpec | None = None
    sweep: tuple[float, ...] = DEFAULT_SWEEP
    seed: int | None = None
    default_kappa: float = 0.0


def _read_json(path: Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _validate(model, data, path):
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        lines = [
            f"{path}: field {'.'.join(str(x) for x in err['loc']) or '<root>'}: {err['msg']}"
            for err in exc.errors()
        ]
        raise ParseError("\n".join(lines)) from None


def build_network(m: NetworkModel) -> RoadNetwork:
    edges = []
    for e in m.edges:
        edges.append(Edge(e.src, e.dst, e.length_m))
        if e.bidirectional:
            edges.append(Edge(e.dst, e.src, e.length_m))
    return RoadNetwork(
        frozenset(m.nodes),
        tuple(edges),
        {k: TravelMode(v.speed_mps, v.cost_per_mile, v.tau_s) for k, v in m.modes.items()},
        tuple(PointOfInterest(s.node, s.type) for s in m.services),
    )


def load_network(path: str | Path) -> RoadNetwork:
    path = Path(path)
    return _wrap(path, lambda: build_network(_validate(NetworkModel, _read_json(path), path)))


def _wrap(path, fn):
    try:
        return fn()
    except ParseError:
        raise
    except EquichargeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _synthesize_origins(count: int, net: RoadNetwork, station_nodes: set[str], seed: int):
    rng = np.random.default_rng(seed)
    nodes = sorted(net.nodes)
    picks = rng.integers(0, len(nodes), size=count)
    return tuple(
        VehicleOrigin(nodes[k], "station-adjacent" if nodes[k] in station_nodes else "edge")
        for k in picks
    )


def build_scenario(m: ScenarioModel, base_dir: Path, seed: int | None = None) -> Scenario:
    seed = m.seed if seed is None else seed
    net = None
    if isinstance(m.network, str):
        net = load_network(base_dir / m.network)
    elif m.network is not None:
        net = build_network(m.network)

    profile = None
    if m.profile is not None:
        if net is None:
            raise InvalidInput("an accessibility profile needs a network")
        profile = AccessibilityProfile.from_network(
            net, m.profile.priorities, m.profile.modes, m.profile.normalization
        )

    im = m.instance
    for item in (*im.demand_points, *im.stations):
        if item.node is not None and net is not None:
            net.require_node(item.node)

    def score(node, kappa, given, what):
        if given is not None:
            return float(given)
        if profile is None or node is None:
            raise InvalidInput(f"{what} has no access_score and no profile/node to compute one")
        return mobility_index(net, node, profile, kappa).epsilon

    kappa = m.profile.kappa if m.profile else 0.0
    stations = tuple(
        Station(s.id, s.capacity, score(s.node, kappa, s.access_score, f"station {s.id!r}"), s.node)
        for s in im.stations
    )
    demand_points = tuple(
        DemandPoint(
            d.id, d.weight, d.node, d.kappa,
            score(d.node, d.kappa, d.access_score, f"demand point {d.id!r}")
            if im.access_indexing == "demand" else (d.access_score or 0.0),
        )
        for d in im.demand_points
    )

    if im.cost.source == "explicit":
        rows = im.cost.matrix
        if len(rows) != len(demand_points) or any(len(r) != len(stations) for r in rows):
            raise InvalidInput(
                f"cost matrix must be {len(demand_points)} rows x {len(stations)} columns"
            )
        cost = np.array([[np.inf if v is None else v for v in r] for r in rows], dtype=float)
    else:
        if net is None:
            raise InvalidInput("network-derived costs need a network")
        missing = [x.id for x in (*demand_points, *stations) if x.node is None]
        if missing:
            raise InvalidInput(f"items without a network node: {missing}")
        mode = im.cost.mode
        if mode is None:
            if len(net.modes) != 1:
                raise InvalidInput("cost.mode is required when the network has several modes")
            mode = next(iter(net.modes))
        cost = cost_matrix(
            net, [d.node for d in demand_points], [s.node for s in stations],
            mode, im.cost.metric, im.cost.allow_unreachable,
        )

    inst = PlacementInstance(demand_points, stations, cost, im.lam, im.p, im.access_indexing)

    fleet = None
    if m.fleet is not None:
        f = m.fleet
        if f.origins:
            origins = tuple(VehicleOrigin(o.node, o.origin_class) for o in f.origins)
            if net is not None:
                for o in origins:
                    net.require_node(o.node)
        else:
            if net is None:
                raise InvalidInput("origin synthesis needs a network")
            if seed is None:
                raise InvalidInput("origin synthesis requested but no seed given")
            origins = _synthesize_origins(
                f.vehicle_count, net, {s.node for s in stations if s.node}, seed
            )
        fleet = FleetSpec(
            f.vehicle_count or len(origins), origins, f.initial_soc, f.battery_capacity_wh,
            f.consumption_wh_per_m, f.regen_fraction, f.soc_charge_threshold,
            f.stop_window_m, f.mode,
        )
        if net is not None:
            net.speed(fleet.mode)

    return Scenario(inst, net, profile, fleet, tuple(m.sweep), seed, kappa)


def load_scenario(path: str | Path, seed: int | None = None) -> Scenario:
    """Parse, validate and build a scenario file.

    Every failure (syntax, schema, dangling node reference) surfaces as
    :class:`ParseError` naming the file and, where known, the line or field.
    """
    path = Path(path)
    model = _validate(ScenarioModel, _read_json(path), path)
    return _wrap(path, lambda: build_scenario(model, path.parent, seed))


def load_solution(path: str | Path) -> PlacementSolution:
    path = Path(path)
    m = _validate(SolutionModel, _read_json(path), path)
    return PlacementSolution(
        tuple(m.selected), dict(m.assignment),
        m.cost_term or 0.0, m.access_term or 0.0, m.objective or 0.0, m.lam,
    )
