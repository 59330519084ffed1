"""Acceptance gate: one test per criterion, each reported as PASS/FAIL in the summary."""

import filecmp
import math
import random
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import equicharge
from equicharge.access import AccessibilityProfile, mem_score, mobility_index
from equicharge.cli import main
from equicharge.errors import Infeasible
from equicharge.evaluate import (
    FleetSpec,
    TripRecord,
    VehicleOrigin,
    aggregate_metrics,
    simulate_fleet,
    simulate_trip,
    variability_report,
)
from equicharge.model import (
    demand_indexing_diagnostic,
    detect_uniform_reduction,
    station_scores,
    validate_solution,
)
from equicharge.scenario import load_scenario
from equicharge.solver import brute_force_oracle, exact_solve, greedy_feasible, lambda_sweep

from helpers import (
    direct_mobility_index,
    e1,
    enumerate_plans,
    gini_pairwise,
    ids,
    random_instance,
    random_network,
)

DEMO = Path(equicharge.__file__).parent / "data" / "demo_scenario.json"
SWEEP = (0.0, 1.0, 2.0, 4.0, 8.0)


def feasible_instances(rng, count, **kw):
    out = []
    while len(out) < count:
        inst = random_instance(rng, **kw)
        if enumerate_plans(inst):
            out.append(inst)
    return out


def close(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@pytest.mark.criterion(1, "exact solver matches brute-force oracle on 200+ instances")
def test_oracle_equivalence():
    rng = random.Random(20240101)
    start = time.perf_counter()
    checked = 0
    while checked < 220:
        inst = random_instance(rng)
        try:
            oracle = brute_force_oracle(inst)
        except Infeasible:
            with pytest.raises(Infeasible):
                exact_solve(inst)
            continue
        sol = exact_solve(inst)
        assert close(sol.objective, oracle.objective), (sol, oracle)
        assert sol.selected == oracle.selected
        checked += 1
    elapsed = time.perf_counter() - start
    print(f"criterion 1: {checked} feasible instances in {elapsed:.2f} s")
    assert elapsed < 60


@pytest.mark.criterion(2, "greedy feasibility when C >= D, oracle infeasibility when C < D")
def test_supply_covers_demand():
    rng = random.Random(7)
    covered = short = 0
    while covered < 120 or short < 120:
        inst = random_instance(rng, max_demands=6, max_stations=4, unit=True, s_range=(1, 2))
        supply = sum(s.capacity for s in inst.stations)
        if supply >= len(inst.demand_points):
            sol = greedy_feasible(inst)
            broken = {v.constraint for v in validate_solution(inst, sol)}
            assert not broken & {"1", "3", "4"}, broken
            covered += 1
        else:
            with pytest.raises(Infeasible):
                brute_force_oracle(inst)
            short += 1
    print(f"criterion 2: {covered} covered, {short} short instances")


def crossover_threshold(plans):
    """Largest lambda at which a higher-reward plan can still lose on cost."""
    t = 0.0
    for _, _, c1, r1 in plans:
        for _, _, c2, r2 in plans:
            if r2 > r1:
                t = max(t, (c2 - c1) / (r2 - r1))
    return t


def reward_first_selection(inst, plans):
    top = max(r for *_, r in plans)
    cheapest = min(c for *_, c, r in plans if r == top)
    return ids(inst, min((s, v) for s, v, c, r in plans if r == top and c == cheapest)[0])


def check_sweep(inst):
    plans = enumerate_plans(inst)
    t = crossover_threshold(plans)
    lams = sorted(set(SWEEP) | {t + 1.0})
    points = lambda_sweep(inst, lams)
    for a, b in zip(points, points[1:]):
        assert a.cost_term <= b.cost_term + 1e-9
        assert a.access_term <= b.access_term + 1e-9
    zeroed = exact_solve(station_scores(replace(inst, lam=0.0), [0.0] * len(inst.stations)))
    assert points[0].solution.selected == zeroed.selected
    assert points[0].cost_term == zeroed.cost_term
    high = points[lams.index(t + 1.0)]
    assert high.solution.selected == reward_first_selection(inst, plans)
    return t, points


@pytest.mark.criterion(3, "lambda sweep monotone with correct zero and high-lambda limits")
def test_sweep_monotonicity():
    t, points = check_sweep(e1())
    assert t == pytest.approx(2 / 3)
    assert [p.solution.selected for p in points if p.lam in (0.0, 1.0)] == [("j1",), ("j2",)]
    assert exact_solve(e1(lam=2 / 3 - 1e-6)).selected == ("j1",)
    assert exact_solve(e1(lam=2 / 3 + 1e-6)).selected == ("j2",)
    for inst in feasible_instances(random.Random(3), 50):
        check_sweep(inst)


@pytest.mark.criterion(4, "equal access scores reduce the reward to a constant offset")
def test_uniform_reduction():
    rng = random.Random(4)
    for _ in range(50):
        score = float(rng.randint(0, 10))
        [inst] = feasible_instances(rng, 1, eps=score)
        base = exact_solve(replace(inst, lam=0.0))
        for lam in SWEEP:
            scaled = replace(inst, lam=lam)
            sol = exact_solve(scaled)
            assert sol.selected == base.selected
            rep = detect_uniform_reduction(scaled)
            assert rep.uniform
            assert rep.offset == lam * score * len(inst.demand_points)
            assert close(sol.objective, base.objective - rep.offset)


@pytest.mark.criterion(5, "demand-indexed reward is constant and flagged by the diagnostic")
def test_demand_indexing_degeneracy():
    rng = random.Random(5)
    for inst in feasible_instances(rng, 25, indexing="demand"):
        total = math.fsum(d.access_score for d in inst.demand_points)
        assert {r for *_, r in enumerate_plans(inst)} == {total}
        selections = {exact_solve(replace(inst, lam=lam)).selected for lam in SWEEP}
        assert len(selections) == 1
        rep = demand_indexing_diagnostic(inst)
        assert rep.constant and rep.access_term == total


@pytest.mark.criterion(6, "mobility index matches direct evaluation; MEM checks")
def test_mobility_index_and_mem():
    rng = random.Random(6)
    for _ in range(100):
        net = random_network(rng, n_services=rng.randint(1, 10))
        prio = {s: rng.uniform(0.1, 5) for s in "abc"}
        prof = AccessibilityProfile.from_network(net, prio)
        norms = {s: prof.normalizer(net, s) for s in prio}
        modes = [(m.mode, m.cost_per_mile, m.tau_s) for m in prof.modes]
        kappa = rng.uniform(0, 2)
        for node in sorted(net.nodes):
            got = mobility_index(net, node, prof, kappa).epsilon
            want = direct_mobility_index(net, node, modes, prio, norms, kappa)
            assert abs(got - want) <= 1e-12 * max(1.0, abs(want))

    assert mem_score([1, 1, 1, 1]) == 1
    assert mem_score([0, 1]) == 0.5
    vrng = np.random.default_rng(6)
    for _ in range(100):
        v = vrng.uniform(0, 100, size=vrng.integers(1, 30)).tolist()
        base = mem_score(v)
        assert base == pytest.approx(1 - gini_pairwise(v), abs=1e-12)
        k = float(vrng.uniform(0.01, 100))
        assert mem_score([k * x for x in v]) == pytest.approx(base, abs=1e-12)
        assert mem_score(list(vrng.permutation(v))) == pytest.approx(base, abs=1e-12)


@pytest.mark.criterion(7, "trip energy and state-of-charge properties on 500 trips")
def test_energy_properties():
    rng = random.Random(8)
    trips = 0
    while trips < 500:
        net = random_network(rng)
        nodes = sorted(net.nodes)
        a, b = rng.choice(nodes), rng.choice(nodes)
        if b not in net.shortest_tree(a):
            continue
        f = FleetSpec(1, (VehicleOrigin(a),), initial_soc=rng.uniform(0.01, 1),
                      battery_capacity_wh=rng.uniform(20, 2000),
                      consumption_wh_per_m=rng.uniform(0.05, 0.5),
                      regen_fraction=rng.choice([0.0, rng.uniform(0, 0.99)]),
                      stop_window_m=rng.uniform(0, 300))
        r = simulate_trip(net, a, b, f)
        assert 0 <= r.regen_energy_wh <= r.traction_energy_wh
        assert r.net_energy_wh >= 0
        assert 0 <= r.final_soc <= f.initial_soc
        if f.regen_fraction == 0:
            assert r.net_energy_wh == r.distance_m * f.consumption_wh_per_m
        trips += 1


@pytest.mark.criterion(8, "metrics row renders in the table's fixed precision")
def test_table_format():
    rec = TripRecord("v0", "o", "s", ("o",), 300.0, 100.25, 29.311, 0.0, 29.311, 0.8,
                     "station-adjacent", 0.0)
    [row] = aggregate_metrics([rec])
    assert (row.lam, row.route) == (0.0, "A")
    assert row.format() == "300.000, 100.250, 29.3110"


@pytest.mark.criterion(9, "demo: accessibility-aware plans reduce travel-time spread")
def test_demo_variability():
    scn = load_scenario(DEMO)
    runs = {}
    for lam in SWEEP:
        sol = exact_solve(replace(scn.instance, lam=lam))
        runs[lam] = simulate_fleet(scn.network, scn.instance, sol, scn.fleet)
    for lam in SWEEP[1:]:
        rep = variability_report(runs[lam], runs[0.0])
        print(f"criterion 9: lambda={lam:g} std {rep.std_a:.3f} vs {rep.std_b:.3f} "
              f"(relative change {rep.relative_change:.4f})")
        assert rep.std_a < rep.std_b


def run_everything(out: Path):
    d = str(DEMO)
    assert main(["solve", "--scenario", d, "--lambda", "2", "--out-dir", str(out)]) == 0
    assert main(["solve", "--scenario", d, "--lambda", "0", "--out-dir", str(out / "base")]) == 0
    for fmt in ("csv", "json"):
        sub = out / fmt
        assert main(["sweep", "--scenario", d, "--out-dir", str(sub), "--format", fmt]) == 0
        assert main(["evaluate", "--scenario", d, "--solution", str(out / "solution.json"),
                     "--baseline", str(out / "base" / "solution.json"),
                     "--out-dir", str(sub), "--format", fmt]) == 0
        assert main(["access", "--scenario", d, "--out-dir", str(sub), "--format", fmt]) == 0
    assert main(["validate", "--scenario", d, "--solution", str(out / "solution.json"),
                 "--out-dir", str(out)]) == 0


def tree_files(root: Path):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())


@pytest.mark.criterion(10, "CLI outputs are byte-identical across repeated runs")
def test_cli_determinism(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    run_everything(first)
    run_everything(second)
    files = tree_files(first)
    assert files == tree_files(second)
    assert len(files) >= 12
    for rel in files:
        assert filecmp.cmp(first / rel, second / rel, shallow=False), rel
