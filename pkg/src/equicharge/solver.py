"""Exact and constructive solvers for the capacitated p-station problem.

Tie-breaking is the same everywhere: among plans whose objectives agree to
within ``TIE_RTOL``, the one with the lexicographically smallest tuple of
selected station positions wins, then the smallest per-demand station
vector. Positions refer to the order of ``inst.stations``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    GreedyStuck,
    Infeasible,
    InvalidInput,
    OracleSizeExceeded,
    SubsetLimitExceeded,
    SweepMonotonicityError,
)
from .model import PlacementInstance, PlacementSolution, make_solution, validate_solution

log = logging.getLogger(__name__)

TIE_RTOL = 1e-9
DEFAULT_SUBSET_LIMIT = 10**6
ORACLE_MAX_STATIONS = 8
ORACLE_MAX_DEMANDS = 10
DEFAULT_SWEEP = (0.0, 1.0, 2.0, 4.0, 8.0)


def _tol(*values: float) -> float:
    return TIE_RTOL * max([1.0] + [abs(v) for v in values if math.isfinite(v)])


def _better(value: float, incumbent: float) -> bool:
    """Strict improvement beyond tie tolerance."""
    return value < incumbent - _tol(value, incumbent)


def assignment_weights(inst: PlacementInstance) -> np.ndarray:
    """Per-assignment objective contribution ``d_i c_ij - lam * eps``."""
    w = inst.weights[:, None] * inst.cost - inst.lam * inst.access_matrix()
    w[~np.isfinite(inst.cost)] = np.inf
    return w


# ---------------------------------------------------------------------------
# Greedy sequential allocation
# ---------------------------------------------------------------------------


def greedy_feasible(inst: PlacementInstance) -> PlacementSolution:
    """First-fit allocation of demands, in input order, to stations.

    Each demand goes to the lowest-position station whose remaining capacity
    covers its weight; that station is then opened. The station count is not
    forced to equal p, so the returned solution carries ``meets_p``.
    """
    remaining = [s.capacity for s in inst.stations]
    opened: set[int] = set()
    assignment: list[int] = []
    for i, d in enumerate(inst.demand_points):
        for j in range(len(inst.stations)):
            if remaining[j] >= d.weight and math.isfinite(inst.cost[i, j]):
                remaining[j] -= d.weight
                opened.add(j)
                assignment.append(j)
                break
        else:
            raise GreedyStuck(
                f"demand {d.id!r} (weight {d.weight}) fits no remaining station capacity"
            )
    return make_solution(inst, sorted(opened), assignment, meets_p=len(opened) == inst.p)


# ---------------------------------------------------------------------------
# Inner assignment over a fixed set of open stations
# ---------------------------------------------------------------------------


def _lsa_value(w: np.ndarray, rows: Sequence[int], slots: Sequence[int]) -> float | None:
    """Optimal unit-demand assignment value of ``rows`` onto column ``slots``."""
    if not rows:
        return 0.0
    if len(rows) > len(slots):
        return None
    sub = w[np.ix_(rows, slots)]
    try:
        r, c = linear_sum_assignment(sub)
    except ValueError:
        return None
    if len(r) < len(rows):
        return None
    total = float(sub[r, c].sum())
    return total if math.isfinite(total) else None


def _unit_assignment(w, open_idx, caps, n):
    """Lexicographically smallest optimal assignment when every weight is 1.

    Each open station is replicated once per unit of capacity and solved as a
    rectangular linear assignment. Demands are then fixed one at a time to
    the smallest station that keeps the optimum value.
    """
    copies = {j: min(caps[j], n) for j in open_idx}

    def slots(cnt):
        return [j for j in open_idx for _ in range(cnt[j])]

    opt = _lsa_value(w, list(range(n)), slots(copies))
    if opt is None:
        return None
    fixed_sum = 0.0
    chosen: list[int] = []
    for i in range(n):
        rest = list(range(i + 1, n))
        for j in open_idx:
            if copies[j] == 0 or not math.isfinite(w[i, j]):
                continue
            copies[j] -= 1
            tail = _lsa_value(w, rest, slots(copies))
            if tail is not None and fixed_sum + w[i, j] + tail <= opt + _tol(opt):
                fixed_sum += w[i, j]
                chosen.append(j)
                break
            copies[j] += 1
        else:  # pragma: no cover - the optimum always admits an extension
            raise RuntimeError("lexicographic refinement lost the optimum")
    return fixed_sum, tuple(chosen)


def _branch_and_bound(w, open_idx, caps, demand, bound=math.inf):
    """Depth-first search over demands in input order, stations ascending.

    Only strict improvements replace the incumbent, so the first optimum
    reached (the lexicographically smallest) is the one kept. ``bound`` is an
    external incumbent value used for pruning only.
    """
    n = len(demand)
    best_val = bound
    best_vec: tuple[int, ...] | None = None
    mins = [min((w[i, j] for j in open_idx), default=math.inf) for i in range(n)]
    if any(not math.isfinite(m) for m in mins):
        return None
    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + mins[i]
    rest_demand = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        rest_demand[i] = rest_demand[i + 1] + demand[i]
    remaining = {j: caps[j] for j in open_idx}
    vec: list[int] = []

    def dfs(i: int, partial: float) -> None:
        nonlocal best_val, best_vec
        if i == n:
            if _better(partial, best_val):
                best_val, best_vec = partial, tuple(vec)
            return
        if math.isfinite(best_val) and not _better(partial + suffix[i], best_val):
            return
        if rest_demand[i] > sum(remaining.values()):
            return
        for j in open_idx:
            if remaining[j] < demand[i] or not math.isfinite(w[i, j]):
                continue
            remaining[j] -= demand[i]
            vec.append(j)
            dfs(i + 1, partial + w[i, j])
            vec.pop()
            remaining[j] += demand[i]

    dfs(0, 0.0)
    if best_vec is None:
        return None
    return best_val, best_vec


def _solve_open(inst, w, open_idx, bound=math.inf):
    caps = [s.capacity for s in inst.stations]
    demand = [d.weight for d in inst.demand_points]
    if sum(caps[j] for j in open_idx) < sum(demand):
        return None
    if all(d == 1 for d in demand):
        return _unit_assignment(w, list(open_idx), caps, len(demand))
    return _branch_and_bound(w, list(open_idx), caps, demand, bound)


def assignment_subproblem(inst: PlacementInstance, open_ids: Sequence[str]) -> dict[str, str]:
    """Optimal assignment of every demand point to the given open stations."""
    sidx = inst.station_index()
    unknown = [s for s in open_ids if s not in sidx]
    if unknown:
        raise InvalidInput(f"unknown station ids {unknown}")
    open_idx = sorted({sidx[s] for s in open_ids})
    res = _solve_open(inst, assignment_weights(inst), open_idx)
    if res is None:
        raise Infeasible(f"open stations {sorted(open_ids)} cannot absorb all demand")
    return {inst.demand_points[i].id: inst.stations[j].id for i, j in enumerate(res[1])}


# ---------------------------------------------------------------------------
# Exact solver and oracle
# ---------------------------------------------------------------------------


def exact_solve(inst: PlacementInstance, subset_limit: int = DEFAULT_SUBSET_LIMIT) -> PlacementSolution:
    """Global optimum by enumerating every p-subset of candidate stations."""
    n_subsets = math.comb(len(inst.stations), inst.p)
    if n_subsets > subset_limit:
        raise SubsetLimitExceeded(f"{n_subsets} station subsets exceed the limit {subset_limit}")
    w = assignment_weights(inst)
    best: PlacementSolution | None = None
    for subset in itertools.combinations(range(len(inst.stations)), inst.p):
        bound = best.objective if best is not None else math.inf
        res = _solve_open(inst, w, subset, bound)
        if res is None:
            continue
        cand = make_solution(inst, subset, res[1])
        if best is None or _better(cand.objective, best.objective):
            best = cand
    if best is None:
        raise Infeasible(f"no set of {inst.p} stations admits a complete assignment")
    return best


def brute_force_oracle(inst: PlacementInstance) -> PlacementSolution:
    """Exhaustive enumeration of every (station set, assignment) pair.

    Intended as a test oracle; refuses instances above 8 stations or 10
    demand points.
    """
    n, m = len(inst.demand_points), len(inst.stations)
    if m > ORACLE_MAX_STATIONS or n > ORACLE_MAX_DEMANDS:
        raise OracleSizeExceeded(f"oracle limited to {ORACLE_MAX_STATIONS} stations, "
                                 f"{ORACLE_MAX_DEMANDS} demand points (got {m}, {n})")
    w = assignment_weights(inst).tolist()
    best: PlacementSolution | None = None
    best_val = math.inf
    for subset in itertools.combinations(range(m), inst.p):
        for vec in itertools.product(subset, repeat=n):
            val = sum(w[i][j] for i, j in enumerate(vec))
            if not math.isfinite(val):
                continue
            if best is not None and not _better(val, best_val):
                continue
            cand = make_solution(inst, subset, vec)
            if validate_solution(inst, cand):
                continue
            best, best_val = cand, val
    if best is None:
        raise Infeasible("no feasible plan exists")
    return best


# ---------------------------------------------------------------------------
# Lambda sweep and Pareto filtering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParetoPoint:
    lam: float
    cost_term: float
    access_term: float
    objective: float
    solution: PlacementSolution | None
    status: str = "optimal"
    saturated: bool = False

    @property
    def ok(self) -> bool:
        return self.solution is not None


def max_access(inst: PlacementInstance, subset_limit: int = DEFAULT_SUBSET_LIMIT) -> PlacementSolution:
    """Plan maximizing the accessibility reward alone (cost ignored)."""
    cost = np.where(np.isfinite(inst.cost), 0.0, np.inf)
    return exact_solve(replace(inst, cost=cost, lam=1.0), subset_limit)


def lambda_sweep(
    inst: PlacementInstance,
    lambdas: Sequence[float] = DEFAULT_SWEEP,
    subset_limit: int = DEFAULT_SUBSET_LIMIT,
) -> list[ParetoPoint]:
    """Solve the instance at each lambda and check trade-off monotonicity.

    For exact optima, raising lambda can never lower either the cost term
    or the reward term; a violation means a solver defect and raises
    :class:`SweepMonotonicityError`. ``saturated`` marks points whose reward
    already equals the maximum attainable reward.
    """
    lambdas = [float(x) for x in lambdas]
    if any(x < 0 or not math.isfinite(x) for x in lambdas):
        raise InvalidInput("lambda values must be finite and nonnegative")
    if any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise InvalidInput("lambda values must be ascending")

    points: list[ParetoPoint] = []
    for lam in lambdas:
        try:
            sol = exact_solve(replace(inst, lam=lam), subset_limit)
        except (Infeasible, SubsetLimitExceeded) as exc:
            log.warning("lambda=%g: %s", lam, exc)
            status = "infeasible" if isinstance(exc, Infeasible) else "subset_limit"
            points.append(ParetoPoint(lam, math.nan, math.nan, math.nan, None, status))
            continue
        points.append(ParetoPoint(lam, sol.cost_term, sol.access_term, sol.objective, sol))

    solved = [pt for pt in points if pt.ok]
    if solved:
        top = max_access(inst, subset_limit).access_term
        points = [
            replace(pt, saturated=pt.ok and not _better(pt.access_term, top))
            for pt in points
        ]
    check_sweep_monotone(solved)
    return points


def check_sweep_monotone(points: Sequence[ParetoPoint]) -> None:
    """Raise if cost or reward decreases between consecutive solved points."""
    for a, b in zip(points, points[1:]):
        for term in ("cost_term", "access_term"):
            before, after = getattr(a, term), getattr(b, term)
            if _better(after, before):
                raise SweepMonotonicityError(
                    f"{term} fell from {before} to {after} between "
                    f"lambda={a.lam} and lambda={b.lam}"
                )


def pareto_filter(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Points not dominated in (minimize cost, maximize access), ordered by lambda."""
    valid = [pt for pt in points if pt.ok]

    def dominates(q: ParetoPoint, r: ParetoPoint) -> bool:
        return (q.cost_term <= r.cost_term and q.access_term >= r.access_term
                and (q.cost_term < r.cost_term or q.access_term > r.access_term))

    kept = [r for r in valid if not any(dominates(q, r) for q in valid)]
    return sorted(kept, key=lambda pt: pt.lam)
