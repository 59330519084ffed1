"""Accessibility-aware EV charging-station placement."""

__version__ = "0.1.0"

from .access import AccessibilityProfile, mem_score, mobility_index
from .model import (
    DemandPoint,
    PlacementInstance,
    PlacementSolution,
    Station,
    objective_value,
    validate_solution,
)
from .network import RoadNetwork, cost_matrix, shortest_path_cost
from .solver import brute_force_oracle, exact_solve, greedy_feasible, lambda_sweep

__all__ = [
    "AccessibilityProfile", "DemandPoint", "PlacementInstance", "PlacementSolution",
    "RoadNetwork", "Station", "brute_force_oracle", "cost_matrix", "exact_solve",
    "greedy_feasible", "lambda_sweep", "mem_score", "mobility_index", "objective_value",
    "shortest_path_cost", "validate_solution",
]
