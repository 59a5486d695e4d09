"""Decentralized coordinate-system construction for minimal broadcast-only
robots on regular lattices, plus a deterministic simulator and CLI."""

from .engine import NoiseModel, RunResult, RunSetup, SimConfig, run_once
from .errors import (
    CountInconsistentError, EpsOutOfRangeError, FullBlacklistError,
    GridswarmError, InvalidSpecError, OriginDegenerateError, PlanParseError,
)
from .geometry import neighborhood_radius, spacing_bound, spacing_feasible
from .plan import ActionPlan, load_plan, parse_plan
from .protocol import (
    ProtocolParams, classify_position, corner_border_coords,
    infer_middle_coord, pick_fresh_id, swarm_dimensions,
)
from .scenario import Scenario, apply_overrides, load_scenario
from .world import GroundTruth, LatticeSpec, expected_group_counts, generate, verify_coords

__version__ = "0.1.0"

__all__ = [
    "ActionPlan", "CountInconsistentError", "EpsOutOfRangeError",
    "FullBlacklistError", "GridswarmError", "GroundTruth", "InvalidSpecError",
    "LatticeSpec", "NoiseModel", "OriginDegenerateError", "PlanParseError",
    "ProtocolParams", "RunResult", "RunSetup", "Scenario", "SimConfig",
    "apply_overrides", "classify_position", "corner_border_coords",
    "expected_group_counts", "generate", "infer_middle_coord", "load_plan",
    "load_scenario", "neighborhood_radius", "parse_plan", "pick_fresh_id",
    "run_once", "spacing_bound", "spacing_feasible", "swarm_dimensions",
    "verify_coords",
]
