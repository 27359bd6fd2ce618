"""Mutual assistance community toolkit.

Taxonomy-based service matchmaking, a deadline-aware coordination center with
peer-participant pairing, and a deterministic cell-grid simulator with a
parameter-sweep harness.
"""

from .matching import (
    MatchVerdict,
    ServiceAdvertisement,
    ServiceForm,
    ServiceRequest,
    match_request,
    rank_matches,
)
from .registry import Answer, CoordinationCenter, Event, EventKind, replay_scenario
from .simulation import Grid, MetricsReport, SimParams, StepEvents, init_grid, run, step
from .sweep import SweepRow, SweepSpec, run_sweep
from .taxonomy import MatchDegree, Taxonomy, load_taxonomy, load_taxonomy_file

__all__ = [
    "Answer",
    "CoordinationCenter",
    "Event",
    "EventKind",
    "Grid",
    "MatchDegree",
    "MatchVerdict",
    "MetricsReport",
    "ServiceAdvertisement",
    "ServiceForm",
    "ServiceRequest",
    "SimParams",
    "StepEvents",
    "SweepRow",
    "SweepSpec",
    "Taxonomy",
    "init_grid",
    "load_taxonomy",
    "load_taxonomy_file",
    "match_request",
    "rank_matches",
    "replay_scenario",
    "run",
    "run_sweep",
    "step",
]

__version__ = "0.1.0"
