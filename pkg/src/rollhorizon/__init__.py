"""Rolling-horizon solver for offline pickup-and-delivery fleet scheduling.

The library decomposes a full service day into overlapping sliding windows,
solves each window's matching problem exactly on a request-trip-vehicle
graph, commits one step of every vehicle's route, and replans; finished
route prefixes are final and promised requests are never dropped.
"""

from .assignment_ilp import (
    IlpSolution,
    StrandedRequestError,
    canonical_objective,
    compute_penalty,
    solve_assignment,
)
from .corpus import CORPUS_SEEDS, corpus_config, corpus_instances, make_instance
from .engine import ConfigError, EngineError, run, run_baseline
from .instance_io import (
    Instance,
    ParseError,
    RunReport,
    adapt_benchmark,
    load_csv_requests,
    load_lilim,
    make_fleet,
    report_violations,
    write_lilim,
    write_report,
)
from .metrics import MetricsSummary, summarize, total_vmt
from .model import (
    DROPOFF,
    PICKUP,
    Location,
    Request,
    Route,
    ServiceRecord,
    SolverConfig,
    Stop,
    Vehicle,
    derive_earliest_dropoff,
    validate_config,
    validate_record,
    validate_route,
)
from .routing import (
    CandidateRoute,
    PlanStart,
    best_route_exhaustive,
    best_route_insertion,
    schedule_route,
)
from .rtv import Edge, RtvGraph, Trip, build_rtv_graph, build_rv_edges
from .simulator import SimulationError, VehicleState, simulate_step
from .travel import EuclideanTravel, MatrixTravel, TravelError, load_matrix
from .window import Batch, batch_partition_check, coverage_end, window_processing

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "CORPUS_SEEDS",
    "CandidateRoute",
    "ConfigError",
    "DROPOFF",
    "Edge",
    "EngineError",
    "EuclideanTravel",
    "IlpSolution",
    "Instance",
    "Location",
    "MatrixTravel",
    "MetricsSummary",
    "PICKUP",
    "ParseError",
    "PlanStart",
    "Request",
    "Route",
    "RtvGraph",
    "RunReport",
    "ServiceRecord",
    "SimulationError",
    "SolverConfig",
    "Stop",
    "StrandedRequestError",
    "TravelError",
    "Trip",
    "Vehicle",
    "VehicleState",
    "adapt_benchmark",
    "batch_partition_check",
    "best_route_exhaustive",
    "best_route_insertion",
    "build_rtv_graph",
    "build_rv_edges",
    "canonical_objective",
    "compute_penalty",
    "corpus_config",
    "corpus_instances",
    "coverage_end",
    "derive_earliest_dropoff",
    "load_csv_requests",
    "load_lilim",
    "load_matrix",
    "make_fleet",
    "make_instance",
    "report_violations",
    "run",
    "run_baseline",
    "schedule_route",
    "simulate_step",
    "solve_assignment",
    "summarize",
    "total_vmt",
    "validate_config",
    "validate_record",
    "validate_route",
    "window_processing",
    "write_lilim",
    "write_report",
]
