"""Distributed planning and asynchronous execution for pickup-and-delivery
with fluctuating agent speed."""

from .graph import (
    ConsistencyError,
    EnvironmentGraph,
    GraphError,
    ParseError,
    StructureError,
    ValidationReport,
    biconnected_components,
    check_component_intersections,
    classify_marginal_zone,
    load_environment,
    validate,
)
from .orientation import OrientedEnvironment, orient_main_area, verify_strong_connectivity
from .planning import Planner, replan_from, shortest_path
from .engine import InstanceResult, SimConfig, Task, TraceEvent, run_instance
from .layouts import load_bundled

__version__ = "0.1.0"
