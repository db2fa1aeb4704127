"""Bounded model checking of QoS properties over communicating finite-state machines."""

from .model import Action, Machine, QosAttributeDecl, QosSpec, System, validate_system
from .semantics import (
    Configuration,
    Run,
    enumerate_runs,
    initial_configuration,
    is_accepting,
    trace_of,
)
from .logic import Checker, Verdict
from .smt import SolverError, SolverHandle

__all__ = [
    "Action",
    "Machine",
    "QosAttributeDecl",
    "QosSpec",
    "System",
    "validate_system",
    "Configuration",
    "Run",
    "enumerate_runs",
    "initial_configuration",
    "is_accepting",
    "trace_of",
    "Checker",
    "Verdict",
    "SolverError",
    "SolverHandle",
]
