"""odsim: deterministic cycle-accurate simulation of dataflow hardware.

Designs are concurrent modules connected by bounded FIFOs with blocking and
non-blocking access. Two simulators share one semantics: a brute-force
cycle-stepped oracle and a fast interleaved engine whose timing comes from
a longest-path event graph. Runs can be incrementally re-finalized under
changed FIFO depths without re-executing any module code.
"""
from .analysis import (
    Diagnostic, DesignError, ElaboratedDesign, classify_design, elaborate,
    prune_unused_checks, validate_design,
)
from .engine import (
    Engine, EngineResult, Request, TaskTracker, run_simulation,
    STATUS_BUDGET, STATUS_DEADLOCK, STATUS_OK, STATUS_TIMING,
)
from .fifo import FifoTable, FifoUnderflow
from .graph import FinalizeOutcome, SimGraph, graph_from_dump
from .incremental import (
    Constraint, ConstraintLedger, NeedsFullResimulation, incremental_run,
    re_finalize, validate_constraints,
)
from .model import (
    Design, DesignClass, FifoDecl, ModuleDecl, SimulationFault, wrap64,
)
from .oracle import OracleResult, OracleSim, oracle_run
from .parser import ParseError, parse_design, print_design

__version__ = "0.1.0"

__all__ = [
    "Constraint", "ConstraintLedger", "Design", "DesignClass", "DesignError",
    "Diagnostic", "ElaboratedDesign", "Engine", "EngineResult", "FifoDecl",
    "FifoTable", "FifoUnderflow", "FinalizeOutcome", "ModuleDecl",
    "NeedsFullResimulation", "OracleResult", "OracleSim", "ParseError",
    "Request", "STATUS_BUDGET", "STATUS_DEADLOCK", "STATUS_OK",
    "STATUS_TIMING", "SimGraph", "SimulationFault", "TaskTracker",
    "classify_design", "elaborate", "graph_from_dump", "incremental_run",
    "oracle_run", "parse_design", "print_design", "prune_unused_checks",
    "re_finalize", "run_simulation", "validate_constraints", "validate_design",
    "wrap64",
]
