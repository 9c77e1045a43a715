"""Constraint ledger and incremental re-simulation under new FIFO depths.

Every resolved query is recorded as a constraint: which access was checked,
against which depth-dependent target, and what the answer was. Changing
depths only moves capacity edges, so the timing graph can be re-finalized
without executing any module code; if every constraint still resolves the
same way, the old functional behavior (and outputs) remain valid and only
the cycle numbers change. If any constraint flips, the modules would have
behaved differently and a full re-run is required.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Callable

from .graph import SimGraph, access_nodes_from_dump, graph_from_dump

if TYPE_CHECKING:  # pragma: no cover
    from .engine import EngineResult

NB_WRITE = "nb_write"
NB_READ = "nb_read"
CAN_WRITE = "can_write"
CAN_READ = "can_read"
_WRITE_KINDS = (NB_WRITE, CAN_WRITE)


@dataclass
class Constraint:
    """Outcome of one resolved query.

    The source is stored as (anchor node, cycle delta): the attempt time is
    fixed by the module's preceding event plus the statement offsets, and
    must be recomputed that way because a committed non-blocking write node
    itself picks up capacity predecessors during re-finalization. The target
    ordinal is depth-dependent (read `ordinal - S` for writes) and is
    re-derived from S at evaluation time.
    """
    kind: str
    fifo: str
    ordinal: int
    outcome: bool
    anchor: int
    delta: int
    module: str
    seq: int

    def to_json(self) -> dict:
        return {"kind": self.kind, "fifo": self.fifo, "ordinal": self.ordinal,
                "outcome": self.outcome, "anchor": self.anchor,
                "delta": self.delta, "module": self.module, "seq": self.seq}

    @staticmethod
    def from_json(data: dict) -> "Constraint":
        return Constraint(data["kind"], data["fifo"], data["ordinal"],
                          data["outcome"], data["anchor"], data["delta"],
                          data["module"], data["seq"])


@dataclass
class ConstraintLedger:
    constraints: list[Constraint]
    depths: dict[str, int]

    def to_json(self) -> dict:
        return {"schema": "odsim-ledger/1",
                "depths": dict(sorted(self.depths.items())),
                "constraints": [c.to_json() for c in self.constraints]}

    @staticmethod
    def from_json(data: dict) -> "ConstraintLedger":
        return ConstraintLedger([Constraint.from_json(c) for c in data["constraints"]],
                                dict(data["depths"]))


@dataclass
class NeedsFullResimulation:
    """Signal that the graph cannot be reused; carries what flipped."""
    violated: list[Constraint]
    reason: str = "constraint-violated"


def evaluate_constraint(c: Constraint, node_cycle: Callable[[int], int | None],
                        nth_write: Callable[[str, int], int | None],
                        nth_read: Callable[[str, int], int | None],
                        depths: dict[str, int]) -> bool | None:
    """Re-derive the query's answer from cycles and depths.

    A missing or never-settling target means the required access never
    happens, so the query could not have succeeded. A never-settling
    source anchor means the attempt itself never happens: the recorded
    outcome is void (None), which callers treat as a violation.
    """
    source_base = node_cycle(c.anchor)
    if source_base is None:
        return None
    source = source_base + c.delta
    if c.kind in _WRITE_KINDS:
        depth = depths[c.fifo]
        if c.ordinal <= depth:
            return True
        target = nth_read(c.fifo, c.ordinal - depth)
    else:
        target = nth_write(c.fifo, c.ordinal)
    if target is None:
        return False
    target_cycle = node_cycle(target)
    if target_cycle is None:
        return False
    return source > target_cycle


def re_finalize(graph_dump: dict, new_depths: dict[str, int]):
    """Rebuild the dumped graph, drop the old capacity edges, insert edges
    for the new depths and recompute all longest paths.

    Returns (graph, access_nodes, outcome); outcome.total_cycles is None
    when the new depths can never be satisfied (stall cycle or a starved
    write), which callers must treat as non-reusable.
    """
    graph = graph_from_dump(graph_dump, drop_capacity=True)
    access = access_nodes_from_dump(graph_dump)
    for fifo in access:
        if fifo not in new_depths:
            raise KeyError(f"no depth given for FIFO {fifo!r}")
    outcome = graph.finalize(access, new_depths)
    return graph, access, outcome


def validate_constraints(ledger: ConstraintLedger, graph: SimGraph,
                         access: dict[str, tuple[list[int], list[int]]],
                         new_depths: dict[str, int]) -> list[Constraint]:
    """Return the constraints whose outcome flips under the new cycles."""

    def nth(kind: int):
        def lookup(fifo: str, ordinal: int):
            nodes = access.get(fifo, ([], []))[kind]
            return nodes[ordinal - 1] if ordinal <= len(nodes) else None
        return lookup

    nth_write, nth_read = nth(0), nth(1)
    violated = []
    for c in ledger.constraints:
        if evaluate_constraint(c, graph.node_cycle, nth_write, nth_read,
                               new_depths) != c.outcome:
            violated.append(c)
    return violated


def incremental_run(prior: "EngineResult", new_depths: dict[str, int] | None):
    """Reuse a completed run's graph for new depths when its constraints
    allow it; otherwise report that a full re-simulation is needed.

    The reuse path never executes module code: outputs are carried over
    unchanged and only the cycle numbers are recomputed.
    """
    from .engine import EngineResult  # deferred, avoids a module cycle

    if prior.status != "ok":
        raise ValueError("incremental re-simulation requires a prior 'ok' run")
    depths = dict(prior.depths)
    for name, depth in (new_depths or {}).items():
        if name not in depths:
            raise KeyError(f"unknown FIFO {name!r}")
        if depth < 1:
            raise ValueError(f"depth for {name!r} must be at least 1")
        depths[name] = depth

    # work on a copy so the prior run's cycles stay untouched
    graph = prior.graph.copy()
    access = prior.access_nodes
    outcome = graph.finalize(access, depths)
    if outcome.deadlocked:
        return NeedsFullResimulation([], reason="capacity-deadlock")
    ledger = ConstraintLedger(prior.constraints, dict(prior.depths))
    violated = validate_constraints(ledger, graph, access, depths)
    if violated:
        return NeedsFullResimulation([replace(c) for c in violated])
    return EngineResult(
        design_name=prior.design_name,
        design_class=prior.design_class,
        depths=depths,
        status="ok",
        total_cycles=outcome.total_cycles,
        outputs=dict(prior.outputs),
        blocked=(),
        constraints=[replace(c) for c in prior.constraints],
        violated=[],
        graph=graph,
        canonical_order=list(prior.canonical_order),
        access_nodes=access,
        stats={"statements": 0, "events": 0, "queries": len(prior.constraints),
               "rounds": 0, "requests": 0},
        trace=None,
    )
