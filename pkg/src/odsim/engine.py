"""Interleaved simulator: functional agents plus one performance agent.

One functional agent interprets each top-level module and emits requests
(blocking accesses are informative, non-blocking accesses and status checks
are queries). The performance agent owns the timing graph, the per-FIFO
access tables and the query pool. It processes requests as they arrive;
queries are answered only at quiescence, when every agent is paused or
finished, by comparing hardware cycles in the partial graph:

  * write ordinal w succeeds iff w <= depth, or the write's cycle is
    strictly after the cycle of read (w - depth);
  * read ordinal r succeeds iff its cycle is strictly after write r.

If no query can be answered because every target is still unsimulated, all
agents have already advanced past the earliest pending query's cycle, so
its target must lie in its future: it is resolved false, which always
unblocks an agent. An empty pool at quiescence with unfinished agents is a
true design deadlock.

Agents are cooperative coroutines; the scheduler can interleave them in any
order (optionally randomized by a jitter seed) and the result is the same,
because every decision is made from per-FIFO access order and graph cycles,
never from arrival order across modules. Outputs, totals, constraints and
the canonical graph dump are bit-stable across schedules.

After the run, finalization inserts capacity edges for the actual depths,
recomputes all cycles, detects capacity-starved deadlocks, and re-validates
every recorded query outcome against the final cycles; a flip is reported
as a timing inconsistency, never silently ignored.
"""
from __future__ import annotations

import logging
import random
import time
from collections import deque
from dataclasses import dataclass
from typing import Generator

from .analysis import ElaboratedDesign
from .fifo import FifoTable
from .graph import (
    DATA, FIFO_READ, FIFO_WRITE, TASK_END, TASK_START, SimGraph,
)
from .incremental import (
    CAN_READ, CAN_WRITE, NB_READ, NB_WRITE, Constraint, ConstraintLedger,
    evaluate_constraint,
)
from .model import (
    Assign, Break, Delay, EvalError, FifoEmpty, FifoFull, FifoRead,
    FifoWrite, For, If, Loop, ModuleDecl, Output, SimulationFault, Skip,
    Stmt, While, eval_expr,
)

log = logging.getLogger("odsim.engine")

STATUS_OK = "ok"
STATUS_DEADLOCK = "deadlock"
STATUS_BUDGET = "budget-exhausted"
STATUS_TIMING = "timing-inconsistency"

DEFAULT_BUDGET = 100_000_000

# Request kinds (wire contract with the performance agent)
TRACE_BLOCK = "TraceBlock"
START_TASK = "StartTask"
FIFO_READ_REQ = "FifoRead"
FIFO_WRITE_REQ = "FifoWrite"
FIFO_CAN_READ = "FifoCanRead"
FIFO_CAN_WRITE = "FifoCanWrite"
FIFO_NB_READ = "FifoNbRead"
FIFO_NB_WRITE = "FifoNbWrite"
TASK_END_REQ = "TaskEnd"

# kinds whose reply the agent must wait for
PAUSING_KINDS = frozenset(
    {FIFO_READ_REQ, FIFO_CAN_READ, FIFO_CAN_WRITE, FIFO_NB_READ, FIFO_NB_WRITE})


@dataclass
class Request:
    kind: str
    module: str
    fifo: str | None = None
    value: int | None = None
    seq_offset: int = 0
    label: str | None = None

    @property
    def is_query(self) -> bool:
        return self.kind in (FIFO_CAN_READ, FIFO_CAN_WRITE,
                             FIFO_NB_READ, FIFO_NB_WRITE)


@dataclass
class Query:
    kind: str              # constraint kind: nb_write / nb_read / can_write / can_read
    fifo: str
    ordinal: int
    anchor: int            # module's previous event node
    delta: int             # cycles from anchor to the attempt
    module: str
    seq: int               # per-module query number, for deterministic order
    value: int | None = None   # payload for nb writes


class TaskTracker:
    """Counts agents that are currently executing (not paused, not done)."""

    def __init__(self, limit: int):
        self.limit = limit
        self.active_count = 0

    def resume(self) -> None:
        self.active_count += 1
        assert 0 <= self.active_count <= self.limit

    def pause(self) -> None:
        self.active_count -= 1
        assert 0 <= self.active_count <= self.limit


class _BudgetExceeded(Exception):
    pass


_RUNNABLE, _WAITING, _FINISHED = "runnable", "waiting", "finished"


class _Agent:
    __slots__ = ("module", "pos", "gen", "state", "inbox", "outputs",
                 "pending_offset")

    def __init__(self, module: ModuleDecl, pos: int, gen: Generator):
        self.module = module
        self.pos = pos
        self.gen = gen
        self.state = _RUNNABLE
        self.inbox = None
        self.outputs: list[tuple[str, int, int]] = []
        # offset of the request being waited on, for stall accounting
        self.pending_offset = 0


@dataclass
class EngineResult:
    design_name: str
    depths: dict[str, int]
    status: str
    total_cycles: int
    outputs: dict[str, int]
    blocked: tuple[str, ...]
    constraints: list[Constraint]
    violated: list[Constraint]
    graph: SimGraph
    canonical_order: list[int]
    access_nodes: dict[str, tuple[list[int], list[int]]]
    stats: dict[str, int]
    design_class: str | None = None
    trace: list | None = None

    def _remap(self) -> dict[int, int]:
        return {old: new for new, old in enumerate(self.canonical_order)}

    def graph_dump(self) -> dict:
        return self.graph.dump(self.canonical_order, meta={
            "design": self.design_name,
            "depths": dict(sorted(self.depths.items())),
            "total_cycles": self.total_cycles,
        })

    def ledger(self) -> ConstraintLedger:
        remap = self._remap()
        remapped = [Constraint(c.kind, c.fifo, c.ordinal, c.outcome,
                               remap[c.anchor], c.delta, c.module, c.seq)
                    for c in self.constraints]
        return ConstraintLedger(remapped, dict(self.depths))

    def read_cycles(self, fifo: str) -> list[int]:
        """Final cycles of the FIFO's committed reads, in ordinal order."""
        return [self.graph.node_cycle(n) for n in self.access_nodes[fifo][1]]

    def write_cycles(self, fifo: str) -> list[int]:
        return [self.graph.node_cycle(n) for n in self.access_nodes[fifo][0]]


def _exec_program(module: ModuleDecl, counters: dict[str, int]) -> Generator:
    """Functional agent: interpret the module, yielding requests.

    The accumulated `pending` offset is the distance in cycles from the
    module's previous event to the next one; a failed non-blocking attempt
    leaves its cost in the accumulator so later attempts land later.
    """
    regs = {r: 0 for r in module.locals}
    outputs: list[tuple[str, int, int]] = []  # (name, value, events committed)
    events = 0
    pending = 0

    def ev(expr, loc):
        try:
            return eval_expr(expr, regs)
        except EvalError as exc:
            raise SimulationFault(module.name, loc, str(exc))

    def run(stmts: list[Stmt]) -> Generator:
        nonlocal pending, events
        for s in stmts:
            counters["statements"] += 1
            if isinstance(s, Assign):
                pending += s.cost
                regs[s.reg] = ev(s.value, s.loc)
            elif isinstance(s, Delay):
                pending += s.cycles
            elif isinstance(s, Skip):
                pending += s.cost
            elif isinstance(s, Output):
                pending += s.cost
                outputs.append((s.name, ev(s.value, s.loc), events))
            elif isinstance(s, FifoWrite):
                pending += s.cost
                value = ev(s.value, s.loc)
                if s.blocking:
                    yield Request(FIFO_WRITE_REQ, module.name, s.fifo,
                                  value=value, seq_offset=pending)
                    events += 1
                    pending = 0
                else:
                    ok = yield Request(FIFO_NB_WRITE, module.name, s.fifo,
                                       value=value, seq_offset=pending)
                    regs[s.flag] = 1 if ok else 0
                    if ok:
                        events += 1
                        pending = 0
            elif isinstance(s, FifoRead):
                pending += s.cost
                if s.blocking:
                    value = yield Request(FIFO_READ_REQ, module.name, s.fifo,
                                          seq_offset=pending)
                    regs[s.reg] = value
                    events += 1
                    pending = 0
                else:
                    ok, value = yield Request(FIFO_NB_READ, module.name, s.fifo,
                                              seq_offset=pending)
                    regs[s.flag] = 1 if ok else 0
                    if ok:
                        regs[s.reg] = value
                        events += 1
                        pending = 0
            elif isinstance(s, FifoEmpty):
                pending += s.cost
                readable = yield Request(FIFO_CAN_READ, module.name, s.fifo,
                                         seq_offset=pending)
                regs[s.reg] = 0 if readable else 1
            elif isinstance(s, FifoFull):
                pending += s.cost
                writable = yield Request(FIFO_CAN_WRITE, module.name, s.fifo,
                                         seq_offset=pending)
                regs[s.reg] = 0 if writable else 1
            elif isinstance(s, Break):
                return "break"
            elif isinstance(s, If):
                branch = s.then if ev(s.cond, s.loc) else s.orelse
                stop = yield from run(branch)
                if stop:
                    return stop
            elif isinstance(s, While):
                while ev(s.cond, s.loc):
                    stop = yield from run(s.body)
                    if stop:
                        break
            elif isinstance(s, For):
                for i in range(s.count):
                    regs[s.reg] = i
                    stop = yield from run(s.body)
                    if stop:
                        break
                else:
                    regs[s.reg] = s.count
            elif isinstance(s, Loop):
                while True:
                    stop = yield from run(s.body)
                    if stop:
                        break
            else:
                raise TypeError(f"unknown statement {s!r}")
        return None

    yield Request(START_TASK, module.name)
    yield from run(module.body)
    yield Request(TASK_END_REQ, module.name, seq_offset=pending)
    return outputs


class Engine:
    """One simulation run; create, then call run() once."""

    def __init__(self, ed: ElaboratedDesign, depths: dict[str, int] | None = None,
                 budget: int = DEFAULT_BUDGET, jitter_seed: int | None = None,
                 trace: bool = False):
        if budget < 1:
            raise ValueError("budget must be positive")
        self.ed = ed
        self.depths = ed.resolve_depths(depths)
        self.budget = budget
        self.rng = random.Random(jitter_seed) if jitter_seed is not None else None
        self.graph = SimGraph()
        self.tables = {name: FifoTable(name, depth)
                       for name, depth in self.depths.items()}
        self.queue: deque[Request] = deque()
        self.pool: dict[int, Query] = {}
        self._next_query_id = 0
        self.prev_node: dict[str, int] = {}
        self.node_history: dict[str, list[int]] = {}  # per-module event nodes
        self.parked_reads: dict[str, tuple[str, int]] = {}  # fifo -> (module, offset)
        self.constraints: list[Constraint] = []
        self.trace: list[Request] | None = [] if trace else None
        self.counters = {"statements": 0, "events": 0, "queries": 0,
                         "rounds": 0, "requests": 0, "forced_false": 0}
        self.module_pos = {name: i for i, name in enumerate(ed.design.top)}
        self.agents = {
            m.name: _Agent(m, i, _exec_program(m, self.counters))
            for i, m in enumerate(ed.top_modules())
        }
        self.tracker = TaskTracker(len(self.agents))
        self.tracker.active_count = len(self.agents)
        self._query_seq = {name: 0 for name in self.agents}
        self._work = 0

    # --- bookkeeping ---------------------------------------------------------

    def _charge(self) -> None:
        self._work += 1
        if self._work > self.budget:
            raise _BudgetExceeded()

    def _wake(self, module: str, reply) -> None:
        agent = self.agents[module]
        assert agent.state == _WAITING
        agent.state = _RUNNABLE
        agent.inbox = reply
        self.tracker.resume()

    def _new_event_node(self, kind: str, module: str, fifo: str | None,
                        ordinal: int | None, offset: int,
                        extra: list[tuple[int, str, int]] | None = None) -> int:
        self._charge()
        self.counters["events"] += 1
        node = self.graph.add_node(kind, module, fifo, ordinal,
                                   pred=self.prev_node[module], weight=offset,
                                   extra_preds=extra)
        self.prev_node[module] = node
        self.node_history[module].append(node)
        return node

    # --- request processing (performance agent) ------------------------------

    def process_request(self, req: Request) -> None:
        self.counters["requests"] += 1
        if self.trace is not None:
            self.trace.append(req)
        kind = req.kind
        if kind == TRACE_BLOCK:
            return
        if kind == START_TASK:
            node = self.graph.add_node(TASK_START, req.module,
                                       pred=self.graph.start, weight=0)
            self.prev_node[req.module] = node
            self.node_history[req.module] = [node]
            return
        if kind == TASK_END_REQ:
            self.graph.add_node(TASK_END, req.module,
                                pred=self.prev_node[req.module],
                                weight=req.seq_offset)
            return
        if kind == FIFO_WRITE_REQ:
            self._commit_write(req.module, req.fifo, req.value, req.seq_offset)
            return
        if kind == FIFO_READ_REQ:
            table = self.tables[req.fifo]
            if table.pending_data > 0:
                value = self._commit_read(req.module, req.fifo, req.seq_offset)
                self._wake(req.module, value)
            else:
                assert req.fifo not in self.parked_reads
                self.parked_reads[req.fifo] = (req.module, req.seq_offset)
            return
        if req.is_query:
            self._enqueue_query(req)
            return
        raise AssertionError(f"unknown request kind {kind!r}")

    def _commit_write(self, module: str, fifo: str, value: int, offset: int) -> int:
        table = self.tables[fifo]
        node = self._new_event_node(FIFO_WRITE, module, fifo,
                                    table.writes_committed + 1, offset)
        table.record_write(node, value)
        if fifo in self.parked_reads:
            reader, read_offset = self.parked_reads.pop(fifo)
            delivered = self._commit_read(reader, fifo, read_offset)
            self._wake(reader, delivered)
        return node

    def _commit_read(self, module: str, fifo: str, offset: int) -> int:
        table = self.tables[fifo]
        ordinal = table.reads_committed + 1
        write_node = table.nth_write(ordinal)
        assert write_node is not None
        node = self._new_event_node(FIFO_READ, module, fifo, ordinal, offset,
                                    extra=[(write_node, DATA, 1)])
        _, value = table.record_read(node)
        return value

    def _enqueue_query(self, req: Request) -> None:
        table = self.tables[req.fifo]
        module = req.module
        self._query_seq[module] += 1
        seq = self._query_seq[module]
        anchor = self.prev_node[module]
        if req.kind in (FIFO_NB_WRITE, FIFO_CAN_WRITE):
            kind = NB_WRITE if req.kind == FIFO_NB_WRITE else CAN_WRITE
            ordinal = table.writes_committed + 1
        else:
            kind = NB_READ if req.kind == FIFO_NB_READ else CAN_READ
            ordinal = table.reads_committed + 1
        query = Query(kind, req.fifo, ordinal, anchor, req.seq_offset,
                      module, seq, req.value)
        if kind in (NB_WRITE, CAN_WRITE) and ordinal <= table.depth:
            # unconditionally true: the first S writes always fit
            self._apply_resolution(query, True, pooled=False)
            return
        self._next_query_id += 1
        self.pool[self._next_query_id] = query

    # --- query resolution -----------------------------------------------------

    def _source_cycle(self, q: Query) -> int:
        return self.graph.node_cycle(q.anchor) + q.delta

    def resolve_query(self, q: Query) -> bool | None:
        """Table-driven resolution; None while the target is unsimulated."""
        table = self.tables[q.fifo]
        if q.kind in (NB_WRITE, CAN_WRITE):
            if q.ordinal <= table.depth:
                return True
            target = table.nth_read(q.ordinal - table.depth)
        else:
            target = table.nth_write(q.ordinal)
        if target is None:
            return None
        return self._source_cycle(q) > self.graph.node_cycle(target)

    def _apply_resolution(self, q: Query, outcome: bool, pooled: bool = True) -> None:
        if pooled:
            for qid, query in list(self.pool.items()):
                if query is q:
                    del self.pool[qid]
                    break
        self._charge()
        self.counters["queries"] += 1
        self.constraints.append(Constraint(
            q.kind, q.fifo, q.ordinal, outcome, q.anchor, q.delta, q.module, q.seq))
        if q.kind == NB_WRITE:
            if outcome:
                self._commit_write(q.module, q.fifo, q.value, q.delta)
            self._wake(q.module, outcome)
        elif q.kind == NB_READ:
            if outcome:
                value = self._commit_read(q.module, q.fifo, q.delta)
                self._wake(q.module, (True, value))
            else:
                self._wake(q.module, (False, None))
        else:  # status checks commit nothing
            self._wake(q.module, outcome)

    def _pool_order(self) -> list[Query]:
        return sorted(self.pool.values(),
                      key=lambda q: (self._source_cycle(q),
                                     self.module_pos[q.module], q.seq))

    def quiescence_step(self) -> str:
        """Resolve what the tables allow; if nothing, the earliest query by
        source cycle is resolved false; an empty pool is a design deadlock."""
        assert self.tracker.active_count == 0 and not self.queue
        self.counters["rounds"] += 1
        pending = self._pool_order()
        resolvable = []
        for q in pending:
            outcome = self.resolve_query(q)
            if outcome is not None:
                resolvable.append((q, outcome))
        if resolvable:
            for q, outcome in resolvable:
                self._apply_resolution(q, outcome)
            return "resolved"
        if pending:
            self.counters["forced_false"] += 1
            self._apply_resolution(pending[0], False)
            return "forced-false"
        return "deadlock"

    # --- scheduling -----------------------------------------------------------

    def _step_agent(self, agent: _Agent) -> None:
        inbox, agent.inbox = agent.inbox, None
        try:
            req = agent.gen.send(inbox)
        except StopIteration as stop:
            agent.state = _FINISHED
            agent.outputs = stop.value or []
            self.tracker.pause()
            return
        self.queue.append(req)
        agent.pending_offset = req.seq_offset
        if req.kind in PAUSING_KINDS:
            agent.state = _WAITING
            self.tracker.pause()

    def _drain(self, limit: int | None = None) -> None:
        count = 0
        while self.queue and (limit is None or count < limit):
            self.process_request(self.queue.popleft())
            count += 1

    def run(self) -> EngineResult:
        status = STATUS_OK
        try:
            while True:
                runnable = [a for a in self.agents.values() if a.state == _RUNNABLE]
                assert self.tracker.active_count == len(runnable)
                if runnable:
                    if self.rng is None:
                        self._step_agent(runnable[0])
                        self._drain()
                    else:
                        self._step_agent(self.rng.choice(runnable))
                        if len(self.queue) > 512 or self.rng.random() < 0.5:
                            self._drain(self.rng.randint(1, max(1, len(self.queue))))
                    continue
                self._drain()
                if any(a.state == _RUNNABLE for a in self.agents.values()):
                    continue
                if all(a.state == _FINISHED for a in self.agents.values()):
                    break
                before = self.counters["queries"]
                outcome = self.quiescence_step()
                if outcome == "deadlock":
                    status = STATUS_DEADLOCK
                    break
                # global progress: every round resolves at least one query
                assert self.counters["queries"] > before
        except _BudgetExceeded:
            status = STATUS_BUDGET
        return self._finish(status)

    # --- finalization ---------------------------------------------------------

    def _access_nodes(self) -> dict[str, tuple[list[int], list[int]]]:
        return {name: (list(t.write_nodes), list(t.read_nodes))
                for name, t in self.tables.items()}

    def _canonical_order(self) -> list[int]:
        per_module: dict[str, list[int]] = {name: [] for name in self.module_pos}
        for node_id in range(1, len(self.graph)):
            node = self.graph.node(node_id)
            per_module[node.module].append(node_id)
        order = [self.graph.start]
        for name in self.ed.design.top:
            order.extend(per_module[name])  # creation order == program order
        return order

    def _finish(self, status: str) -> EngineResult:
        started = time.perf_counter()
        access = self._access_nodes()
        outcome = self.graph.finalize(access, self.depths)
        parked = tuple(sorted(a.module.name for a in self.agents.values()
                              if a.state != _FINISHED))
        blocked: tuple[str, ...] = ()
        violated: list[Constraint] = []
        if status != STATUS_BUDGET:
            # answers given from provisional cycles must still hold under the
            # final ones; a flip voids the whole run, including any deadlock
            # evidence derived from it
            violated = self._revalidate(outcome.settled)
            if violated:
                status = STATUS_TIMING
        if status != STATUS_TIMING:
            if outcome.deadlocked:
                status = STATUS_DEADLOCK
                blocked = tuple(sorted(set(parked) | set(outcome.blocked_modules)))
            elif status == STATUS_DEADLOCK:
                blocked = parked
        total = self._total_cycles(outcome)
        log.debug("%s finished: %s, %d cycles, %d rounds, %d forced-false",
                  self.ed.name, status, total, self.counters["rounds"],
                  self.counters["forced_false"])
        constraints = sorted(
            self.constraints, key=lambda c: (self.module_pos[c.module], c.seq))
        # an output is real only if the module really reached it in hardware,
        # i.e. its anchoring event settled; later anchored writes win
        outputs: dict[str, int] = {}
        for name in self.ed.design.top:
            history = self.node_history.get(name, [])
            for out_name, value, event_index in self.agents[name].outputs:
                anchor = history[event_index] if event_index < len(history) else None
                if anchor is None or not outcome.settled or outcome.settled[anchor]:
                    outputs[out_name] = value
        self.counters["finalize_us"] = int((time.perf_counter() - started) * 1e6)
        return EngineResult(
            design_name=self.ed.name,
            depths=dict(self.depths),
            status=status,
            total_cycles=total,
            outputs=outputs,
            blocked=blocked,
            constraints=constraints,
            violated=violated,
            graph=self.graph,
            canonical_order=self._canonical_order(),
            access_nodes=access,
            stats=dict(self.counters),
            trace=self.trace,
        )

    def _total_cycles(self, outcome) -> int:
        # settled event cycles, plus cycles agents burned before stalling;
        # a stalled access burns everything up to the cycle before its attempt
        last = outcome.max_settled_cycle
        settled = outcome.settled
        for agent in self.agents.values():
            if agent.state == _WAITING and agent.module.name in self.prev_node:
                prev = self.prev_node[agent.module.name]
                if not settled or settled[prev]:
                    burned = self.graph.node_cycle(prev) + agent.pending_offset - 1
                    last = max(last, burned)
        if settled:
            # a module stuck at an event that can never settle still burned
            # the cycles between its last settled event and that attempt;
            # the first unsettled node's sequential predecessor is settled
            # by construction, so its offset gives the attempt time
            for history in self.node_history.values():
                for node_id in history:
                    if not settled[node_id]:
                        src, _, weight = self.graph.node(node_id).first_pred
                        last = max(last, self.graph.node_cycle(src) + weight - 1)
                        break
        return last + 1

    def _revalidate(self, settled: list[bool]) -> list[Constraint]:
        def node_cycle(node: int):
            return self.graph.node_cycle(node) if settled[node] else None

        def nth_write(fifo: str, ordinal: int):
            return self.tables[fifo].nth_write(ordinal)

        def nth_read(fifo: str, ordinal: int):
            return self.tables[fifo].nth_read(ordinal)

        return [c for c in self.constraints
                if evaluate_constraint(c, node_cycle, nth_write,
                                       nth_read, self.depths) != c.outcome]


def run_simulation(ed: ElaboratedDesign, depths: dict[str, int] | None = None,
                   budget: int = DEFAULT_BUDGET, jitter_seed: int | None = None,
                   trace: bool = False) -> EngineResult:
    """Simulate a design and return outputs, total cycles and artifacts.

    Deadlock and budget exhaustion are results, not exceptions; functional
    faults inside module programs raise SimulationFault.
    """
    return Engine(ed, depths, budget, jitter_seed, trace).run()
