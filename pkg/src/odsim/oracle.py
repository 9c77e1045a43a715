"""Brute-force reference simulator.

Advances a single global clock one cycle at a time and executes every
module in lockstep against registered FIFO state:

  * all operations observe the FIFO counts as of the start of the cycle;
  * successful reads and writes commit together at the end of the cycle;
  * data written in cycle c becomes readable in cycle c+1, and a slot
    freed by a read in cycle c becomes writable in cycle c+1.

Deliberately sequential and unclever; it is the ground truth the graph
engine is checked against.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Generator, Iterable

from .analysis import ElaboratedDesign
from .model import (
    Assign, Break, Delay, EvalError, FifoEmpty, FifoFull, FifoRead,
    FifoWrite, For, If, Loop, ModuleDecl, Output, SimulationFault, Skip,
    Stmt, While, eval_expr,
)

OK = "ok"
DEADLOCK = "deadlock"
BUDGET = "budget-exhausted"


@dataclass
class OracleResult:
    outputs: dict[str, int]
    total_cycles: int
    status: str
    blocked: tuple[str, ...] = ()


# Micro-ops yielded by the module interpreter, one per occupied cycle.
_BUSY = ("busy",)


def _micro_ops(module: ModuleDecl) -> Generator:
    """Yield one micro-op per busy cycle; FIFO ops receive their result."""
    regs = {r: 0 for r in module.locals}

    def ev(expr, loc):
        try:
            return eval_expr(expr, regs)
        except EvalError as e:
            raise SimulationFault(module.name, loc, str(e))

    def run(stmts: list[Stmt]) -> Generator:
        for s in stmts:
            if isinstance(s, Assign):
                for _ in range(s.cost):
                    yield _BUSY
                regs[s.reg] = ev(s.value, s.loc)
            elif isinstance(s, Delay):
                for _ in range(s.cycles):
                    yield _BUSY
            elif isinstance(s, Skip):
                for _ in range(s.cost):
                    yield _BUSY
            elif isinstance(s, Output):
                for _ in range(s.cost - 1):
                    yield _BUSY
                value = ev(s.value, s.loc)
                yield ("output", s.name, value)
            elif isinstance(s, FifoWrite):
                for _ in range(s.cost - 1):
                    yield _BUSY
                value = ev(s.value, s.loc)
                if s.blocking:
                    yield ("write", s.fifo, value)
                else:
                    done = yield ("nb_write", s.fifo, value)
                    regs[s.flag] = 1 if done else 0
            elif isinstance(s, FifoRead):
                for _ in range(s.cost - 1):
                    yield _BUSY
                if s.blocking:
                    regs[s.reg] = yield ("read", s.fifo)
                else:
                    done, value = yield ("nb_read", s.fifo)
                    regs[s.flag] = 1 if done else 0
                    if done:
                        regs[s.reg] = value
            elif isinstance(s, FifoEmpty):
                for _ in range(s.cost - 1):
                    yield _BUSY
                readable = yield ("can_read", s.fifo)
                regs[s.reg] = 0 if readable else 1
            elif isinstance(s, FifoFull):
                for _ in range(s.cost - 1):
                    yield _BUSY
                writable = yield ("can_write", s.fifo)
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

    yield from run(module.body)


class _Fifo:
    __slots__ = ("depth", "values", "writes_done", "reads_done")

    def __init__(self, depth: int):
        self.depth = depth
        self.values: deque[int] = deque()
        self.writes_done = 0  # committed in finished cycles
        self.reads_done = 0

    def occupancy(self) -> int:
        return self.writes_done - self.reads_done

    def readable(self) -> bool:
        return self.occupancy() > 0

    def writable(self) -> bool:
        return self.occupancy() < self.depth


class _Proc:
    __slots__ = ("module", "gen", "pending", "finished")

    def __init__(self, module: ModuleDecl):
        self.module = module
        self.gen = _micro_ops(module)
        self.pending = None
        self.finished = False

    def fetch(self, sent_value) -> None:
        try:
            self.pending = self.gen.send(sent_value)
        except StopIteration:
            self.pending = None
            self.finished = True


class OracleSim:
    """Steppable oracle; `step()` advances exactly one hardware cycle."""

    def __init__(self, ed: ElaboratedDesign, depths: dict[str, int] | None = None):
        resolved = ed.resolve_depths(depths)
        self.ed = ed
        self.clock = 0
        self.last_active = 0
        self.outputs: dict[str, int] = {}
        self.fifos = {name: _Fifo(depth) for name, depth in resolved.items()}
        self.procs = [_Proc(m) for m in ed.top_modules()]
        for p in self.procs:
            p.fetch(None)
        self.status = OK
        self.blocked: tuple[str, ...] = ()

    @property
    def running(self) -> bool:
        return self.status == OK and any(not p.finished for p in self.procs)

    def fifo_occupancy(self, name: str) -> int:
        return self.fifos[name].occupancy()

    def step(self, order: Iterable[int] | None = None) -> None:
        """One cycle: evaluate every module against start-of-cycle state,
        commit all successful accesses at the end."""
        assert self.running
        self.clock += 1
        any_active = False
        committed_writes: list[tuple[_Fifo, int]] = []
        committed_reads: list[_Fifo] = []
        indices = list(order) if order is not None else range(len(self.procs))
        for i in indices:
            p = self.procs[i]
            if p.finished or p.pending is None:
                continue
            op = p.pending
            kind = op[0]
            result = None
            completed = True
            if kind == "busy":
                pass
            elif kind == "output":
                self.outputs[op[1]] = op[2]
            elif kind == "write":
                f = self.fifos[op[1]]
                if f.writable():
                    f.values.append(op[2])
                    committed_writes.append((f, op[2]))
                else:
                    completed = False  # stalled, retry next cycle
            elif kind == "read":
                f = self.fifos[op[1]]
                if f.readable():
                    result = f.values.popleft()
                    committed_reads.append(f)
                else:
                    completed = False
            elif kind == "nb_write":
                f = self.fifos[op[1]]
                if f.writable():
                    f.values.append(op[2])
                    committed_writes.append((f, op[2]))
                    result = True
                else:
                    result = False
            elif kind == "nb_read":
                f = self.fifos[op[1]]
                if f.readable():
                    result = (True, f.values.popleft())
                    committed_reads.append(f)
                else:
                    result = (False, None)
            elif kind == "can_read":
                result = self.fifos[op[1]].readable()
            elif kind == "can_write":
                result = self.fifos[op[1]].writable()
            else:
                raise AssertionError(f"unknown micro-op {op!r}")
            if completed:
                any_active = True
                p.fetch(result)
        # end of cycle: commits become visible, occupancy stays within bounds
        for f, _ in committed_writes:
            f.writes_done += 1
        for f in committed_reads:
            f.reads_done += 1
        for name, f in self.fifos.items():
            occ = f.occupancy()
            assert 0 <= occ <= f.depth, f"FIFO {name} occupancy {occ} out of range"
            assert occ == len(f.values)
        if any_active:
            self.last_active = self.clock
        else:
            unfinished = [p.module.name for p in self.procs if not p.finished]
            if unfinished:
                # nothing moved and nothing can: every unfinished module is
                # stalled on a FIFO and the state is stationary
                self.status = DEADLOCK
                self.blocked = tuple(sorted(unfinished))

    def result(self) -> OracleResult:
        return OracleResult(dict(self.outputs), self.last_active + 1,
                            self.status, self.blocked)


def oracle_run(ed: ElaboratedDesign, depths: dict[str, int] | None = None,
               max_cycles: int = 1_000_000,
               module_order: list[int] | None = None) -> OracleResult:
    """Run to completion, deadlock, or cycle budget exhaustion.

    Total latency counts the last cycle any module did work, plus one
    finishing cycle. Intra-cycle module order is irrelevant; module_order
    exists so tests can prove that by permutation.
    """
    if max_cycles < 1:
        raise ValueError("max_cycles must be positive")
    sim = OracleSim(ed, depths)
    while sim.running:
        if sim.clock >= max_cycles:
            return OracleResult(dict(sim.outputs), sim.last_active + 1, BUDGET)
        sim.step(module_order)
    return sim.result()
