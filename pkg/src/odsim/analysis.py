"""Static analysis over parsed designs: validation, classification,
dead-check pruning and elaboration."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .model import (
    Assign, Break, Delay, Design, DesignClass, FifoEmpty, FifoFull,
    FifoRead, FifoWrite, For, If, Loc, Loop, ModuleDecl, Output, Skip,
    Stmt, While, expr_regs, iter_statements, module_accesses,
)

ERROR = "error"
WARNING = "warning"


@dataclass
class Diagnostic:
    severity: str
    code: str
    message: str
    loc: Loc | None = field(default=None, compare=False)

    def __str__(self) -> str:
        where = f" at {self.loc}" if self.loc else ""
        return f"{self.severity}: [{self.code}] {self.message}{where}"


class DesignError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


def _zero_cost_path(stmts: list[Stmt]) -> bool:
    """True if some path through stmts costs 0 cycles and neither breaks
    nor touches a FIFO. Such a path inside while/loop can spin forever."""
    for s in stmts:
        if isinstance(s, Break):
            return False
        if isinstance(s, (FifoRead, FifoWrite, FifoEmpty, FifoFull)):
            return False
        if isinstance(s, (Assign, Output, Skip)):
            if s.cost > 0:
                return False
        elif isinstance(s, Delay):
            if s.cycles > 0:
                return False
        elif isinstance(s, If):
            if not (_zero_cost_path(s.then) or _zero_cost_path(s.orelse)):
                return False
        elif isinstance(s, (While, For)):
            continue  # zero iterations possible, path skips the loop
        elif isinstance(s, Loop):
            return False  # cannot fall through an unconditional loop
    return True


def _has_exit_or_fifo(stmts: list[Stmt]) -> bool:
    for s in iter_statements(stmts):
        if isinstance(s, (Break, FifoRead, FifoWrite, FifoEmpty, FifoFull)):
            return True
    return False


def validate_design(design: Design) -> list[Diagnostic]:
    """Check every design invariant; empty result means the design is valid.
    Errors block simulation, warnings do not."""
    diags: list[Diagnostic] = []

    def err(code: str, message: str, loc: Loc | None = None) -> None:
        diags.append(Diagnostic(ERROR, code, message, loc))

    def warn(code: str, message: str, loc: Loc | None = None) -> None:
        diags.append(Diagnostic(WARNING, code, message, loc))

    names: set[str] = set()
    for f in design.fifos:
        if f.name in names:
            err("duplicate-identifier", f"duplicate identifier {f.name!r}", f.loc)
        names.add(f.name)
        if f.depth < 1:
            err("depth-must-be-positive",
                f"FIFO {f.name!r} has depth {f.depth}, expected at least 1", f.loc)
    module_names: set[str] = set()
    for m in design.modules:
        if m.name in names or m.name in module_names:
            err("duplicate-identifier", f"duplicate identifier {m.name!r}", m.loc)
        module_names.add(m.name)

    fifo_names = {f.name for f in design.fifos}
    if not design.top:
        err("empty-top", "top module list is empty")
    for name in design.top:
        if name not in module_names:
            err("unresolved-module", f"unknown module {name!r} in top")
    for m in design.modules:
        if m.name not in design.top:
            warn("unused-module", f"module {m.name!r} is not listed in top", m.loc)

    writers: dict[str, str] = {}
    readers: dict[str, str] = {}
    for m in design.modules:
        reads, writes = module_accesses(m)
        for fifo in writes:
            if fifo in writers:
                err("multiple-writers",
                    f"FIFO {fifo!r} written by both {writers[fifo]!r} and {m.name!r}",
                    m.loc)
            else:
                writers[fifo] = m.name
        for fifo in reads:
            if fifo in readers:
                err("multiple-readers",
                    f"FIFO {fifo!r} read by both {readers[fifo]!r} and {m.name!r}",
                    m.loc)
            else:
                readers[fifo] = m.name
        if m.reads is not None and set(m.reads) != reads:
            err("reads-set-mismatch",
                f"module {m.name!r} declares reads {sorted(m.reads)} "
                f"but program reads {sorted(reads)}", m.loc)
        if m.writes is not None and set(m.writes) != writes:
            err("writes-set-mismatch",
                f"module {m.name!r} declares writes {sorted(m.writes)} "
                f"but program writes {sorted(writes)}", m.loc)

    for f in design.fifos:
        if f.name not in readers:
            warn("dangling-reader", f"FIFO {f.name!r} is never read", f.loc)
        if f.name not in writers:
            warn("dangling-writer", f"FIFO {f.name!r} is never written", f.loc)

    output_owner: dict[str, str] = {}
    for m in design.modules:
        declared = set(m.locals)
        seen_regs: set[str] = set()

        def check_regs(regs: set[str], loc: Loc | None) -> None:
            for r in regs:
                if r not in declared and r not in seen_regs:
                    seen_regs.add(r)
                    err("undeclared-register",
                        f"module {m.name!r} uses undeclared register {r!r}", loc)

        def walk(stmts: list[Stmt], in_loop: bool) -> None:
            for s in stmts:
                if isinstance(s, Assign):
                    check_regs(expr_regs(s.value) | {s.reg}, s.loc)
                elif isinstance(s, FifoRead):
                    targets = {s.reg} | ({s.flag} if s.flag else set())
                    check_regs(targets, s.loc)
                    if s.flag == s.reg:
                        err("nb-same-register",
                            f"non-blocking read targets {s.reg!r} for both value and flag",
                            s.loc)
                elif isinstance(s, FifoWrite):
                    check_regs(expr_regs(s.value) | ({s.flag} if s.flag else set()), s.loc)
                elif isinstance(s, (FifoEmpty, FifoFull)):
                    check_regs({s.reg}, s.loc)
                    side = readers if isinstance(s, FifoEmpty) else writers
                    kind = "empty" if isinstance(s, FifoEmpty) else "full"
                    if s.fifo in fifo_names and side.get(s.fifo) != m.name:
                        err(f"{kind}-check-wrong-side",
                            f"module {m.name!r} checks {kind}({s.fifo!r}) but is not "
                            f"the FIFO's {'reader' if kind == 'empty' else 'writer'}",
                            s.loc)
                elif isinstance(s, Output):
                    check_regs(expr_regs(s.value), s.loc)
                    if s.name not in design.outputs:
                        err("undeclared-output",
                            f"output {s.name!r} is not declared in outputs", s.loc)
                    elif output_owner.setdefault(s.name, m.name) != m.name:
                        err("output-multiple-writers",
                            f"output {s.name!r} written by both "
                            f"{output_owner[s.name]!r} and {m.name!r}", s.loc)
                elif isinstance(s, Break):
                    if not in_loop:
                        err("break-outside-loop", "break outside of a loop", s.loc)
                elif isinstance(s, If):
                    check_regs(expr_regs(s.cond), s.loc)
                    walk(s.then, in_loop)
                    walk(s.orelse, in_loop)
                elif isinstance(s, While):
                    check_regs(expr_regs(s.cond), s.loc)
                    if _zero_cost_path(s.body):
                        err("zero-cost-loop",
                            f"while body in module {m.name!r} can iterate "
                            "without consuming a cycle", s.loc)
                    walk(s.body, True)
                elif isinstance(s, For):
                    check_regs({s.reg}, s.loc)
                    if _zero_cost_path(s.body):
                        warn("zero-cost-loop",
                             f"for body in module {m.name!r} consumes no cycles", s.loc)
                    walk(s.body, True)
                elif isinstance(s, Loop):
                    if not _has_exit_or_fifo(s.body):
                        err("infinite-loop-no-exit",
                            f"infinite loop in module {m.name!r} has no FIFO "
                            "operation or break", s.loc)
                    if _zero_cost_path(s.body):
                        err("zero-cost-loop",
                            f"loop body in module {m.name!r} can iterate "
                            "without consuming a cycle", s.loc)
                    walk(s.body, True)

        walk(m.body, False)

    written_outputs = set(output_owner)
    for name in design.outputs:
        if name not in written_outputs:
            warn("dangling-output", f"declared output {name!r} is never written")
    return diags


def design_errors(design: Design) -> list[Diagnostic]:
    return [d for d in validate_design(design) if d.severity == ERROR]


# --- classification ---------------------------------------------------------

def _module_graph_cyclic(design: Design) -> bool:
    edges: dict[str, set[str]] = {m.name: set() for m in design.modules}
    writer: dict[str, str] = {}
    for m in design.modules:
        _, writes = module_accesses(m)
        for f in writes:
            writer[f] = m.name
    for m in design.modules:
        reads, _ = module_accesses(m)
        for f in reads:
            if f in writer:
                edges[writer[f]].add(m.name)
    # depth-first cycle check
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in edges}
    def visit(n: str) -> bool:
        color[n] = GREY
        for s in edges[n]:
            if color[s] == GREY:
                return True
            if color[s] == WHITE and visit(s):
                return True
        color[n] = BLACK
        return False
    return any(color[n] == WHITE and visit(n) for n in edges)


def classify_design(design: Design) -> DesignClass:
    """Classify by FIFO access style and what success flags feed into.

    TypeA: acyclic, blocking accesses only, statically bounded loops.
    TypeB: non-blocking accesses, status checks, unbounded loops or cyclic
           module dependencies, with all success flags dead.
    TypeC: some success or status flag feeds a branch condition, a register
           update, a FIFO write value, or an output.

    The scan is flow-insensitive over each module, so it is stable under
    statement reorderings that keep flag dataflow intact.
    """
    has_nb = False
    has_unbounded_loop = False
    for m in design.modules:
        flags: set[str] = set()
        exprs = []
        for s in iter_statements(m.body):
            if isinstance(s, (While, Loop)):
                has_unbounded_loop = True
            if isinstance(s, FifoRead) and s.flag:
                has_nb = True
                flags.add(s.flag)
            elif isinstance(s, FifoWrite) and s.flag:
                has_nb = True
                flags.add(s.flag)
            elif isinstance(s, (FifoEmpty, FifoFull)):
                has_nb = True
                flags.add(s.reg)
            if isinstance(s, Assign):
                exprs.append(s.value)
            elif isinstance(s, FifoWrite):
                exprs.append(s.value)
            elif isinstance(s, Output):
                exprs.append(s.value)
            elif isinstance(s, (If, While)):
                exprs.append(s.cond)
        if flags and any(expr_regs(e) & flags for e in exprs):
            return DesignClass.TYPE_C
    if has_nb or has_unbounded_loop or _module_graph_cyclic(design):
        return DesignClass.TYPE_B
    return DesignClass.TYPE_A


# --- check pruning ----------------------------------------------------------

def _used_registers(module: ModuleDecl) -> set[str]:
    used: set[str] = set()
    for s in iter_statements(module.body):
        if isinstance(s, Assign):
            used |= expr_regs(s.value)
        elif isinstance(s, FifoWrite):
            used |= expr_regs(s.value)
        elif isinstance(s, Output):
            used |= expr_regs(s.value)
        elif isinstance(s, (If, While)):
            used |= expr_regs(s.cond)
    return used


def prune_unused_checks(design: Design) -> Design:
    """Replace empty/full checks whose result register is never read with
    cost-preserving skip markers. Timing and outputs are unaffected."""
    new_modules = []
    for m in design.modules:
        used = _used_registers(m)

        def rewrite(stmts: list[Stmt]) -> list[Stmt]:
            out: list[Stmt] = []
            for s in stmts:
                if isinstance(s, (FifoEmpty, FifoFull)) and s.reg not in used:
                    out.append(Skip(s.cost, s.loc))
                elif isinstance(s, If):
                    out.append(replace(s, then=rewrite(s.then), orelse=rewrite(s.orelse)))
                elif isinstance(s, (While, For, Loop)):
                    out.append(replace(s, body=rewrite(s.body)))
                else:
                    out.append(s)
            return out

        # declared reads/writes track data accesses only, so dropping a
        # status check never invalidates them
        new_modules.append(replace(m, body=rewrite(m.body)))
    return replace(design, modules=new_modules)


# --- elaboration ------------------------------------------------------------

@dataclass
class ElaboratedDesign:
    """A validated design plus the lookup tables the simulators need."""
    design: Design
    writer_of: dict[str, str]
    reader_of: dict[str, str]
    depths: dict[str, int]

    @property
    def name(self) -> str:
        return self.design.name

    def top_modules(self) -> list[ModuleDecl]:
        return [self.design.module(n) for n in self.design.top]

    def resolve_depths(self, overrides: dict[str, int] | None = None) -> dict[str, int]:
        depths = dict(self.depths)
        for name, depth in (overrides or {}).items():
            if name not in depths:
                raise KeyError(f"unknown FIFO {name!r}")
            if depth < 1:
                raise ValueError(f"depth for {name!r} must be at least 1")
            depths[name] = depth
        return depths


def elaborate(design: Design) -> ElaboratedDesign:
    """Check validity and freeze the static tables used at simulation time.

    Statement cycle offsets accumulate along the executed path: a statement's
    event lands `cost` cycles after the previous statement's event, loops
    simply replay their bodies' costs per iteration.
    """
    errors = design_errors(design)
    if errors:
        raise DesignError(errors)
    writer_of: dict[str, str] = {}
    reader_of: dict[str, str] = {}
    for m in design.modules:
        reads, writes = module_accesses(m)
        for f in writes:
            writer_of[f] = m.name
        for f in reads:
            reader_of[f] = m.name
    return ElaboratedDesign(design, writer_of, reader_of, design.declared_depths())


def static_offsets(stmts: list[Stmt]) -> list[int]:
    """Cycle offsets of a straight-line statement list (no control flow)."""
    offsets = []
    total = 0
    for s in stmts:
        if isinstance(s, (If, While, For, Loop, Break)):
            raise ValueError("static_offsets requires straight-line code")
        total += s.cost
        offsets.append(total)
    return offsets
