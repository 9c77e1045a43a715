"""Data model for dataflow designs.

A design is a set of hardware modules connected by bounded FIFO channels.
Each module runs an imperative task program over 64-bit integer registers;
statements carry explicit cycle costs (default 1, control headers 0).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Union

INT_BITS = 64
_MASK = (1 << INT_BITS) - 1
_SIGN = 1 << (INT_BITS - 1)


def wrap64(value: int) -> int:
    """Reduce an integer to signed 64-bit two's complement."""
    value &= _MASK
    return value - (1 << INT_BITS) if value & _SIGN else value


class EvalError(Exception):
    """Arithmetic fault during expression evaluation."""


class SimulationFault(Exception):
    """Functional error inside a module program (e.g. division by zero)."""

    def __init__(self, module: str, loc, message: str):
        where = f" at {loc}" if loc else ""
        super().__init__(f"module {module!r}{where}: {message}")
        self.module = module


def _trunc_div(a: int, b: int) -> int:
    if b == 0:
        raise EvalError("division by zero")
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _trunc_mod(a: int, b: int) -> int:
    if b == 0:
        raise EvalError("modulo by zero")
    return a - _trunc_div(a, b) * b


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# --- expressions -----------------------------------------------------------

@dataclass
class Lit:
    value: int


@dataclass
class Reg:
    name: str


@dataclass
class Unary:
    op: str  # "-" or "!"
    operand: "Expr"


@dataclass
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Lit, Reg, Unary, Binary]

_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _trunc_div,
    "%": _trunc_mod,
}
_COMPARE = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_expr(expr: Expr, regs: dict[str, int]) -> int:
    """Evaluate with wrapping 64-bit arithmetic. && and || short-circuit."""
    if isinstance(expr, Lit):
        return wrap64(expr.value)
    if isinstance(expr, Reg):
        return regs.get(expr.name, 0)
    if isinstance(expr, Unary):
        v = eval_expr(expr.operand, regs)
        return (0 if v else 1) if expr.op == "!" else wrap64(-v)
    op = expr.op
    if op == "&&":
        return 1 if eval_expr(expr.left, regs) and eval_expr(expr.right, regs) else 0
    if op == "||":
        return 1 if eval_expr(expr.left, regs) or eval_expr(expr.right, regs) else 0
    a = eval_expr(expr.left, regs)
    b = eval_expr(expr.right, regs)
    if op in _COMPARE:
        return 1 if _COMPARE[op](a, b) else 0
    return wrap64(_ARITH[op](a, b))


def expr_regs(expr: Expr) -> set[str]:
    if isinstance(expr, Reg):
        return {expr.name}
    if isinstance(expr, Unary):
        return expr_regs(expr.operand)
    if isinstance(expr, Binary):
        return expr_regs(expr.left) | expr_regs(expr.right)
    return set()


# --- statements ------------------------------------------------------------
# Every leaf statement has a cycle cost; control headers cost nothing.

@dataclass
class Assign:
    reg: str
    value: Expr
    cost: int = 1
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass
class Delay:
    cycles: int
    loc: Loc | None = field(default=None, compare=False, repr=False)

    @property
    def cost(self) -> int:
        return self.cycles


@dataclass
class FifoWrite:
    fifo: str
    value: Expr
    flag: str | None = None  # set => non-blocking, register receives success
    cost: int = 1
    loc: Loc | None = field(default=None, compare=False, repr=False)

    @property
    def blocking(self) -> bool:
        return self.flag is None


@dataclass
class FifoRead:
    fifo: str
    reg: str
    flag: str | None = None
    cost: int = 1
    loc: Loc | None = field(default=None, compare=False, repr=False)

    @property
    def blocking(self) -> bool:
        return self.flag is None


@dataclass
class FifoEmpty:
    fifo: str
    reg: str
    cost: int = 1
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass
class FifoFull:
    fifo: str
    reg: str
    cost: int = 1
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass
class If:
    cond: Expr
    then: list["Stmt"]
    orelse: list["Stmt"] = field(default_factory=list)
    loc: Loc | None = field(default=None, compare=False, repr=False)
    cost = 0


@dataclass
class While:
    cond: Expr
    body: list["Stmt"]
    loc: Loc | None = field(default=None, compare=False, repr=False)
    cost = 0


@dataclass
class For:
    reg: str
    count: int
    body: list["Stmt"]
    loc: Loc | None = field(default=None, compare=False, repr=False)
    cost = 0


@dataclass
class Loop:
    body: list["Stmt"]
    loc: Loc | None = field(default=None, compare=False, repr=False)
    cost = 0


@dataclass
class Break:
    loc: Loc | None = field(default=None, compare=False, repr=False)
    cost = 0


@dataclass
class Output:
    name: str
    value: Expr
    cost: int = 1
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass
class Skip:
    """Placeholder left by check pruning; burns cycles, does nothing."""
    cost: int = 1
    loc: Loc | None = field(default=None, compare=False, repr=False)


Stmt = Union[
    Assign, Delay, FifoWrite, FifoRead, FifoEmpty, FifoFull,
    If, While, For, Loop, Break, Output, Skip,
]

CONTROL_STMTS = (If, While, For, Loop, Break)
FIFO_STMTS = (FifoWrite, FifoRead, FifoEmpty, FifoFull)


# --- design ----------------------------------------------------------------

@dataclass
class FifoDecl:
    name: str
    depth: int
    width: int = 32
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass
class ModuleDecl:
    name: str
    body: list[Stmt]
    locals: tuple[str, ...] = ()
    reads: tuple[str, ...] | None = None   # declared, printed sorted
    writes: tuple[str, ...] | None = None
    loc: Loc | None = field(default=None, compare=False, repr=False)


@dataclass
class Design:
    name: str
    fifos: list[FifoDecl]
    modules: list[ModuleDecl]
    top: tuple[str, ...]
    outputs: tuple[str, ...] = ()

    def fifo(self, name: str) -> FifoDecl:
        for f in self.fifos:
            if f.name == name:
                return f
        raise KeyError(name)

    def module(self, name: str) -> ModuleDecl:
        for m in self.modules:
            if m.name == name:
                return m
        raise KeyError(name)

    def declared_depths(self) -> dict[str, int]:
        return {f.name: f.depth for f in self.fifos}


class DesignClass(enum.Enum):
    TYPE_A = "TypeA"
    TYPE_B = "TypeB"
    TYPE_C = "TypeC"

    def __str__(self) -> str:
        return self.value


def iter_statements(stmts: list[Stmt]) -> Iterator[Stmt]:
    """Yield every statement, descending into control-flow bodies."""
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from iter_statements(s.then)
            yield from iter_statements(s.orelse)
        elif isinstance(s, (While, For, Loop)):
            yield from iter_statements(s.body)


def module_accesses(module: ModuleDecl) -> tuple[set[str], set[str]]:
    """FIFOs actually read / written by the module's program (data accesses only)."""
    reads: set[str] = set()
    writes: set[str] = set()
    for s in iter_statements(module.body):
        if isinstance(s, FifoRead):
            reads.add(s.fifo)
        elif isinstance(s, FifoWrite):
            writes.add(s.fifo)
    return reads, writes


def module_checks(module: ModuleDecl) -> tuple[set[str], set[str]]:
    """FIFOs status-checked by the module: (empty-checked, full-checked)."""
    empties: set[str] = set()
    fulls: set[str] = set()
    for s in iter_statements(module.body):
        if isinstance(s, FifoEmpty):
            empties.add(s.fifo)
        elif isinstance(s, FifoFull):
            fulls.add(s.fifo)
    return empties, fulls
