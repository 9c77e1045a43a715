"""Parser and canonical printer for the .od design format.

Grammar (EBNF, also in docs/format.md):

    design      = "design" IDENT "{" { item } "}" ;
    item        = fifo | module | top | outputs ;
    fifo        = "fifo" IDENT "depth" INT [ "width" INT ] ";" ;
    module      = "module" IDENT "{" { moditem } "}" ;
    moditem     = "reads" idents ";" | "writes" idents ";"
                | "locals" idents ";" | stmt ;
    top         = "top" idents ";" ;
    outputs     = "outputs" idents ";" ;
    idents      = IDENT { "," IDENT } ;
    stmt        = IDENT "=" expr sfx ";"
                | "delay" INT ";"
                | "read" IDENT "->" IDENT sfx ";"
                | "read_nb" IDENT "->" IDENT "," IDENT sfx ";"
                | "write" IDENT "," expr sfx ";"
                | "write_nb" IDENT "," expr "->" IDENT sfx ";"
                | "empty" IDENT "->" IDENT sfx ";"
                | "full" IDENT "->" IDENT sfx ";"
                | "output" IDENT "," expr sfx ";"
                | "skip" sfx ";"
                | "break" ";"
                | "if" expr block [ "else" block ]
                | "while" expr block
                | "for" IDENT "in" INT block
                | "loop" block ;
    sfx         = [ "@" INT ] ;                      (* cycle cost, default 1 *)
    block       = "{" { stmt } "}" ;
    expr        = C-style precedence: "||" "&&" "=="/"!=" "<"/"<="/">"/">="
                  "+"/"-" "*"/"/"/"%" unary("!"/"-") atom ;
    atom        = INT | IDENT | "(" expr ")" ;

Comments run from "//" to end of line. Integers are decimal.
"""
from __future__ import annotations

import re

from .model import (
    FIFO_STMTS, Assign, Binary, Break, Delay, Design, Expr, FifoDecl,
    FifoEmpty, FifoFull, FifoRead, FifoWrite, For, If, Lit, Loc, Loop,
    ModuleDecl, Output, Reg, Skip, Stmt, Unary, While, iter_statements,
    module_accesses,
)

KEYWORDS = {
    "design", "fifo", "depth", "width", "module", "reads", "writes",
    "locals", "top", "outputs", "delay", "read", "write", "read_nb",
    "write_nb", "empty", "full", "if", "else", "while", "for", "in",
    "loop", "break", "output", "skip",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|\|\||&&|==|!=|<=|>=|[{}();,=@<>!+\-*/%])
    """,
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind not in ("ws", "comment"):
            if kind == "ident" and lexeme in KEYWORDS:
                kind = "kw"
            tokens.append(_Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


_PRECEDENCE = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def error(self, message: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect(self, kind: str, text: str | None = None) -> _Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise self.error(f"expected {want!r}, found {t.text or 'end of input'!r}")
        return self.next()

    def accept(self, kind: str, text: str | None = None) -> _Token | None:
        t = self.peek()
        if t.kind == kind and (text is None or t.text == text):
            return self.next()
        return None

    def loc(self) -> Loc:
        t = self.peek()
        return Loc(t.line, t.col)

    # design level

    def parse_design(self) -> Design:
        self.expect("kw", "design")
        name = self.expect("ident").text
        self.expect("op", "{")
        fifos: list[FifoDecl] = []
        modules: list[ModuleDecl] = []
        top: tuple[str, ...] = ()
        outputs: tuple[str, ...] = ()
        while not self.accept("op", "}"):
            t = self.peek()
            if t.kind == "kw" and t.text == "fifo":
                fifos.append(self.parse_fifo())
            elif t.kind == "kw" and t.text == "module":
                modules.append(self.parse_module())
            elif t.kind == "kw" and t.text == "top":
                self.next()
                top = tuple(self.parse_idents())
                self.expect("op", ";")
            elif t.kind == "kw" and t.text == "outputs":
                self.next()
                outputs = tuple(self.parse_idents())
                self.expect("op", ";")
            else:
                raise self.error("expected fifo, module, top or outputs")
        return Design(name, fifos, modules, top, outputs)

    def parse_fifo(self) -> FifoDecl:
        loc = self.loc()
        self.expect("kw", "fifo")
        name = self.expect("ident").text
        self.expect("kw", "depth")
        depth = int(self.expect("int").text)
        width = 32
        if self.accept("kw", "width"):
            width = int(self.expect("int").text)
        self.expect("op", ";")
        return FifoDecl(name, depth, width, loc)

    def parse_module(self) -> ModuleDecl:
        loc = self.loc()
        self.expect("kw", "module")
        name = self.expect("ident").text
        self.expect("op", "{")
        reads = writes = None
        locals_: tuple[str, ...] = ()
        body: list[Stmt] = []
        while not self.accept("op", "}"):
            t = self.peek()
            if t.kind == "kw" and t.text in ("reads", "writes", "locals"):
                self.next()
                names = tuple(self.parse_idents())
                self.expect("op", ";")
                if t.text == "reads":
                    reads = tuple(sorted(names))
                elif t.text == "writes":
                    writes = tuple(sorted(names))
                else:
                    locals_ = locals_ + names
            else:
                body.append(self.parse_stmt())
        return ModuleDecl(name, body, locals_, reads, writes, loc)

    def parse_idents(self) -> list[str]:
        names = [self.expect("ident").text]
        while self.accept("op", ","):
            names.append(self.expect("ident").text)
        return names

    # statements

    def parse_block(self) -> list[Stmt]:
        self.expect("op", "{")
        body = []
        while not self.accept("op", "}"):
            body.append(self.parse_stmt())
        return body

    def parse_cost(self, default: int = 1) -> int:
        if self.accept("op", "@"):
            tok = self.expect("int")
            cost = int(tok.text)
            if cost < 1:
                raise ParseError("cycle cost must be at least 1", tok.line, tok.col)
            return cost
        return default

    def parse_stmt(self) -> Stmt:
        loc = self.loc()
        t = self.peek()
        if t.kind == "ident":
            name = self.next().text
            self.expect("op", "=")
            value = self.parse_expr()
            cost = self.parse_cost()
            self.expect("op", ";")
            return Assign(name, value, cost, loc)
        if t.kind != "kw":
            raise self.error("expected a statement")
        kw = self.next().text
        if kw == "delay":
            cycles = int(self.expect("int").text)
            self.expect("op", ";")
            return Delay(cycles, loc)
        if kw == "read":
            fifo = self.expect("ident").text
            self.expect("op", "->")
            reg = self.expect("ident").text
            cost = self.parse_cost()
            self.expect("op", ";")
            return FifoRead(fifo, reg, None, cost, loc)
        if kw == "read_nb":
            fifo = self.expect("ident").text
            self.expect("op", "->")
            reg = self.expect("ident").text
            self.expect("op", ",")
            flag = self.expect("ident").text
            cost = self.parse_cost()
            self.expect("op", ";")
            return FifoRead(fifo, reg, flag, cost, loc)
        if kw == "write":
            fifo = self.expect("ident").text
            self.expect("op", ",")
            value = self.parse_expr()
            cost = self.parse_cost()
            self.expect("op", ";")
            return FifoWrite(fifo, value, None, cost, loc)
        if kw == "write_nb":
            fifo = self.expect("ident").text
            self.expect("op", ",")
            value = self.parse_expr()
            self.expect("op", "->")
            flag = self.expect("ident").text
            cost = self.parse_cost()
            self.expect("op", ";")
            return FifoWrite(fifo, value, flag, cost, loc)
        if kw in ("empty", "full"):
            fifo = self.expect("ident").text
            self.expect("op", "->")
            reg = self.expect("ident").text
            cost = self.parse_cost()
            self.expect("op", ";")
            cls = FifoEmpty if kw == "empty" else FifoFull
            return cls(fifo, reg, cost, loc)
        if kw == "output":
            name = self.expect("ident").text
            self.expect("op", ",")
            value = self.parse_expr()
            cost = self.parse_cost()
            self.expect("op", ";")
            return Output(name, value, cost, loc)
        if kw == "skip":
            cost = self.parse_cost()
            self.expect("op", ";")
            return Skip(cost, loc)
        if kw == "break":
            self.expect("op", ";")
            return Break(loc)
        if kw == "if":
            cond = self.parse_expr()
            then = self.parse_block()
            orelse = self.parse_block() if self.accept("kw", "else") else []
            return If(cond, then, orelse, loc)
        if kw == "while":
            cond = self.parse_expr()
            return While(cond, self.parse_block(), loc)
        if kw == "for":
            reg = self.expect("ident").text
            self.expect("kw", "in")
            count = int(self.expect("int").text)
            return For(reg, count, self.parse_block(), loc)
        if kw == "loop":
            return Loop(self.parse_block(), loc)
        raise ParseError(f"unexpected keyword {kw!r}", loc.line, loc.col)

    # expressions, precedence climbing

    def parse_expr(self, level: int = 0) -> Expr:
        if level == len(_PRECEDENCE):
            return self.parse_unary()
        expr = self.parse_expr(level + 1)
        while True:
            t = self.peek()
            if t.kind == "op" and t.text in _PRECEDENCE[level]:
                self.next()
                rhs = self.parse_expr(level + 1)
                expr = Binary(t.text, expr, rhs)
            else:
                return expr

    def parse_unary(self) -> Expr:
        t = self.peek()
        if t.kind == "op" and t.text in ("!", "-"):
            self.next()
            return Unary(t.text, self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        t = self.next()
        if t.kind == "int":
            return Lit(int(t.text))
        if t.kind == "ident":
            return Reg(t.text)
        if t.kind == "op" and t.text == "(":
            e = self.parse_expr()
            self.expect("op", ")")
            return e
        raise ParseError(f"expected an expression, found {t.text or 'end of input'!r}",
                         t.line, t.col)


def _resolve(design: Design) -> None:
    """Reference and single-producer/single-consumer checks; raise on violation."""
    seen: dict[str, Loc | None] = {}
    for f in design.fifos:
        if f.name in seen:
            raise ParseError(f"duplicate identifier {f.name!r}",
                             *(f.loc.line, f.loc.col) if f.loc else (0, 0))
        seen[f.name] = f.loc
    for m in design.modules:
        if m.name in seen:
            raise ParseError(f"duplicate identifier {m.name!r}",
                             *(m.loc.line, m.loc.col) if m.loc else (0, 0))
        seen[m.name] = m.loc
    fifo_names = {f.name for f in design.fifos}
    module_names = {m.name for m in design.modules}

    def _check_ref(fifo: str, loc: Loc | None) -> None:
        if fifo not in fifo_names:
            raise ParseError(f"unresolved FIFO reference {fifo!r}",
                             loc.line if loc else 0, loc.col if loc else 0)

    writers: dict[str, str] = {}
    readers: dict[str, str] = {}
    for m in design.modules:
        for names in (m.reads, m.writes):
            for fifo in names or ():
                _check_ref(fifo, m.loc)
        for s in iter_statements(m.body):
            if isinstance(s, FIFO_STMTS):
                _check_ref(s.fifo, s.loc)
        reads, writes = module_accesses(m)
        for fifo in writes:
            if fifo in writers and writers[fifo] != m.name:
                raise ParseError(
                    f"FIFO {fifo!r} has multiple writers ({writers[fifo]}, {m.name})",
                    m.loc.line if m.loc else 0, m.loc.col if m.loc else 0)
            writers[fifo] = m.name
        for fifo in reads:
            if fifo in readers and readers[fifo] != m.name:
                raise ParseError(
                    f"FIFO {fifo!r} has multiple readers ({readers[fifo]}, {m.name})",
                    m.loc.line if m.loc else 0, m.loc.col if m.loc else 0)
            readers[fifo] = m.name
    for name in design.top:
        if name not in module_names:
            raise ParseError(f"unknown module {name!r} in top", 0, 0)


def parse_design(text: str) -> Design:
    """Parse design source; raises ParseError with line/column on failure."""
    parser = _Parser(_tokenize(text))
    design = parser.parse_design()
    parser.expect("eof")
    _resolve(design)
    return design


# --- canonical printer ------------------------------------------------------

_OP_LEVEL = {op: i for i, ops in enumerate(_PRECEDENCE) for op in ops}


def _expr_str(expr: Expr, parent_level: int = -1) -> str:
    if isinstance(expr, Lit):
        return str(expr.value)
    if isinstance(expr, Reg):
        return expr.name
    if isinstance(expr, Unary):
        inner = _expr_str(expr.operand, len(_PRECEDENCE))
        return f"{expr.op}{inner}"
    level = _OP_LEVEL[expr.op]
    left = _expr_str(expr.left, level - 1)   # left-assoc: same level ok on the left
    right = _expr_str(expr.right, level)     # parenthesize same level on the right
    text = f"{left} {expr.op} {right}"
    return f"({text})" if level <= parent_level else text


def _sfx(cost: int, default: int = 1) -> str:
    return f" @ {cost}" if cost != default else ""


def _stmt_lines(stmt: Stmt, indent: str) -> list[str]:
    if isinstance(stmt, Assign):
        return [f"{indent}{stmt.reg} = {_expr_str(stmt.value)}{_sfx(stmt.cost)};"]
    if isinstance(stmt, Delay):
        return [f"{indent}delay {stmt.cycles};"]
    if isinstance(stmt, FifoRead):
        if stmt.blocking:
            return [f"{indent}read {stmt.fifo} -> {stmt.reg}{_sfx(stmt.cost)};"]
        return [f"{indent}read_nb {stmt.fifo} -> {stmt.reg}, {stmt.flag}{_sfx(stmt.cost)};"]
    if isinstance(stmt, FifoWrite):
        if stmt.blocking:
            return [f"{indent}write {stmt.fifo}, {_expr_str(stmt.value)}{_sfx(stmt.cost)};"]
        return [f"{indent}write_nb {stmt.fifo}, {_expr_str(stmt.value)} -> {stmt.flag}{_sfx(stmt.cost)};"]
    if isinstance(stmt, FifoEmpty):
        return [f"{indent}empty {stmt.fifo} -> {stmt.reg}{_sfx(stmt.cost)};"]
    if isinstance(stmt, FifoFull):
        return [f"{indent}full {stmt.fifo} -> {stmt.reg}{_sfx(stmt.cost)};"]
    if isinstance(stmt, Output):
        return [f"{indent}output {stmt.name}, {_expr_str(stmt.value)}{_sfx(stmt.cost)};"]
    if isinstance(stmt, Skip):
        return [f"{indent}skip{_sfx(stmt.cost)};"]
    if isinstance(stmt, Break):
        return [f"{indent}break;"]
    if isinstance(stmt, If):
        lines = [f"{indent}if {_expr_str(stmt.cond)} {{"]
        lines += _block_lines(stmt.then, indent + "  ")
        if stmt.orelse:
            lines.append(f"{indent}}} else {{")
            lines += _block_lines(stmt.orelse, indent + "  ")
        lines.append(f"{indent}}}")
        return lines
    if isinstance(stmt, While):
        return ([f"{indent}while {_expr_str(stmt.cond)} {{"]
                + _block_lines(stmt.body, indent + "  ") + [f"{indent}}}"])
    if isinstance(stmt, For):
        return ([f"{indent}for {stmt.reg} in {stmt.count} {{"]
                + _block_lines(stmt.body, indent + "  ") + [f"{indent}}}"])
    if isinstance(stmt, Loop):
        return ([f"{indent}loop {{"]
                + _block_lines(stmt.body, indent + "  ") + [f"{indent}}}"])
    raise TypeError(f"unknown statement {stmt!r}")


def _block_lines(stmts: list[Stmt], indent: str) -> list[str]:
    lines: list[str] = []
    for s in stmts:
        lines += _stmt_lines(s, indent)
    return lines


def print_design(design: Design) -> str:
    """Render a design in canonical form; parse_design round-trips it."""
    lines = [f"design {design.name} {{"]
    for f in design.fifos:
        width = f" width {f.width}" if f.width != 32 else ""
        lines.append(f"  fifo {f.name} depth {f.depth}{width};")
    for m in design.modules:
        lines.append(f"  module {m.name} {{")
        if m.reads:
            lines.append(f"    reads {', '.join(sorted(m.reads))};")
        if m.writes:
            lines.append(f"    writes {', '.join(sorted(m.writes))};")
        if m.locals:
            lines.append(f"    locals {', '.join(m.locals)};")
        lines += _block_lines(m.body, "    ")
        lines.append("  }")
    if design.top:
        lines.append(f"  top {', '.join(design.top)};")
    if design.outputs:
        lines.append(f"  outputs {', '.join(design.outputs)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
