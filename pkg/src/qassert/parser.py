"""Frontend for the assertion-extended QASM dialect.

Supports OpenQASM-2-style register declarations, custom gate definitions
(which may themselves contain assertions), the fixed gate set from
``circuit.GATE_SET``, ``measure``/``barrier`` and the three assertion forms:

    assert-sup t0, t1, ...;
    assert-eq targets = |bits>;
    assert-eq targets = { amp, amp, ... };
    assert-eq targets { <circuit block> }
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .circuit import (
    Assertion,
    CircuitError,
    EqualityCircuit,
    EqualityState,
    FlatProgram,
    GATE_SET,
    Instruction,
    Superposition,
    normalized_amplitudes,
)


class QasmError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        if line:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "<stdin>"


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<assert>assert-(?:sup|eq)\b)
  | (?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<string>"[^"\n]*")
  | (?P<sym>[;,(){}\[\]=|><+\-*/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "assert", "number", "id", "arrow", "string", "sym", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QasmError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup or ""
        raw = m.group()
        if kind != "ws":
            tokens.append(Token(kind, raw, line, col))
        nl = raw.count("\n")
        if nl:
            line += nl
            col = len(raw) - raw.rfind("\n")
        else:
            col += len(raw)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Operand:
    name: str
    index: Optional[int]
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return self.name if self.index is None else f"{self.name}[{self.index}]"


# angle expressions: nested tuples ("num", x) ("name", s) ("neg", e)
# ("+"|"-"|"*"|"/", a, b)
Expr = tuple


def eval_expr(expr: Expr, env: dict[str, float], line: int = 0, col: int = 0) -> float:
    op = expr[0]
    if op == "num":
        return expr[1]
    if op == "name":
        name = expr[1]
        if name == "pi":
            return math.pi
        if name in env:
            return env[name]
        raise QasmError(f"unknown parameter {name!r}", line, col)
    if op == "neg":
        return -eval_expr(expr[1], env, line, col)
    a = eval_expr(expr[1], env, line, col)
    b = eval_expr(expr[2], env, line, col)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    raise QasmError(f"bad expression operator {op!r}", line, col)


@dataclass(frozen=True)
class QregDecl:
    name: str
    size: int
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class CregDecl:
    name: str
    size: int
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class GateCall:
    name: str
    params: tuple[Expr, ...]
    operands: tuple[Operand, ...]
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class MeasureStmt:
    src: Operand
    dst: Operand
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class BarrierStmt:
    operands: tuple[Operand, ...]
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class AssertSup:
    operands: tuple[Operand, ...]
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class AssertEqKet:
    operands: tuple[Operand, ...]
    bits: str
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class AssertEqAmps:
    operands: tuple[Operand, ...]
    amplitudes: tuple[complex, ...]
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class AssertEqCircuit:
    operands: tuple[Operand, ...]
    qregs: tuple[QregDecl, ...]
    body: tuple["Statement", ...]
    line: int = 0
    col: int = 0


Statement = Union[
    GateCall, MeasureStmt, BarrierStmt, AssertSup, AssertEqKet, AssertEqAmps, AssertEqCircuit
]


@dataclass(frozen=True)
class GateDefinition:
    name: str
    params: tuple[str, ...]
    qubits: tuple[str, ...]
    body: tuple[Statement, ...]
    line: int = 0
    col: int = 0


@dataclass
class AST:
    qregs: list[QregDecl] = field(default_factory=list)
    cregs: list[CregDecl] = field(default_factory=list)
    gates: dict[str, GateDefinition] = field(default_factory=dict)
    statements: list[Statement] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise QasmError(f"expected {want!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.advance()

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        t = self.tok
        if t.kind == kind and (text is None or t.text == text):
            return self.advance()
        return None

    # -- program ------------------------------------------------------------

    def parse_program(self) -> AST:
        ast = AST()
        # tolerate OpenQASM headers
        if self.tok.kind == "id" and self.tok.text == "OPENQASM":
            self.advance()
            self.expect("number")
            self.expect("sym", ";")
        while True:
            t = self.tok
            if t.kind == "eof":
                break
            if t.kind == "id" and t.text == "include":
                self.advance()
                self.expect("string")
                self.expect("sym", ";")
                continue
            if t.kind == "id" and t.text == "qreg":
                ast.qregs.append(self._parse_reg_decl("qreg", ast))
                continue
            if t.kind == "id" and t.text == "creg":
                ast.cregs.append(self._parse_reg_decl("creg", ast))
                continue
            if t.kind == "id" and t.text == "gate":
                gd = self._parse_gate_def()
                if gd.name in ast.gates or gd.name in GATE_SET:
                    raise QasmError(f"duplicate gate definition {gd.name!r}", gd.line, gd.col)
                ast.gates[gd.name] = gd
                continue
            ast.statements.append(self._parse_statement())
        return ast

    def _parse_reg_decl(self, keyword: str, ast: AST) -> QregDecl | CregDecl:
        t = self.expect("id", keyword)
        name = self.expect("id").text
        self.expect("sym", "[")
        size_tok = self.expect("number")
        self.expect("sym", "]")
        self.expect("sym", ";")
        try:
            size = int(size_tok.text)
        except ValueError:
            raise QasmError("register size must be an integer", size_tok.line, size_tok.col)
        if size < 1:
            raise QasmError("register size must be positive", size_tok.line, size_tok.col)
        taken = {d.name for d in ast.qregs} | {d.name for d in ast.cregs}
        if name in taken:
            raise QasmError(f"duplicate register name {name!r}", t.line, t.col)
        cls = QregDecl if keyword == "qreg" else CregDecl
        return cls(name, size, t.line, t.col)

    def _parse_gate_def(self) -> GateDefinition:
        t = self.expect("id", "gate")
        name = self.expect("id").text
        params: list[str] = []
        if self.accept("sym", "("):
            if not self.accept("sym", ")"):
                params.append(self.expect("id").text)
                while self.accept("sym", ","):
                    params.append(self.expect("id").text)
                self.expect("sym", ")")
        qubits = [self.expect("id").text]
        while self.accept("sym", ","):
            qubits.append(self.expect("id").text)
        self.expect("sym", "{")
        body: list[Statement] = []
        while not self.accept("sym", "}"):
            if self.tok.kind == "eof":
                raise QasmError("unterminated gate body", t.line, t.col)
            stmt = self._parse_statement()
            if isinstance(stmt, MeasureStmt):
                raise QasmError("measurements are not allowed in gate bodies", stmt.line, stmt.col)
            body.append(stmt)
        return GateDefinition(name, tuple(params), tuple(qubits), tuple(body), t.line, t.col)

    # -- statements ----------------------------------------------------------

    def _parse_statement(self) -> Statement:
        t = self.tok
        if t.kind == "assert":
            return self._parse_assertion()
        if t.kind == "id" and t.text == "measure":
            self.advance()
            src = self._parse_operand()
            self.expect("arrow")
            dst = self._parse_operand()
            self.expect("sym", ";")
            return MeasureStmt(src, dst, t.line, t.col)
        if t.kind == "id" and t.text == "barrier":
            self.advance()
            ops = self._parse_operand_list()
            self.expect("sym", ";")
            return BarrierStmt(tuple(ops), t.line, t.col)
        if t.kind == "id":
            name = self.advance().text
            params: list[Expr] = []
            if self.accept("sym", "("):
                params.append(self._parse_expr())
                while self.accept("sym", ","):
                    params.append(self._parse_expr())
                self.expect("sym", ")")
            ops = self._parse_operand_list()
            self.expect("sym", ";")
            return GateCall(name, tuple(params), tuple(ops), t.line, t.col)
        raise QasmError(f"unexpected token {t.text!r}", t.line, t.col)

    def _parse_assertion(self) -> Statement:
        t = self.advance()
        ops = tuple(self._parse_operand_list())
        if t.text == "assert-sup":
            self.expect("sym", ";")
            return AssertSup(ops, t.line, t.col)
        # assert-eq
        if self.accept("sym", "="):
            if self.accept("sym", "|"):
                bits_tok = self.expect("number")
                if not re.fullmatch(r"[01]+", bits_tok.text):
                    raise QasmError("ket literal must contain only 0/1 bits", bits_tok.line, bits_tok.col)
                self.expect("sym", ">")
                self.expect("sym", ";")
                return AssertEqKet(ops, bits_tok.text, t.line, t.col)
            self.expect("sym", "{")
            amps = [self._parse_amplitude()]
            while self.accept("sym", ","):
                amps.append(self._parse_amplitude())
            self.expect("sym", "}")
            self.accept("sym", ";")
            return AssertEqAmps(ops, tuple(amps), t.line, t.col)
        # circuit block
        self.expect("sym", "{")
        qregs: list[QregDecl] = []
        body: list[Statement] = []
        while not self.accept("sym", "}"):
            if self.tok.kind == "eof":
                raise QasmError("unterminated assertion block", t.line, t.col)
            if self.tok.kind == "id" and self.tok.text == "qreg":
                tmp = AST()
                tmp.qregs = list(qregs)
                qregs.append(self._parse_reg_decl("qreg", tmp))  # type: ignore[arg-type]
                continue
            if self.tok.kind == "id" and self.tok.text == "creg":
                raise QasmError(
                    "classical registers are not allowed in assertion blocks",
                    self.tok.line, self.tok.col,
                )
            stmt = self._parse_statement()
            if isinstance(stmt, MeasureStmt):
                raise QasmError("measurements are not allowed in assertion blocks", stmt.line, stmt.col)
            if isinstance(stmt, (AssertSup, AssertEqKet, AssertEqAmps, AssertEqCircuit)):
                raise QasmError("nested assertions are not allowed", stmt.line, stmt.col)
            body.append(stmt)
        self.accept("sym", ";")
        return AssertEqCircuit(ops, tuple(qregs), tuple(body), t.line, t.col)

    def _parse_operand(self) -> Operand:
        t = self.expect("id")
        idx: Optional[int] = None
        if self.accept("sym", "["):
            n = self.expect("number")
            try:
                idx = int(n.text)
            except ValueError:
                raise QasmError("index must be an integer", n.line, n.col)
            self.expect("sym", "]")
        return Operand(t.text, idx, t.line, t.col)

    def _parse_operand_list(self) -> list[Operand]:
        ops = [self._parse_operand()]
        while self.accept("sym", ","):
            ops.append(self._parse_operand())
        return ops

    # -- numeric expressions ---------------------------------------------------

    def _parse_expr(self) -> Expr:
        return self._parse_add()

    def _parse_add(self) -> Expr:
        e = self._parse_mul()
        while True:
            if self.accept("sym", "+"):
                e = ("+", e, self._parse_mul())
            elif self.accept("sym", "-"):
                e = ("-", e, self._parse_mul())
            else:
                return e

    def _parse_mul(self) -> Expr:
        e = self._parse_unary()
        while True:
            if self.accept("sym", "*"):
                e = ("*", e, self._parse_unary())
            elif self.accept("sym", "/"):
                e = ("/", e, self._parse_unary())
            else:
                return e

    def _parse_unary(self) -> Expr:
        if self.accept("sym", "-"):
            return ("neg", self._parse_unary())
        if self.accept("sym", "+"):
            return self._parse_unary()
        t = self.tok
        if t.kind == "number":
            self.advance()
            return ("num", float(t.text))
        if t.kind == "id":
            self.advance()
            return ("name", t.text)
        if self.accept("sym", "("):
            e = self._parse_expr()
            self.expect("sym", ")")
            return e
        raise QasmError(f"expected a numeric expression, found {t.text!r}", t.line, t.col)

    def _parse_amplitude(self) -> complex:
        """Amplitude literal: a, bi, a+bi or a-bi (reals are plain numbers)."""
        sign = -1.0 if self.accept("sym", "-") else 1.0
        t = self.expect("number")
        value = sign * float(t.text)
        if self.accept("id", "i"):
            return complex(0.0, value)
        if self.accept("sym", "+"):
            imag_sign = 1.0
        elif self.accept("sym", "-"):
            imag_sign = -1.0
        else:
            return complex(value, 0.0)
        t2 = self.expect("number")
        self.expect("id", "i")
        return complex(value, imag_sign * float(t2.text))


def parse_program(src: SourceProgram | str) -> AST:
    """Parse source text into an AST of declarations, gate defs and statements."""
    text = src.text if isinstance(src, SourceProgram) else src
    return _Parser(tokenize(text)).parse_program()


# ---------------------------------------------------------------------------
# Inlining

class _Inliner:
    def __init__(self, ast: AST):
        self.ast = ast
        self.prog = FlatProgram(
            qregs=tuple((d.name, d.size) for d in ast.qregs),
            cregs=tuple((d.name, d.size) for d in ast.cregs),
            steps=(),
        )
        self.qreg_sizes = {d.name: d.size for d in ast.qregs}
        self.creg_sizes = {d.name: d.size for d in ast.cregs}
        self.steps: list[Union[Instruction, Assertion]] = []
        self.next_assertion_id = 0

    def run(self) -> FlatProgram:
        for stmt in self.ast.statements:
            self._emit(stmt, env={}, qubit_map=None, call_stack=())
        return FlatProgram(self.prog.qregs, self.prog.cregs, tuple(self.steps))

    # resolve an operand under an optional formal-qubit substitution map
    def _resolve(
        self,
        op: Operand,
        qubit_map: Optional[dict[str, tuple[int, str]]],
    ) -> list[tuple[int, str]]:
        """Return [(global qubit, label), ...]; registers broadcast to all qubits."""
        if qubit_map is not None:
            if op.name in qubit_map:
                if op.index is not None:
                    raise QasmError(
                        f"formal qubit {op.name!r} cannot be indexed", op.line, op.col
                    )
                return [qubit_map[op.name]]
            raise QasmError(f"unknown qubit {op.name!r} in gate body", op.line, op.col)
        if op.name not in self.qreg_sizes:
            raise QasmError(f"unknown quantum register {op.name!r}", op.line, op.col)
        size = self.qreg_sizes[op.name]
        if op.index is None:
            return [
                (self.prog.qubit_index(op.name, i), f"{op.name}{i}" if size > 1 else f"{op.name}0")
                for i in range(size)
            ]
        if not 0 <= op.index < size:
            raise QasmError(
                f"index {op.index} out of range for register {op.name!r}[{size}]",
                op.line, op.col,
            )
        return [(self.prog.qubit_index(op.name, op.index), f"{op.name}{op.index}")]

    def _resolve_clbit(self, op: Operand) -> list[tuple[str, int]]:
        if op.name not in self.creg_sizes:
            raise QasmError(f"unknown classical register {op.name!r}", op.line, op.col)
        size = self.creg_sizes[op.name]
        if op.index is None:
            return [(op.name, i) for i in range(size)]
        if not 0 <= op.index < size:
            raise QasmError(
                f"index {op.index} out of range for register {op.name!r}[{size}]",
                op.line, op.col,
            )
        return [(op.name, op.index)]

    def _emit(
        self,
        stmt: Statement,
        env: dict[str, float],
        qubit_map: Optional[dict[str, tuple[int, str]]],
        call_stack: tuple[str, ...],
    ) -> None:
        if isinstance(stmt, MeasureStmt):
            srcs = self._resolve(stmt.src, qubit_map)
            dsts = self._resolve_clbit(stmt.dst)
            if len(srcs) != len(dsts):
                raise QasmError(
                    "measure source and destination sizes differ", stmt.line, stmt.col
                )
            for (q, _), c in zip(srcs, dsts):
                self.steps.append(Instruction("measure", (q,), clbit=c))
            return
        if isinstance(stmt, BarrierStmt):
            qubits: list[int] = []
            for op in stmt.operands:
                qubits.extend(q for q, _ in self._resolve(op, qubit_map))
            self.steps.append(Instruction("barrier", tuple(qubits)))
            return
        if isinstance(stmt, (AssertSup, AssertEqKet, AssertEqAmps, AssertEqCircuit)):
            self._emit_assertion(stmt, qubit_map)
            return
        assert isinstance(stmt, GateCall)
        self._emit_gate_call(stmt, env, qubit_map, call_stack)

    def _emit_gate_call(
        self,
        stmt: GateCall,
        env: dict[str, float],
        qubit_map: Optional[dict[str, tuple[int, str]]],
        call_stack: tuple[str, ...],
    ) -> None:
        params = tuple(eval_expr(p, env, stmt.line, stmt.col) for p in stmt.params)
        resolved = [self._resolve(op, qubit_map) for op in stmt.operands]
        if stmt.name in GATE_SET:
            info = GATE_SET[stmt.name]
            if len(params) != info.n_params:
                raise QasmError(
                    f"gate {stmt.name!r} takes {info.n_params} parameter(s), got {len(params)}",
                    stmt.line, stmt.col,
                )
            if len(resolved) != info.n_qubits:
                raise QasmError(
                    f"gate {stmt.name!r} takes {info.n_qubits} qubit operand(s), got {len(resolved)}",
                    stmt.line, stmt.col,
                )
            widths = {len(r) for r in resolved if len(r) > 1}
            if len(widths) > 1:
                raise QasmError("register operands have mismatched sizes", stmt.line, stmt.col)
            width = widths.pop() if widths else 1
            for i in range(width):
                qubits = tuple(r[0][0] if len(r) == 1 else r[i][0] for r in resolved)
                if len(set(qubits)) != len(qubits):
                    raise QasmError("duplicate qubit operand", stmt.line, stmt.col)
                self.steps.append(Instruction(stmt.name, qubits, params))
            return
        gd = self.ast.gates.get(stmt.name)
        if gd is None:
            raise QasmError(f"unknown gate {stmt.name!r}", stmt.line, stmt.col)
        if stmt.name in call_stack:
            raise QasmError(f"recursive gate definition {stmt.name!r}", stmt.line, stmt.col)
        if len(params) != len(gd.params):
            raise QasmError(
                f"gate {stmt.name!r} takes {len(gd.params)} parameter(s), got {len(params)}",
                stmt.line, stmt.col,
            )
        if len(resolved) != len(gd.qubits):
            raise QasmError(
                f"gate {stmt.name!r} takes {len(gd.qubits)} qubit operand(s), got {len(resolved)}",
                stmt.line, stmt.col,
            )
        for r in resolved:
            if len(r) != 1:
                raise QasmError(
                    "custom gate operands must be single qubits", stmt.line, stmt.col
                )
        actuals = {formal: r[0] for formal, r in zip(gd.qubits, resolved)}
        if len({q for q, _ in actuals.values()}) != len(actuals):
            raise QasmError("duplicate qubit operand", stmt.line, stmt.col)
        new_env = dict(zip(gd.params, params))
        for body_stmt in gd.body:
            self._emit(body_stmt, new_env, actuals, call_stack + (stmt.name,))

    def _emit_assertion(
        self,
        stmt: Union[AssertSup, AssertEqKet, AssertEqAmps, AssertEqCircuit],
        qubit_map: Optional[dict[str, tuple[int, str]]],
    ) -> None:
        targets: list[int] = []
        labels: list[str] = []
        for op in stmt.operands:
            if qubit_map is not None and op.name in qubit_map:
                q, _ = qubit_map[op.name]
                targets.append(q)
                labels.append(op.name)
            else:
                for q, label in self._resolve(op, qubit_map):
                    targets.append(q)
                    labels.append(label)
        if len(set(targets)) != len(targets):
            raise QasmError("duplicate assertion target", stmt.line, stmt.col)
        if not targets:
            raise QasmError("assertion needs at least one target", stmt.line, stmt.col)
        n = len(targets)
        if isinstance(stmt, AssertSup):
            kind: object = Superposition()
        elif isinstance(stmt, AssertEqKet):
            if len(stmt.bits) != n:
                raise QasmError(
                    f"ket literal has {len(stmt.bits)} bits but assertion has {n} target(s)",
                    stmt.line, stmt.col,
                )
            amps = [0j] * (2 ** n)
            amps[int(stmt.bits, 2)] = 1.0 + 0j
            kind = EqualityState(tuple(amps))
        elif isinstance(stmt, AssertEqAmps):
            length = len(stmt.amplitudes)
            if length & (length - 1) or length == 0:
                raise QasmError(
                    f"amplitude list length {length} is not a power of two", stmt.line, stmt.col
                )
            if length != 2 ** n:
                raise QasmError(
                    f"amplitude list length {length} != 2^{n} for {n} target(s)",
                    stmt.line, stmt.col,
                )
            try:
                kind = EqualityState(normalized_amplitudes(stmt.amplitudes))
            except CircuitError as exc:
                raise QasmError(str(exc), stmt.line, stmt.col)
        else:
            kind = self._build_circuit_kind(stmt, n)
        self.steps.append(
            Assertion(self.next_assertion_id, tuple(targets), tuple(labels), kind)  # type: ignore[arg-type]
        )
        self.next_assertion_id += 1

    def _build_circuit_kind(self, stmt: AssertEqCircuit, n_targets: int) -> EqualityCircuit:
        # block qubits map positionally, in declaration order, to the targets
        local_map: dict[str, tuple[int, str]] = {}
        local_sizes: dict[str, int] = {}
        offset = 0
        for decl in stmt.qregs:
            local_sizes[decl.name] = decl.size
            offset += decl.size
        total = offset
        if total != n_targets:
            raise QasmError(
                f"assertion block declares {total} qubit(s) but assertion has {n_targets} target(s)",
                stmt.line, stmt.col,
            )
        # emit the block body over local indices using a nested inliner view
        sub = _Inliner(self.ast)
        sub.qreg_sizes = local_sizes
        sub.prog = FlatProgram(
            qregs=tuple((d.name, d.size) for d in stmt.qregs), cregs=(), steps=()
        )
        sub.creg_sizes = {}
        for body_stmt in stmt.body:
            sub._emit(body_stmt, env={}, qubit_map=None, call_stack=())
        body: list[Instruction] = []
        for step in sub.steps:
            if not isinstance(step, Instruction):
                raise QasmError("nested assertions are not allowed", stmt.line, stmt.col)
            if step.is_measure:
                raise QasmError(
                    "measurements are not allowed in assertion blocks", stmt.line, stmt.col
                )
            body.append(step)
        return EqualityCircuit(tuple(body), total)


def inline(ast: AST) -> FlatProgram:
    """Expand custom gate calls and register broadcasts into a FlatProgram."""
    return _Inliner(ast).run()


def parse_and_inline(src: SourceProgram | str) -> FlatProgram:
    return inline(parse_program(src))


# ---------------------------------------------------------------------------
# Pretty printing

def _fmt_param(p: float) -> str:
    return repr(p)


def format_instruction(instr: Instruction, prog: FlatProgram) -> str:
    if instr.is_measure:
        creg, idx = instr.clbit  # type: ignore[misc]
        return f"measure {prog.qubit_ref(instr.qubits[0])} -> {creg}[{idx}];"
    if instr.is_barrier:
        refs = ", ".join(prog.qubit_ref(q) for q in instr.qubits)
        return f"barrier {refs};" if refs else "barrier;"
    refs = ", ".join(prog.qubit_ref(q) for q in instr.qubits)
    if instr.params:
        return f"{instr.name}({', '.join(_fmt_param(p) for p in instr.params)}) {refs};"
    return f"{instr.name} {refs};"


def format_program(prog: FlatProgram) -> str:
    """Render declarations and instructions (assertion steps are skipped)."""
    lines = [f"qreg {name}[{size}];" for name, size in prog.qregs]
    lines += [f"creg {name}[{size}];" for name, size in prog.cregs]
    lines += [format_instruction(i, prog) for i in prog.instructions]
    return "\n".join(lines) + "\n"
