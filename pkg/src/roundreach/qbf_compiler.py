"""Compiling quantified boolean formulas into rounded linear systems."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .errors import GadgetBrokenError, InternalInvariantError
from .rounding import ArgandRounding, RoundingKind, round_real


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Not:
    sub: "BoolExpr"


@dataclass(frozen=True)
class And:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class Or:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class Const:
    value: bool


BoolExpr = Union[Var, Not, And, Or, Const]


def expr_vars(expr: BoolExpr) -> set[int]:
    if isinstance(expr, Var):
        return {expr.index}
    if isinstance(expr, Not):
        return expr_vars(expr.sub)
    if isinstance(expr, (And, Or)):
        return expr_vars(expr.left) | expr_vars(expr.right)
    return set()


def op_count(expr: BoolExpr) -> int:
    """Number of logical operators (internal nodes, negation included)."""
    if isinstance(expr, Not):
        return 1 + op_count(expr.sub)
    if isinstance(expr, (And, Or)):
        return 1 + op_count(expr.left) + op_count(expr.right)
    return 0


def eval_expr(expr: BoolExpr, assignment: dict[int, bool]) -> bool:
    if isinstance(expr, Var):
        return assignment[expr.index]
    if isinstance(expr, Not):
        return not eval_expr(expr.sub, assignment)
    if isinstance(expr, And):
        return eval_expr(expr.left, assignment) and eval_expr(expr.right, assignment)
    if isinstance(expr, Or):
        return eval_expr(expr.left, assignment) or eval_expr(expr.right, assignment)
    return expr.value


@dataclass(frozen=True)
class QbfFormula:
    """A prenex QBF: quantifier prefix over distinct variables, then a matrix."""

    prefix: tuple[tuple[str, int], ...]
    matrix: BoolExpr

    def __post_init__(self) -> None:
        seen = set()
        for quant, v in self.prefix:
            if quant not in ("a", "e"):
                raise ValueError(f"unknown quantifier {quant!r}")
            if v in seen:
                raise ValueError(f"variable x{v} quantified twice")
            seen.add(v)
        free = expr_vars(self.matrix) - seen
        if free:
            raise ValueError(f"free variables: {sorted(free)}")

    def is_canonical(self) -> bool:
        n = len(self.prefix)
        if n == 0 or n % 2 != 0:
            return False
        for pos, (quant, v) in enumerate(self.prefix, start=1):
            if v != pos:
                return False
            if quant != ("a" if pos % 2 == 1 else "e"):
                return False
        return True


def canonicalize(formula: QbfFormula) -> QbfFormula:
    """Equivalent formula whose prefix strictly alternates forall/exists,
    starts with forall, ends with exists, and numbers variables 1..n.

    Padding uses fresh variables absent from the matrix, which leaves the
    truth value unchanged.
    """
    quants: list[str] = []
    originals: list[Optional[int]] = []
    expected = "a"
    for quant, v in formula.prefix:
        if quant != expected:
            quants.append(expected)
            originals.append(None)
            expected = "e" if expected == "a" else "a"
        quants.append(quant)
        originals.append(v)
        expected = "e" if expected == "a" else "a"
    if not quants:
        quants = ["a"]
        originals = [None]
        expected = "e"
    if expected == "e":
        # last bound quantifier was forall; close with an exists
        quants.append("e")
        originals.append(None)
    rename = {
        old: pos
        for pos, old in enumerate(originals, start=1)
        if old is not None
    }
    new_prefix = tuple(
        ("a" if pos % 2 == 1 else "e", pos) for pos in range(1, len(quants) + 1)
    )

    def remap(expr: BoolExpr) -> BoolExpr:
        if isinstance(expr, Var):
            return Var(rename[expr.index])
        if isinstance(expr, Not):
            return Not(remap(expr.sub))
        if isinstance(expr, And):
            return And(remap(expr.left), remap(expr.right))
        if isinstance(expr, Or):
            return Or(remap(expr.left), remap(expr.right))
        return expr

    out = QbfFormula(new_prefix, remap(formula.matrix))
    if not out.is_canonical():
        raise InternalInvariantError("canonicalization failed to normalize the prefix")
    return out


def evaluate_qbf(formula: QbfFormula, limit: int = 16) -> bool:
    """Semantic truth value by exhaustive quantifier expansion."""
    if len(formula.prefix) > limit:
        raise ValueError(f"refusing to expand more than {limit} quantifiers")
    assignment: dict[int, bool] = {}

    def rec(i: int) -> bool:
        if i == len(formula.prefix):
            return eval_expr(formula.matrix, assignment)
        quant, v = formula.prefix[i]
        results = []
        for val in (False, True):
            assignment[v] = val
            results.append(rec(i + 1))
        del assignment[v]
        return all(results) if quant == "a" else any(results)

    return rec(0)


# ---------------------------------------------------------------------------
# Parsing


class _Tokens:
    def __init__(self, items: list[str]) -> None:
        self.items = items
        self.at = 0

    def peek(self) -> Optional[str]:
        return self.items[self.at] if self.at < len(self.items) else None

    def pop(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ValueError("unexpected end of formula")
        self.at += 1
        return tok


def _tokenize(text: str) -> list[str]:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()|&!:":
            out.append(ch)
            i += 1
            continue
        j = i
        while j < len(text) and (text[j].isalnum() or text[j] == "_"):
            j += 1
        if j == i:
            raise ValueError(f"unexpected character {ch!r}")
        out.append(text[i:j])
        i = j
    return out


def _parse_var(tok: str) -> int:
    if not tok.startswith("x") or not tok[1:].isdigit():
        raise ValueError(f"expected a variable like x1, got {tok!r}")
    index = int(tok[1:])
    if index < 1:
        raise ValueError("variable indices start at 1")
    return index


def _parse_or(tokens: _Tokens) -> BoolExpr:
    left = _parse_and(tokens)
    while tokens.peek() == "|":
        tokens.pop()
        left = Or(left, _parse_and(tokens))
    return left


def _parse_and(tokens: _Tokens) -> BoolExpr:
    left = _parse_atom(tokens)
    while tokens.peek() == "&":
        tokens.pop()
        left = And(left, _parse_atom(tokens))
    return left


def _parse_atom(tokens: _Tokens) -> BoolExpr:
    tok = tokens.pop()
    if tok == "(":
        inner = _parse_or(tokens)
        if tokens.pop() != ")":
            raise ValueError("unbalanced parentheses")
        return inner
    if tok == "!":
        return Not(_parse_atom(tokens))
    if tok in ("true", "1"):
        return Const(True)
    if tok in ("false", "0"):
        return Const(False)
    return Var(_parse_var(tok))


def parse_prefix_formula(text: str) -> QbfFormula:
    """Parse 'forall x1 exists x2 : (x1 | x2)' style input."""
    tokens = _Tokens(_tokenize(text))
    prefix = []
    while tokens.peek() in ("forall", "exists"):
        quant = "a" if tokens.pop() == "forall" else "e"
        prefix.append((quant, _parse_var(tokens.pop())))
    if tokens.peek() == ":":
        tokens.pop()
    elif prefix:
        raise ValueError("expected ':' between prefix and matrix")
    matrix = _parse_or(tokens)
    if tokens.peek() is not None:
        raise ValueError(f"trailing input from {tokens.peek()!r}")
    return QbfFormula(tuple(prefix), matrix)


def parse_qdimacs(text: str) -> QbfFormula:
    """Parse QDIMACS; free variables bind existentially at the front."""
    header = None
    prefix: list[tuple[str, int]] = []
    clause_tokens: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        if line[0] in "ae":
            kind = line[0]
            body = line[1:].split()
            if not body or body[-1] != "0":
                raise ValueError(f"quantifier line must end in 0: {line!r}")
            for tok in body[:-1]:
                prefix.append((kind, int(tok)))
            continue
        clause_tokens.extend(int(tok) for tok in line.split())
    if header is None:
        raise ValueError("missing 'p cnf' line")
    clauses: list[list[int]] = [[]]
    for lit in clause_tokens:
        if lit == 0:
            clauses.append([])
        else:
            clauses[-1].append(lit)
    clauses = [c for c in clauses if c]
    if len(clauses) != header[1]:
        raise ValueError(f"expected {header[1]} clauses, found {len(clauses)}")

    def literal(lit: int) -> BoolExpr:
        return Var(lit) if lit > 0 else Not(Var(-lit))

    def or_chain(lits: list[int]) -> BoolExpr:
        expr: BoolExpr = literal(lits[0])
        for lit in lits[1:]:
            expr = Or(expr, literal(lit))
        return expr

    matrix: BoolExpr = Const(True)
    exprs = [or_chain(c) for c in clauses]
    if exprs:
        matrix = exprs[0]
        for e in exprs[1:]:
            matrix = And(matrix, e)
    bound = {v for _q, v in prefix}
    free = sorted(expr_vars(matrix) - bound)
    prefix = [("e", v) for v in free] + prefix
    return QbfFormula(tuple(prefix), matrix)


# ---------------------------------------------------------------------------
# Gadget rows


class GadgetFamily(enum.Enum):
    FLOOR = "floor"
    CEIL = "ceil"
    MINIMAL_ERROR = "minerr"

    @property
    def rounding_kind(self) -> RoundingKind:
        return {
            GadgetFamily.FLOOR: RoundingKind.FLOOR,
            GadgetFamily.CEIL: RoundingKind.CEIL,
            GadgetFamily.MINIMAL_ERROR: RoundingKind.MINIMAL_ERROR_UP,
        }[self]


CONST = -1  # placeholder column resolved to the constant-true slot

Row = dict[int, Fraction]


@dataclass(frozen=True)
class Operand:
    """A gadget input: a program variable, possibly negated, or a constant."""

    var: Optional[int] = None
    negated: bool = False
    const: Optional[bool] = None

    @staticmethod
    def of(var: int) -> "Operand":
        return Operand(var=var)

    @staticmethod
    def neg(var: int) -> "Operand":
        return Operand(var=var, negated=True)

    @staticmethod
    def true() -> "Operand":
        return Operand(const=True)

    @staticmethod
    def false() -> "Operand":
        return Operand(const=False)


def _accumulate(row: Row, operand: Operand, scale: Fraction) -> None:
    if operand.const is not None:
        if operand.const:
            row[CONST] = row.get(CONST, Fraction(0)) + scale
        return
    if operand.negated:
        row[CONST] = row.get(CONST, Fraction(0)) + scale
        row[operand.var] = row.get(operand.var, Fraction(0)) - scale
    else:
        row[operand.var] = row.get(operand.var, Fraction(0)) + scale


def _finish(row: Row) -> Row:
    return {k: v for k, v in row.items() if v}


def or_row(family: GadgetFamily, u: Operand, v: Operand) -> Row:
    row: Row = {}
    if family is GadgetFamily.FLOOR:
        scale = Fraction(1, 2)
        row[CONST] = scale
    elif family is GadgetFamily.CEIL:
        scale = Fraction(1, 2)
    else:
        scale = Fraction(1, 3)
        row[CONST] = scale
    _accumulate(row, u, scale)
    _accumulate(row, v, scale)
    return _finish(row)


def and_row(family: GadgetFamily, u: Operand, v: Operand) -> Row:
    row: Row = {}
    if family is GadgetFamily.FLOOR:
        scale = Fraction(1, 3)
        row[CONST] = scale
    elif family is GadgetFamily.CEIL:
        scale = Fraction(1, 2)
        row[CONST] = -scale
    else:
        scale = Fraction(1, 3)
    _accumulate(row, u, scale)
    _accumulate(row, v, scale)
    return _finish(row)


def not_row(u: Operand) -> Row:
    row: Row = {}
    row[CONST] = Fraction(1)
    _accumulate(row, u, Fraction(-1))
    return _finish(row)


def copy_row(u: Operand) -> Row:
    row: Row = {}
    _accumulate(row, u, Fraction(1))
    return _finish(row)


def zero_row() -> Row:
    return {}


# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class VarLayout:
    """Slot assignment for the program variables of an n-variable, l-operator
    lowering: assignment bits, the evaluated-matrix bit, both suffix-value
    banks, carry bits, the scratch pools, and the constant-true slot."""

    n: int
    l: int

    def x(self, i: int) -> int:
        return i - 1

    @property
    def psi(self) -> int:
        return self.n

    def s0(self, i: int) -> int:
        return self.n + 1 + (i - 1)

    def s1(self, i: int) -> int:
        return 2 * self.n + 1 + (i - 1)

    def c(self, i: int) -> int:
        return 3 * self.n + 1 + (i - 1)

    def psi_aux(self, j: int) -> int:
        return 4 * self.n + 1 + j

    def t(self, j: int) -> int:
        return 4 * self.n + 1 + self.l + j

    def a(self, j: int) -> int:
        return 4 * self.n + 5 + self.l + j

    @property
    def b1(self) -> int:
        return 4 * self.n + 13 + self.l

    @property
    def const(self) -> int:
        return 4 * self.n + 14 + self.l

    @property
    def total(self) -> int:
        return 4 * self.n + 15 + self.l

    def name(self, idx: int) -> str:
        n, l = self.n, self.l
        if idx < n:
            return f"x{idx + 1}"
        if idx == n:
            return "psi"
        if idx < 2 * n + 1:
            return f"s0_{idx - n}"
        if idx < 3 * n + 1:
            return f"s1_{idx - 2 * n}"
        if idx < 4 * n + 1:
            return f"c{idx - 3 * n}"
        if idx < 4 * n + 1 + l:
            return f"p{idx - (4 * n + 1)}"
        if idx < 4 * n + 5 + l:
            return f"t{idx - (4 * n + 1 + l)}"
        if idx < 4 * n + 13 + l:
            return f"a{idx - (4 * n + 5 + l)}"
        if idx == self.b1:
            return "b1"
        if idx == self.const:
            return "const"
        raise IndexError(idx)


Instruction = dict[int, Row]


@dataclass(frozen=True)
class Program:
    """A straight-line boolean program over affine-then-round assignments.

    One instruction updates its listed variables simultaneously (reads see the
    previous state) and leaves every other variable unchanged.
    """

    layout: VarLayout
    family: GadgetFamily
    instructions: tuple[Instruction, ...]

    @property
    def var_count(self) -> int:
        return self.layout.total

    @property
    def step_count(self) -> int:
        return len(self.instructions)


def _resolve_const(row: Row, layout: VarLayout) -> Row:
    # the constant slot may also appear as an ordinary operand, so sum
    out: Row = {}
    for k, v in row.items():
        key = layout.const if k == CONST else k
        out[key] = out.get(key, Fraction(0)) + v
    return out


def lower_gadgets(
    expr: BoolExpr,
    family: GadgetFamily,
    layout: VarLayout,
) -> list[tuple[int, Row]]:
    """Single-assignment rows evaluating expr, in dependency order.

    Every operator node gets one row; non-root nodes write scratch slots in
    the evaluation pool, the root writes the evaluated-matrix slot.
    """
    rows: list[tuple[int, Row]] = []
    next_aux = [0]

    def operand_of(node: BoolExpr) -> Operand:
        if isinstance(node, Var):
            return Operand.of(layout.x(node.index))
        if isinstance(node, Const):
            return Operand.true() if node.value else Operand.false()
        raise InternalInvariantError("operator operands must be lowered first")

    def lower(node: BoolExpr, target: Optional[int]) -> Operand:
        if isinstance(node, (Var, Const)):
            if target is not None:
                rows.append((target, copy_row(operand_of(node))))
                return Operand.of(target)
            return operand_of(node)
        if target is None:
            target = layout.psi_aux(next_aux[0])
            next_aux[0] += 1
        if isinstance(node, Not):
            u = lower(node.sub, None)
            rows.append((target, not_row(u)))
        elif isinstance(node, And):
            u = lower(node.left, None)
            v = lower(node.right, None)
            rows.append((target, and_row(family, u, v)))
        else:
            u = lower(node.left, None)
            v = lower(node.right, None)
            rows.append((target, or_row(family, u, v)))
        return Operand.of(target)

    if isinstance(expr, (Var, Const)):
        return []
    # the root writes psi directly; children go to the scratch pool
    if isinstance(expr, Not):
        u = lower(expr.sub, None)
        rows.append((layout.psi, not_row(u)))
    elif isinstance(expr, And):
        u = lower(expr.left, None)
        v = lower(expr.right, None)
        rows.append((layout.psi, and_row(family, u, v)))
    else:
        u = lower(expr.left, None)
        v = lower(expr.right, None)
        rows.append((layout.psi, or_row(family, u, v)))
    if next_aux[0] > layout.l:
        raise InternalInvariantError("scratch pool overflow in the lowering")
    return rows


def lower_qbf_to_program(formula: QbfFormula, family: GadgetFamily) -> Program:
    """Lower a QBF to the sweep program enumerating assignments in binary order.

    The instruction count is 3n+1+l and the variable count 4n+15+l, where n is
    the (canonical) prefix length and l the operator count of the matrix.
    """
    formula = formula if formula.is_canonical() else canonicalize(formula)
    n = len(formula.prefix)
    l = op_count(formula.matrix)
    layout = VarLayout(n, l)
    instructions: list[Instruction] = []

    # evaluate the matrix into psi, one operator per instruction
    for target, row in lower_gadgets(formula.matrix, family, layout):
        instructions.append({target: _resolve_const(row, layout)})

    if l == 0:
        if isinstance(formula.matrix, Var):
            psi_op = Operand.of(layout.x(formula.matrix.index))
        else:
            psi_op = (
                Operand.true()
                if formula.matrix.value  # type: ignore[union-attr]
                else Operand.false()
            )
    else:
        psi_op = Operand.of(layout.psi)

    xn = layout.x(n)
    f = family

    def res(row: Row) -> Row:
        return _resolve_const(row, layout)

    # store psi into the leaf bank for the current x_n, then advance x_n
    step_a: Instruction = {
        layout.t(0): res(or_row(f, Operand.of(xn), psi_op)),
        layout.t(1): res(or_row(f, Operand.neg(xn), Operand.of(layout.s0(n)))),
        layout.t(2): res(or_row(f, Operand.neg(xn), psi_op)),
        layout.t(3): res(or_row(f, Operand.of(xn), Operand.of(layout.s1(n)))),
    }
    step_b: Instruction = {
        layout.s0(n): res(and_row(f, Operand.of(layout.t(0)), Operand.of(layout.t(1)))),
        layout.s1(n): res(and_row(f, Operand.of(layout.t(2)), Operand.of(layout.t(3)))),
        xn: res(not_row(Operand.of(xn))),
        layout.c(n): res(copy_row(Operand.of(xn))),
    }
    instructions.append(step_a)
    instructions.append(step_b)

    # ripple the carry down, collapsing suffix values as it passes
    for i in range(n - 1, 0, -1):
        xi = layout.x(i)
        ci = layout.c(i)
        carry = layout.c(i + 1)
        s0i, s1i = layout.s0(i), layout.s1(i)
        s0up, s1up = layout.s0(i + 1), layout.s1(i + 1)
        combine = and_row if i % 2 == 0 else or_row
        a = layout.a
        instructions.append(
            {
                a(0): res(and_row(f, Operand.of(carry), Operand.neg(xi))),
                a(1): res(and_row(f, Operand.of(carry), Operand.of(xi))),
                a(2): res(combine(f, Operand.of(s0up), Operand.of(s1up))),
                a(3): res(or_row(f, Operand.neg(carry), Operand.neg(xi))),
                a(4): res(or_row(f, Operand.of(carry), Operand.of(xi))),
                ci: res(and_row(f, Operand.of(carry), Operand.of(xi))),
            }
        )
        instructions.append(
            {
                a(5): res(or_row(f, Operand.neg(a(0)), Operand.of(a(2)))),
                a(6): res(or_row(f, Operand.of(a(0)), Operand.of(s0i))),
                a(7): res(or_row(f, Operand.neg(a(1)), Operand.of(a(2)))),
                a(0): res(or_row(f, Operand.of(a(1)), Operand.of(s1i))),
                carry: zero_row(),
            }
        )
        instructions.append(
            {
                xi: res(and_row(f, Operand.of(a(3)), Operand.of(a(4)))),
                s0i: res(and_row(f, Operand.of(a(5)), Operand.of(a(6)))),
                s1i: res(and_row(f, Operand.of(a(7)), Operand.of(a(0)))),
            }
        )

    # combine the two branches of x_1 and broadcast success everywhere
    instructions.append(
        {
            layout.b1: res(
                and_row(f, Operand.of(layout.s0(1)), Operand.of(layout.s1(1)))
            )
        }
    )
    sweep: Instruction = {}
    for v in range(layout.total):
        sweep[v] = res(or_row(f, Operand.of(layout.b1), Operand.of(v)))
    instructions.append(sweep)

    expected = 3 * n + 1 + l
    if len(instructions) != expected:
        raise InternalInvariantError(
            f"instruction count {len(instructions)} != {expected}"
        )
    return Program(layout, family, tuple(instructions))


def program_initial_state(program: Program) -> tuple[int, ...]:
    state = [0] * program.var_count
    state[program.layout.const] = 1
    return tuple(state)


def program_step(program: Program, state: Sequence[int], instr: Instruction) -> tuple[int, ...]:
    kind = program.family.rounding_kind
    new = list(state)
    for target, row in instr.items():
        acc = Fraction(0)
        for col, coeff in row.items():
            if state[col]:
                acc += coeff * state[col]
        value = round_real(acc, kind, 1)
        if value not in (0, 1):
            raise InternalInvariantError(
                f"non-boolean value {value} written to slot {target}"
            )
        new[target] = int(value)
    return tuple(new)


def run_program_sweep(program: Program, state: Sequence[int]) -> tuple[int, ...]:
    out = tuple(state)
    for instr in program.instructions:
        out = program_step(program, out, instr)
    return out


# ---------------------------------------------------------------------------
# Explosion into one matrix


SparseRow = tuple[tuple[int, Fraction], ...]


@dataclass(frozen=True)
class HardnessInstance:
    """A sparse rounded linear system carrying one sweep instruction per step.

    The state is m stacked copies of the program variables; the single
    nonzero copy advances one position per step, through instruction j on
    hop j. The target is all-ones in copy zero.
    """

    program: Program
    rows: tuple[SparseRow, ...]
    initial: tuple[int, ...]
    target: tuple[int, ...]
    factor: Fraction = Fraction(1)

    @property
    def dimension(self) -> int:
        return len(self.rows)

    @property
    def rounding(self) -> ArgandRounding:
        return ArgandRounding(self.program.family.rounding_kind, Fraction(1))


def explode_program_to_matrix(program: Program) -> HardnessInstance:
    t = program.var_count
    m = program.step_count
    rows: list[SparseRow] = []
    for copy in range(m):
        instr = program.instructions[(copy - 1) % m]
        src = ((copy - 1) % m) * t
        for v in range(t):
            if v in instr:
                row = tuple(
                    (src + col, coeff) for col, coeff in sorted(instr[v].items())
                )
            else:
                row = ((src + v, Fraction(1)),)
            rows.append(row)
    initial = [0] * (m * t)
    initial[program.layout.const] = 1
    target = [0] * (m * t)
    for v in range(t):
        target[v] = 1
    return HardnessInstance(program, tuple(rows), tuple(initial), tuple(target))


def hardness_step(instance: HardnessInstance, state: Sequence[int]) -> tuple[int, ...]:
    kind = instance.program.family.rounding_kind
    factor = instance.factor
    out = []
    for row in instance.rows:
        acc = Fraction(0)
        for col, coeff in row:
            if state[col]:
                acc += coeff * state[col]
        if factor != 1:
            acc *= factor
        value = round_real(acc, kind, 1)
        if value.denominator != 1:
            raise InternalInvariantError("non-integer state in hardness orbit")
        out.append(int(value))
    return tuple(out)


def hardness_simulate(instance: HardnessInstance, steps: int) -> list[tuple[int, ...]]:
    out = [instance.initial]
    state = instance.initial
    for _ in range(steps):
        state = hardness_step(instance, state)
        out.append(state)
    return out


def decide_hardness(instance: HardnessInstance, step_bound: int) -> tuple[bool, Optional[int]]:
    """Reachability of the all-ones copy-zero target within step_bound steps."""
    state = instance.initial
    if state == instance.target:
        return True, 0
    for i in range(1, step_bound + 1):
        state = hardness_step(instance, state)
        if state == instance.target:
            return True, i
    return False, None


def _row_references(row: Row) -> list[int]:
    return sorted(k for k in row.keys())


def _validate_row(
    row: Row,
    const_slot: Optional[int],
    kind: RoundingKind,
    factor: Fraction,
    description: str,
) -> None:
    cols = _row_references(row)
    free = [c for c in cols if c != const_slot]
    if len(free) > 4:
        raise InternalInvariantError("unexpectedly wide gadget row")
    for mask in range(1 << len(free)):
        assignment = {c: (mask >> i) & 1 for i, c in enumerate(free)}
        if const_slot is not None:
            assignment[const_slot] = 1
        acc = Fraction(0)
        for col, coeff in row.items():
            acc += coeff * assignment[col]
        base = round_real(acc, kind, 1)
        if base not in (0, 1):
            raise GadgetBrokenError(
                f"{description}: non-boolean base value {base} on {assignment}"
            )
        scaled = round_real(acc * factor, kind, 1)
        if scaled != base:
            raise GadgetBrokenError(
                f"{description}: factor {factor} changes {assignment} "
                f"from {base} to {scaled}"
            )


def perturb(instance: HardnessInstance, factor: Fraction) -> HardnessInstance:
    """Scale every matrix entry, validating that each row still rounds to the
    same boolean on every boolean input (constant slot held at one)."""
    factor = Fraction(factor)
    if factor <= 0:
        raise ValueError("the perturbation factor must be positive")
    combined = instance.factor * factor
    program = instance.program
    kind = program.family.rounding_kind
    layout = program.layout
    _validate_row(
        {0: Fraction(1)}, None, kind, combined, "identity copy row"
    )
    for step_index, instr in enumerate(program.instructions):
        for target, row in instr.items():
            _validate_row(
                row,
                layout.const,
                kind,
                combined,
                f"instruction {step_index}, slot {layout.name(target)}",
            )
    return HardnessInstance(
        program,
        instance.rows,
        instance.initial,
        instance.target,
        factor=combined,
    )


def compile_qbf(formula: QbfFormula, family: GadgetFamily) -> HardnessInstance:
    return explode_program_to_matrix(lower_qbf_to_program(formula, family))
