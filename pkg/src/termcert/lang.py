"""AST for the recursive probabilistic language, plus labelling and printing.

Programs are lists of function entities over integer program variables;
sampling variables are read-only names bound to distributions elsewhere.
Statement labels are assigned by :func:`label_program` (depth-first, source
order, starting at 1 in each function body, terminal label last) and are
excluded from structural equality so that a pretty-printed program re-parses
to an AST equal to the original.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Iterator, Optional, Set, Tuple, Union

from .distributions import DiscreteDist
from .valuation import Valuation


class EvalError(ArithmeticError):
    """Expression evaluation left the integers (bad divisor or exponent)."""


# ---------------------------------------------------------------------------
# Expressions and predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * div
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"


@dataclass(frozen=True)
class InfConst:
    """The literal `inf`; only certificate expressions may contain it."""


Expr = Union[Const, Var, BinOp, Pow, InfConst]


@dataclass(frozen=True)
class Cmp:
    op: str  # one of < <= > >=
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not:
    inner: "Pred"


@dataclass(frozen=True)
class And:
    left: "Pred"
    right: "Pred"


@dataclass(frozen=True)
class Or:
    left: "Pred"
    right: "Pred"


Pred = Union[Cmp, Not, And, Or]


def expr_variables(expr: Expr) -> Set[str]:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, BinOp):
        return expr_variables(expr.left) | expr_variables(expr.right)
    if isinstance(expr, Pow):
        return expr_variables(expr.base) | expr_variables(expr.exponent)
    return set()


def pred_variables(pred: Pred) -> Set[str]:
    if isinstance(pred, Cmp):
        return expr_variables(pred.left) | expr_variables(pred.right)
    if isinstance(pred, Not):
        return pred_variables(pred.inner)
    return pred_variables(pred.left) | pred_variables(pred.right)


def eval_expr(expr: Expr, *vals: Valuation) -> Fraction:
    """Evaluate under the union of the given valuations (exact arithmetic).

    Program expressions always produce integers; certificate expressions may
    produce non-integer rationals.
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        for v in vals:
            if expr.name in v:
                return Fraction(v[expr.name])
        raise KeyError(f"unbound variable {expr.name!r}")
    if isinstance(expr, BinOp):
        a = eval_expr(expr.left, *vals)
        b = eval_expr(expr.right, *vals)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if expr.op == "div":
            if b.denominator != 1 or b <= 0:
                raise EvalError(f"floor division by non-positive-integer {b}")
            if a.denominator != 1:
                raise EvalError(f"floor division of non-integer {a}")
            return Fraction(a.numerator // b.numerator)
        raise EvalError(f"unknown operator {expr.op!r}")
    if isinstance(expr, Pow):
        base = eval_expr(expr.base, *vals)
        exp = eval_expr(expr.exponent, *vals)
        if exp.denominator != 1 or exp < 0:
            raise EvalError(f"exponent {exp} is not a nonnegative integer")
        return base ** exp.numerator
    if isinstance(expr, InfConst):
        raise EvalError("the literal inf is not a finite expression")
    raise TypeError(f"not an expression: {expr!r}")


def eval_pred(pred: Pred, *vals: Valuation) -> bool:
    if isinstance(pred, Cmp):
        a = eval_expr(pred.left, *vals)
        b = eval_expr(pred.right, *vals)
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[pred.op]
    if isinstance(pred, Not):
        return not eval_pred(pred.inner, *vals)
    if isinstance(pred, And):
        return eval_pred(pred.left, *vals) and eval_pred(pred.right, *vals)
    if isinstance(pred, Or):
        return eval_pred(pred.left, *vals) or eval_pred(pred.right, *vals)
    raise TypeError(f"not a predicate: {pred!r}")


# ---------------------------------------------------------------------------
# Statements, functions, programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Skip:
    label: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    label: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class IfBool:
    cond: Pred
    then: "Stmt"
    orelse: "Stmt"
    label: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class IfStar:
    then: "Stmt"
    orelse: "Stmt"
    label: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class While:
    cond: Pred
    body: "Stmt"
    label: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Call:
    fname: str
    args: Tuple[Expr, ...]
    label: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"


Stmt = Union[Skip, Assign, IfBool, IfStar, While, Call, Seq]


@dataclass(frozen=True)
class FunctionEntity:
    name: str
    params: Tuple[str, ...]
    body: Stmt
    terminal_label: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        # `;` is associative, so statement sequences are canonicalized to a
        # right-nested spine; equality then ignores how callers grouped them.
        object.__setattr__(self, "body", _normalize_stmt(self.body))


def _normalize_stmt(stmt: "Stmt") -> "Stmt":
    if isinstance(stmt, Seq):
        items = [_normalize_stmt(s) for s in _seq_items(stmt)]
        node = items[-1]
        for s in reversed(items[:-1]):
            node = Seq(s, node)
        return node
    if isinstance(stmt, IfBool):
        return IfBool(stmt.cond, _normalize_stmt(stmt.then),
                      _normalize_stmt(stmt.orelse), stmt.label)
    if isinstance(stmt, IfStar):
        return IfStar(_normalize_stmt(stmt.then), _normalize_stmt(stmt.orelse),
                      stmt.label)
    if isinstance(stmt, While):
        return While(stmt.cond, _normalize_stmt(stmt.body), stmt.label)
    return stmt


@dataclass(frozen=True)
class Program:
    functions: Tuple[FunctionEntity, ...]
    # Distributions introduced by bernoulli(...) desugaring, keyed by the
    # fresh sampling variable the parser invented.
    builtin_dists: Tuple[Tuple[str, DiscreteDist], ...] = ()

    def function(self, name: str) -> FunctionEntity:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(f"no function named {name!r}")

    def function_names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in self.functions)

    @property
    def builtin_dist_map(self) -> Dict[str, DiscreteDist]:
        return dict(self.builtin_dists)

    def sampling_variables(self) -> Tuple[str, ...]:
        """All sampling variables, in first-occurrence order."""
        program_vars = _classify_program_variables(self)
        seen = []
        for f in self.functions:
            for stmt in iter_statements(f.body):
                if isinstance(stmt, Assign):
                    for name in sorted(expr_variables(stmt.expr)):
                        if name not in program_vars and name not in seen:
                            seen.append(name)
        return tuple(seen)


def iter_statements(stmt: Stmt) -> Iterator[Stmt]:
    """All statements in depth-first source order (Seq nodes excluded)."""
    if isinstance(stmt, Seq):
        yield from iter_statements(stmt.first)
        yield from iter_statements(stmt.second)
        return
    yield stmt
    if isinstance(stmt, (IfBool, IfStar)):
        yield from iter_statements(stmt.then)
        yield from iter_statements(stmt.orelse)
    elif isinstance(stmt, While):
        yield from iter_statements(stmt.body)


def program_variables(prog: Program, fname: str) -> Tuple[str, ...]:
    """pvars(f): parameters plus every program variable in the body.

    An identifier is a program variable if anywhere in the whole program it
    is a parameter, an assignment target, or appears in a predicate or call
    argument; identifiers used only on assignment right-hand sides are
    sampling variables.
    """
    program_vars = _classify_program_variables(prog)
    f = prog.function(fname)
    names: Set[str] = set(f.params)
    for stmt in iter_statements(f.body):
        if isinstance(stmt, Assign):
            names.add(stmt.var)
            names |= expr_variables(stmt.expr) & program_vars
        elif isinstance(stmt, (IfBool, While)):
            names |= pred_variables(stmt.cond)
        elif isinstance(stmt, Call):
            for arg in stmt.args:
                names |= expr_variables(arg)
    return tuple(sorted(names))


def _classify_program_variables(prog: Program) -> Set[str]:
    out: Set[str] = set()
    for f in prog.functions:
        out |= set(f.params)
        for stmt in iter_statements(f.body):
            if isinstance(stmt, Assign):
                out.add(stmt.var)
            elif isinstance(stmt, (IfBool, While)):
                out |= pred_variables(stmt.cond)
            elif isinstance(stmt, Call):
                for arg in stmt.args:
                    out |= expr_variables(arg)
    return out


# ---------------------------------------------------------------------------
# Labelling
# ---------------------------------------------------------------------------

def label_program(prog: Program) -> Program:
    """Assign distinct labels per function body.

    Depth-first in source order starting at 1; the terminal line of each
    body receives the next label after all statements.  Deterministic, so
    two runs on the same AST agree.
    """
    return Program(
        tuple(_label_function(f) for f in prog.functions),
        prog.builtin_dists,
    )


def _label_function(f: FunctionEntity) -> FunctionEntity:
    counter = itertools.count(1)

    def visit(stmt: Stmt) -> Stmt:
        if isinstance(stmt, Seq):
            first = visit(stmt.first)
            return Seq(first, visit(stmt.second))
        lab = next(counter)
        if isinstance(stmt, Skip):
            return Skip(label=lab)
        if isinstance(stmt, Assign):
            return Assign(stmt.var, stmt.expr, label=lab)
        if isinstance(stmt, Call):
            return Call(stmt.fname, stmt.args, label=lab)
        if isinstance(stmt, IfBool):
            return IfBool(stmt.cond, visit(stmt.then), visit(stmt.orelse), label=lab)
        if isinstance(stmt, IfStar):
            return IfStar(visit(stmt.then), visit(stmt.orelse), label=lab)
        if isinstance(stmt, While):
            return While(stmt.cond, visit(stmt.body), label=lab)
        raise TypeError(f"not a statement: {stmt!r}")

    body = visit(f.body)
    return FunctionEntity(f.name, f.params, body, terminal_label=next(counter))


def is_labelled(prog: Program) -> bool:
    return all(
        f.terminal_label is not None
        and all(getattr(s, "label", 0) is not None for s in iter_statements(f.body))
        for f in prog.functions
    )


def labels_of(f: FunctionEntity) -> Dict[int, Stmt]:
    out = {}
    for stmt in iter_statements(f.body):
        if stmt.label is not None:
            out[stmt.label] = stmt
    return out


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "div": 2}


def format_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Const):
        v = expr.value
        text = str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        return f"({text})" if v < 0 and parent_prec > 0 else text
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, InfConst):
        return "inf"
    if isinstance(expr, Pow):
        base = format_expr(expr.base, 3)
        exp = format_expr(expr.exponent, 3)
        return f"{base} ^ {exp}" if parent_prec < 3 else f"({base} ^ {exp})"
    prec = _PRECEDENCE[expr.op]
    left = format_expr(expr.left, prec)
    # Right operands always get parens at equal precedence so the printed
    # grouping re-parses to the same tree.
    right = format_expr(expr.right, prec + 1)
    text = f"{left} {expr.op} {right}"
    return f"({text})" if prec < parent_prec else text


def format_pred(pred: Pred, parent_prec: int = 0) -> str:
    if isinstance(pred, Cmp):
        return f"{format_expr(pred.left)} {pred.op} {format_expr(pred.right)}"
    if isinstance(pred, Not):
        return f"not ({format_pred(pred.inner)})"
    if isinstance(pred, And):
        text = f"{format_pred(pred.left, 2)} and {format_pred(pred.right, 2)}"
        return f"({text})" if parent_prec > 2 else text
    if isinstance(pred, Or):
        text = f"{format_pred(pred.left, 1)} or {format_pred(pred.right, 1)}"
        return f"({text})" if parent_prec > 1 else text
    raise TypeError(f"not a predicate: {pred!r}")


def pretty_print(prog: Program) -> str:
    """Concrete syntax that re-parses to a structurally equal program."""
    builtin = prog.builtin_dist_map
    chunks = []
    for f in prog.functions:
        lines = [f"{f.name}({', '.join(f.params)}) {{"]
        lines.extend(_pp_stmt(s, 1, builtin) for s in _seq_items(f.body))
        # statement separator: every line but the last gets a ';'
        body = ";\n".join(lines[1:])
        chunks.append(lines[0] + "\n" + body + "\n}")
    return "\n\n".join(chunks) + "\n"


def _seq_items(stmt: Stmt) -> Iterator[Stmt]:
    if isinstance(stmt, Seq):
        yield from _seq_items(stmt.first)
        yield from _seq_items(stmt.second)
    else:
        yield stmt


def _pp_stmt(stmt: Stmt, depth: int, builtin: Dict[str, DiscreteDist]) -> str:
    pad = "  " * depth
    if isinstance(stmt, Skip):
        return f"{pad}skip"
    if isinstance(stmt, Assign):
        if isinstance(stmt.expr, Var) and stmt.expr.name in builtin:
            dist = builtin[stmt.expr.name]
            p = dist.prob(1)
            return f"{pad}{stmt.var} := bernoulli({p.numerator}/{p.denominator})"
        return f"{pad}{stmt.var} := {format_expr(stmt.expr)}"
    if isinstance(stmt, Call):
        args = ", ".join(format_expr(a) for a in stmt.args)
        return f"{pad}{stmt.fname}({args})"
    if isinstance(stmt, IfBool):
        return (
            f"{pad}if {format_pred(stmt.cond)} then\n"
            + _pp_block(stmt.then, depth + 1, builtin)
            + f"\n{pad}else\n"
            + _pp_block(stmt.orelse, depth + 1, builtin)
            + f"\n{pad}fi"
        )
    if isinstance(stmt, IfStar):
        return (
            f"{pad}if star then\n"
            + _pp_block(stmt.then, depth + 1, builtin)
            + f"\n{pad}else\n"
            + _pp_block(stmt.orelse, depth + 1, builtin)
            + f"\n{pad}fi"
        )
    if isinstance(stmt, While):
        return (
            f"{pad}while {format_pred(stmt.cond)} do\n"
            + _pp_block(stmt.body, depth + 1, builtin)
            + f"\n{pad}od"
        )
    raise TypeError(f"not a statement: {stmt!r}")


def _pp_block(stmt: Stmt, depth: int, builtin: Dict[str, DiscreteDist]) -> str:
    return ";\n".join(_pp_stmt(s, depth, builtin) for s in _seq_items(stmt))


def strip_labels(prog: Program) -> Program:
    """Forget all labels (labels are ignored by equality anyway)."""

    def visit(stmt: Stmt) -> Stmt:
        if isinstance(stmt, Seq):
            return Seq(visit(stmt.first), visit(stmt.second))
        if isinstance(stmt, IfBool):
            return IfBool(stmt.cond, visit(stmt.then), visit(stmt.orelse))
        if isinstance(stmt, IfStar):
            return IfStar(visit(stmt.then), visit(stmt.orelse))
        if isinstance(stmt, While):
            return While(stmt.cond, visit(stmt.body))
        return replace(stmt, label=None)

    return Program(
        tuple(
            FunctionEntity(f.name, f.params, visit(f.body), terminal_label=None)
            for f in prog.functions
        ),
        prog.builtin_dists,
    )
