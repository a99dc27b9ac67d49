"""Lexer and recursive-descent parser for the probabilistic language.

Concrete syntax (keywords: if/then/else/fi, while/do/od, skip, star, `:=`,
`;` as statement separator)::

    f(n) {
      if n >= 1 then
        if star then
          f(n div 2); f(n div 2)
        else
          g(n - 1)
        fi
      else
        skip
      fi
    }

`bernoulli(p)` on an assignment right-hand side is sugar: the parser invents
a fresh sampling variable bound to the two-point distribution {1: p, 0: 1-p}
and rewrites the statement into an ordinary assignment from that variable.

Sampling variables are recognized structurally: an identifier that is never
a parameter, never assigned, and never used in a predicate or call argument
anywhere in the program is a sampling variable, and must occur exactly once.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .distributions import DiscreteDist, parse_fraction
from .lang import (
    And,
    Assign,
    BinOp,
    Call,
    Cmp,
    Const,
    Expr,
    FunctionEntity,
    IfBool,
    IfStar,
    InfConst,
    Not,
    Or,
    Pow,
    Pred,
    Program,
    Seq,
    Skip,
    Stmt,
    Var,
    While,
    iter_statements,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


_KEYWORDS = {
    "if", "then", "else", "fi", "while", "do", "od", "skip", "star",
    "and", "or", "not", "div", "bernoulli", "inf", "true",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<frac>\d+/\d+)
  | (?P<dec>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>:=|<=|>=|<|>|\^|[-+*(){},;\[\]@=])
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        text = m.group()
        kind = m.lastgroup or ""
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(text)
        else:
            if kind == "sym" or (kind == "ident" and text in _KEYWORDS):
                kind = text
            tokens.append(Token(kind, text, line, col))
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class TokenStream:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)
        return self.next()

    def accept(self, kind: str) -> Optional[Token]:
        if self.peek().kind == kind:
            return self.next()
        return None


# ---------------------------------------------------------------------------
# Expressions and predicates (shared with the certificate format)
# ---------------------------------------------------------------------------

def parse_expr(ts: TokenStream, allow_inf: bool = False) -> Expr:
    node = _parse_term(ts, allow_inf)
    while ts.peek().kind in ("+", "-"):
        op = ts.next().kind
        node = BinOp(op, node, _parse_term(ts, allow_inf))
    return node


def _parse_term(ts: TokenStream, allow_inf: bool) -> Expr:
    node = _parse_factor(ts, allow_inf)
    while ts.peek().kind in ("*", "div"):
        op = ts.next().kind
        node = BinOp(op, node, _parse_factor(ts, allow_inf))
    return node


def _parse_factor(ts: TokenStream, allow_inf: bool) -> Expr:
    node = _parse_atom(ts, allow_inf)
    if ts.accept("^"):
        return Pow(node, _parse_factor(ts, allow_inf))
    return node


def _parse_atom(ts: TokenStream, allow_inf: bool) -> Expr:
    tok = ts.peek()
    if tok.kind == "int":
        ts.next()
        return Const(Fraction(int(tok.text)))
    if tok.kind in ("frac", "dec"):
        ts.next()
        if not allow_inf:
            raise ParseError("non-integer constants are only allowed in certificates",
                             tok.line, tok.col)
        return Const(Fraction(tok.text))
    if tok.kind == "-":
        ts.next()
        nxt = ts.peek()
        if nxt.kind in ("int", "frac", "dec"):  # fold negative literals
            inner = _parse_atom(ts, allow_inf)
            return Const(-inner.value)
        return BinOp("-", Const(Fraction(0)), _parse_atom(ts, allow_inf))
    if tok.kind == "ident":
        ts.next()
        return Var(tok.text)
    if tok.kind == "inf":
        ts.next()
        if not allow_inf:
            raise ParseError("the literal inf is only allowed in certificates",
                             tok.line, tok.col)
        return InfConst()
    if tok.kind == "(":
        ts.next()
        node = parse_expr(ts, allow_inf)
        ts.expect(")")
        return node
    raise ParseError(f"expected an expression, found {tok.text or 'end of input'!r}",
                     tok.line, tok.col)


def parse_pred(ts: TokenStream) -> Pred:
    node = _parse_pred_conj(ts)
    while ts.accept("or"):
        node = Or(node, _parse_pred_conj(ts))
    return node


def _parse_pred_conj(ts: TokenStream) -> Pred:
    node = _parse_pred_atom(ts)
    while ts.accept("and"):
        node = And(node, _parse_pred_atom(ts))
    return node


def _parse_pred_atom(ts: TokenStream) -> Pred:
    if ts.accept("not"):
        return Not(_parse_pred_atom(ts))
    if ts.peek().kind == "(":
        # Either a parenthesized predicate or a parenthesized arithmetic
        # expression starting a comparison; try the comparison first.
        saved = ts.pos
        try:
            return _parse_cmp(ts)
        except ParseError:
            ts.pos = saved
        ts.expect("(")
        node = parse_pred(ts)
        ts.expect(")")
        return node
    return _parse_cmp(ts)


def _parse_cmp(ts: TokenStream) -> Pred:
    left = parse_expr(ts)
    tok = ts.peek()
    if tok.kind not in ("<", "<=", ">", ">="):
        raise ParseError(f"expected a comparison operator, found {tok.text!r}",
                         tok.line, tok.col)
    ts.next()
    return Cmp(tok.kind, left, parse_expr(ts))


# ---------------------------------------------------------------------------
# Statements and programs
# ---------------------------------------------------------------------------

class _ProgramParser:
    def __init__(self, ts: TokenStream):
        self.ts = ts
        self.fresh_coins: List[Tuple[str, DiscreteDist]] = []

    def parse_program(self) -> Program:
        functions = []
        while self.ts.peek().kind != "eof":
            functions.append(self.parse_function())
        if not functions:
            tok = self.ts.peek()
            raise ParseError("a program needs at least one function", tok.line, tok.col)
        return Program(tuple(functions), tuple(self.fresh_coins))

    def parse_function(self) -> FunctionEntity:
        name = self.ts.expect("ident").text
        self.ts.expect("(")
        params: List[str] = []
        if self.ts.peek().kind != ")":
            params.append(self.ts.expect("ident").text)
            while self.ts.accept(","):
                params.append(self.ts.expect("ident").text)
        self.ts.expect(")")
        self.ts.expect("{")
        body = self.parse_stmt_seq()
        self.ts.expect("}")
        return FunctionEntity(name, tuple(params), body)

    def parse_stmt_seq(self) -> Stmt:
        stmts = [self.parse_stmt()]
        while self.ts.accept(";"):
            if self.ts.peek().kind in ("}", "else", "fi", "od", "eof"):
                break  # trailing separator
            stmts.append(self.parse_stmt())
        node = stmts[-1]
        for s in reversed(stmts[:-1]):
            node = Seq(s, node)
        return node

    def parse_stmt(self) -> Stmt:
        tok = self.ts.peek()
        if tok.kind == "skip":
            self.ts.next()
            return Skip()
        if tok.kind == "if":
            self.ts.next()
            if self.ts.accept("star"):
                self.ts.expect("then")
                then = self.parse_stmt_seq()
                self.ts.expect("else")
                orelse = self.parse_stmt_seq()
                self.ts.expect("fi")
                return IfStar(then, orelse)
            cond = parse_pred(self.ts)
            self.ts.expect("then")
            then = self.parse_stmt_seq()
            self.ts.expect("else")
            orelse = self.parse_stmt_seq()
            self.ts.expect("fi")
            return IfBool(cond, then, orelse)
        if tok.kind == "while":
            self.ts.next()
            cond = parse_pred(self.ts)
            self.ts.expect("do")
            body = self.parse_stmt_seq()
            self.ts.expect("od")
            return While(cond, body)
        if tok.kind == "ident":
            if self.ts.peek(1).kind == "(":
                name = self.ts.next().text
                self.ts.next()  # (
                args: List[Expr] = []
                if self.ts.peek().kind != ")":
                    args.append(parse_expr(self.ts))
                    while self.ts.accept(","):
                        args.append(parse_expr(self.ts))
                self.ts.expect(")")
                return Call(name, tuple(args))
            name = self.ts.next().text
            self.ts.expect(":=")
            if self.ts.peek().kind == "bernoulli":
                return self._parse_bernoulli_assign(name)
            return Assign(name, parse_expr(self.ts))
        raise ParseError(f"expected a statement, found {tok.text or 'end of input'!r}",
                         tok.line, tok.col)

    def _parse_bernoulli_assign(self, target: str) -> Stmt:
        tok = self.ts.expect("bernoulli")
        self.ts.expect("(")
        p_tok = self.ts.peek()
        if p_tok.kind not in ("frac", "dec", "int"):
            raise ParseError("bernoulli expects a probability literal", p_tok.line, p_tok.col)
        self.ts.next()
        p = parse_fraction(p_tok.text)
        self.ts.expect(")")
        if not (0 < p < 1):
            raise ParseError(f"bernoulli probability {p} outside (0, 1)", tok.line, tok.col)
        coin = f"_bern{len(self.fresh_coins) + 1}"
        self.fresh_coins.append((coin, DiscreteDist.bernoulli(p)))
        return Assign(target, Var(coin))


def parse_program(source: str) -> Program:
    """Parse and validate; raises ParseError with line/column on bad input."""
    prog = _ProgramParser(TokenStream(tokenize(source))).parse_program()
    _validate(prog)
    return prog


def _validate(prog: Program) -> None:
    names = [f.name for f in prog.functions]
    for name in names:
        if names.count(name) > 1:
            raise ParseError(f"duplicate function name {name!r}")
    arity = {f.name: len(f.params) for f in prog.functions}
    for f in prog.functions:
        if len(set(f.params)) != len(f.params):
            raise ParseError(f"duplicate parameter in function {f.name!r}")
        for stmt in iter_statements(f.body):
            if isinstance(stmt, Call):
                if stmt.fname not in arity:
                    raise ParseError(
                        f"call to undeclared function {stmt.fname!r} in {f.name!r}")
                if len(stmt.args) != arity[stmt.fname]:
                    raise ParseError(
                        f"call to {stmt.fname!r} passes {len(stmt.args)} arguments, "
                        f"declared with {arity[stmt.fname]}")

    _validate_sampling_variables(prog)


def _count_var_occurrences(expr: Expr, counts: Dict[str, int]) -> None:
    if isinstance(expr, Var):
        if expr.name in counts:
            counts[expr.name] += 1
    elif isinstance(expr, BinOp):
        _count_var_occurrences(expr.left, counts)
        _count_var_occurrences(expr.right, counts)
    elif isinstance(expr, Pow):
        _count_var_occurrences(expr.base, counts)
        _count_var_occurrences(expr.exponent, counts)


def _validate_sampling_variables(prog: Program) -> None:
    sampling = set(prog.sampling_variables())
    for coin, _ in prog.builtin_dists:
        if coin not in sampling:
            # A user identifier shadowing the fresh name would make it a
            # program variable and silently change the semantics.
            raise ParseError(f"internal coin variable {coin!r} is shadowed by the program")
    counts: Dict[str, int] = {v: 0 for v in sampling}
    for f in prog.functions:
        for stmt in iter_statements(f.body):
            if isinstance(stmt, Assign):
                _count_var_occurrences(stmt.expr, counts)
    for name, count in counts.items():
        if count != 1:
            raise ParseError(
                f"sampling variable {name!r} appears {count} times; "
                "each sampling variable must appear exactly once")


def load_program(path: str) -> Program:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_program(fh.read())
