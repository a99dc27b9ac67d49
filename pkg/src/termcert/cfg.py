"""Lowering labelled programs to control-flow graphs.

Each function body becomes a label set partitioned into branching,
assignment, call, and nondeterministic labels, plus a terminal label with
no outgoing edges, and a transition relation of (label, payload, label')
triples:

    branching label     two edges guarded by a predicate and its negation
    assignment label    one edge carrying an update function
    call label          one edge carrying (callee, value-passing function)
    nondeterministic    two star edges with a recorded then/else orientation

The statement labels assigned by the frontend are reused verbatim, so the
graphs line up with the labelled listings that certificates refer to.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from .lang import (
    Assign,
    Call,
    Expr,
    FunctionEntity,
    IfBool,
    IfStar,
    Pred,
    Program,
    Seq,
    Skip,
    Stmt,
    While,
    eval_expr,
    expr_variables,
    format_expr,
    format_pred,
    program_variables,
)
from .valuation import Valuation


class CfgError(ValueError):
    pass


@dataclass(frozen=True)
class PredPayload:
    """Guard of one branching edge; `negated` marks the complement edge."""

    pred: Pred
    negated: bool = False

    def holds(self, nu: Valuation) -> bool:
        from .lang import eval_pred

        result = eval_pred(self.pred, nu)
        return (not result) if self.negated else result

    def render(self) -> str:
        text = format_pred(self.pred)
        return f"not ({text})" if self.negated else text


@dataclass(frozen=True)
class UpdatePayload:
    """Update function of an assignment edge; identity when var is None."""

    var: Optional[str]
    expr: Optional[Expr]
    sampling_vars: Tuple[str, ...] = ()

    def apply(self, nu: Valuation, mu: Valuation) -> Valuation:
        if self.var is None or self.expr is None:
            return nu
        value = eval_expr(self.expr, nu, mu)
        if value.denominator != 1:
            raise CfgError(f"update produced non-integer {value}")
        return nu.updated(self.var, value.numerator)

    def render(self) -> str:
        if self.var is None:
            return "id"
        return f"{self.var} := {format_expr(self.expr)}"


@dataclass(frozen=True)
class CallPayload:
    """Callee plus the value-passing function of a call edge."""

    callee: str
    params: Tuple[str, ...]
    args: Tuple[Expr, ...]
    callee_vars: Tuple[str, ...]

    def pass_values(self, nu: Valuation) -> Valuation:
        bindings = {v: 0 for v in self.callee_vars}
        for param, arg in zip(self.params, self.args):
            value = eval_expr(arg, nu)
            if value.denominator != 1:
                raise CfgError(f"argument {format_expr(arg)} produced non-integer {value}")
            bindings[param] = value.numerator
        return Valuation(bindings)

    def render(self) -> str:
        inner = ", ".join(f"{p} := {format_expr(a)}" for p, a in zip(self.params, self.args))
        return f"call {self.callee}({inner})"


@dataclass(frozen=True)
class StarPayload:
    branch: str  # "then" or "else"

    def render(self) -> str:
        return f"star:{self.branch}"


Payload = Union[PredPayload, UpdatePayload, CallPayload, StarPayload]


@dataclass(frozen=True)
class Transition:
    source: int
    payload: Payload
    target: int


@dataclass(frozen=True)
class CfgFunction:
    name: str
    pvars: Tuple[str, ...]
    entry: int
    exit: int
    branching: frozenset
    assignment: frozenset
    call: frozenset
    nondet: frozenset
    transitions: Tuple[Transition, ...]

    def labels(self) -> Tuple[int, ...]:
        return tuple(sorted(self.branching | self.assignment | self.call
                            | self.nondet | {self.exit}))

    def out_edges(self, label: int) -> Tuple[Transition, ...]:
        return tuple(t for t in self.transitions if t.source == label)

    def label_class(self, label: int) -> str:
        if label == self.exit:
            return "terminal"
        if label in self.branching:
            return "branching"
        if label in self.assignment:
            return "assignment"
        if label in self.call:
            return "call"
        if label in self.nondet:
            return "nondet"
        raise CfgError(f"{self.name} has no label {label}")


@dataclass(frozen=True)
class Cfg:
    functions: Tuple[CfgFunction, ...]
    sampling_vars: Tuple[str, ...]
    builtin_dists: Tuple = ()

    def function(self, name: str) -> CfgFunction:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(f"no function named {name!r}")

    def function_names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in self.functions)


def build_cfg(prog: Program) -> Cfg:
    """Lower a labelled program; every labelled program lowers."""
    pvars = {f.name: program_variables(prog, f.name) for f in prog.functions}
    params = {f.name: f.params for f in prog.functions}
    sampling = set(prog.sampling_variables())

    functions = []
    for f in prog.functions:
        if f.terminal_label is None:
            raise CfgError(f"function {f.name!r} is not labelled")
        builder = _FunctionBuilder(f, pvars, params, sampling)
        functions.append(builder.build())
    return Cfg(tuple(functions), tuple(sorted(sampling)), prog.builtin_dists)


class _FunctionBuilder:
    def __init__(self, f: FunctionEntity, pvars, params, sampling):
        self.f = f
        self.pvars = pvars
        self.params = params
        self.sampling = sampling
        self.transitions: List[Transition] = []
        self.branching: set = set()
        self.assignment: set = set()
        self.call: set = set()
        self.nondet: set = set()

    def build(self) -> CfgFunction:
        exit_label = self.f.terminal_label
        self.lower(self.f.body, exit_label)
        return CfgFunction(
            name=self.f.name,
            pvars=self.pvars[self.f.name],
            entry=_first_label(self.f.body),
            exit=exit_label,
            branching=frozenset(self.branching),
            assignment=frozenset(self.assignment),
            call=frozenset(self.call),
            nondet=frozenset(self.nondet),
            transitions=tuple(sorted(self.transitions, key=_edge_sort_key)),
        )

    def lower(self, stmt: Stmt, next_label: int) -> None:
        """Emit edges for `stmt`, with control flowing to `next_label` after."""
        if isinstance(stmt, Seq):
            self.lower(stmt.first, _first_label(stmt.second))
            self.lower(stmt.second, next_label)
            return
        lab = stmt.label
        if isinstance(stmt, Skip):
            self.assignment.add(lab)
            self.transitions.append(Transition(lab, UpdatePayload(None, None), next_label))
        elif isinstance(stmt, Assign):
            self.assignment.add(lab)
            used = tuple(sorted(expr_variables(stmt.expr) & self.sampling))
            self.transitions.append(
                Transition(lab, UpdatePayload(stmt.var, stmt.expr, used), next_label))
        elif isinstance(stmt, Call):
            self.call.add(lab)
            payload = CallPayload(
                callee=stmt.fname,
                params=self.params[stmt.fname],
                args=stmt.args,
                callee_vars=self.pvars[stmt.fname],
            )
            self.transitions.append(Transition(lab, payload, next_label))
        elif isinstance(stmt, IfBool):
            self.branching.add(lab)
            self.transitions.append(
                Transition(lab, PredPayload(stmt.cond), _first_label(stmt.then)))
            self.transitions.append(
                Transition(lab, PredPayload(stmt.cond, negated=True), _first_label(stmt.orelse)))
            self.lower(stmt.then, next_label)
            self.lower(stmt.orelse, next_label)
        elif isinstance(stmt, IfStar):
            self.nondet.add(lab)
            self.transitions.append(
                Transition(lab, StarPayload("then"), _first_label(stmt.then)))
            self.transitions.append(
                Transition(lab, StarPayload("else"), _first_label(stmt.orelse)))
            self.lower(stmt.then, next_label)
            self.lower(stmt.orelse, next_label)
        elif isinstance(stmt, While):
            # The loop head doubles as the body's continuation.
            self.branching.add(lab)
            self.transitions.append(
                Transition(lab, PredPayload(stmt.cond), _first_label(stmt.body)))
            self.transitions.append(
                Transition(lab, PredPayload(stmt.cond, negated=True), next_label))
            self.lower(stmt.body, lab)
        else:
            raise CfgError(f"cannot lower {stmt!r}")


def _first_label(stmt: Stmt) -> int:
    while isinstance(stmt, Seq):
        stmt = stmt.first
    return stmt.label


def _edge_sort_key(t: Transition):
    if isinstance(t.payload, PredPayload):
        branch_rank = 1 if t.payload.negated else 0
    elif isinstance(t.payload, StarPayload):
        branch_rank = 0 if t.payload.branch == "then" else 1
    else:
        branch_rank = 0
    return (t.source, branch_rank, t.target)


def value_passing(call: CallPayload, nu: Valuation) -> Valuation:
    """Callee entry valuation: parameters from arguments, all else zero."""
    return call.pass_values(nu)


def star_targets(fn: CfgFunction, label: int) -> Tuple[int, int]:
    """(then-target, else-target) of a nondeterministic label."""
    then = orelse = None
    for t in fn.out_edges(label):
        if isinstance(t.payload, StarPayload):
            if t.payload.branch == "then":
                then = t.target
            else:
                orelse = t.target
    if then is None or orelse is None:
        raise CfgError(f"label {label} of {fn.name} is not nondeterministic")
    return then, orelse


def branch_targets(fn: CfgFunction, label: int) -> Tuple[Pred, int, int]:
    """(predicate, true-target, false-target) of a branching label."""
    pred = true_t = false_t = None
    for t in fn.out_edges(label):
        if isinstance(t.payload, PredPayload):
            if t.payload.negated:
                false_t = t.target
            else:
                pred = t.payload.pred
                true_t = t.target
    if pred is None or true_t is None or false_t is None:
        raise CfgError(f"label {label} of {fn.name} is not branching")
    return pred, true_t, false_t


def single_edge(fn: CfgFunction, label: int) -> Transition:
    edges = fn.out_edges(label)
    if len(edges) != 1:
        raise CfgError(f"label {label} of {fn.name} has {len(edges)} edges, expected 1")
    return edges[0]


def dump_cfg(cfg: Cfg) -> str:
    """Deterministic edge list: functions by name, labels ascending."""
    lines = []
    for fn in sorted(cfg.functions, key=lambda f: f.name):
        lines.append(
            f"function {fn.name} (vars: {', '.join(fn.pvars)}) "
            f"entry={fn.entry} exit={fn.exit}"
        )
        for t in fn.transitions:
            lines.append(f"  {t.source} --[{t.payload.render()}]--> {t.target}")
    return "\n".join(lines) + "\n"


def reachable_labels(fn: CfgFunction) -> frozenset:
    """Labels reachable from the entry ignoring guards."""
    seen = {fn.entry}
    frontier = [fn.entry]
    while frontier:
        lab = frontier.pop()
        for t in fn.out_edges(lab):
            if t.target not in seen:
                seen.add(t.target)
                frontier.append(t.target)
    return frozenset(seen)


def reachable_functions(cfg: Cfg, root: str) -> frozenset:
    """Function names reachable from `root` through call edges."""
    seen = {root}
    frontier = [root]
    while frontier:
        fn = cfg.function(frontier.pop())
        for t in fn.transitions:
            if isinstance(t.payload, CallPayload) and t.payload.callee not in seen:
                seen.add(t.payload.callee)
                frontier.append(t.payload.callee)
    return frozenset(seen)
