"""Compilation of expressions, predicates, and certificate stanzas to
Python callables over valuation tuples.

The simulator dispatches millions of steps, so payloads are turned into
plain lambdas once per (process, CFG).  Arithmetic stays exact: program
values are Python ints, certificate values Fractions, and the helpers
enforce the integer-arithmetic side conditions (positive divisor,
nonnegative exponent).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple

from .lang import And, BinOp, Cmp, Const, EvalError, Expr, InfConst, Not, Or, Pow, Pred, Var


def _idiv(a, b):
    if b <= 0:
        raise EvalError(f"floor division by non-positive value {b}")
    if isinstance(b, Fraction) and b.denominator != 1:
        raise EvalError(f"floor division by non-integer {b}")
    return a // b


def _ipow(a, b):
    if b < 0 or (isinstance(b, Fraction) and b.denominator != 1):
        raise EvalError(f"exponent {b} is not a nonnegative integer")
    return a ** int(b)


_NAMESPACE = {"F": Fraction, "_idiv": _idiv, "_ipow": _ipow, "__builtins__": {}}


def expr_code(expr: Expr, pvar_index: Dict[str, int],
              svar_index: Optional[Dict[str, int]] = None) -> str:
    """Render `expr` as Python source over `v` (pvars) and `m` (samples)."""
    if isinstance(expr, Const):
        value = expr.value
        if value.denominator == 1:
            return repr(value.numerator)
        return f"F({value.numerator}, {value.denominator})"
    if isinstance(expr, Var):
        if expr.name in pvar_index:
            return f"v[{pvar_index[expr.name]}]"
        if svar_index is not None and expr.name in svar_index:
            return f"m[{svar_index[expr.name]}]"
        raise EvalError(f"unbound variable {expr.name!r}")
    if isinstance(expr, BinOp):
        left = expr_code(expr.left, pvar_index, svar_index)
        right = expr_code(expr.right, pvar_index, svar_index)
        if expr.op == "div":
            return f"_idiv({left}, {right})"
        return f"({left} {expr.op} {right})"
    if isinstance(expr, Pow):
        base = expr_code(expr.base, pvar_index, svar_index)
        exp = expr_code(expr.exponent, pvar_index, svar_index)
        return f"_ipow({base}, {exp})"
    if isinstance(expr, InfConst):
        raise EvalError("inf cannot appear inside an arithmetic expression")
    raise TypeError(f"not an expression: {expr!r}")


def pred_code(pred: Pred, pvar_index: Dict[str, int]) -> str:
    if isinstance(pred, Cmp):
        left = expr_code(pred.left, pvar_index)
        right = expr_code(pred.right, pvar_index)
        return f"({left} {pred.op} {right})"
    if isinstance(pred, Not):
        return f"(not {pred_code(pred.inner, pvar_index)})"
    if isinstance(pred, And):
        return f"({pred_code(pred.left, pvar_index)} and {pred_code(pred.right, pvar_index)})"
    if isinstance(pred, Or):
        return f"({pred_code(pred.left, pvar_index)} or {pred_code(pred.right, pvar_index)})"
    raise TypeError(f"not a predicate: {pred!r}")


def compile_lambda(source: str) -> Callable:
    return eval(source, dict(_NAMESPACE))


def compile_pred(pred: Pred, pvars: Tuple[str, ...]) -> Callable:
    index = {name: i for i, name in enumerate(pvars)}
    return compile_lambda(f"lambda v: {pred_code(pred, index)}")


def compile_update(var: Optional[str], expr: Optional[Expr],
                   pvars: Tuple[str, ...],
                   sampling_vars: Tuple[str, ...]) -> Callable:
    """fn(v, m) -> v' where m carries the drawn sampling values in order."""
    if var is None or expr is None:
        return compile_lambda("lambda v, m: v")
    pidx = {name: i for i, name in enumerate(pvars)}
    sidx = {name: i for i, name in enumerate(sampling_vars)}
    body = expr_code(expr, pidx, sidx)
    slots = ", ".join(
        body if name == var else f"v[{i}]" for i, name in enumerate(pvars)
    )
    return compile_lambda(f"lambda v, m: ({slots},)")


def compile_call_args(params: Tuple[str, ...], args: Tuple[Expr, ...],
                      caller_pvars: Tuple[str, ...],
                      callee_vars: Tuple[str, ...]) -> Callable:
    """fn(v) -> callee valuation tuple (parameters bound, locals zero)."""
    pidx = {name: i for i, name in enumerate(caller_pvars)}
    by_param = dict(zip(params, args))
    slots = []
    for name in callee_vars:
        if name in by_param:
            slots.append(expr_code(by_param[name], pidx))
        else:
            slots.append("0")
    return compile_lambda(f"lambda v: ({', '.join(slots)},)")
