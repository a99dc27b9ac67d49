"""Operational semantics: configurations, single steps, schedulers, and
seed-stable Monte Carlo estimation of termination-time statistics.

A state is a configuration (a stack of nonterminal activation frames, top
first) together with the previous step's joint sample.  Every step draws a
fresh joint sample; assignment frames consume it through their update
function, all other frames ignore it.  The empty configuration is absorbing
and the termination time of a run is the number of steps until it is
reached.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple

from ._compile import compile_call_args, compile_pred, compile_update
from .certificates import Certificate
from .cfg import (
    CallPayload,
    Cfg,
    UpdatePayload,
    branch_targets,
    single_edge,
    star_targets,
)
from .distributions import SamplingFunction, sample_from_uniform
from .rng import make_generator
from .valuation import Valuation

ACTION_TAU = "tau"
ACTION_THEN = "th"
ACTION_ELSE = "el"

Z95 = 1.959963984540054


class SemanticsError(ValueError):
    pass


class DisabledActionError(SemanticsError):
    pass


@dataclass(frozen=True)
class StackElement:
    fname: str
    label: int
    valuation: Valuation

    def is_terminal(self, cfg: Cfg) -> bool:
        return cfg.function(self.fname).exit == self.label

    def is_nondet(self, cfg: Cfg) -> bool:
        return self.label in cfg.function(self.fname).nondet


@dataclass(frozen=True)
class MdpState:
    config: Tuple[StackElement, ...]  # first element = top of the call stack
    sample: Valuation

    @property
    def terminated(self) -> bool:
        return not self.config


def initial_state(entry: StackElement, sf: SamplingFunction) -> MdpState:
    """Runs start at (entry, all-zero sample)."""
    return MdpState((entry,), sf.zero_valuation())


def enabled_actions(state: MdpState, cfg: Cfg) -> Tuple[str, ...]:
    if state.terminated:
        # the empty configuration is absorbing under every action
        return (ACTION_TAU, ACTION_THEN, ACTION_ELSE)
    if not state.config[0].is_nondet(cfg):
        return (ACTION_TAU,)
    return (ACTION_THEN, ACTION_ELSE)


def step(state: MdpState, action: str, mu_prime: Valuation, cfg: Cfg) -> MdpState:
    """One transition of the semantics under a fixed fresh sample.

    `mu_prime` is the joint sample drawn for this step; it becomes the
    state's sample component and feeds the update function when the top
    frame is at an assignment label.
    """
    if action not in enabled_actions(state, cfg):
        raise DisabledActionError(
            f"action {action!r} is not enabled (enabled: {enabled_actions(state, cfg)})")
    if state.terminated:
        return MdpState((), mu_prime)

    top, rest = state.config[0], state.config[1:]
    fn = cfg.function(top.fname)
    cls = fn.label_class(top.label)

    if cls == "assignment":
        edge = single_edge(fn, top.label)
        payload = edge.payload
        assert isinstance(payload, UpdatePayload)
        nu = payload.apply(top.valuation, mu_prime)
        if edge.target == fn.exit:
            return MdpState(rest, mu_prime)
        return MdpState((StackElement(top.fname, edge.target, nu),) + rest, mu_prime)

    if cls == "call":
        edge = single_edge(fn, top.label)
        payload = edge.payload
        assert isinstance(payload, CallPayload)
        callee_fn = cfg.function(payload.callee)
        callee = StackElement(payload.callee, callee_fn.entry,
                              payload.pass_values(top.valuation))
        if edge.target == fn.exit:
            return MdpState((callee,) + rest, mu_prime)
        caller = StackElement(top.fname, edge.target, top.valuation)
        return MdpState((callee, caller) + rest, mu_prime)

    if cls == "branching":
        pred, t_true, t_false = branch_targets(fn, top.label)
        from .lang import eval_pred

        target = t_true if eval_pred(pred, top.valuation) else t_false
        if target == fn.exit:
            return MdpState(rest, mu_prime)
        return MdpState((StackElement(top.fname, target, top.valuation),) + rest, mu_prime)

    if cls == "nondet":
        t_then, t_else = star_targets(fn, top.label)
        target = t_then if action == ACTION_THEN else t_else
        if target == fn.exit:
            return MdpState(rest, mu_prime)
        return MdpState((StackElement(top.fname, target, top.valuation),) + rest, mu_prime)

    raise SemanticsError(f"terminal stack element in configuration: {top}")


# ---------------------------------------------------------------------------
# Schedulers
# ---------------------------------------------------------------------------

SCHEDULER_KINDS = ("greedy-max", "greedy-min", "always-then", "always-else", "uniform")


@dataclass(frozen=True)
class Scheduler:
    """Memoryless policy over nondeterministic configurations.

    The greedy modes inspect a certificate: greedy-max takes the branch with
    the larger certificate value (then-branch on ties), greedy-min the
    smaller; these are the policies the bound checks in the test-suite lean
    on.  `uniform` flips a fair coin from the run's own stream.
    """

    kind: str
    cert: Optional[Certificate] = None

    def __post_init__(self) -> None:
        if self.kind not in SCHEDULER_KINDS:
            raise SemanticsError(
                f"unknown scheduler {self.kind!r}; choose from {SCHEDULER_KINDS}")
        if self.kind.startswith("greedy") and self.cert is None:
            raise SemanticsError(f"scheduler {self.kind!r} needs a certificate")

    def choose(self, top: StackElement, cfg: Cfg, uniform: Optional[float] = None) -> str:
        if self.kind == "always-then":
            return ACTION_THEN
        if self.kind == "always-else":
            return ACTION_ELSE
        if self.kind == "uniform":
            if uniform is None:
                raise SemanticsError("uniform scheduler needs a random draw")
            return ACTION_THEN if uniform < 0.5 else ACTION_ELSE
        fn = cfg.function(top.fname)
        t_then, t_else = star_targets(fn, top.label)
        h_then = self.cert.value(top.fname, t_then, top.valuation,
                                 is_terminal=t_then == fn.exit)
        h_else = self.cert.value(top.fname, t_else, top.valuation,
                                 is_terminal=t_else == fn.exit)
        if self.kind == "greedy-max":
            return ACTION_THEN if h_then >= h_else else ACTION_ELSE
        return ACTION_THEN if h_then <= h_else else ACTION_ELSE


# ---------------------------------------------------------------------------
# Run statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailEstimate:
    k: int
    count: int
    p_hat: float
    lo: float
    hi: float


@dataclass(frozen=True)
class RunStats:
    runs: int
    terminated: int
    censored: int
    max_steps: int
    mean: Optional[float]
    mean_halfwidth: Optional[float]
    tails: Tuple[TailEstimate, ...]
    seed: int
    scheduler: str
    sum_steps: int = field(default=0, repr=False)
    sumsq_steps: int = field(default=0, repr=False)

    def tail(self, k: int) -> TailEstimate:
        for t in self.tails:
            if t.k == k:
                return t
        raise KeyError(f"no tail estimate for k={k}")


def wilson_interval(count: int, n: int, z: float = Z95) -> Tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    p = count / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _finalize(acc: Dict, runs: int, max_steps: int, k_list: Sequence[int],
              seed: int, scheduler_kind: str) -> RunStats:
    terminated = acc["terminated"]
    mean = halfwidth = None
    if terminated > 0:
        mean = acc["sum"] / terminated
        if terminated > 1:
            var = (acc["sumsq"] - terminated * mean * mean) / (terminated - 1)
            halfwidth = Z95 * math.sqrt(max(var, 0.0) / terminated)
        else:
            halfwidth = float("inf")
    tails = []
    for k in k_list:
        count = acc["tail"][k]
        lo, hi = wilson_interval(count, runs)
        tails.append(TailEstimate(k, count, count / runs if runs else 0.0, lo, hi))
    return RunStats(
        runs=runs,
        terminated=terminated,
        censored=runs - terminated,
        max_steps=max_steps,
        mean=mean,
        mean_halfwidth=halfwidth,
        tails=tuple(tails),
        seed=seed,
        scheduler=scheduler_kind,
        sum_steps=acc["sum"],
        sumsq_steps=acc["sumsq"],
    )


# ---------------------------------------------------------------------------
# Compiled simulation
# ---------------------------------------------------------------------------

_OP_BRANCH, _OP_ASSIGN, _OP_CALL, _OP_NONDET = range(4)


@lru_cache(maxsize=16)
def _compile_cfg(cfg: Cfg, sf: SamplingFunction):
    """Per-label dispatch tables: label -> (opcode, data..., target(s))."""
    findex = {fn.name: i for i, fn in enumerate(cfg.functions)}
    tables = []
    exits = []
    for fn in cfg.functions:
        table: Dict[int, tuple] = {}
        for label in fn.branching:
            pred, t_true, t_false = branch_targets(fn, label)
            table[label] = (_OP_BRANCH, compile_pred(pred, fn.pvars), t_true, t_false)
        for label in fn.assignment:
            edge = single_edge(fn, label)
            payload = edge.payload
            update = compile_update(payload.var, payload.expr, fn.pvars,
                                    payload.sampling_vars)
            thresholds = tuple(sf.dist(s).thresholds() for s in payload.sampling_vars)
            table[label] = (_OP_ASSIGN, update, thresholds, edge.target)
        for label in fn.call:
            edge = single_edge(fn, label)
            payload = edge.payload
            argfn = compile_call_args(payload.params, payload.args, fn.pvars,
                                      payload.callee_vars)
            callee = cfg.function(payload.callee)
            table[label] = (_OP_CALL, argfn, (findex[payload.callee], callee.entry),
                            edge.target)
        for label in fn.nondet:
            t_then, t_else = star_targets(fn, label)
            table[label] = (_OP_NONDET, t_then, t_else)
        tables.append(table)
        exits.append(fn.exit)
    return findex, tables, exits


class _Uniforms:
    """Buffered uniform draws from one per-run generator."""

    __slots__ = ("gen", "buf", "idx")

    def __init__(self, gen):
        self.gen = gen
        self.buf = gen.random(64)
        self.idx = 0

    def next(self) -> float:
        if self.idx >= len(self.buf):
            self.buf = self.gen.random(256)
            self.idx = 0
        u = self.buf[self.idx]
        self.idx += 1
        return u


def _nondet_decisions(cfg: Cfg, scheduler: Scheduler):
    """Per-nondet-label decision: True/False constant, None (coin flip), or
    an exact chooser over valuation tuples for the greedy modes."""
    decisions = {}
    for fn in cfg.functions:
        for label in fn.nondet:
            if scheduler.kind == "always-then":
                decisions[(fn.name, label)] = True
            elif scheduler.kind == "always-else":
                decisions[(fn.name, label)] = False
            elif scheduler.kind == "uniform":
                decisions[(fn.name, label)] = None
            else:
                t_then, t_else = star_targets(fn, label)
                cert = scheduler.cert
                pvars = fn.pvars
                is_max = scheduler.kind == "greedy-max"

                def chooser(vals, _f=fn.name, _tt=t_then, _te=t_else,
                            _pv=pvars, _exit=fn.exit, _cert=cert, _max=is_max):
                    nu = Valuation.from_tuples(_pv, vals)
                    h_then = _cert.value(_f, _tt, nu, is_terminal=_tt == _exit)
                    h_else = _cert.value(_f, _te, nu, is_terminal=_te == _exit)
                    if _max:
                        return h_then >= h_else
                    return h_then <= h_else

                decisions[(fn.name, label)] = chooser
    return decisions


def _run_range(cfg: Cfg, sf: SamplingFunction, entry_fname: str, entry_label: int,
               entry_vals: tuple, scheduler: Scheduler, lo: int, hi: int,
               max_steps: int, k_list: Tuple[int, ...], seed: int) -> Dict:
    findex, tables, exits = _compile_cfg(cfg, sf)
    raw_decisions = _nondet_decisions(cfg, scheduler)
    decisions = {
        (findex[f], label): d for (f, label), d in raw_decisions.items()
    }
    entry_fidx = findex[entry_fname]
    ks = sorted(k_list)
    acc = {"terminated": 0, "sum": 0, "sumsq": 0, "tail": {k: 0 for k in ks}}

    for run in range(lo, hi):
        uniforms = _Uniforms(make_generator(seed, run))
        stack = [(entry_fidx, entry_label, entry_vals)]
        steps = 0
        while stack and steps < max_steps:
            fidx, label, vals = stack[-1]
            op = tables[fidx][label]
            code = op[0]
            steps += 1
            if code == _OP_BRANCH:
                target = op[2] if op[1](vals) else op[3]
                if target == exits[fidx]:
                    stack.pop()
                else:
                    stack[-1] = (fidx, target, vals)
            elif code == _OP_ASSIGN:
                thresholds = op[2]
                if thresholds:
                    drawn = tuple(
                        sample_from_uniform(t, uniforms.next()) for t in thresholds
                    )
                else:
                    drawn = ()
                new_vals = op[1](vals, drawn)
                target = op[3]
                if target == exits[fidx]:
                    stack.pop()
                else:
                    stack[-1] = (fidx, target, new_vals)
            elif code == _OP_CALL:
                callee_vals = op[1](vals)
                callee_fidx, callee_entry = op[2]
                target = op[3]
                frame = (callee_fidx, callee_entry, callee_vals)
                if target == exits[fidx]:
                    stack[-1] = frame
                else:
                    stack[-1] = (fidx, target, vals)
                    stack.append(frame)
            else:  # _OP_NONDET
                decision = decisions[(fidx, label)]
                if decision is None:
                    take_then = uniforms.next() < 0.5
                elif decision is True or decision is False:
                    take_then = decision
                else:
                    take_then = decision(vals)
                target = op[1] if take_then else op[2]
                if target == exits[fidx]:
                    stack.pop()
                else:
                    stack[-1] = (fidx, target, vals)

        if stack:  # censored at the step cap: T > max_steps
            for k in ks:
                acc["tail"][k] += 1
        else:
            acc["terminated"] += 1
            acc["sum"] += steps
            acc["sumsq"] += steps * steps
            for k in ks:
                if steps >= k:
                    acc["tail"][k] += 1
    return acc


def _merge_acc(a: Dict, b: Dict) -> Dict:
    return {
        "terminated": a["terminated"] + b["terminated"],
        "sum": a["sum"] + b["sum"],
        "sumsq": a["sumsq"] + b["sumsq"],
        "tail": {k: a["tail"][k] + b["tail"][k] for k in a["tail"]},
    }


def simulate(cfg: Cfg, sf: SamplingFunction, entry: StackElement,
             scheduler: Scheduler, runs: int, max_steps: int,
             k_list: Sequence[int] = (), seed: int = 0,
             workers: int = 1) -> RunStats:
    """Monte Carlo estimate of termination-time statistics.

    Each run owns the stream (seed, run-index), so results are bit-identical
    for any worker count.  Runs stopped at `max_steps` are censored: they
    are excluded from the mean and counted as mass at or beyond every
    requested tail threshold (all thresholds must be <= max_steps, which
    makes tail estimates unbiased).
    """
    fn = cfg.function(entry.fname)
    if entry.label == fn.exit:
        raise SemanticsError("entry stack element must be nonterminal")
    if max_steps < 1:
        raise SemanticsError("max_steps must be at least 1")
    k_list = tuple(sorted(set(int(k) for k in k_list)))
    for k in k_list:
        if k < 1 or k > max_steps:
            raise SemanticsError(f"tail threshold {k} outside [1, max_steps]")
    missing = [s for s in cfg.sampling_vars if s not in sf.variables]
    if missing:
        raise SemanticsError(f"no distribution for sampling variables {missing}")
    entry_vals = tuple(entry.valuation[v] for v in fn.pvars)

    if workers <= 1 or runs < 2:
        acc = _run_range(cfg, sf, entry.fname, entry.label, entry_vals,
                         scheduler, 0, runs, max_steps, k_list, seed)
    else:
        bounds = [(runs * i) // workers for i in range(workers + 1)]
        chunks = [(bounds[i], bounds[i + 1]) for i in range(workers)
                  if bounds[i] < bounds[i + 1]]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            futures = [
                pool.submit(_run_range, cfg, sf, entry.fname, entry.label,
                            entry_vals, scheduler, lo, hi, max_steps, k_list, seed)
                for lo, hi in chunks
            ]
            accs = [f.result() for f in futures]
        acc = accs[0]
        for extra in accs[1:]:
            acc = _merge_acc(acc, extra)

    return _finalize(acc, runs, max_steps, k_list, seed, scheduler.kind)
