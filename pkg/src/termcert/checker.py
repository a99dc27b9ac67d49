"""Exhaustive certificate checking over finite verification boxes.

Four condition families are supported, all sharing one evaluation engine:

    ranking   expected decrease by at least eps per step; terminal value 0
    cdb       additionally: expected decrease at most delta per step, and
              expected absolute change at most zeta at assignment labels
    db        per-outcome absolute change at most zeta everywhere
    super     never increasing (in expectation at assignment labels), with
              per-outcome changes at most zeta and expected absolute change
              at least delta at assignment labels; value 0 exactly at
              terminal labels

The universally quantified valuation ranges over a user-declared box; the
certificate stays symbolic, so successor valuations are evaluated wherever
they land, including outside the box.  Points where no stanza guard matches
are treated as outside the certificate's declared invariant and skipped;
when such a point shows up as a *successor* its value is infinity.  Decrease
and difference conditions are only enforced at points with finite value.

All arithmetic is exact (machine integers never overflow, probabilities and
certificate values are rationals), so verdicts are reproducible bit for bit;
guards, update functions, and certificate pieces are compiled to Python
callables once per label to keep full-box sweeps fast.
"""

from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from ._compile import compile_call_args, compile_lambda, compile_pred, compile_update, expr_code, pred_code
from .certificates import Certificate, CertificateError, CertParams
from .cfg import (
    Cfg,
    branch_targets,
    single_edge,
    star_targets,
)
from .distributions import SamplingFunction
from .lang import InfConst
from .valuation import Valuation

CHECK_KINDS = ("ranking", "cdb", "db", "super")


class CheckerError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Verification boxes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyBox:
    """Inclusive integer intervals, one per program variable."""

    bounds: Tuple[Tuple[str, int, int], ...]

    def __post_init__(self) -> None:
        seen = set()
        for name, lo, hi in self.bounds:
            if name in seen:
                raise CheckerError(f"duplicate box entry for {name!r}")
            seen.add(name)
            if lo > hi:
                raise CheckerError(f"empty interval for {name!r}: [{lo}, {hi}]")
        object.__setattr__(self, "bounds", tuple(sorted(self.bounds)))

    @classmethod
    def from_dict(cls, mapping: Dict[str, Tuple[int, int]]) -> "VerifyBox":
        return cls(tuple((k, int(lo), int(hi)) for k, (lo, hi) in mapping.items()))

    @classmethod
    def parse(cls, *specs: str) -> "VerifyBox":
        """Parse entries like ``n=-100..100`` (comma-separable)."""
        bounds = []
        for spec in specs:
            for part in spec.split(","):
                part = part.strip()
                if not part:
                    continue
                m = re.fullmatch(r"(\w+)\s*=\s*(-?\d+)\s*\.\.\s*(-?\d+)", part)
                if not m:
                    raise CheckerError(f"bad box entry {part!r}; expected var=lo..hi")
                bounds.append((m.group(1), int(m.group(2)), int(m.group(3))))
        return cls(tuple(bounds))

    def interval(self, name: str) -> Tuple[int, int]:
        for n, lo, hi in self.bounds:
            if n == name:
                return lo, hi
        raise CheckerError(f"box does not bound variable {name!r}")

    def tuples(self, variables: Sequence[str]) -> Iterator[Tuple[int, ...]]:
        """Raw value tuples over `variables` (in the given order), scanning
        lexicographically."""
        ranges = [range(self.interval(n)[0], self.interval(n)[1] + 1)
                  for n in variables]
        return product(*ranges)

    def points(self, variables: Sequence[str]) -> Iterator[Valuation]:
        """All box valuations over `variables`, lexicographic in sorted order."""
        names = tuple(sorted(variables))
        for combo in self.tuples(names):
            yield Valuation.from_tuples(names, combo)

    def size(self, variables: Sequence[str]) -> int:
        total = 1
        for name in variables:
            lo, hi = self.interval(name)
            total *= hi - lo + 1
        return total

    def render(self) -> str:
        return ", ".join(f"{n}={lo}..{hi}" for n, lo, hi in self.bounds)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionFailure:
    fname: str
    label: int
    condition: str
    point: Tuple[Tuple[str, int], ...]
    lhs: str
    rhs: str
    detail: str = ""

    def render(self) -> str:
        point = ", ".join(f"{k}={v}" for k, v in self.point)
        text = (f"{self.condition} fails at ({self.fname}, {self.label}) "
                f"with {{{point}}}: {self.lhs} vs {self.rhs}")
        if self.detail:
            text += f" ({self.detail})"
        return text


@dataclass(frozen=True)
class CheckReport:
    kind: str
    passed: bool
    box: str
    params: CertParams
    failures: Tuple[ConditionFailure, ...]
    points_checked: int
    points_skipped: int
    conditions_checked: int
    cert_digest: str = ""

    @property
    def first_failure(self) -> Optional[ConditionFailure]:
        return self.failures[0] if self.failures else None

    def render(self) -> str:
        head = (f"check kind={self.kind} verdict={'pass' if self.passed else 'fail'} "
                f"box=[{self.box}] points={self.points_checked} "
                f"skipped={self.points_skipped} conditions={self.conditions_checked}")
        lines = [head]
        for f in self.failures:
            lines.append("  counterexample: " + f.render())
        return "\n".join(lines)

    def to_json_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "box": self.box,
            "params": {
                "eps": str(self.params.eps) if self.params.eps is not None else None,
                "delta": str(self.params.delta) if self.params.delta is not None else None,
                "zeta": str(self.params.zeta) if self.params.zeta is not None else None,
            },
            "points_checked": self.points_checked,
            "points_skipped": self.points_skipped,
            "conditions_checked": self.conditions_checked,
            "cert_digest": self.cert_digest,
            "failures": [
                {
                    "function": f.fname,
                    "label": f.label,
                    "condition": f.condition,
                    "point": dict(f.point),
                    "lhs": f.lhs,
                    "rhs": f.rhs,
                    "detail": f.detail,
                }
                for f in self.failures
            ],
        }


# ---------------------------------------------------------------------------
# Compiled evaluation engine.  Internally a certificate value is a Fraction
# (finite) or None (infinity); the conventions match the extended reals.
# ---------------------------------------------------------------------------

def _fmt(x: Optional[Fraction]) -> str:
    if x is None:
        return "inf"
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _le(a: Optional[Fraction], b: Optional[Fraction]) -> bool:
    if b is None:
        return True
    if a is None:
        return False
    return a <= b


def _worse(a: Optional[Fraction], b: Optional[Fraction]) -> Optional[Fraction]:
    return b if _le(a, b) else a


def _absdiff(value: Optional[Fraction], base: Fraction) -> Optional[Fraction]:
    if value is None:
        return None
    return abs(value - base)


@lru_cache(maxsize=64)
def _cert_tables(cert: Certificate, cfg: Cfg):
    """(fname, label) -> compiled pieces [(guard_fn|None, expr_fn|None)].

    expr_fn None encodes an explicit `inf` piece.
    """
    tables = {}
    for fn in cfg.functions:
        pidx = {name: i for i, name in enumerate(fn.pvars)}
        for label in fn.labels():
            compiled = []
            for piece in cert.pieces(fn.name, label):
                guard_fn = None
                if piece.guard is not None:
                    guard_fn = compile_lambda(f"lambda v: {pred_code(piece.guard, pidx)}")
                if isinstance(piece.expr, InfConst):
                    expr_fn = None
                else:
                    expr_fn = compile_lambda(f"lambda v: {expr_code(piece.expr, pidx)}")
                compiled.append((guard_fn, expr_fn))
            tables[(fn.name, label)] = tuple(compiled)
    return tables


@lru_cache(maxsize=64)
def _payload_tables(cfg: Cfg, sf: SamplingFunction):
    """(fname, label) -> compiled payload record per label class."""
    out = {}
    for fn in cfg.functions:
        for label in fn.branching:
            pred, t1, t2 = branch_targets(fn, label)
            out[(fn.name, label)] = ("branching", compile_pred(pred, fn.pvars), t1, t2)
        for label in fn.assignment:
            edge = single_edge(fn, label)
            payload = edge.payload
            update = compile_update(payload.var, payload.expr, fn.pvars,
                                    payload.sampling_vars)
            outcomes = []
            for mu, weight in sf.joint_support_over(payload.sampling_vars):
                drawn = tuple(mu[s] for s in payload.sampling_vars)
                label_text = ", ".join(f"{s}={mu[s]}" for s in payload.sampling_vars)
                outcomes.append((weight, drawn, label_text))
            out[(fn.name, label)] = ("assignment", update, tuple(outcomes), edge.target)
        for label in fn.call:
            edge = single_edge(fn, label)
            payload = edge.payload
            args_fn = compile_call_args(payload.params, payload.args, fn.pvars,
                                        payload.callee_vars)
            callee = cfg.function(payload.callee)
            out[(fn.name, label)] = ("call", args_fn, payload.callee, callee.entry,
                                     edge.target)
        for label in fn.nondet:
            t1, t2 = star_targets(fn, label)
            out[(fn.name, label)] = ("nondet", t1, t2)
        out[(fn.name, fn.exit)] = ("terminal",)
    return out


class _Engine:
    def __init__(self, kind: str, cert: Certificate, params: CertParams,
                 cfg: Cfg, sf: SamplingFunction):
        self.kind = kind
        self.params = params
        self.cert_table = _cert_tables(cert, cfg)
        self.payloads = _payload_tables(cfg, sf)
        self.exits = {fn.name: fn.exit for fn in cfg.functions}

    def h(self, fname: str, label: int, vals: tuple):
        """(matched, value); value None means infinity."""
        pieces = self.cert_table[(fname, label)]
        if not pieces:
            if label == self.exits[fname]:
                return True, Fraction(0)
            return False, None
        for guard_fn, expr_fn in pieces:
            if guard_fn is None or guard_fn(vals):
                if expr_fn is None:
                    return True, None
                value = Fraction(expr_fn(vals))
                if value < 0:
                    raise CertificateError(
                        f"certificate value {value} at ({fname}, {label}, {vals}) "
                        "is negative")
                return True, value
        return False, None

    def h_value(self, fname: str, label: int, vals: tuple) -> Optional[Fraction]:
        return self.h(fname, label, vals)[1]

    # -- conditions per label class, yielding (name, ok, lhs, rhs, detail) --

    def conditions(self, fname: str, label: int, vals: tuple,
                   h_here: Optional[Fraction]):
        record = self.payloads[(fname, label)]
        cls = record[0]
        kind = self.kind
        if cls == "terminal":
            if kind in ("ranking", "super"):
                yield ("terminal-zero", h_here == 0, _fmt(h_here), "0", "")
            return
        if kind == "super":
            yield ("nonterminal-nonzero", h_here != 0, _fmt(h_here), "> 0", "")
        if kind in ("cdb", "db", "super") and h_here is None:
            return  # conditions apply only where the certificate is finite

        if cls == "assignment":
            yield from self._assignment(record, fname, vals, h_here)
        elif cls == "call":
            _, args_fn, callee, callee_entry, target = record
            h_callee = self.h_value(callee, callee_entry, args_fn(vals))
            h_return = self.h_value(fname, target, vals)
            total = None if (h_callee is None or h_return is None) else h_callee + h_return
            yield from self._one_successor("call", total, h_here)
        elif cls == "branching":
            _, pred_fn, t1, t2 = record
            succ = self.h_value(fname, t1 if pred_fn(vals) else t2, vals)
            yield from self._one_successor("branch", succ, h_here)
        else:  # nondet
            _, t1, t2 = record
            h1 = self.h_value(fname, t1, vals)
            h2 = self.h_value(fname, t2, vals)
            yield from self._nondet(h1, h2, h_here)

    def _assignment(self, record, fname, vals, h_here):
        _, update, outcomes, target = record
        succs = [(w, self.h_value(fname, target, update(vals, m)), text)
                 for w, m, text in outcomes]
        kind = self.kind
        if kind in ("ranking", "cdb", "super"):
            expected: Optional[Fraction] = Fraction(0)
            for w, h_succ, _ in succs:
                if h_succ is None:
                    expected = None
                    break
                expected += w * h_succ
        if kind == "ranking":
            if expected is None:
                yield ("assign-expected-decrease", h_here is None, "inf", _fmt(h_here), "")
            else:
                lhs = self.params.eps + expected
                yield ("assign-expected-decrease", _le(lhs, h_here),
                       _fmt(lhs), _fmt(h_here), "")
            return
        if kind == "cdb":
            lhs = None if expected is None else self.params.delta + expected
            yield ("assign-expected-drop-cap", _le(h_here, lhs), _fmt(lhs), _fmt(h_here), "")
            jump: Optional[Fraction] = Fraction(0)
            for w, h_succ, _ in succs:
                diff = _absdiff(h_succ, h_here)
                if diff is None:
                    jump = None
                    break
                jump += w * diff
            yield ("assign-expected-jump-cap", _le(jump, self.params.zeta),
                   _fmt(jump), _fmt(self.params.zeta), "")
            return
        if kind == "db":
            zeta = self.params.zeta
            for _, h_succ, text in succs:
                diff = _absdiff(h_succ, h_here)
                if not _le(diff, zeta):
                    yield ("assign-jump-cap", False, _fmt(diff), _fmt(zeta),
                           f"outcome {{{text}}}")
                    return
            yield ("assign-jump-cap", True, "", "", "")
            return
        # super
        yield ("assign-no-increase", _le(expected, h_here),
               _fmt(expected), _fmt(h_here), "")
        zeta = self.params.zeta
        capped = True
        for _, h_succ, text in succs:
            diff = _absdiff(h_succ, h_here)
            if not _le(diff, zeta):
                yield ("assign-jump-cap", False, _fmt(diff), _fmt(zeta),
                       f"outcome {{{text}}}")
                capped = False
                break
        if capped:
            yield ("assign-jump-cap", True, "", "", "")
        floor: Optional[Fraction] = Fraction(0)
        for w, h_succ, _ in succs:
            diff = _absdiff(h_succ, h_here)
            if diff is None:
                floor = None
                break
            floor += w * diff
        yield ("assign-jump-floor", floor is None or floor >= self.params.delta,
               _fmt(floor), _fmt(self.params.delta), "")

    def _one_successor(self, prefix, succ, h_here):
        kind = self.kind
        if kind == "ranking":
            lhs = None if succ is None else self.params.eps + succ
            yield (f"{prefix}-decrease", _le(lhs, h_here), _fmt(lhs), _fmt(h_here), "")
        elif kind == "cdb":
            lhs = None if succ is None else self.params.delta + succ
            yield (f"{prefix}-drop-cap", _le(h_here, lhs), _fmt(lhs), _fmt(h_here), "")
        elif kind == "db":
            diff = _absdiff(succ, h_here)
            yield (f"{prefix}-jump-cap", _le(diff, self.params.zeta),
                   _fmt(diff), _fmt(self.params.zeta), "")
        else:  # super
            yield (f"{prefix}-no-increase", _le(succ, h_here),
                   _fmt(succ), _fmt(h_here), "")
            diff = _absdiff(succ, h_here)
            yield (f"{prefix}-jump-cap", _le(diff, self.params.zeta),
                   _fmt(diff), _fmt(self.params.zeta), "")

    def _nondet(self, h1, h2, h_here):
        kind = self.kind
        worst = _worse(h1, h2)
        if kind == "ranking":
            lhs = None if worst is None else self.params.eps + worst
            yield ("nondet-decrease", _le(lhs, h_here), _fmt(lhs), _fmt(h_here), "")
        elif kind == "cdb":
            lhs = None if worst is None else self.params.delta + worst
            yield ("nondet-drop-cap", _le(h_here, lhs), _fmt(lhs), _fmt(h_here), "")
        elif kind == "db":
            diff = _worse(_absdiff(h1, h_here), _absdiff(h2, h_here))
            yield ("nondet-jump-cap", _le(diff, self.params.zeta),
                   _fmt(diff), _fmt(self.params.zeta), "")
        else:
            yield ("nondet-no-increase", _le(worst, h_here),
                   _fmt(worst), _fmt(h_here), "")
            diff = _worse(_absdiff(h1, h_here), _absdiff(h2, h_here))
            yield ("nondet-jump-cap", _le(diff, self.params.zeta),
                   _fmt(diff), _fmt(self.params.zeta), "")


def _required_params(kind: str) -> Tuple[str, ...]:
    return {
        "ranking": ("eps",),
        "cdb": ("delta", "zeta"),
        "db": ("zeta",),
        "super": ("delta", "zeta"),
    }[kind]


def _check_labels(kind: str, cert: Certificate, params: CertParams, cfg: Cfg,
                  sf: SamplingFunction, box: VerifyBox,
                  units: Tuple[Tuple[str, int], ...]) -> Dict:
    engine = _Engine(kind, cert, params, cfg, sf)
    failures: List[ConditionFailure] = []
    checked = skipped = conditions = 0
    pvars_by_fn = {fn.name: fn.pvars for fn in cfg.functions}
    for fname, label in units:
        pvars = pvars_by_fn[fname]
        seen_failed: set = set()
        for vals in box.tuples(pvars):
            matched, h_here = engine.h(fname, label, vals)
            if not matched:
                skipped += 1
                continue
            checked += 1
            for name, ok, lhs, rhs, detail in engine.conditions(fname, label, vals, h_here):
                conditions += 1
                if not ok and name not in seen_failed:
                    seen_failed.add(name)
                    failures.append(ConditionFailure(
                        fname, label, name, tuple(zip(pvars, vals)),
                        lhs, rhs, detail))
    return {
        "failures": failures,
        "checked": checked,
        "skipped": skipped,
        "conditions": conditions,
    }


def run_check(kind: str, cert: Certificate, cfg: Cfg, sf: SamplingFunction,
              box: VerifyBox, params: Optional[CertParams] = None,
              workers: int = 1) -> CheckReport:
    """Check one condition family over the box.

    `params` overrides the parameters carried in the certificate file.  The
    report contains, per (function, label, condition), the first failing box
    point in lexicographic order; verdicts do not depend on `workers`.
    """
    if kind not in CHECK_KINDS:
        raise CheckerError(f"unknown check kind {kind!r}; choose from {CHECK_KINDS}")
    params = params if params is not None else cert.params
    params.require(*_required_params(kind))
    for fn in cfg.functions:
        for name in fn.pvars:
            box.interval(name)  # raises if the box misses a variable

    units = tuple(
        (fn.name, label)
        for fn in sorted(cfg.functions, key=lambda f: f.name)
        for label in fn.labels()
    )
    if workers <= 1 or len(units) <= 1:
        parts = [_check_labels(kind, cert, params, cfg, sf, box, units)]
    else:
        chunks = [units[i::workers] for i in range(workers)]
        chunks = [c for c in chunks if c]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            futures = [
                pool.submit(_check_labels, kind, cert, params, cfg, sf, box, chunk)
                for chunk in chunks
            ]
            parts = [f.result() for f in futures]

    failures = sorted(
        (f for part in parts for f in part["failures"]),
        key=lambda f: (f.fname, f.label, f.condition),
    )
    return CheckReport(
        kind=kind,
        passed=not failures,
        box=box.render(),
        params=params,
        failures=tuple(failures),
        points_checked=sum(p["checked"] for p in parts),
        points_skipped=sum(p["skipped"] for p in parts),
        conditions_checked=sum(p["conditions"] for p in parts),
        cert_digest=cert.digest(),
    )


def check_ranking(cert: Certificate, cfg: Cfg, sf: SamplingFunction, box: VerifyBox,
                  eps: Optional[Fraction] = None, workers: int = 1) -> CheckReport:
    params = CertParams(eps=eps if eps is not None else cert.params.eps)
    return run_check("ranking", cert, cfg, sf, box, params, workers)


def check_cdb(cert: Certificate, cfg: Cfg, sf: SamplingFunction, box: VerifyBox,
              delta: Optional[Fraction] = None, zeta: Optional[Fraction] = None,
              workers: int = 1) -> CheckReport:
    # the drop cap only makes sense alongside the certificate's guaranteed
    # decrease, so eps rides along and the eps <= delta sanity check applies
    params = CertParams(
        eps=cert.params.eps,
        delta=delta if delta is not None else cert.params.delta,
        zeta=zeta if zeta is not None else cert.params.zeta,
    )
    return run_check("cdb", cert, cfg, sf, box, params, workers)


def check_db(cert: Certificate, cfg: Cfg, sf: SamplingFunction, box: VerifyBox,
             zeta: Optional[Fraction] = None, workers: int = 1) -> CheckReport:
    params = CertParams(zeta=zeta if zeta is not None else cert.params.zeta)
    return run_check("db", cert, cfg, sf, box, params, workers)


def check_super(cert: Certificate, cfg: Cfg, sf: SamplingFunction, box: VerifyBox,
                delta: Optional[Fraction] = None, zeta: Optional[Fraction] = None,
                workers: int = 1) -> CheckReport:
    # delta is the expected-jump floor here, a different role than the cdb
    # drop cap, so it is not coupled to the certificate's eps
    params = CertParams(
        delta=delta if delta is not None else cert.params.delta,
        zeta=zeta if zeta is not None else cert.params.zeta,
    )
    return run_check("super", cert, cfg, sf, box, params, workers)


# ---------------------------------------------------------------------------
# Reachability-of-assignment fixpoint
# ---------------------------------------------------------------------------

@dataclass
class ThetaIndex:
    """Least fixpoint of labels that reach an assignment label or the
    terminal label within a bounded number of deterministic-progress steps,
    with that bound per label."""

    members: frozenset
    K: Dict[Tuple[str, int], int]
    m_star: int
    all_covered: bool
    K_max: int
    K_max_by_function: Dict[str, int] = field(default_factory=dict)

    def covered(self, fname: str, label: int) -> bool:
        return (fname, label) in self.members


def theta_fixpoint(cfg: Cfg) -> ThetaIndex:
    """Iterate the closure; stabilizes within the total label count.

    Base set: assignment labels and the terminal label, at distance 0.  A
    call label joins once its continuation and the callee's entry are in,
    at the sum of their distances plus one; a branching or nondeterministic
    label joins once both its targets are in, one past the larger distance.
    """
    members = set()
    K: Dict[Tuple[str, int], int] = {}
    for fn in cfg.functions:
        for label in fn.assignment | {fn.exit}:
            members.add((fn.name, label))
            K[(fn.name, label)] = 0

    m_star = 0
    while True:
        added = []
        for fn in cfg.functions:
            for label in sorted(fn.call):
                if (fn.name, label) in members:
                    continue
                edge = single_edge(fn, label)
                payload = edge.payload
                callee = cfg.function(payload.callee)
                if ((fn.name, edge.target) in members
                        and (payload.callee, callee.entry) in members):
                    added.append((fn.name, label))
                    K[(fn.name, label)] = (K[(fn.name, edge.target)]
                                           + K[(payload.callee, callee.entry)] + 1)
            for label in sorted(fn.branching | fn.nondet):
                if (fn.name, label) in members:
                    continue
                if label in fn.branching:
                    _, t1, t2 = branch_targets(fn, label)
                else:
                    t1, t2 = star_targets(fn, label)
                if (fn.name, t1) in members and (fn.name, t2) in members:
                    added.append((fn.name, label))
                    K[(fn.name, label)] = 1 + max(K[(fn.name, t1)], K[(fn.name, t2)])
        if not added:
            break
        members.update(added)
        m_star += 1

    all_labels = [(fn.name, label) for fn in cfg.functions for label in fn.labels()]
    all_covered = all(pair in members for pair in all_labels)
    k_values = [K[pair] for pair in members]
    by_function: Dict[str, int] = {}
    for fn in cfg.functions:
        ks = [K[(fn.name, label)] for label in fn.labels() if (fn.name, label) in members]
        by_function[fn.name] = max(ks) if ks else 0
    return ThetaIndex(
        members=frozenset(members),
        K=K,
        m_star=m_star,
        all_covered=all_covered,
        K_max=max(k_values) if k_values else 0,
        K_max_by_function=by_function,
    )
