"""Command-line entry point.

Subcommands: parse | cfg | simulate | check | bounds | lab.  Exit status is
0 on success (and on a passing check), 1 when a check fails (the
counterexample is printed), and 2 on usage or input errors.  Reports embed
the tool version, the seed, the box, and the certificate digest, and repeat
runs with identical flags byte-for-byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .bounds import (
    BoundError,
    BoundReport,
    cert_value_at,
    concentration_tail,
    lower_expected,
    markov_tail,
    sqrt_tail,
    upper_expected,
)
from .certificates import Certificate, CertificateError, load_certificate
from .cfg import Cfg, build_cfg, dump_cfg
from .checker import CheckerError, VerifyBox, run_check, theta_fixpoint
from .distributions import DistributionError, SamplingFunction, load_distributions
from .lab import LabError, TAGS, analytic, simulate_lab
from .lang import EvalError, label_program, pretty_print
from .parser import ParseError, load_program
from .semantics import SCHEDULER_KINDS, Scheduler, SemanticsError, StackElement, simulate
from .valuation import Valuation

USAGE_ERROR = 2
CHECK_FAIL = 1


class CliError(Exception):
    pass


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return USAGE_ERROR
    try:
        return args.handler(args)
    except (ParseError, CertificateError, DistributionError, CheckerError,
            SemanticsError, BoundError, LabError, EvalError, CliError,
            FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="termcert",
        description="certificate checking and Monte Carlo cross-validation for "
                    "recursive probabilistic programs",
    )
    parser.add_argument("--version", action="version", version=f"termcert {__version__}")
    sub = parser.add_subparsers(dest="command")
    parser.set_defaults(command=None)

    p = sub.add_parser("parse", help="parse a program and print it back")
    p.add_argument("program")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(handler=_cmd_parse)

    p = sub.add_parser("cfg", help="print the control-flow graph edge list")
    p.add_argument("program")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(handler=_cmd_cfg)

    p = sub.add_parser("check", help="check certificate conditions over a box")
    p.add_argument("program")
    p.add_argument("--cert", required=True)
    p.add_argument("--kind", required=True, choices=("ranking", "cdb", "db", "super"))
    p.add_argument("--dist", help="distribution file for sampling variables")
    p.add_argument("--box", action="append", required=True,
                   help="box entries like n=-100..100 (repeatable, comma-separable)")
    p.add_argument("--eps")
    p.add_argument("--delta")
    p.add_argument("--zeta")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.set_defaults(handler=_cmd_check)

    p = sub.add_parser("simulate", help="Monte Carlo termination-time statistics")
    p.add_argument("program")
    p.add_argument("--entry", required=True, help="function name, or name@label")
    p.add_argument("--args", default="", help="entry bindings like n=5,m=2 (rest 0)")
    p.add_argument("--dist")
    p.add_argument("--scheduler", default="uniform", choices=SCHEDULER_KINDS)
    p.add_argument("--cert", help="certificate for the greedy schedulers")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--max-steps", type=int, default=10**6)
    p.add_argument("--tail", default="", help="comma-separated thresholds for P(T >= k)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=0,
                   help="0 = all available cores")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("bounds", help="bounds from a (checked) certificate")
    p.add_argument("program")
    p.add_argument("--cert", required=True)
    p.add_argument("--kind", required=True, choices=("ranking", "cdb", "db", "super"))
    p.add_argument("--entry", required=True)
    p.add_argument("--args", default="")
    p.add_argument("--dist")
    p.add_argument("--k", default="", help="thresholds for P(T >= k) bounds")
    p.add_argument("--n", default="", help="thresholds for P(T > n) concentration bounds")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.set_defaults(handler=_cmd_bounds)

    p = sub.add_parser("lab", help="counterexample processes: analytic vs simulated")
    p.add_argument("--example", required=True, choices=TAGS)
    p.add_argument("--alpha", type=float)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tail", default="", help="comma-separated levels for P(T > n)")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.set_defaults(handler=_cmd_lab)

    return parser


# ---------------------------------------------------------------------------
# Shared loading helpers
# ---------------------------------------------------------------------------

def _load_labelled(path: str):
    return label_program(load_program(path))


def _load_cfg(path: str) -> Cfg:
    return build_cfg(_load_labelled(path))


def _sampling_function(cfg: Cfg, dist_path: Optional[str]) -> SamplingFunction:
    dists: Dict = dict(cfg.builtin_dists)
    if dist_path:
        for name, dist in load_distributions(dist_path).items():
            if name in dists:
                raise CliError(f"distribution for {name!r} defined twice")
            dists[name] = dist
    missing = [v for v in cfg.sampling_vars if v not in dists]
    if missing:
        raise CliError(
            f"no distribution for sampling variables {missing}; pass --dist")
    return SamplingFunction.from_mapping(dists)


def _parse_args_binding(spec: str) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for part in spec.replace(",", " ").split():
        if "=" not in part:
            raise CliError(f"bad --args entry {part!r}; expected name=value")
        name, _, value = part.partition("=")
        out[name.strip()] = int(value)
    return out


def _entry_element(cfg: Cfg, entry_spec: str, args_spec: str) -> StackElement:
    fname, _, label_text = entry_spec.partition("@")
    fn = cfg.function(fname)
    label = int(label_text) if label_text else fn.entry
    bindings = {v: 0 for v in fn.pvars}
    for name, value in _parse_args_binding(args_spec).items():
        if name not in bindings:
            raise CliError(f"{name!r} is not a program variable of {fname!r}")
        bindings[name] = value
    return StackElement(fname, label, Valuation(bindings))


def _int_list(spec: str) -> Tuple[int, ...]:
    return tuple(int(x) for x in spec.replace(",", " ").split())


def _meta(seed: Optional[int] = None, box: Optional[str] = None,
          cert: Optional[Certificate] = None) -> Dict:
    meta = {"tool": "termcert", "version": __version__}
    if seed is not None:
        meta["seed"] = seed
    if box is not None:
        meta["box"] = box
    if cert is not None:
        meta["cert_digest"] = cert.digest()
    return meta


def _emit(fmt: str, meta: Dict, headers: Sequence[str], rows: Sequence[Sequence],
          text_extra: str = "") -> None:
    if fmt == "json":
        payload = dict(meta)
        payload["rows"] = [dict(zip(headers, row)) for row in rows]
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(headers)
        writer.writerows(rows)
        sys.stdout.write(buf.getvalue())
        return
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(headers)]
    print("  ".join(f"{k}={v}" for k, v in meta.items()))
    print("  ".join(str(h).ljust(w) for h, w in zip(headers, widths)))
    for row in rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(row, widths)))
    if text_extra:
        print(text_extra)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_parse(args) -> int:
    prog = _load_labelled(args.program)
    if args.format == "json":
        payload = _meta()
        payload["functions"] = [
            {"name": f.name, "params": list(f.params), "terminal_label": f.terminal_label}
            for f in prog.functions
        ]
        payload["sampling_variables"] = list(prog.sampling_variables())
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        sys.stdout.write(pretty_print(prog))
    return 0


def _cmd_cfg(args) -> int:
    cfg = _load_cfg(args.program)
    if args.format == "json":
        payload = _meta()
        payload["functions"] = [
            {
                "name": fn.name,
                "vars": list(fn.pvars),
                "entry": fn.entry,
                "exit": fn.exit,
                "edges": [
                    {"source": t.source, "payload": t.payload.render(), "target": t.target}
                    for t in fn.transitions
                ],
            }
            for fn in sorted(cfg.functions, key=lambda f: f.name)
        ]
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        sys.stdout.write(dump_cfg(cfg))
    return 0


_KIND_PARAMS = {
    "ranking": ("eps",),
    "cdb": ("eps", "delta", "zeta"),
    "db": ("zeta",),
    "super": ("delta", "zeta"),
}


def _scoped_params(kind: str, cert: Certificate, args):
    """Certificate parameters relevant to the kind, with flag overrides."""
    from .certificates import CertParams

    values = {}
    for name in _KIND_PARAMS[kind]:
        override = getattr(args, name)
        values[name] = (Fraction(override) if override is not None
                        else getattr(cert.params, name))
    return CertParams(**values)


def _cmd_check(args) -> int:
    cfg = _load_cfg(args.program)
    cert = load_certificate(args.cert)
    sf = _sampling_function(cfg, args.dist)
    box = VerifyBox.parse(*args.box)
    params = _scoped_params(args.kind, cert, args)
    report = run_check(args.kind, cert, cfg, sf, box, params, workers=max(args.workers, 1))
    meta = _meta(box=report.box, cert=cert)
    meta["kind"] = report.kind
    meta["passed"] = report.passed
    if args.format == "json":
        payload = dict(meta)
        payload["report"] = report.to_json_dict()
        print(json.dumps(payload, indent=2, sort_keys=True))
    elif args.format == "csv":
        headers = ["function", "label", "condition", "point", "lhs", "rhs", "detail"]
        rows = [
            [f.fname, f.label, f.condition,
             " ".join(f"{k}={v}" for k, v in f.point), f.lhs, f.rhs, f.detail]
            for f in report.failures
        ]
        _emit("csv", meta, headers, rows)
    else:
        print("  ".join(f"{k}={v}" for k, v in meta.items()))
        print(report.render())
    return 0 if report.passed else CHECK_FAIL


def _cmd_simulate(args) -> int:
    cfg = _load_cfg(args.program)
    sf = _sampling_function(cfg, args.dist)
    entry = _entry_element(cfg, args.entry, args.args)
    cert = load_certificate(args.cert) if args.cert else None
    if args.scheduler.startswith("greedy") and cert is None:
        raise CliError(f"scheduler {args.scheduler!r} requires --cert")
    scheduler = Scheduler(args.scheduler, cert)
    workers = args.workers if args.workers > 0 else (os.cpu_count() or 1)
    stats = simulate(cfg, sf, entry, scheduler, runs=args.runs,
                     max_steps=args.max_steps, k_list=_int_list(args.tail),
                     seed=args.seed, workers=workers)
    meta = _meta(seed=args.seed, cert=cert)
    meta.update(entry=f"{entry.fname}@{entry.label}", scheduler=args.scheduler,
                runs=stats.runs, max_steps=stats.max_steps)
    headers = ["statistic", "value", "ci95_lo", "ci95_hi"]
    rows: List[List] = [
        ["terminated", stats.terminated, "", ""],
        ["censored", stats.censored, "", ""],
    ]
    if stats.mean is not None:
        rows.append(["mean_T", f"{stats.mean:.6g}",
                     f"{stats.mean - stats.mean_halfwidth:.6g}",
                     f"{stats.mean + stats.mean_halfwidth:.6g}"])
    for t in stats.tails:
        rows.append([f"P(T >= {t.k})", f"{t.p_hat:.6g}", f"{t.lo:.6g}", f"{t.hi:.6g}"])
    _emit(args.format, meta, headers, rows)
    return 0


def _bound_rows(kind: str, cert: Certificate, cfg: Cfg,
                entry: StackElement, ks: Tuple[int, ...],
                ns: Tuple[int, ...]) -> List[BoundReport]:
    params = cert.params
    value = cert_value_at(cert, cfg, entry)
    entry_text = f"({entry.fname}, {entry.label}, {entry.valuation})"
    rows: List[BoundReport] = []

    def fmt(x) -> str:
        return str(x)

    if kind in ("ranking", "cdb", "db"):
        params.require("eps")
        rows.append(BoundReport(
            "expected-time-upper", entry_text,
            {"eps": fmt(params.eps), "value": fmt(value)},
            fmt(upper_expected(cert, params.eps, value))))
        for k in ks:
            rows.append(BoundReport(
                "tail-markov", entry_text,
                {"eps": fmt(params.eps), "value": fmt(value), "k": str(k)},
                fmt(markov_tail(params.eps, value, k)),
                validity="any k >= 1"))
    if kind == "cdb":
        params.require("delta")
        rows.append(BoundReport(
            "expected-time-lower", entry_text,
            {"delta": fmt(params.delta), "value": fmt(value)},
            fmt(lower_expected(cert, params.delta, value)),
            validity="finite certificate value at the entry"))
    if kind == "db":
        params.require("zeta")
        for n in ns:
            exact, factored = concentration_tail(params.eps, params.zeta, value, n)
            rows.append(BoundReport(
                "tail-concentration", entry_text,
                {"eps": fmt(params.eps), "zeta": fmt(params.zeta),
                 "value": fmt(value), "n": str(n)},
                f"{exact:.6g}",
                validity=f"n > value/eps = {value.fraction / params.eps}"))
            rows.append(BoundReport(
                "tail-concentration-factored", entry_text,
                {"eps": fmt(params.eps), "zeta": fmt(params.zeta),
                 "value": fmt(value), "n": str(n)},
                f"{factored:.6g}",
                validity="looser product form of the same bound"))
    if kind == "super":
        params.require("delta", "zeta")
        theta = theta_fixpoint(cfg)
        if not theta.all_covered:
            raise BoundError(
                "the fixpoint does not cover every label; the square-root "
                "tail bound's hypothesis fails")
        rows.append(BoundReport(
            "as-termination", entry_text,
            {"K_max": str(theta.K_max)},
            "certified almost-sure termination; tail in O(1/sqrt(k))",
            validity="without the per-outcome jump cap only O(k^(-1/6)) "
                     "is certified, with no computable constant"))
        for k in ks:
            res = sqrt_tail(value, params.delta, params.zeta, theta.K_max, k)
            if res.ok:
                rows.append(BoundReport(
                    "tail-sqrt", entry_text,
                    {"delta": fmt(params.delta), "zeta": fmt(params.zeta),
                     "K": str(theta.K_max), "value": fmt(value), "k": str(k)},
                    f"{res.bound:.6g}"))
            else:
                rows.append(BoundReport(
                    "tail-sqrt", entry_text,
                    {"delta": fmt(params.delta), "zeta": fmt(params.zeta),
                     "K": str(theta.K_max), "value": fmt(value), "k": str(k)},
                    "k too small for this bound",
                    validity=f"smallest usable k is {res.min_valid_k}"))
    return rows


def _cmd_bounds(args) -> int:
    cfg = _load_cfg(args.program)
    cert = load_certificate(args.cert)
    entry = _entry_element(cfg, args.entry, args.args)
    rows = _bound_rows(args.kind, cert, cfg, entry,
                       _int_list(args.k), _int_list(args.n))
    meta = _meta(cert=cert)
    meta["kind"] = args.kind
    headers = ["rule", "entry", "params", "value", "validity"]
    table = [
        [r.rule, r.entry, " ".join(f"{k}={v}" for k, v in sorted(r.params.items())),
         r.value, r.validity]
        for r in rows
    ]
    _emit(args.format, meta, headers, table)
    return 0


def _cmd_lab(args) -> int:
    result = simulate_lab(args.example, runs=args.runs, horizon=args.horizon,
                          seed=args.seed, alpha=args.alpha,
                          tail_ns=_int_list(args.tail))
    meta = _meta(seed=args.seed)
    meta.update(example=args.example, runs=args.runs, horizon=args.horizon)
    if args.alpha is not None:
        meta["alpha"] = args.alpha
    headers = ["query", "analytic", "method", "empirical", "ci95_halfwidth"]
    rows = [
        [query, "" if a is None else f"{a:.6g}", method, f"{emp:.6g}", f"{ci:.3g}"]
        for query, a, method, emp, ci in result.rows()
    ]
    _emit(args.format, meta, headers, rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
