"""Closed-form stochastic processes that separate the certificate families.

Each process follows the shared recurrence

    X_{n+1} = 1_{X_n > 0} * (X_n + Y_{n+1})

with a per-step two-point law for Y_{n+1} (or, for the running-sum variant,
no indicator reset), and stops at T = first n with X_n <= 0.  Every tag has
an exact analytic law to compare the simulation against:

    nonnegativity      P(T > n) = exp(-sum_{j<=n} 1/j^2): positive mass at
                       infinity even though the expected drift is ranking
    cbounded           E[T] = 2, far below initial-value/drift = 3: expected
                       lower bounds need a cap on the expected step size
    noconcentration    P(T > n) = (n+1)^-alpha: polynomial tails when jumps
                       are unbounded, so no exponential concentration
    randomwalk         P(T > n) = C(n, floor(n/2))/2^n = Theta(1/sqrt(n)):
                       the square-root tail bound is order-optimal
    positivity         P(T = infinity) = 1/2 when the expected absolute step
                       only stays positive but not bounded away from zero
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import mpmath
import numpy as np

from .rng import make_generator
from .semantics import TailEstimate, Z95, wilson_interval

TAGS = ("nonnegativity", "cbounded", "noconcentration", "randomwalk", "positivity")

_DPS = 30


class LabError(ValueError):
    pass


def _needs_alpha(tag: str, alpha: Optional[float]) -> float:
    if tag != "noconcentration":
        return 0.0
    if alpha is None or alpha <= 1:
        raise LabError("noconcentration needs alpha > 1")
    return float(alpha)


def initial_value(tag: str) -> float:
    return {"nonnegativity": 0.5, "cbounded": 3.0, "noconcentration": 3.0,
            "randomwalk": 1.0, "positivity": 1.0}[tag]


def step_law(tag: str, n: int, alpha: Optional[float] = None) -> Tuple[Tuple[float, float], ...]:
    """The two-point law of the n-th increment (n >= 1) as ((value, prob), ...)."""
    if tag not in TAGS:
        raise LabError(f"unknown process {tag!r}; choose from {TAGS}")
    if n < 1:
        raise LabError("increments are defined for n >= 1")
    alpha = _needs_alpha(tag, alpha)
    if tag == "nonnegativity":
        p_up = math.exp(-1.0 / (n * n))
        return ((1.0, p_up), (-4.0 * n * n, 1.0 - p_up))
    if tag == "cbounded":
        up = float(2 ** (n - 1))
        return ((up, 0.5), (-up - 2.0, 0.5))
    if tag == "noconcentration":
        p_up = (n / (n + 1.0)) ** alpha
        return ((2.0, p_up), (-2.0 * n - 1.0, 1.0 - p_up))
    if tag == "randomwalk":
        return ((1.0, 0.5), (-1.0, 0.5))
    return ((2.0 ** (-n + 1), 0.5), (-(2.0 ** (-n + 1)), 0.5))


def analytic(tag: str, query: str, n: Optional[int] = None,
             alpha: Optional[float] = None) -> float:
    """Exact value of a supported query, evaluated at high precision.

    Queries: ``prob_nonterm``, ``expected_T``, ``tail`` (P(T > n), needs n).
    Unsupported (tag, query) pairs raise LabError.
    """
    if tag not in TAGS:
        raise LabError(f"unknown process {tag!r}; choose from {TAGS}")
    alpha_f = _needs_alpha(tag, alpha)
    if query == "tail":
        if n is None or n < 0:
            raise LabError("tail query needs n >= 0")
        with mpmath.workdps(_DPS):
            if tag == "nonnegativity":
                return float(mpmath.e ** (-mpmath.fsum(
                    mpmath.mpf(1) / (j * j) for j in range(1, n + 1))))
            if tag == "cbounded":
                return float(mpmath.mpf(2) ** (-n))
            if tag == "noconcentration":
                return float(mpmath.mpf(n + 1) ** (-alpha_f))
            if tag == "randomwalk":
                return math.comb(n, n // 2) / 2.0 ** n if n < 1020 else float(
                    mpmath.binomial(n, n // 2) / mpmath.mpf(2) ** n)
            return 1.0 if n == 0 else 0.5
    if query == "prob_nonterm":
        with mpmath.workdps(_DPS):
            if tag == "nonnegativity":
                return float(mpmath.e ** (-(mpmath.pi ** 2) / 6))
            if tag in ("cbounded", "noconcentration", "randomwalk"):
                return 0.0
            return 0.5
    if query == "expected_T":
        if tag == "cbounded":
            return 2.0
        if tag == "noconcentration":
            with mpmath.workdps(_DPS):
                return float(mpmath.zeta(alpha_f))
        raise LabError(f"expected_T is not finite/supported for {tag!r}")
    raise LabError(f"unknown query {query!r}")


@dataclass(frozen=True)
class LabResult:
    tag: str
    alpha: Optional[float]
    runs: int
    horizon: int
    seed: int
    terminated: int
    censored: int
    mean: Optional[float]
    mean_halfwidth: Optional[float]
    survivals: Tuple[TailEstimate, ...]  # entry at n estimates P(T > n)

    def survival(self, n: int) -> TailEstimate:
        for t in self.survivals:
            if t.k == n:
                return t
        raise KeyError(f"no survival estimate for n={n}")

    @property
    def p_censored(self) -> float:
        return self.censored / self.runs if self.runs else 0.0

    def rows(self) -> Tuple[Tuple[str, Optional[float], str, float, float], ...]:
        """(query, analytic, method, empirical, ci-halfwidth) comparison rows.

        The censored fraction P(T > horizon) is an upper-biased proxy for
        the probability of nontermination and is labelled as such.
        """
        rows = []
        try:
            exp_t = analytic(self.tag, "expected_T", alpha=self.alpha)
        except LabError:
            exp_t = None
        if self.mean is not None:
            rows.append((
                "expected_T", exp_t,
                "closed form" if exp_t is not None else "not finite",
                self.mean, self.mean_halfwidth or 0.0,
            ))
        nonterm = analytic(self.tag, "prob_nonterm", alpha=self.alpha)
        lo, hi = wilson_interval(self.censored, self.runs)
        rows.append((
            f"prob_nonterm (proxy: P(T > {self.horizon}))", nonterm,
            "closed form limit; empirical column is horizon-censored and upper-biased",
            self.p_censored, (hi - lo) / 2,
        ))
        for t in self.survivals:
            rows.append((
                f"tail P(T > {t.k})",
                analytic(self.tag, "tail", n=t.k, alpha=self.alpha),
                "closed form", t.p_hat, (t.hi - t.lo) / 2,
            ))
        return tuple(rows)


def simulate_lab(tag: str, runs: int, horizon: int, seed: int = 0,
                 alpha: Optional[float] = None,
                 tail_ns: Sequence[int] = ()) -> LabResult:
    """Simulate the recurrence and aggregate termination-time statistics.

    Increment laws are time-inhomogeneous but identical across runs, so the
    whole cohort advances one step at a time as a vector.  Runs alive at the
    horizon are censored; they count toward every requested survival level
    (exact, since T > horizon >= n) and are excluded from the mean.
    """
    if tag not in TAGS:
        raise LabError(f"unknown process {tag!r}; choose from {TAGS}")
    if horizon < 1:
        raise LabError("horizon must be at least 1")
    alpha_f = _needs_alpha(tag, alpha)
    tail_ns = tuple(sorted(set(int(n) for n in tail_ns)))
    for n in tail_ns:
        if n < 0 or n > horizon:
            raise LabError(f"survival level {n} outside [0, horizon]")

    gen = make_generator(seed, 0)
    if tag == "randomwalk":
        T = _simulate_walk(gen, runs, horizon)
    else:
        T = _simulate_two_point(gen, tag, alpha_f, runs, horizon)

    finished = T > 0
    terminated = int(finished.sum())
    censored = runs - terminated
    mean = halfwidth = None
    if terminated:
        steps = T[finished].astype(np.float64)
        mean = float(steps.mean())
        if terminated > 1:
            halfwidth = float(Z95 * steps.std(ddof=1) / math.sqrt(terminated))
        else:
            halfwidth = float("inf")

    survivals = []
    for n in tail_ns:
        count = int(((T > n) | ~finished).sum())
        lo, hi = wilson_interval(count, runs)
        survivals.append(TailEstimate(n, count, count / runs, lo, hi))

    return LabResult(
        tag=tag, alpha=alpha if tag == "noconcentration" else None,
        runs=runs, horizon=horizon, seed=seed,
        terminated=terminated, censored=censored,
        mean=mean, mean_halfwidth=halfwidth,
        survivals=tuple(survivals),
    )


def _simulate_two_point(gen: np.random.Generator, tag: str, alpha: float,
                        runs: int, horizon: int) -> np.ndarray:
    """Step the cohort through the recurrence; returns T per run (0 = censored).

    `nonnegativity` uses the running-sum form (no reset on nonpositive
    values); the others reset, which for stopping-time purposes is the same
    as freezing the run at its first nonpositive value.
    """
    T = np.zeros(runs, dtype=np.int64)
    x = np.full(runs, initial_value(tag), dtype=np.float64)
    alive = np.arange(runs)
    for n in range(1, horizon + 1):
        law = step_law(tag, n, alpha if tag == "noconcentration" else None)
        (up_val, p_up), (down_val, _) = law
        u = gen.random(alive.size)
        x[alive] += np.where(u < p_up, up_val, down_val)
        hit = x[alive] <= 0
        if hit.any():
            T[alive[hit]] = n
            alive = alive[~hit]
            if alive.size == 0:
                break
    return T


def _simulate_walk(gen: np.random.Generator, runs: int, horizon: int) -> np.ndarray:
    """Symmetric +-1 walk from 1 absorbed at 0, stepped in cumsum blocks."""
    T = np.zeros(runs, dtype=np.int64)
    x = np.ones(runs, dtype=np.int64)
    alive = np.arange(runs)
    done_steps = 0
    while alive.size and done_steps < horizon:
        block = int(max(64, min(4096, 4_000_000 // max(alive.size, 1))))
        block = min(block, horizon - done_steps)
        steps = gen.integers(0, 2, size=(alive.size, block), dtype=np.int8)
        walk = np.cumsum(steps.astype(np.int32) * 2 - 1, axis=1, dtype=np.int64)
        walk += x[alive, None]
        hit_mask = walk <= 0
        any_hit = hit_mask.any(axis=1)
        first = np.argmax(hit_mask, axis=1)
        hits = np.flatnonzero(any_hit)
        if hits.size:
            T[alive[hits]] = done_steps + first[hits] + 1
        survivors = np.flatnonzero(~any_hit)
        x[alive[survivors]] = walk[survivors, -1]
        alive = alive[survivors]
        done_steps += block
    return T


def fit_tail_slope(ns: Sequence[int], counts: Sequence[int], runs: int,
                   min_count: int = 25, shift: int = 1) -> float:
    """Weighted log-log slope of an empirical survival curve.

    The abscissa is log(n + shift); with shift 1 it counts completed trials,
    which is the natural argument for survival functions of first-failure
    times (P(T > n) depends on the n+1 trials survived).  Points with fewer
    than `min_count` surviving runs are dropped, and the rest are weighted
    by their counts, approximating inverse variance of log P-hat under
    Poisson noise.
    """
    xs, ys, ws = [], [], []
    for n, count in zip(ns, counts):
        if count >= min_count and n + shift >= 1:
            xs.append(math.log(n + shift))
            ys.append(math.log(count / runs))
            ws.append(float(count))
    if len(xs) < 2:
        raise LabError("not enough usable points to fit a slope")
    xs_a, ys_a, ws_a = map(np.asarray, (xs, ys, ws))
    xbar = np.average(xs_a, weights=ws_a)
    ybar = np.average(ys_a, weights=ws_a)
    return float(np.sum(ws_a * (xs_a - xbar) * (ys_a - ybar))
                 / np.sum(ws_a * (xs_a - xbar) ** 2))
