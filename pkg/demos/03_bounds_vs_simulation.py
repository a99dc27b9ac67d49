#!/usr/bin/env python3
"""Turning a checked certificate into numbers, then stress-testing them.

From the entry (f, 1, n=5) the certificate value is 56, giving
  -  expected termination time between 56/13 and 56,
  -  P(T >= k) <= 56/k (inverse-linear tail),
  -  P(T > n) <= exp(-(n-56)^2 / (2n*196)) once n > 56 (per-outcome caps).

Five schedulers then resolve the demonic choice adversarially, greedily,
or at random; every scheduler's empirical mean must land inside the
bracket, and the greedy-max policy witnesses the lower bound.
"""

from fractions import Fraction

from termcert import Scheduler, StackElement, Valuation, simulate
from termcert.bounds import (
    cert_value_at,
    concentration_tail,
    lower_expected,
    markov_tail,
    upper_expected,
)
from termcert.fixtures import halving_game
from termcert.semantics import SCHEDULER_KINDS

cfg, sf, cert = halving_game()
entry = StackElement("f", 1, Valuation({"n": 5}))
value = cert_value_at(cert, cfg, entry)

print(f"certificate value at the entry: {value}")
print(f"expected-time bracket: [{lower_expected(cert, Fraction(13), value)}, "
      f"{upper_expected(cert, Fraction(1), value)}]")
print(f"inverse-linear tail:   P(T >= 112) <= {markov_tail(Fraction(1), value, 112)}")
exact, factored = concentration_tail(Fraction(1), Fraction(13), value, 560)
print(f"concentration tail:    P(T > 560) <= {exact:.4f} "
      f"(factored form {factored:.4f})")

print("\nsimulation, 20000 runs per scheduler, seed 1105:")
for kind in SCHEDULER_KINDS:
    sched = Scheduler(kind, cert if kind.startswith("greedy") else None)
    stats = simulate(cfg, sf, entry, sched, runs=20_000, max_steps=10**5,
                     k_list=[112], seed=1105, workers=4)
    tail = stats.tail(112)
    print(f"  {kind:12s} mean T = {stats.mean:7.3f} +- {stats.mean_halfwidth:.3f}   "
          f"P(T >= 112) = {tail.p_hat:.4f}")
print("\nevery mean sits inside the bracket; greedy-max attains the most steps")
print("because it always takes the branch with the larger certificate value.")
