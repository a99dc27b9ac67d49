#!/usr/bin/env python3
"""Why each certificate hypothesis is necessary: five processes that drop
exactly one requirement and break the corresponding conclusion.

    nonnegativity     expected decrease but values may go negative:
                      positive mass never terminates
    cbounded          expected decrease exactly 1 from initial value 3, yet
                      E[T] = 2: without a cap on the expected step size the
                      value/drop lower bound fails
    noconcentration   expected decrease with unbounded jumps: tails decay
                      polynomially, not exponentially
    randomwalk        never-increasing with unit jump floor: terminates
                      almost surely at the 1/sqrt(k) rate exactly
    positivity        expected |step| positive but vanishing: the process
                      freezes above zero with probability 1/2
"""

from termcert.lab import analytic, fit_tail_slope, simulate_lab

print(f"{'process':<16} {'query':<22} {'analytic':>10} {'simulated':>10}")


def row(tag, query, analytic_value, simulated):
    print(f"{tag:<16} {query:<22} {analytic_value:>10.4f} {simulated:>10.4f}")


res = simulate_lab("nonnegativity", runs=50_000, horizon=10_000, seed=13,
                   tail_ns=[10_000])
row("nonnegativity", "P(T > 10000)", analytic("nonnegativity", "prob_nonterm"),
    res.survival(10_000).p_hat)

res = simulate_lab("cbounded", runs=50_000, horizon=200, seed=11)
row("cbounded", "E[T]", analytic("cbounded", "expected_T"), res.mean)

grid = [9, 15, 32, 68, 147, 316, 681, 1000]
res = simulate_lab("noconcentration", runs=500_000, horizon=1000, seed=12,
                   alpha=2, tail_ns=grid)
row("noconcentration", "P(T > 9)",
    analytic("noconcentration", "tail", n=9, alpha=2), res.survival(9).p_hat)
slope = fit_tail_slope(grid[1:], [res.survival(n).count for n in grid[1:]], res.runs)
print(f"{'':<16} {'log-log tail slope':<22} {-2.0:>10.4f} {slope:>10.4f}")

res = simulate_lab("randomwalk", runs=50_000, horizon=10**5, seed=8, tail_ns=[999])
row("randomwalk", "P(T > 999)", analytic("randomwalk", "tail", n=999),
    res.survival(999).p_hat)

res = simulate_lab("positivity", runs=50_000, horizon=64, seed=17, tail_ns=[64])
row("positivity", "P(T > 64)", analytic("positivity", "tail", n=64),
    res.survival(64).p_hat)

print("\nthe nonnegativity and positivity rows carry mass that never")
print("terminates; the noconcentration slope ~ -2 shows sub-exponential decay.")
