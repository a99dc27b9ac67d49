import math
from fractions import Fraction

import pytest

from termcert.distributions import sample
from termcert.rng import RngStream
from termcert.semantics import (
    ACTION_ELSE,
    ACTION_TAU,
    ACTION_THEN,
    DisabledActionError,
    MdpState,
    Scheduler,
    SemanticsError,
    StackElement,
    Z95,
    enabled_actions,
    initial_state,
    simulate,
    step,
    wilson_interval,
)
from termcert.valuation import Valuation


def mu(r):
    return Valuation({"r": r})


def test_assignment_step_consumes_fresh_sample(halving):
    cfg, sf, _ = halving
    state = MdpState((StackElement("g", 2, Valuation({"n": 3})),), mu(0))
    out = step(state, ACTION_TAU, mu(-1), cfg)
    assert out.config == (StackElement("g", 3, Valuation({"n": 2})),)
    assert out.sample == mu(-1)


def test_call_step_pushes_callee_over_return_frame(halving):
    cfg, _, _ = halving
    below = StackElement("g", 1, Valuation({"n": 9}))
    state = MdpState((StackElement("f", 3, Valuation({"n": 5})), below), mu(1))
    out = step(state, ACTION_TAU, mu(1), cfg)
    assert out.config == (
        StackElement("f", 1, Valuation({"n": 2})),
        StackElement("f", 4, Valuation({"n": 5})),
        below,
    )


def test_call_step_replaces_frame_when_continuation_is_terminal(halving):
    cfg, _, _ = halving
    state = MdpState((StackElement("f", 4, Valuation({"n": 5})),), mu(1))
    out = step(state, ACTION_TAU, mu(1), cfg)
    assert out.config == (StackElement("f", 1, Valuation({"n": 2})),)


def test_branching_step_follows_the_failing_guard(halving):
    cfg, _, _ = halving
    state = MdpState((StackElement("f", 1, Valuation({"n": 0})),), mu(0))
    out = step(state, ACTION_TAU, mu(1), cfg)
    assert out.config == (StackElement("f", 6, Valuation({"n": 0})),)


def test_pop_to_empty_configuration_and_absorption(halving):
    cfg, _, _ = halving
    state = MdpState((StackElement("f", 6, Valuation({"n": 0})),), mu(0))
    out = step(state, ACTION_TAU, mu(1), cfg)
    assert out.terminated
    # the empty configuration absorbs under every action
    assert enabled_actions(out, cfg) == (ACTION_TAU, ACTION_THEN, ACTION_ELSE)
    again = step(out, ACTION_THEN, mu(-1), cfg)
    assert again.terminated and again.sample == mu(-1)


def test_enabled_actions_and_disabled_action_error(halving):
    cfg, _, _ = halving
    nondet = MdpState((StackElement("f", 2, Valuation({"n": 3})),), mu(0))
    assert enabled_actions(nondet, cfg) == (ACTION_THEN, ACTION_ELSE)
    plain = MdpState((StackElement("f", 1, Valuation({"n": 3})),), mu(0))
    assert enabled_actions(plain, cfg) == (ACTION_TAU,)
    with pytest.raises(DisabledActionError):
        step(nondet, ACTION_TAU, mu(1), cfg)
    with pytest.raises(DisabledActionError):
        step(plain, ACTION_THEN, mu(1), cfg)


def test_nondet_step_follows_action(halving):
    cfg, _, _ = halving
    state = MdpState((StackElement("f", 2, Valuation({"n": 3})),), mu(0))
    assert step(state, ACTION_THEN, mu(1), cfg).config[0].label == 3
    assert step(state, ACTION_ELSE, mu(1), cfg).config[0].label == 5


def test_initial_state_zeroes_the_sample(halving):
    cfg, sf, _ = halving
    entry = StackElement("f", 1, Valuation({"n": 5}))
    state = initial_state(entry, sf)
    assert state.sample == mu(0)
    assert state.config == (entry,)


def test_one_step_probability_law(halving):
    # empirical frequency of each successor of a fixed assignment state over
    # a million single steps matches the joint sampling weight within 3 sigma
    cfg, sf, _ = halving
    state = MdpState((StackElement("g", 2, Valuation({"n": 3})),), mu(0))
    rng = RngStream(99, 0)
    n = 1_000_000
    draws = [1 if u < 0.25 else -1 for u in rng.uniforms(n)]
    counts = {2: 0, 4: 0}
    for drawn in draws:
        out = step(state, ACTION_TAU, mu(drawn), cfg)
        counts[out.config[0].valuation["n"]] += 1
    assert counts[2] + counts[4] == n
    p = Fraction(1, 4)
    sigma = math.sqrt(float(p * (1 - p)) / n)
    assert abs(counts[4] / n - 0.25) <= 3 * sigma


def test_simulate_rejects_terminal_entry(halving):
    cfg, sf, _ = halving
    with pytest.raises(SemanticsError):
        simulate(cfg, sf, StackElement("f", 7, Valuation({"n": 0})),
                 Scheduler("uniform"), runs=1, max_steps=10, seed=0)


def test_simulate_rejects_tail_threshold_beyond_cap(halving):
    cfg, sf, _ = halving
    with pytest.raises(SemanticsError):
        simulate(cfg, sf, StackElement("f", 1, Valuation({"n": 1})),
                 Scheduler("uniform"), runs=1, max_steps=10, k_list=[11], seed=0)


def test_greedy_max_mean_is_deterministic_for_halving_game(halving):
    # under the greedy-max policy the run from n=5 is deterministic: 44 steps
    cfg, sf, cert = halving
    stats = simulate(cfg, sf, StackElement("f", 1, Valuation({"n": 5})),
                     Scheduler("greedy-max", cert), runs=300, max_steps=10_000,
                     seed=5)
    assert stats.mean == 44.0
    assert stats.mean_halfwidth == 0.0
    assert stats.censored == 0


def test_always_then_equals_greedy_max_here(halving):
    cfg, sf, cert = halving
    entry = StackElement("f", 1, Valuation({"n": 5}))
    a = simulate(cfg, sf, entry, Scheduler("always-then"), runs=200,
                 max_steps=10_000, seed=6)
    b = simulate(cfg, sf, entry, Scheduler("greedy-max", cert), runs=200,
                 max_steps=10_000, seed=6)
    assert a.mean == b.mean == 44.0


def test_simulate_deterministic_under_fixed_seed(halving):
    cfg, sf, cert = halving
    entry = StackElement("f", 1, Valuation({"n": 5}))
    kw = dict(runs=400, max_steps=10_000, k_list=[30], seed=12)
    a = simulate(cfg, sf, entry, Scheduler("uniform"), **kw)
    b = simulate(cfg, sf, entry, Scheduler("uniform"), **kw)
    assert a == b
    c = simulate(cfg, sf, entry, Scheduler("uniform"), runs=400,
                 max_steps=10_000, k_list=[30], seed=13)
    assert a != c


def test_worker_count_does_not_change_results(halving):
    cfg, sf, cert = halving
    entry = StackElement("f", 1, Valuation({"n": 5}))
    kw = dict(runs=300, max_steps=10_000, k_list=[30, 112], seed=21)
    serial = simulate(cfg, sf, entry, Scheduler("uniform"), **kw)
    parallel = simulate(cfg, sf, entry, Scheduler("uniform"), workers=8, **kw)
    assert serial == parallel


def test_censoring_consistent_with_expected_time_tail(halving):
    # with a capped run count, the censored fraction stays within the
    # inverse-linear tail implied by value/eps at the entry, plus 3 sigma
    cfg, sf, cert = halving
    entry = StackElement("f", 1, Valuation({"n": 5}))
    cap = 64
    stats = simulate(cfg, sf, entry, Scheduler("uniform"), runs=4000,
                     max_steps=cap, seed=31)
    markov = 56 / cap
    p = stats.censored / stats.runs
    sigma = math.sqrt(markov * (1 - markov) / stats.runs)
    assert p <= markov + 3 * sigma


def test_stack_length_changes_by_at_most_one(halving):
    cfg, sf, _ = halving
    dist = sf.dist("r")
    rng = RngStream(77, 0)
    state = MdpState((StackElement("f", 1, Valuation({"n": 6})),), mu(0))
    prev_len = 1
    for _ in range(400):
        if state.terminated:
            break
        actions = enabled_actions(state, cfg)
        action = actions[0] if len(actions) == 1 else (
            ACTION_THEN if rng.random() < 0.5 else ACTION_ELSE)
        state = step(state, action, mu(sample(dist, rng)), cfg)
        assert abs(len(state.config) - prev_len) <= 1
        prev_len = len(state.config)


def test_wilson_interval_basic():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    lo0, hi0 = wilson_interval(0, 100)
    assert lo0 == pytest.approx(0.0, abs=1e-12)
    assert hi0 < 0.05


def _reference_run(cfg, sf, entry, scheduler, max_steps, seed, run_index):
    """Termination time via the public single-step API, consuming the same
    uniform stream as the compiled runner: one draw per sampling variable
    read by the executed assignment, one draw per coin-flip decision."""
    from termcert.cfg import single_edge
    from termcert.distributions import sample_from_uniform
    from termcert.rng import make_generator
    from termcert.semantics import ACTION_TAU, initial_state

    gen = make_generator(seed, run_index)
    state = initial_state(entry, sf)
    for steps in range(max_steps):
        if state.terminated:
            return steps
        top = state.config[0]
        fn = cfg.function(top.fname)
        cls = fn.label_class(top.label)
        drawn = {}
        if cls == "assignment":
            payload = single_edge(fn, top.label).payload
            for svar in payload.sampling_vars:
                u = float(gen.random())
                drawn[svar] = sample_from_uniform(sf.dist(svar).thresholds(), u)
        if cls == "nondet":
            if scheduler.kind == "uniform":
                action = scheduler.choose(top, cfg, float(gen.random()))
            else:
                action = scheduler.choose(top, cfg)
        else:
            action = ACTION_TAU
        state = step(state, action, Valuation(drawn), cfg)
    return None  # censored


@pytest.mark.parametrize("gen_seed", [0, 1, 2, 3, 4, 5, 6, 7])
def test_compiled_runner_matches_single_step_reference(gen_seed):
    # run random two-variable programs through both execution paths with the
    # same per-run streams; termination times must agree run for run
    from test_properties import make_sampling_function, rand_program
    from termcert.cfg import build_cfg

    cfg = build_cfg(rand_program(gen_seed))
    sf = make_sampling_function()
    entry = StackElement("f", cfg.function("f").entry,
                         Valuation({"m": 1, "n": 2}))
    for kind in ("uniform", "always-else"):
        sched = Scheduler(kind)
        cap = 300
        stats = simulate(cfg, sf, entry, sched, runs=40, max_steps=cap, seed=99)
        ref = [_reference_run(cfg, sf, entry, sched, cap, 99, run)
               for run in range(40)]
        ref_terminated = [t for t in ref if t is not None]
        assert stats.terminated == len(ref_terminated)
        assert stats.sum_steps == sum(ref_terminated)
        assert stats.sumsq_steps == sum(t * t for t in ref_terminated)


def test_multi_variable_joint_sampling_in_one_update():
    # an update reading two sampling variables consumes one draw for each;
    # successor frequencies follow the product law
    from termcert.cfg import build_cfg
    from termcert.distributions import DiscreteDist, SamplingFunction
    from termcert.lang import label_program
    from termcert.parser import parse_program

    prog = label_program(parse_program(
        "f(n) { while n >= 1 do n := n - a - b od }"))
    cfg = build_cfg(prog)
    sf = SamplingFunction.from_mapping({
        "a": DiscreteDist.from_pairs([(0, Fraction(1, 4)), (1, Fraction(3, 4))]),
        "b": DiscreteDist.from_pairs([(0, Fraction(1, 2)), (1, Fraction(1, 2))]),
    })
    # P(a+b = 0) = 1/8, so from n=1 the one-iteration termination chance is
    # 7/8 and T is geometric in iteration pairs; check the mean: each loop
    # iteration costs two steps (guard + assignment), plus the exit guard
    # E[iterations] = 8/7, so E[T] = 2 * 8/7 + 1
    entry = StackElement("f", 1, Valuation({"n": 1}))
    stats = simulate(cfg, sf, entry, Scheduler("uniform"), runs=40_000,
                     max_steps=10_000, seed=123)
    expected = 2 * 8 / 7 + 1
    assert stats.censored == 0
    assert abs(stats.mean - expected) <= 3.5 * (stats.mean_halfwidth / Z95)


def test_tail_estimates_monotone_nonincreasing(halving):
    cfg, sf, _ = halving
    entry = StackElement("f", 1, Valuation({"n": 5}))
    stats = simulate(cfg, sf, entry, Scheduler("uniform"), runs=2_000,
                     max_steps=10**4, k_list=[5, 20, 40, 80], seed=2)
    assert stats.terminated + stats.censored == stats.runs
    p_hats = [t.p_hat for t in stats.tails]
    assert all(0.0 <= p <= 1.0 for p in p_hats)
    assert p_hats == sorted(p_hats, reverse=True)
