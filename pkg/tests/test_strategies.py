import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlab.core import StepBudget, Word, all_ones, all_zeros, pseudo_random
from mlab.martingales import check_fairness, double_on, from_function, from_table
from mlab.strategies import (
    HALT_BUDGET,
    HALT_COMPLETED,
    HALT_REPEAT,
    Adaptive,
    Injection,
    Monotonic,
    Permutation,
    Strategy,
    UnsupportedRule,
    bit_steer,
    block_reverse,
    block_rotate,
    block_shuffle,
    check_injectivity,
    even_injection,
    head_injection,
    next_position,
    pair_swap,
    run_on_sequence,
    run_on_word,
    visited_below,
)

# d visits position 1 first (betting all on 0), then position 5
SKIP_RULE = head_injection([1, 5])
SKIP_TABLE = from_table(
    {"": 1, "0": 2, "1": 0, "00": 4, "01": 0, "10": 0, "11": 0},
    name="skip-table",
)


def test_next_position_variants():
    assert next_position(Monotonic(), Word("010")) == 3
    assert next_position(pair_swap(), Word("")) == 1
    assert next_position(even_injection(), Word("0101")) == 8
    steer = bit_steer()
    assert next_position(steer, Word("")) == 0
    assert next_position(steer, Word("01")) == 5


def test_run_on_word_monotonic_equals_direct_eval():
    d = double_on(0)
    b = Strategy(d, Monotonic())
    for w in ["", "0", "0010", "000000"]:
        value, trace = run_on_word(b, w)
        assert value == d.value(w)
        assert trace.positions == tuple(range(len(w)))


def test_run_on_word_monotonic_exhaustive_to_length_12():
    d = double_on(0)
    b = Strategy(d, Monotonic())
    for n in range(13):
        for v in range(1 << n):
            w = format(v, f"0{n}b") if n else ""
            assert run_on_word(b, w)[0] == d.value(w)


def test_run_on_word_skip_strategy_values():
    b = Strategy(SKIP_TABLE, SKIP_RULE)
    # first requested position is 1, already outside a length-1 word
    assert run_on_word(b, "0")[0] == 1
    assert run_on_word(b, "1")[0] == 1
    # under 0-based indexing the visited bit of a length-2 word is w(1)
    assert run_on_word(b, "00")[0] == 2
    assert run_on_word(b, "01")[0] == 0
    value, trace = run_on_word(b, "00")
    assert trace.positions == (1,)
    assert trace.history == "0"


def test_out_of_order_run_is_not_fair():
    # the same table visited through the swapped order 1,0 produces finite
    # run values with b(0)=1 but value(00)+value(01) = 4+0 != 2
    swap = head_injection([1, 0])
    b = Strategy(SKIP_TABLE, swap)
    bhat = from_function(lambda w: run_on_word(b, w)[0], name="run-value")
    assert bhat.value("0") == 1
    assert bhat.value("00") == 4
    assert bhat.value("01") == 0
    report = check_fairness(bhat, depth=2)
    assert any(w == "0" for w, *_ in report.violations)


def test_run_on_sequence_doubler_trajectories():
    b = Strategy(double_on(0), Monotonic())
    t = run_on_sequence(b, all_zeros(), 5)
    assert t.capitals == (1, 2, 4, 8, 16, 32)
    assert t.halt == HALT_COMPLETED
    t = run_on_sequence(b, all_ones(), 3)
    assert t.capitals == (1, 0, 0, 0)


def test_run_on_sequence_even_injection():
    src = pseudo_random(0)
    even_zero = lambda i: 0 if i % 2 == 0 else 1
    from mlab.core import SequenceSource
    src = SequenceSource(even_zero, "even-zero")
    b = Strategy(double_on(0), even_injection())
    t = run_on_sequence(b, src, 4)
    assert t.positions == (0, 2, 4, 6)
    assert t.capitals == (1, 2, 4, 8, 16)


def test_run_on_sequence_repeat_detection():
    stuck = Adaptive(lambda h, b: 0, "stuck")
    b = Strategy(double_on(0), stuck)
    t = run_on_sequence(b, all_zeros(), 5)
    assert t.halt == HALT_REPEAT
    assert t.positions == (0,)


def test_run_on_sequence_budget_halt():
    b = Strategy(double_on(0), bit_steer())
    t = run_on_sequence(b, all_zeros(), 4, budget=StepBudget(2))
    assert t.halt == HALT_BUDGET


def test_run_on_word_rejects_adaptive():
    with pytest.raises(UnsupportedRule):
        run_on_word(Strategy(double_on(0), bit_steer()), "0101")


def test_check_injectivity():
    assert check_injectivity(Monotonic(), 100).ok
    bad = Injection(lambda j: 5 if j in (0, 3) else j + 10, None, "bad")
    report = check_injectivity(bad, 6)
    assert report.first() == (0, 3, 5)


def test_check_injectivity_adaptive_along_history():
    steer = bit_steer()
    assert check_injectivity(steer, 5, history="0110").ok
    # a rule that returns to position 0 after reading a 1
    back = Adaptive(lambda h, b: 0 if (h and h.bit(len(h) - 1)) else len(h),
                    "back")
    report = check_injectivity(back, 4, history="010")
    assert not report.ok
    assert report.first() == (0, 2, 0)
    with pytest.raises(UnsupportedRule):
        check_injectivity(steer, 4)


def test_visited_below_examples():
    r = visited_below(Monotonic(), 4)
    assert r.positions == frozenset({0, 1, 2, 3})
    r = visited_below(even_injection(), 5)
    assert r.positions == frozenset({0, 2, 4})
    assert r.complete
    r = visited_below(pair_swap(), 3)
    assert r.positions == frozenset({0, 1, 2})
    assert r.moves == {0: 1, 1: 0, 2: 3}


def test_visited_below_unhinted_injection_flags_incomplete():
    inj = Injection(lambda j: 2 * j + 100, None, "far")
    r = visited_below(inj, 5, budget=StepBudget(50))
    assert not r.complete
    assert r.positions == frozenset()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**30), st.integers(1, 16), st.data())
def test_flipping_unvisited_bit_never_changes_run_value(seed, n, data):
    rng = random.Random(seed)
    rule = [pair_swap(), block_rotate(3), block_reverse(4),
            block_shuffle(4, seed % 7), even_injection()][seed % 5]
    w = "".join(rng.choice("01") for _ in range(n))
    b = Strategy(double_on(0), rule)
    value, trace = run_on_word(b, w)
    visited = set(trace.positions)
    unvisited = [i for i in range(n) if i not in visited]
    if not unvisited:
        return
    i = data.draw(st.sampled_from(unvisited))
    flipped = w[:i] + ("1" if w[i] == "0" else "0") + w[i + 1:]
    assert run_on_word(b, flipped)[0] == value


def test_sequence_positions_match_rule_and_are_distinct():
    for rule in [pair_swap(), block_rotate(4), even_injection(),
                 block_shuffle(3, 9)]:
        b = Strategy(double_on(1), rule)
        t = run_on_sequence(b, all_ones(), 40)
        assert len(set(t.positions)) == len(t.positions)
        assert t.positions == tuple(rule.forward(j) for j in range(40))


def test_permutation_rules_are_involutions_or_inverses():
    for rule in [pair_swap(), block_rotate(5), block_reverse(3),
                 block_shuffle(6, 3)]:
        for i in range(60):
            assert rule.inverse(rule.forward(i)) == i
            assert rule.forward(rule.inverse(i)) == i
