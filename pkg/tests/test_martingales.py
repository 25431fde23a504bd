from fractions import Fraction
from itertools import product

import pytest

from mlab.core import OutOfBudget, StepBudget, Word
from mlab.martingales import (
    check_fairness,
    constant,
    diverge_beyond,
    diverge_past,
    double_on,
    from_function,
    from_table,
    lean_on,
    pattern_bettor,
    saving_transform,
    weighted_sum,
)

# §-style finite run over an out-of-order scan is exercised in
# test_strategies; here the same value table shows up as a fairness
# counterexample when treated as a plain word function.
RUN_VALUE_TABLE = {
    "": 1, "0": 1, "1": 1,
    "00": 4, "01": 0, "10": 4, "11": 0,
}


def test_constant_is_fair():
    report = check_fairness(constant(1), depth=5)
    assert report.empty


def test_forced_violation_at_root():
    d = from_table({"": 1, "0": 2, "1": 1}, name="skew")
    report = check_fairness(d, depth=1)
    assert len(report.violations) == 1
    w, parent, c0, c1 = report.violations[0]
    assert (w, parent, c0, c1) == ("", 1, 2, 1)


def test_out_of_order_run_value_is_not_a_martingale():
    # the finite-run value of a strategy that visits position 1 before 0
    # satisfies b(0)=b(1)=1 but doubles only under 00/10: unfair at "0"
    bhat = from_function(lambda w: Fraction(RUN_VALUE_TABLE[w]), name="bhat")
    report = check_fairness(bhat, depth=2)
    assert not report.ok
    assert any(w == "0" for w, *_ in report.violations)


def test_doubler_values():
    d = double_on(0)
    assert d.value("") == 1
    assert d.value("0000") == 16
    assert d.value("0100") == 0
    assert check_fairness(d, depth=6).empty


def test_pattern_and_lean_fair():
    assert check_fairness(pattern_bettor("01"), depth=6).empty
    assert check_fairness(lean_on(1, Fraction(1, 2)), depth=6).empty
    assert lean_on(1, Fraction(1, 2)).value("11") == Fraction(9, 4)


def test_weighted_sum_values():
    s = weighted_sum([(1, constant(1)), (Fraction(1, 2), constant(1))])
    assert s.value("") == Fraction(3, 2)
    assert s.value("0110") == Fraction(3, 2)

    single = weighted_sum([(1, double_on(0))])
    for w in ["", "0", "01", "000", "111"]:
        assert single.value(w) == double_on(0).value(w)

    both = weighted_sum([(1, double_on(0)), (1, double_on(1))])
    assert both.value("") == 2
    # equal 0/1 bets: at every word the two doublers' values sum as computed
    # by direct evaluation to depth 3
    for n in range(4):
        for bits in product("01", repeat=n):
            w = "".join(bits)
            expected = double_on(0).value(w) + double_on(1).value(w)
            assert both.value(w) == expected


def test_weighted_sum_fairness_and_rejects():
    assert check_fairness(weighted_sum([(1, double_on(0)), (2, pattern_bettor("10"))]),
                          depth=6).empty
    with pytest.raises(ValueError):
        weighted_sum([])
    with pytest.raises(ValueError):
        weighted_sum([(0, constant(1))])


def test_weighted_sum_propagates_divergence():
    s = weighted_sum([(1, constant(1)), (1, diverge_past(constant(1), 2))])
    assert s.value("00") == 2
    with pytest.raises(OutOfBudget):
        s.value("000")


def saving_oracle(base_values, initial):
    """Independent hand-iteration of the saving rule along a value chain.

    Walks the chain of base values d(w[:0]), d(w[:1]), ... applying the
    prose rule directly: scale the bet by the current stake scale, and
    while the active part reaches twice the initial capital, bank half and
    halve the scale.
    """
    bank = Fraction(0)
    active = Fraction(base_values[0])
    scale = Fraction(1)
    states = []
    while active >= 2 * initial:
        bank += active / 2
        active /= 2
        scale /= 2
    states.append((bank, active))
    for prev, cur in zip(base_values, base_values[1:]):
        active = active + scale * (Fraction(cur) - Fraction(prev))
        while active >= 2 * initial:
            bank += active / 2
            active /= 2
            scale /= 2
        states.append((bank, active))
    return states


def test_saving_constant_never_banks():
    sm = saving_transform(constant(1))
    for w in ["", "0", "01", "0110"]:
        assert sm.value(w) == 1
        assert sm.bank_at(w) == 0


def test_saving_all_in_doubler_banks_linearly():
    # base value on 0^n is 2^n; oracle-checked for n = 1..5, the saved
    # total is n+1 with bank n and active 1
    d = double_on(0)
    sm = saving_transform(d)
    chain = [d.value("0" * k) for k in range(6)]
    oracle = saving_oracle(chain, Fraction(1))
    for n in range(6):
        w = "0" * n
        assert (sm.bank_at(w), sm.active_at(w)) == oracle[n]
        assert sm.value(w) == (n + 1 if n else 1)
        if n:
            assert sm.bank_at(w) == n
            assert sm.active_at(w) == 1


def test_saving_first_trigger_banks_exactly_one():
    # any martingale first reaching exactly 2 banks 1 and keeps 1 active
    d = from_table({"": 1, "0": 2, "1": 0, "00": 2, "01": 2, "10": 0, "11": 0},
                   name="reach2")
    sm = saving_transform(d)
    assert sm.bank_at("0") == 1
    assert sm.active_at("0") == 1


def test_saving_fairness_and_monotone_bank():
    for base in [double_on(0), pattern_bettor("01"), lean_on(0, Fraction(1, 2))]:
        sm = saving_transform(base)
        assert check_fairness(sm, depth=6).empty, base.name
    sm = saving_transform(lean_on(0, Fraction(1, 2)))
    w = "000100010000"
    prev_bank = Fraction(0)
    for k in range(len(w) + 1):
        bank = sm.bank_at(w[:k])
        assert bank >= prev_bank
        assert sm.active_at(w[:k]) < 2
        prev_bank = bank


@pytest.mark.parametrize("seed", range(6))
def test_saving_total_never_drops_below_observed_bank(seed):
    from mlab.core import pseudo_random, sequence_prefix

    bases = [lean_on(seed % 2, Fraction(1, 2)), pattern_bettor("01"),
             lean_on(1, Fraction(1, 3))]
    base = bases[seed % 3]
    sm = saving_transform(base)
    chain = sequence_prefix(pseudo_random(seed), 64)
    high_water = Fraction(0)
    for k in range(65):
        u = chain[:k]
        bank = sm.bank_at(u)
        high_water = max(high_water, bank)
        # banked capital is never wagered: the total stays above every
        # bank level observed earlier on the chain
        assert sm.value(u) >= high_water


def test_conservation_from_direct_sum():
    # independent of the fairness walk: sum over all words of length n
    for m in [constant(2), double_on(1), pattern_bettor("011"),
              saving_transform(double_on(0))]:
        for n in (3, 6):
            total = sum(m.value("".join(bits)) for bits in product("01", repeat=n))
            assert total == 2**n * m.value(""), m.name


def test_diverge_beyond_children_both_diverge():
    d = diverge_beyond(double_on(0), "11")
    assert d.value("11") == 0
    for child in ("110", "111"):
        with pytest.raises(OutOfBudget):
            d.value(child)
    report = check_fairness(d, depth=4)
    assert report.ok  # divergence is legal partiality, not unfairness
    assert "110" in report.budget_exhausted


def test_from_table_partiality_reported_not_fatal():
    d = from_table({"": 1, "0": 1, "1": 1}, name="tiny")
    report = check_fairness(d, depth=3)
    assert report.ok
    assert len(report.budget_exhausted) == 12  # all words of lengths 2 and 3
