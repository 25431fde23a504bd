"""Named invariant suites, runnable from the CLI and from the test suite.

Every check is deterministic: randomized cases are generated from fixed
seeds, and all comparisons are exact rational equalities or inequalities.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable

from . import martingales as mg
from .catalog import roster_by_name, schedule_by_id
from .certificates import serialize_certificate
from .complexity import (
    REPEAT_ZERO_COST,
    DescriptionSystem,
    enumerate_low,
    valid_programs,
)
from .core import (
    Word,
    all_zeros,
    pseudo_random,
    sequence_prefix,
    validate_checkpoints,
)
from .diagonalize import replay_certificate, run_construction
from .martingales import Martingale, check_fairness, saving_transform, weighted_sum
from .splitting import build_plan, build_splitting_strategy, checkpoint_gains, expected_gain
from .strategies import (
    Permutation,
    Strategy,
    block_reverse,
    block_rotate,
    block_shuffle,
    check_injectivity,
    pair_swap,
    run_on_sequence,
    run_on_word,
)
from .transforms import (
    RaceTimeout,
    average_martingale,
    average_value,
    averaging_horizon,
    class_from_events,
    monotonize,
    totalize_martingale,
)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tail = f" — {self.detail}" if self.detail else ""
        return f"[{status}] {self.suite}/{self.name}{tail}"


def _result(suite: str, name: str, passed: bool, detail: str = "") -> CheckResult:
    return CheckResult(suite, name, bool(passed), detail)


# --- deterministic random case generators -----------------------------------


def _random_permutation(rng: random.Random) -> Permutation:
    kind = rng.randrange(4)
    if kind == 0:
        return pair_swap()
    if kind == 1:
        return block_rotate(rng.choice([2, 3, 4]))
    if kind == 2:
        return block_reverse(rng.choice([2, 3, 4]))
    return block_shuffle(rng.choice([3, 4]), rng.randrange(1000))


def _random_growing_martingale(rng: random.Random) -> Martingale:
    kind = rng.randrange(3)
    if kind == 0:
        return mg.lean_on(rng.randrange(2), Fraction(1, rng.choice([2, 3])))
    if kind == 1:
        return mg.pattern_bettor("".join(rng.choice("01")
                                         for _ in range(rng.randrange(1, 4))))
    return mg.double_on(rng.randrange(2))


def _random_word(rng: random.Random, max_len: int) -> Word:
    return Word("".join(rng.choice("01") for _ in range(rng.randrange(max_len + 1))))


# --- fairness suite ----------------------------------------------------------


def _fairness_instances() -> list[tuple[str, Martingale]]:
    catalog = [
        mg.constant(1),
        mg.double_on(0),
        mg.double_on(1),
        mg.pattern_bettor("01"),
        mg.lean_on(0, Fraction(1, 2)),
        mg.lean_on(1, Fraction(1, 3)),
    ]
    instances = [(m.name, m) for m in catalog]
    instances.append(("weighted_sum", weighted_sum(
        [(1, mg.double_on(0)), (Fraction(1, 2), mg.pattern_bettor("10")),
         (Fraction(1, 3), mg.lean_on(1, Fraction(1, 2)))])))
    for base in (mg.double_on(0), mg.lean_on(1, Fraction(1, 2))):
        instances.append((f"saving({base.name})", saving_transform(base)))
    for rule in (pair_swap(), block_rotate(3)):
        instances.append((f"avg({rule.name})",
                          average_martingale(Strategy(mg.double_on(0), rule))))
    d_partial = mg.diverge_beyond(mg.double_on(0), "11")
    cls = class_from_events("u11", [(0, "11")])
    instances.append(("totalized", totalize_martingale(d_partial, cls, 10).martingale))
    for rule in (pair_swap(), block_reverse(4)):
        instances.append((f"monotonize({rule.name})",
                          monotonize(Strategy(mg.lean_on(0, Fraction(1, 2)), rule))))
    return instances


def fairness_suite(depth: int = 10) -> list[CheckResult]:
    out = []
    for name, m in _fairness_instances():
        report = check_fairness(m, depth)
        out.append(_result("fairness", f"{name}@depth{depth}", report.empty,
                           report.summary()))
    # conservation, computed by direct summation rather than the pair walk
    for m in (mg.double_on(1), mg.pattern_bettor("011"),
              saving_transform(mg.double_on(0))):
        ok = all(
            sum(m.value("".join(bits)) for bits in product("01", repeat=n))
            == 2**n * m.value("")
            for n in range(1, 11))
        out.append(_result("fairness", f"conservation({m.name})", ok))
    return out


# --- averaging suite ---------------------------------------------------------


def averaging_suite(cases: int = 50) -> list[CheckResult]:
    rng = random.Random(20090707)
    out = []
    failures = []
    for i in range(cases):
        rule = _random_permutation(rng)
        b = Strategy(_random_growing_martingale(rng), rule)
        w = _random_word(rng, 8)
        m0 = averaging_horizon(rule, len(w))
        a, b2 = average_value(b, w, m0), average_value(b, w, m0 + 3)
        if a != b2:
            failures.append(f"case {i}: {a} != {b2} at {w!r}")
    out.append(_result("averaging", f"horizon_independence({cases} cases)",
                       not failures, failures[0] if failures else ""))
    for rule in (pair_swap(), block_rotate(3)):
        av = average_martingale(Strategy(mg.double_on(0), rule))
        report = check_fairness(av, 8)
        out.append(_result("averaging", f"is_martingale({rule.name})@depth8",
                           report.empty, report.summary()))
    # where every visited position is known, the average is the run value
    b = Strategy(mg.double_on(0), pair_swap())
    ok = all(average_value(b, w) == run_on_word(b, w)[0]
             for w in ("00", "0110", "000000"))
    out.append(_result("averaging", "degenerate_average_is_run_value", ok))
    return out


# --- saving suite --------------------------------------------------------------


def saving_suite(cases: int = 20, horizon: int = 64) -> list[CheckResult]:
    rng = random.Random(1936)
    out = []
    transfer_failures = []
    monotone_failures = []
    for i in range(cases):
        rule = _random_permutation(rng)
        base = _random_growing_martingale(rng)
        saved = saving_transform(base)
        b_saved = Strategy(saved, rule)
        mono = average_martingale(b_saved)
        source = pseudo_random(rng.randrange(10**6))
        prefix = sequence_prefix(source, horizon)
        banks = []
        for n in range(horizon + 1):
            game = run_on_word(b_saved, prefix[:n])[1]
            banks.append(saved.bank_at(game.history))
        if any(b1 > b2 for b1, b2 in zip(banks, banks[1:])):
            monotone_failures.append(f"case {i}: bank not monotone")
        for m in range(horizon + 1):
            if mono.value(prefix[:m]) < banks[m]:
                transfer_failures.append(
                    f"case {i}: output {mono.value(prefix[:m])} < bank "
                    f"{banks[m]} at length {m}")
                break
    out.append(_result("saving", f"bank_monotone({cases} cases)",
                       not monotone_failures,
                       monotone_failures[0] if monotone_failures else ""))
    out.append(_result("saving", f"success_transfer({cases} cases)",
                       not transfer_failures,
                       transfer_failures[0] if transfer_failures else ""))
    # active part stays below twice the initial capital along a long chain
    saved = saving_transform(mg.lean_on(0, Fraction(1, 2)))
    chain = sequence_prefix(pseudo_random(5), 64)
    ok = all(saved.active_at(chain[:k]) < 2 for k in range(65))
    out.append(_result("saving", "active_below_twice_initial", ok))
    return out


# --- totalization suite ---------------------------------------------------------


def totalize_suite(cases: int = 20, depth: int = 10) -> list[CheckResult]:
    rng = random.Random(451)
    out = []
    failures = []
    for i in range(cases):
        base = _random_growing_martingale(rng)
        marker = Word("".join(rng.choice("01") for _ in range(rng.randrange(1, 5))))
        d = mg.diverge_beyond(base, marker)
        stage = rng.randrange(0, 3)
        cls = class_from_events(f"case{i}", [(stage, marker)])
        try:
            result = totalize_martingale(d, cls, depth)
        except RaceTimeout as e:
            failures.append(f"case {i}: unexpected RaceTimeout at {e.word!r}")
            continue
        m = result.martingale
        frozen = m.value(marker)
        enumerated = cls.enumerated_by(10**6)
        for n in (depth - 1, depth):
            for bits in product("01", repeat=n):
                w = Word("".join(bits))
                active = not any(w[:len(v)] == v for v in enumerated)
                if active:
                    if m.value(w) != d.value(w):
                        failures.append(f"case {i}: disagreement at {w!r}")
                        break
                elif len(w) > len(marker) and w.startswith(marker):
                    if m.value(w) != frozen:
                        failures.append(f"case {i}: not constant at {w!r}")
                        break
            else:
                continue
            break
    out.append(_result("totalize", f"race_resolves({cases} cases)",
                       not failures, failures[0] if failures else ""))
    # hypothesis-violating instances never produce a value
    timeouts = 0
    for i in range(5):
        base = _random_growing_martingale(rng)
        marker = Word("".join(rng.choice("01") for _ in range(1, 3)))
        d = mg.diverge_beyond(base, marker)
        try:
            totalize_martingale(d, class_from_events("empty", []), depth=4,
                                race_ticks=6)
        except RaceTimeout:
            timeouts += 1
    out.append(_result("totalize", "uncovered_divergence_times_out",
                       timeouts == 5, f"{timeouts}/5 raised"))
    return out


# --- diagonalization suite --------------------------------------------------------


def diagonal_suite(schedule_name: str = "s512",
                   golden: dict[str, dict] | None = None) -> list[CheckResult]:
    out = []
    schedule = schedule_by_id(schedule_name)
    # greedy defeat sanity: the all-in bettor loses everything at move 1
    roster = roster_by_name("tmr-std")
    single = run_construction(roster[:1], [0, 16], "tmr")
    ones = single.word == "1" * 16
    dead = all(v == 0 for v in single.terms[0].values[1:])
    out.append(_result("diagonal", "single_doubler_defeat",
                       ones and dead, f"word={single.word[:16]}"))
    # bound and per-entry defeat for roster sizes 1..5
    for size in range(1, 6):
        result = run_construction(roster[:size], schedule, "tmr",
                                  schedule_id=schedule_name)
        bound_ok = all(v < 2 for v in result.d_trajectory)
        defeat_ok = all(v <= 2 / t.alpha for t in result.terms for v in t.values)
        out.append(_result("diagonal", f"bound_roster_size_{size}",
                           bound_ok and defeat_ok,
                           f"max D = {max(result.d_trajectory)}"))
    # certificate replay, every variant
    for variant in ("tmr", "tir", "pmr", "ppr"):
        var_roster = roster_by_name(f"{variant}-std")
        result = run_construction(var_roster, schedule, variant,
                                  schedule_id=schedule_name)
        blob = serialize_certificate(result.certificate)
        replayed = replay_certificate(result.certificate, len(result.word),
                                      var_roster, schedule)
        half = replay_certificate(result.certificate, len(result.word) // 2,
                                  var_roster, schedule)
        ok = (replayed == result.word
              and half == result.word[:len(result.word) // 2]
              and all(v < 2 for v in result.d_trajectory)
              and 8 * len(blob) <= result.certificate.size_bound_bits())
        detail = f"cert {len(blob)} bytes"
        if golden is not None:
            import hashlib

            want = golden[variant]
            ok = (ok and len(blob) == want["certificate_bytes"]
                  and hashlib.sha256(blob).hexdigest() == want["certificate_sha256"]
                  and hashlib.sha256(result.word.encode()).hexdigest()
                  == want["prefix_sha256"])
            detail += f" (golden {want['certificate_bytes']}B + hashes)"
        out.append(_result("diagonal", f"replay_{variant}", ok, detail))
    return out


# --- splitting suite -----------------------------------------------------------


def splitting_suite() -> list[CheckResult]:
    out = []
    cp = validate_checkpoints([0, 256, 512, 1024, 2048])
    plan = build_plan(cp, thresholds=[REPEAT_ZERO_COST] * cp.interval_count)
    ds = DescriptionSystem()
    strategy, schedule = build_splitting_strategy(plan, ds)
    horizon = len(schedule.positions) + 16
    out.append(_result("splitting", "injective_over_horizon",
                       check_injectivity(strategy.rule, horizon).ok))
    at_risk = plan.total_at_risk()
    out.append(_result("splitting", "at_risk_below_two", at_risk < 2,
                       f"total at risk {at_risk}"))
    trace = run_on_sequence(strategy, all_zeros(), len(schedule.positions))
    rows = checkpoint_gains(schedule, trace.capitals, trace.positions)
    winners = [row for row in rows if row["gain"] >= 1]
    out.append(_result("splitting", "gains_at_three_checkpoints",
                       len(winners) >= 3,
                       f"{len(winners)}/{len(rows)} intervals cleared 1"))
    expected_ok = all(
        rows[k]["gain"] >= expected_gain(plan, k) - 2 * plan.stakes[k]
        for k in range(plan.interval_count))
    out.append(_result("splitting", "gains_match_expected_payout", expected_ok))
    other = run_on_sequence(strategy, pseudo_random(3), len(schedule.positions))
    out.append(_result("splitting", "visit_order_independent_of_sequence",
                       other.positions == trace.positions))
    out.append(_result("splitting", "capital_never_negative",
                       min(trace.capitals) > 0 and min(other.capitals) > 0))
    return out


# --- counting suite --------------------------------------------------------------


def counting_suite() -> list[CheckResult]:
    out = []
    ds = DescriptionSystem()
    worst = 0
    ok = True
    for t in range(13):
        for length in (0, 1, 2, 4, 8, 16, 32):
            n = len(enumerate_low(ds, length, length, t).words)
            worst = max(worst, n)
            if n >= 2 ** (t + 1):
                ok = False
    out.append(_result("counting", "low_sets_below_power_bound", ok,
                       f"largest set {worst}"))
    programs = sorted(valid_programs(16, condition=8))
    prefix_free = all(
        not (len(a) < len(b) and b.startswith(a))
        for a, b in zip(programs, programs[1:]))
    out.append(_result("counting", "prefix_freeness_to_16_bits", prefix_free,
                       f"{len(programs)} valid programs"))
    return out


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "fairness": fairness_suite,
    "averaging": averaging_suite,
    "saving": saving_suite,
    "totalize": totalize_suite,
    "diagonal": diagonal_suite,
    "splitting": splitting_suite,
    "counting": counting_suite,
}


def run_suite(name: str) -> list[CheckResult]:
    if name == "all":
        results = []
        for suite in SUITES.values():
            results.extend(suite())
        return results
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()
