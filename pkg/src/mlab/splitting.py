"""The interval-splitting injective strategy.

Checkpoints cut the positions into doubling intervals; each interval is
split into equal sub-intervals, one per low-complexity candidate block.
When the description system enumerates a candidate for an interval, the
strategy plays a doubling sub-game on the next free sub-interval: it bets
the whole reserve that the sequence agrees with the candidate there.  One
full match multiplies the reserve by 2^(sub-interval length); stakes are
sized so the total ever at risk stays below the starting capital of 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .complexity import DescriptionSystem, low_complexity_stream
from .core import Capital, Checkpoints, OutOfBudget, StepBudget, Word, default_budget
from .martingales import Martingale
from .strategies import Injection, Strategy


class IntervalTooSmall(ValueError):
    def __init__(self, k: int, size: int):
        self.index = k
        super().__init__(f"interval {k} has {size} < 4 positions")


@dataclass(frozen=True)
class SplittingPlan:
    """Derived quantities per checkpoint interval.

    For interval k of length L: the sub-interval count is
    max(1, L // floor(log2 L)^2), the per-sub-game stake 1/((k+1)^2 * s_k),
    and the default candidate threshold floor(log2 L - 2*log2 log2 L)
    clamped at 0 (overridable: the surrogate description system's program
    costs, not asymptotics, decide what is reachable at desk scale).
    """

    checkpoints: Checkpoints
    sub_counts: tuple[int, ...]
    sub_intervals: tuple[tuple[range, ...], ...]
    stakes: tuple[Capital, ...]
    thresholds: tuple[int, ...]

    @property
    def interval_count(self) -> int:
        return self.checkpoints.interval_count

    def total_at_risk(self) -> Capital:
        return sum((self.stakes[k] * self.sub_counts[k]
                    for k in range(self.interval_count)), Fraction(0))


def build_plan(cp: Checkpoints, thresholds: Sequence[int] | None = None) -> SplittingPlan:
    """Split every interval into equal sub-intervals with sized stakes."""
    counts: list[int] = []
    subs: list[tuple[range, ...]] = []
    stakes: list[Capital] = []
    levels: list[int] = []
    for k in range(cp.interval_count):
        size = cp.interval_length(k)
        if size < 4:
            raise IntervalTooSmall(k, size)
        log = size.bit_length() - 1
        s_k = max(1, size // (log * log))
        width = size // s_k
        start = cp.values[k]
        pieces = []
        for e in range(s_k):
            stop = cp.values[k + 1] if e == s_k - 1 else start + width
            pieces.append(range(start, stop))
            start = stop
        counts.append(s_k)
        subs.append(tuple(pieces))
        stakes.append(Fraction(1, (k + 1) ** 2 * s_k))
        levels.append(max(0, math.floor(math.log2(size) - 2 * math.log2(math.log2(size)))))
    chosen = levels if thresholds is None else [int(t) for t in thresholds]
    if len(chosen) != cp.interval_count:
        raise ValueError("one threshold per interval required")
    plan = SplittingPlan(cp, tuple(counts), tuple(subs), tuple(stakes), tuple(chosen))
    assert plan.total_at_risk() < 2
    return plan


def expected_gain(plan: SplittingPlan, k: int) -> Capital:
    """Payout of one fully successful sub-game on interval k."""
    shortest = min(len(r) for r in plan.sub_intervals[k])
    return plan.stakes[k] * 2**shortest


@dataclass(frozen=True)
class SubGame:
    """One opened doubling sub-game: candidate block vs a sub-interval."""

    interval: int
    slot: int
    candidate: Word
    positions: range
    program_index: int


@dataclass(frozen=True)
class EnumerationSchedule:
    """Materialized dovetail outcome: sub-games in opening order, and the
    induced flat visit order of positions (independent of any sequence)."""

    plan: SplittingPlan
    games: tuple[SubGame, ...]
    positions: tuple[int, ...]
    overflow: tuple[tuple[int, Word], ...]
    complete: bool


def build_schedule(plan: SplittingPlan, ds: DescriptionSystem,
                   budget: StepBudget | None = None) -> EnumerationSchedule:
    """Dovetail the per-interval low-complexity enumerations.

    Pairs (interval, program index) are processed in rounds: round r
    handles every pair with interval + index = r.  When the enumeration
    for interval k yields its e-th new block and slots remain (e < s_k),
    the e-th sub-interval's positions are queued in increasing order;
    candidates beyond the slot count are logged as overflow and ignored.
    """
    bgt = budget if budget is not None else default_budget()
    streams: list[Iterator[tuple[int, Word, Word]] | None] = []
    pending: list[tuple[int, Word, Word] | None] = []
    for k in range(plan.interval_count):
        size = plan.checkpoints.interval_length(k)
        streams.append(low_complexity_stream(
            ds, size, size, plan.thresholds[k], bgt))
        pending.append(None)
    games: list[SubGame] = []
    positions: list[int] = []
    overflow: list[tuple[int, Word]] = []
    opened = [0] * plan.interval_count
    complete = True
    exhausted = [False] * plan.interval_count
    try:
        round_no = 0
        while not all(exhausted):
            for k in range(min(round_no + 1, plan.interval_count)):
                index = round_no - k
                if exhausted[k]:
                    continue
                if pending[k] is None:
                    pending[k] = next(streams[k], None)
                    if pending[k] is None:
                        exhausted[k] = True
                        continue
                prog_index, _, word = pending[k]
                if prog_index > index:
                    continue
                pending[k] = None
                if opened[k] >= plan.sub_counts[k]:
                    overflow.append((k, word))
                    continue
                slot = opened[k]
                opened[k] += 1
                game = SubGame(k, slot, word, plan.sub_intervals[k][slot],
                               prog_index)
                games.append(game)
                positions.extend(game.positions)
            round_no += 1
    except OutOfBudget:
        complete = False
    return EnumerationSchedule(plan, tuple(games), tuple(positions),
                               tuple(overflow), complete)


def _schedule_martingale(schedule: EnumerationSchedule) -> Martingale:
    """Capital after each move of the queued doubling sub-games.

    The bit expected at move j and the sub-game it belongs to are fixed by
    the schedule; the value at a history is 2 plus the net outcome of
    every opened sub-game, each holding its doubled-or-lost reserve.
    """
    plan = schedule.plan
    moves: list[tuple[int, int]] = []  # (game number, expected bit)
    for g_num, game in enumerate(schedule.games):
        base = plan.checkpoints.values[game.interval]
        for p in game.positions:
            moves.append((g_num, game.candidate.bit(p - base)))

    def fn(h: Word, budget: StepBudget) -> Capital:
        budget.charge(len(h) + 1)
        total = Fraction(2)
        reserves: dict[int, Capital] = {}
        for j in range(min(len(h), len(moves))):
            g_num, expected = moves[j]
            game = schedule.games[g_num]
            if g_num not in reserves:
                reserves[g_num] = plan.stakes[game.interval]
                total -= plan.stakes[game.interval]
            if reserves[g_num]:
                reserves[g_num] = (2 * reserves[g_num]
                                   if h.bit(j) == expected else Fraction(0))
        return total + sum(reserves.values(), Fraction(0))

    return Martingale(fn, initial_capital=Fraction(2), name="splitting")


def build_splitting_strategy(plan: SplittingPlan, ds: DescriptionSystem,
                             budget: StepBudget | None = None
                             ) -> tuple[Strategy, EnumerationSchedule]:
    """Injective strategy realizing the plan against a description system.

    The scan order is the schedule's queued positions followed by the
    untouched positions above the plan horizon (on which nothing is
    wagered); a moves bound makes the visited sets exactly computable.
    """
    schedule = build_schedule(plan, ds, budget)
    queued = schedule.positions
    horizon = plan.checkpoints.values[-1]
    index_of = {p: j for j, p in enumerate(queued)}

    def forward(j: int) -> int:
        if j < len(queued):
            return queued[j]
        return horizon + (j - len(queued))

    def moves_bound(n: int) -> int:
        last = -1
        for j, p in enumerate(queued):
            if p < n:
                last = j
        if n > horizon:
            last = len(queued) + (n - horizon) - 1
        return last + 1

    rule = Injection(forward, moves_bound, name="splitting")
    return Strategy(_schedule_martingale(schedule), rule), schedule


def checkpoint_gains(schedule: EnumerationSchedule, trace_capitals: Sequence[Capital],
                     trace_positions: Sequence[int]) -> list[dict]:
    """Per-interval capital report for a sequence run.

    Moves of different intervals interleave (the dovetail), so each
    interval's gain is the sum of the capital deltas over exactly its own
    moves.
    """
    plan = schedule.plan
    rows = []
    for k in range(plan.interval_count):
        interval = plan.checkpoints.interval(k)
        move_ids = [j for j, p in enumerate(trace_positions)
                    if p in interval and j + 1 < len(trace_capitals)]
        gain = sum((trace_capitals[j + 1] - trace_capitals[j] for j in move_ids),
                   Fraction(0))
        rows.append({"interval": k, "moves": len(move_ids), "gain": gain})
    return rows
