"""Scan rules and betting strategies: finite-word runs, sequence runs,
injectivity validation, and visited-position computation.

A betting strategy pairs a martingale over visited-bit histories with a
scan rule that names the next position to visit.  Non-adaptive rules
(monotonic, permutation, injection) fix the whole visit order in advance;
adaptive rules compute it from the bits seen so far.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .core import Capital, OutOfBudget, SequenceSource, StepBudget, Word, default_budget
from .martingales import Martingale

HALT_COMPLETED = "completed"
HALT_OUTSIDE = "position_outside_word"
HALT_BUDGET = "budget_exhausted"
HALT_REPEAT = "repeated_position"


class UnsupportedRule(Exception):
    """Operation not defined for this scan-rule variant."""


class ScanRule:
    name: str = "rule"


@dataclass(frozen=True)
class Monotonic(ScanRule):
    """Identity scan order: move k visits position k."""

    name: str = "monotonic"


@dataclass(frozen=True)
class Permutation(ScanRule):
    """Bijective scan order given by forward and inverse map evaluators."""

    forward: Callable[[int], int]
    inverse: Callable[[int], int]
    name: str = "permutation"


@dataclass(frozen=True)
class Injection(ScanRule):
    """Injective scan order.

    `moves_bound(n)`, when present, returns a move count H such that every
    visit to a position below n happens at some move < H.  Without it the
    visited set below n is only enumerable, never provably complete.
    """

    forward: Callable[[int], int]
    moves_bound: Callable[[int], int] | None = None
    name: str = "injection"


@dataclass(frozen=True)
class Adaptive(ScanRule):
    """History-dependent scan order, budgeted (may diverge)."""

    sigma: Callable[[Word, StepBudget], int]
    name: str = "adaptive"


@dataclass(frozen=True)
class Strategy:
    """A betting strategy: martingale over visited-bit histories + scan rule."""

    martingale: Martingale
    rule: ScanRule

    @property
    def name(self) -> str:
        return f"({self.martingale.name},{self.rule.name})"


def scan_position(rule: ScanRule, move: int) -> int:
    """Position visited at `move` for a non-adaptive rule."""
    if isinstance(rule, Monotonic):
        return move
    if isinstance(rule, (Permutation, Injection)):
        p = rule.forward(move)
        if p < 0:
            raise ValueError(f"rule {rule.name} produced negative position {p}")
        return p
    raise UnsupportedRule(f"{rule.name} has no move-indexed positions")


def next_position(rule: ScanRule, history: Word, budget: StepBudget | None = None) -> int:
    """Position of the next visit after seeing `history`."""
    if isinstance(rule, Adaptive):
        b = budget if budget is not None else default_budget()
        return rule.sigma(history, b)
    return scan_position(rule, len(history))


@dataclass(frozen=True)
class RunTrace:
    """Record of a (finite) game: positions visited, bits read, capitals.

    capitals[k] is the martingale value at the length-k history prefix, so
    capitals has one more entry than positions unless the run halted on a
    budget failure mid-evaluation.
    """

    positions: tuple[int, ...]
    history: Word
    capitals: tuple[Capital, ...]
    halt: str


def run_on_word(b: Strategy, w: str, budget: StepBudget | None = None
                ) -> tuple[Capital, RunTrace]:
    """Run an injective strategy on a finite word.

    The game stops at the first move whose requested position lies outside
    the word; the returned capital is the martingale value on the history
    of visited bits at that point.
    """
    if isinstance(b.rule, Adaptive):
        raise UnsupportedRule("finite-word runs are defined for injective rules only")
    word = Word(w)
    bgt = budget if budget is not None else default_budget()
    positions: list[int] = []
    history = Word("")
    move = 0
    while True:
        p = scan_position(b.rule, move)
        if p >= len(word):
            break
        if move > len(word):
            raise ValueError(f"rule {b.rule.name} revisits below {len(word)}: not injective")
        positions.append(p)
        history = history.append(word.bit(p))
        move += 1
    capitals = [b.martingale.value(history[:k], bgt) for k in range(len(history) + 1)]
    trace = RunTrace(tuple(positions), history, tuple(capitals), HALT_OUTSIDE)
    return capitals[-1], trace


def run_on_sequence(b: Strategy, s: SequenceSource, max_moves: int,
                    budget: StepBudget | None = None) -> RunTrace:
    """Trace up to `max_moves` moves of a strategy against a sequence source.

    Halts early with `repeated_position` the first time a position recurs,
    or with `budget_exhausted` if the rule or the martingale diverges.
    """
    bgt = budget if budget is not None else default_budget()
    positions: list[int] = []
    history = Word("")
    seen: set[int] = set()
    try:
        capitals = [b.martingale.value(history, bgt)]
    except OutOfBudget:
        return RunTrace((), history, (), HALT_BUDGET)
    for _ in range(max_moves):
        try:
            p = next_position(b.rule, history, bgt)
        except OutOfBudget:
            return RunTrace(tuple(positions), history, tuple(capitals), HALT_BUDGET)
        if p in seen:
            return RunTrace(tuple(positions), history, tuple(capitals), HALT_REPEAT)
        seen.add(p)
        positions.append(p)
        history = history.append(s.bit(p))
        try:
            capitals.append(b.martingale.value(history, bgt))
        except OutOfBudget:
            return RunTrace(tuple(positions), history, tuple(capitals), HALT_BUDGET)
    return RunTrace(tuple(positions), history, tuple(capitals), HALT_COMPLETED)


@dataclass(frozen=True)
class InjectivityReport:
    horizon: int
    collisions: tuple[tuple[int, int, int], ...]  # (move i, move j, position)

    @property
    def ok(self) -> bool:
        return not self.collisions

    def first(self) -> tuple[int, int, int] | None:
        return self.collisions[0] if self.collisions else None


def check_injectivity(rule: ScanRule, horizon: int,
                      history: str | None = None) -> InjectivityReport:
    """Verify pairwise distinctness of the first `horizon` scan positions.

    Adaptive rules are checked along a caller-supplied history: move k uses
    the first k bits of `history`.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    collisions: list[tuple[int, int, int]] = []
    seen: dict[int, int] = {}
    if isinstance(rule, Adaptive):
        if history is None:
            raise UnsupportedRule("adaptive injectivity check needs a history")
        h = Word(history)
        moves = min(horizon, len(h) + 1)
        positions = [rule.sigma(Word(h[:k]), default_budget()) for k in range(moves)]
    else:
        positions = [scan_position(rule, k) for k in range(horizon)]
    for i, p in enumerate(positions):
        if p in seen:
            collisions.append((seen[p], i, p))
        else:
            seen[p] = i
    return InjectivityReport(horizon, tuple(collisions))


@dataclass(frozen=True)
class VisitedReport:
    """Positions below n ever visited by a non-adaptive rule.

    `moves` maps each found position to the move index visiting it.
    `complete` is False when the rule is an injection without a moves
    bound and enumeration stopped on budget (the set is then only a
    verified subset).
    """

    positions: frozenset[int]
    moves: dict[int, int]
    complete: bool


def visited_below(rule: ScanRule, n: int, budget: StepBudget | None = None
                  ) -> VisitedReport:
    """The set of positions < n that the rule ever visits."""
    if isinstance(rule, Monotonic):
        return VisitedReport(frozenset(range(n)), {p: p for p in range(n)}, True)
    if isinstance(rule, Permutation):
        moves = {}
        for p in range(n):
            j = rule.inverse(p)
            if rule.forward(j) != p:
                raise ValueError(f"inverse map broken at position {p}")
            moves[p] = j
        return VisitedReport(frozenset(range(n)), moves, True)
    if isinstance(rule, Injection):
        moves = {}
        if rule.moves_bound is not None:
            for j in range(rule.moves_bound(n)):
                p = rule.forward(j)
                if p < n:
                    moves[p] = j
            return VisitedReport(frozenset(moves), moves, True)
        bgt = budget if budget is not None else default_budget()
        j = 0
        while True:
            try:
                bgt.charge()
            except OutOfBudget:
                return VisitedReport(frozenset(moves), moves, False)
            p = rule.forward(j)
            if p < n:
                moves[p] = j
            if len(moves) == n:
                return VisitedReport(frozenset(moves), moves, True)
            j += 1
    raise UnsupportedRule("visited_below is defined for non-adaptive rules")


# --- shipped rules ---------------------------------------------------------


def pair_swap() -> Permutation:
    """Swap adjacent pairs: 0<->1, 2<->3, ..."""
    return Permutation(lambda i: i ^ 1, lambda i: i ^ 1, "pair_swap")


def block_rotate(size: int) -> Permutation:
    """Rotate each aligned block of `size` positions by one."""
    if size < 2:
        raise ValueError("block size must be >= 2")

    def fwd(i: int) -> int:
        base, off = divmod(i, size)
        return base * size + (off + 1) % size

    def inv(i: int) -> int:
        base, off = divmod(i, size)
        return base * size + (off - 1) % size

    return Permutation(fwd, inv, f"block_rotate:{size}")


def block_reverse(size: int) -> Permutation:
    """Reverse each aligned block of `size` positions (self-inverse)."""
    if size < 2:
        raise ValueError("block size must be >= 2")

    def fwd(i: int) -> int:
        base, off = divmod(i, size)
        return base * size + (size - 1 - off)

    return Permutation(fwd, fwd, f"block_reverse:{size}")


def block_shuffle(size: int, seed: int) -> Permutation:
    """Deterministic pseudo-random permutation within aligned blocks."""
    if size < 2:
        raise ValueError("block size must be >= 2")
    tables: dict[int, list[int]] = {}

    def table(base: int) -> list[int]:
        if base not in tables:
            t = list(range(size))
            random.Random(f"mlab:block:{seed}:{base}").shuffle(t)
            tables[base] = t
        return tables[base]

    def fwd(i: int) -> int:
        base, off = divmod(i, size)
        return base * size + table(base)[off]

    def inv(i: int) -> int:
        base, off = divmod(i, size)
        return base * size + table(base).index(off)

    return Permutation(fwd, inv, f"block_shuffle:{size}:{seed}")


def even_injection() -> Injection:
    """Visit the even positions in order: move n visits position 2n."""
    return Injection(lambda n: 2 * n, lambda n: (n + 1) // 2, "even")


def head_injection(head: tuple[int, ...] | list[int]) -> Injection:
    """Visit the listed positions first, then continue upward injectively.

    After the head the rule visits max(head)+1, max(head)+2, ... skipping
    nothing (those positions are guaranteed unvisited when the head stays
    below them; validated here).
    """
    hd = tuple(head)
    if len(set(hd)) != len(hd):
        raise ValueError("head positions must be distinct")
    tail_start = (max(hd) + 1) if hd else 0

    def fwd(j: int) -> int:
        if j < len(hd):
            return hd[j]
        return tail_start + (j - len(hd))

    def bound(n: int) -> int:
        last = -1
        for j, p in enumerate(hd):
            if p < n:
                last = j
        if n > tail_start:
            last = len(hd) + (n - tail_start) - 1
        return last + 1

    return Injection(fwd, bound, f"head:{','.join(map(str, hd))}")


def bit_steer() -> Adaptive:
    """Toy adaptive rule: next position doubles and shifts by the last bit."""

    def sigma(h: Word, budget: StepBudget) -> int:
        budget.charge()
        if not h:
            return 0
        return 2 * len(h) + h.bit(len(h) - 1)

    return Adaptive(sigma, "bit_steer")
