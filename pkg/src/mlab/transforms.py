"""Proof-carrying transforms over strategies and martingales.

* averaging: turn a non-monotonic (permutation/injection) strategy into a
  monotone martingale by averaging finite-run values over long enough
  extensions;
* monotonization: saving discipline followed by averaging, preserving
  banked capital;
* totalization: convert a partial martingale that is total on an
  effectively closed class into a total one by freezing values on covered
  subtrees;
* class conjugation: transport an effectively closed class along a
  computable permutation of the bit positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

from .core import Capital, OutOfBudget, StepBudget, Word, default_budget
from .martingales import Martingale, saving_transform
from .strategies import (
    Injection,
    Monotonic,
    Permutation,
    ScanRule,
    Strategy,
    UnsupportedRule,
    scan_position,
    visited_below,
)

DEFAULT_UNKNOWN_CAP = 20


class NoBound(Exception):
    """The rule's visited set below n cannot be bounded (no moves bound)."""


class HorizonTooLarge(Exception):
    """Averaging would need more unknown visited bits than the cap allows."""


def _require_bounded(rule: ScanRule) -> None:
    if isinstance(rule, (Monotonic, Permutation)):
        return
    if isinstance(rule, Injection):
        if rule.moves_bound is None:
            raise NoBound(f"injection {rule.name} carries no moves bound")
        return
    raise UnsupportedRule("averaging is defined for non-adaptive rules")


def averaging_horizon(rule: ScanRule, n: int) -> int:
    """Smallest extension length M >= n exhausting every bet below n.

    Running the strategy on any word of length M executes all moves that
    visit positions below n, so averaging finite-run values over length-M
    extensions of a length-n word is well defined.
    """
    _require_bounded(rule)
    if isinstance(rule, Monotonic):
        return n
    report = visited_below(rule, n)
    if not report.moves:
        return n
    last_move = max(report.moves.values())
    top = max(scan_position(rule, j) for j in range(last_move + 1))
    return max(n, top + 1)


def run_positions(rule: ScanRule, length: int) -> list[int]:
    """Positions visited, in move order, when running on words of `length`.

    The run stops at the first requested position >= length; injectivity
    bounds the move count by the word length.
    """
    positions: list[int] = []
    move = 0
    while True:
        p = scan_position(rule, move)
        if p >= length:
            return positions
        if move > length:
            raise ValueError(f"rule {rule.name} is not injective below {length}")
        positions.append(p)
        move += 1


def average_value(b: Strategy, w: str, horizon: int | None = None,
                  budget: StepBudget | None = None,
                  unknown_cap: int = DEFAULT_UNKNOWN_CAP) -> Capital:
    """Mean finite-run value of `b` over all length-`horizon` extensions of w.

    Only the bits at visited-but-unknown positions are averaged over; the
    result equals the full average over all extensions because the run
    value depends on no other bit.  With `horizon=None` the minimal valid
    horizon is used; any valid horizon yields the same value.
    """
    word = Word(w)
    bgt = budget if budget is not None else default_budget()
    minimal = averaging_horizon(b.rule, len(word))
    m = minimal if horizon is None else horizon
    if m < minimal:
        raise ValueError(f"horizon {m} below minimal valid horizon {minimal}")
    visited = run_positions(b.rule, m)
    unknown = [p for p in visited if p >= len(word)]
    if len(unknown) > unknown_cap:
        raise HorizonTooLarge(
            f"{len(unknown)} unknown visited bits exceed cap {unknown_cap}")
    total = Fraction(0)
    for assignment in product("01", repeat=len(unknown)):
        bits = dict(zip(unknown, assignment))
        history = Word("".join(
            word[p] if p < len(word) else bits[p] for p in visited))
        total += b.martingale.value(history, bgt)
    return total / 2 ** len(unknown)


def average_martingale(b: Strategy, unknown_cap: int = DEFAULT_UNKNOWN_CAP) -> Martingale:
    """The monotone martingale w -> mean finite-run value of `b` over
    extensions long enough to exhaust all bets below |w|."""
    _require_bounded(b.rule)
    cache: dict[Word, Capital] = {}

    def fn(w: Word, budget: StepBudget) -> Capital:
        if w in cache:
            budget.charge()
            return cache[w]
        v = average_value(b, w, None, budget, unknown_cap)
        cache[w] = v
        return v

    return Martingale(
        fn,
        initial_capital=b.martingale.initial_capital,
        declared_total=b.martingale.declared_total,
        name=f"avg{b.name}",
    )


def monotonize(b: Strategy, unknown_cap: int = DEFAULT_UNKNOWN_CAP) -> Martingale:
    """Monotone martingale succeeding wherever the strategy does.

    Applies the saving discipline to the strategy's martingale and then
    averages: banked capital appears in every finite-run value over any
    extension, so whenever the bank reaches B during the finite game on a
    prefix, the output stays at or above B on all longer prefixes.
    """
    saved = saving_transform(b.martingale)
    return average_martingale(Strategy(saved, b.rule), unknown_cap)


# --- effectively closed classes -------------------------------------------


@dataclass(frozen=True)
class ClosedClassEnum:
    """Stage-indexed enumeration of the open complement of a closed class.

    `stage_words(t)` returns every complement cylinder enumerated by stage
    t, cumulatively: the stage-t output is a prefix of the stage-(t+1)
    output.  `cover_hint`, when present, decides "[w] covered by stage t"
    directly and is authoritative; for predicate-defined classes the
    staged enumeration may be a truncated diagnostic view.
    """

    name: str
    stage_words: Callable[[int], tuple[Word, ...]]
    cover_hint: Callable[[Word, int], bool] | None = None

    def enumerated_by(self, t: int) -> tuple[Word, ...]:
        return self.stage_words(t)

    def covers(self, w: str, t: int) -> bool:
        """Whether the cylinder [w] is covered by the stage-t enumeration."""
        word = Word(w)
        if self.cover_hint is not None:
            return self.cover_hint(word, t)
        cylinders = self.enumerated_by(t)
        if not cylinders:
            return False
        max_len = max(len(v) for v in cylinders)
        roots = set(cylinders)

        def covered(u: Word) -> bool:
            if any(u.startswith(v) for v in roots):
                return True
            if len(u) >= max_len:
                return False
            return covered(u.append(0)) and covered(u.append(1))

        return covered(word)


def class_from_events(name: str, events: Sequence[tuple[int, str]]) -> ClosedClassEnum:
    """Closed class from explicit (stage, cylinder word) events."""
    evts = sorted(((int(t), Word(w)) for t, w in events), key=lambda e: e[0])

    def stage_words(t: int) -> tuple[Word, ...]:
        return tuple(w for s, w in evts if s <= t)

    return ClosedClassEnum(name, stage_words)


def empty_class_complement(name: str = "full") -> ClosedClassEnum:
    """The class with empty complement: covers nothing (the whole space)."""
    return ClosedClassEnum(name, lambda t: ())


def serialize_class(cls: ClosedClassEnum, last_stage: int) -> str:
    """Staged-list text form: one "stage <t>: w, w" line per stage."""
    lines = []
    prev: tuple[Word, ...] = ()
    for t in range(last_stage + 1):
        now = cls.enumerated_by(t)
        fresh = now[len(prev):]
        if fresh:
            lines.append(f"stage {t}: " + ", ".join(fresh))
        prev = now
    return "\n".join(lines)


def parse_class(name: str, text: str) -> ClosedClassEnum:
    events: list[tuple[int, str]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(":")
        if not head.startswith("stage"):
            raise ValueError(f"bad class line: {line!r}")
        t = int(head.split()[1])
        for tok in rest.split(","):
            tok = tok.strip()
            if tok:
                events.append((t, tok))
    return class_from_events(name, events)


# --- totalization ----------------------------------------------------------


class RaceTimeout(Exception):
    """Neither race event fired within budget at the named word.

    Signals that "the martingale is total on the class" cannot be verified
    at this budget; never silently replaced by a default value.
    """

    def __init__(self, word: Word):
        self.word = word
        super().__init__(f"race undecided at {word!r}")


@dataclass(frozen=True)
class InactiveMarking:
    """Set of words marked passive, closed under extension (stored by roots)."""

    roots: frozenset[Word]

    def __contains__(self, w: str) -> bool:
        word = Word(w)
        return any(word.startswith(r) for r in self.roots)

    def words_to(self, depth: int) -> frozenset[Word]:
        out: set[Word] = set()
        for r in self.roots:
            frontier = [r]
            while frontier:
                u = frontier.pop()
                if len(u) > depth:
                    continue
                out.add(u)
                if len(u) < depth:
                    frontier.extend((u.append(0), u.append(1)))
        return frozenset(out)


class _TotalizeCore:
    """Lazy word-by-word totalization state.

    For each active word the computation of both children races against
    the enumeration of the class complement, one evaluation-budget tick
    and one enumeration stage per round; the interleaving is deterministic
    so outputs are reproducible.
    """

    def __init__(self, base: Martingale, cls: ClosedClassEnum,
                 race_ticks: int, step_unit: int):
        self.base = base
        self.cls = cls
        self.race_ticks = race_ticks
        self.step_unit = step_unit
        self.values: dict[Word, Capital] = {}
        self.inactive_roots: set[Word] = set()
        self.inactive_words: set[Word] = set()

    def _try_eval(self, w: Word, ticks: int) -> Capital | None:
        try:
            return self.base.value(w, StepBudget(ticks * self.step_unit))
        except OutOfBudget:
            return None

    def _ensure_root(self) -> None:
        root = Word("")
        if root in self.values:
            return
        v = self._try_eval(root, self.race_ticks)
        if v is None:
            raise RaceTimeout(root)
        self.values[root] = v

    def _ensure_children(self, w: Word) -> None:
        w0, w1 = w.append(0), w.append(1)
        if w0 in self.values and w1 in self.values:
            return
        if w in self.inactive_words:
            self.values[w0] = self.values[w1] = self.values[w]
            self.inactive_words.update((w0, w1))
            return
        for tick in range(1, self.race_ticks + 1):
            v0 = self._try_eval(w0, tick)
            v1 = self._try_eval(w1, tick)
            if v0 is not None and v1 is not None:
                self.values[w0], self.values[w1] = v0, v1
                return
            if self.cls.covers(w, tick):
                self.values[w0] = self.values[w1] = self.values[w]
                self.inactive_words.update((w0, w1))
                self.inactive_roots.add(w0)
                self.inactive_roots.add(w1)
                return
        raise RaceTimeout(w)

    def value(self, w: Word) -> Capital:
        self._ensure_root()
        if w not in self.values:
            for k in range(len(w)):
                self._ensure_children(Word(w[:k]))
        return self.values[w]

    def marking(self) -> InactiveMarking:
        # keep only minimal roots
        roots = {r for r in self.inactive_roots
                 if not any(r != s and r.startswith(s) for s in self.inactive_roots)}
        return InactiveMarking(frozenset(roots))


@dataclass(frozen=True)
class TotalizeResult:
    martingale: Martingale
    marking: InactiveMarking
    depth: int


def totalize_martingale(d: Martingale, cls: ClosedClassEnum, depth: int,
                        race_ticks: int = 64, step_unit: int = 4096) -> TotalizeResult:
    """Total-to-depth variant of a partial martingale against a closed class.

    Builds values word by word: where both children of an active word
    evaluate, they are copied; where the word's cylinder gets covered by
    the complement first, the subtree is frozen at the parent value.
    Raises RaceTimeout when neither happens within the tick budget.
    Deeper words than `depth` keep resolving lazily on demand.
    """
    core = _TotalizeCore(d, cls, race_ticks, step_unit)
    core._ensure_root()
    level = [Word("")]
    for _ in range(depth):
        for w in level:
            core._ensure_children(w)
        level = [u.append(b) for u in level for b in (0, 1)]

    def fn(w: Word, budget: StepBudget) -> Capital:
        budget.charge(len(w) + 1)
        return core.value(w)

    m = Martingale(fn, initial_capital=core.values[Word("")],
                   declared_total=True, name=f"total({d.name}|{cls.name})")
    return TotalizeResult(m, core.marking(), depth)


def conjugate_class(pi: Permutation, cls: ClosedClassEnum,
                    free_bit_cap: int = 12) -> ClosedClassEnum:
    """Transport a closed class along the sequence map induced by `pi`.

    A complement cylinder [v] constrains original positions p < |v|; in the
    transported space those bits sit at positions pi^{-1}(p), so [v] maps
    to the finite union of cylinders, one per free bit, at depth
    1 + max(pi^{-1}(p)).

    When the base class carries a direct cover predicate, the conjugated
    class gets one too: a transported cylinder is covered when every
    original-space word consistent with its positional constraints is.
    Beyond `free_bit_cap` unconstrained bits the predicate answers "not
    covered yet", which can only delay freezing, never force a wrong one.
    """

    def expand(v: Word) -> list[Word]:
        constraints = {pi.inverse(p): v[p] for p in range(len(v))}
        depth = max(constraints, default=-1) + 1
        out: list[Word] = []
        for bits in product("01", repeat=depth):
            if all(bits[j] == c for j, c in constraints.items()):
                out.append(Word("".join(bits)))
        return out

    def stage_words(t: int) -> tuple[Word, ...]:
        seen: list[Word] = []
        have: set[Word] = set()
        for v in cls.enumerated_by(t):
            for w in expand(v):
                if w not in have:
                    have.add(w)
                    seen.append(w)
        return tuple(seen)

    hint = None
    if cls.cover_hint is not None:
        def hint(h: Word, t: int) -> bool:
            constraints = {pi.forward(j): h[j] for j in range(len(h))}
            depth = max(constraints, default=-1) + 1
            if depth - len(constraints) > free_bit_cap:
                return False
            for bits in product("01", repeat=depth):
                if all(bits[p] == c for p, c in constraints.items()):
                    if not cls.covers(Word("".join(bits)), t):
                        return False
            return True

    return ClosedClassEnum(f"conj({cls.name},{pi.name})", stage_words, hint)


def totalize_strategy(b: Strategy, cls: ClosedClassEnum, depth: int,
                      race_ticks: int = 64, step_unit: int = 4096) -> Strategy:
    """Totalize a partial permutation strategy against a closed class.

    The strategy's martingale reads visited-bit histories, which are the
    direct words of the sequence transported along the scan permutation;
    totalizing it against the conjugated class keeps run traces identical
    wherever the original strategy is defined on class members.
    """
    if not isinstance(b.rule, Permutation) and not isinstance(b.rule, Monotonic):
        raise UnsupportedRule("totalization needs a permutation scan rule")
    rule = b.rule
    if isinstance(rule, Monotonic):
        conj = cls
    else:
        conj = conjugate_class(rule, cls)
    result = totalize_martingale(b.martingale, conj, depth, race_ticks, step_unit)
    return Strategy(result.martingale, rule)
