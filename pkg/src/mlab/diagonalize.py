"""Finite-stage diagonalization against a roster of martingales and
betting strategies, with replayable certificates.

The construction keeps a weighted-sum adversary below the capital bound 2
along the whole constructed prefix.  Entries are inserted one per stage
with a coefficient small enough to preserve the bound; partial entries
that diverge are recorded (position and phase) and contribute the zero
martingale from then on, exactly as the certificate replays it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence

from .certificates import (
    KIND_PARTIAL_MARTINGALE,
    KIND_PARTIAL_PERMUTATION,
    KIND_TOTAL_INJECTIVE,
    KIND_TOTAL_MARTINGALE,
    KINDS,
    Certificate,
    EntryRecord,
    UnknownRosterId,
    VARIANTS,
)
from .core import Capital, OutOfBudget, StepBudget, Word
from .martingales import Martingale
from .strategies import (
    Injection,
    Monotonic,
    Permutation,
    Strategy,
    run_on_word,
    visited_below,
)
from .transforms import ClosedClassEnum, RaceTimeout, monotonize, totalize_strategy

VARIANT_KINDS = {
    "tmr": KIND_TOTAL_MARTINGALE,
    "tir": KIND_TOTAL_INJECTIVE,
    "pmr": KIND_PARTIAL_MARTINGALE,
    "ppr": KIND_PARTIAL_PERMUTATION,
}

CAPITAL_BOUND = Fraction(2)


class FairnessViolation(Exception):
    """Both children of a word exceed the parent: the adversary is broken."""


class ReplayMismatch(Exception):
    """Replay diverged from the certificate's advice; certificate and
    roster catalog are inconsistent."""


@dataclass(frozen=True)
class RosterEntry:
    """One opponent: a martingale or a strategy, declared by kind.

    For martingale kinds `payload` is a Martingale; for strategy kinds it
    is a Strategy whose martingale reads visited-bit histories.
    """

    entry_id: int
    kind: str
    payload: Martingale | Strategy

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown roster kind {self.kind!r}")

    @property
    def martingale(self) -> Martingale:
        if isinstance(self.payload, Strategy):
            return self.payload.martingale
        return self.payload


@dataclass(frozen=True)
class LandingSet:
    """Computable set of admissible stage-boundary lengths."""

    name: str
    next_at: Callable[[int], int]


@dataclass(frozen=True)
class ConstructionConfig:
    eval_steps: int = 400_000
    probe_depth: int = 8
    probe_run_steps: int = 100_000
    race_ticks: int = 32
    race_step_unit: int = 4096
    unknown_cap: int = 20
    validity_horizon: int | None = None


@dataclass
class _Term:
    index: int
    entry: RosterEntry
    alpha: Fraction
    effective: Martingale
    values: list[Capital]
    alive: bool = True


@dataclass(frozen=True)
class TermReport:
    entry_id: int
    alpha: Fraction
    values: tuple[Capital, ...]
    alive: bool


@dataclass(frozen=True)
class ConstructionResult:
    word: Word
    certificate: Certificate
    d_trajectory: tuple[Capital, ...]
    terms: tuple[TermReport, ...]


class _TermDied(Exception):
    def __init__(self, term: _Term, race: bool):
        self.term = term
        self.race = race


def greedy_step(d: Martingale, w: str, steps: int | None = None) -> int:
    """The bit the construction appends when diagonalizing against `d`.

    Picks the least bit whose child value does not exceed the parent; when
    both qualify, repeats the last emitted bit (0 at the empty word), so a
    defeated all-in bettor keeps losing on the same side.
    """
    word = Word(w)

    def ev(u: Word) -> Capital:
        budget = StepBudget(steps) if steps is not None else None
        return d.value(u, budget)

    return _greedy_choice(ev(word), ev(word.append(0)), ev(word.append(1)), word)


def _greedy_choice(parent: Capital, child0: Capital, child1: Capital,
                   w: Word) -> int:
    q0, q1 = child0 <= parent, child1 <= parent
    if not q0 and not q1:
        raise FairnessViolation(
            f"both children exceed parent at {w!r}: {parent} -> {child0},{child1}")
    if q0 and q1:
        return w.bit(len(w) - 1) if w else 0
    return 0 if q0 else 1


class DiagonalState:
    """Prefix plus weighted-sum adversary, with per-term value trajectories.

    `terms[i].values[k]` is the term's effective value on the length-k
    prefix; dead terms keep their trajectory up to the death point but
    contribute nothing anywhere (the zero martingale).
    """

    def __init__(self, config: ConstructionConfig | None = None):
        self.prefix = Word("")
        self.terms: list[_Term] = []
        self.config = config or ConstructionConfig()
        self.records: dict[int, EntryRecord] = {}
        self.advice: dict[int, EntryRecord] | None = None
        self.stop_length: int | None = None

    # -- adversary values ---------------------------------------------------

    def d_at(self, k: int) -> Capital:
        return sum((t.alpha * t.values[k] for t in self.terms if t.alive),
                   Fraction(0))

    def d_trajectory(self) -> tuple[Capital, ...]:
        return tuple(self.d_at(k) for k in range(len(self.prefix) + 1))

    def adversary(self) -> list[tuple[Fraction, Martingale]]:
        return [(t.alpha, t.effective) for t in self.terms if t.alive]

    def _fresh_budget(self) -> StepBudget:
        return StepBudget(self.config.eval_steps)

    def _eval_term(self, term: _Term, w: Word) -> Capital:
        try:
            return term.effective.value(w, self._fresh_budget())
        except OutOfBudget:
            raise _TermDied(term, race=False)
        except RaceTimeout:
            raise _TermDied(term, race=True)

    def _eval_term_quiet(self, term: _Term, w: Word) -> Capital | None:
        try:
            return term.effective.value(w, self._fresh_budget())
        except (OutOfBudget, RaceTimeout):
            return None

    def d_value_quiet(self, w: Word) -> Capital | None:
        """Adversary value at an arbitrary word; None when a term cannot be
        evaluated there (used for conservative pruning, never recorded)."""
        total = Fraction(0)
        for t in self.terms:
            if not t.alive:
                continue
            v = self._eval_term_quiet(t, w)
            if v is None:
                return None
            total += t.alpha * v
        return total

    # -- deaths ---------------------------------------------------------------

    def _kill(self, term: _Term, position: int, at_insertion: bool, race: bool) -> None:
        term.alive = False
        del term.values[position + 1:]
        if self.advice is not None:
            raise ReplayMismatch(
                f"entry {term.entry.entry_id} died at {position} during replay")
        old = self.records[term.entry.entry_id]
        self.records[term.entry.entry_id] = replace(
            old, divergence_position=position, died_at_insertion=at_insertion,
            race_timeout=race)

    def _apply_scheduled_kills(self, child_length: int) -> None:
        if self.advice is None:
            return
        for t in self.terms:
            if not t.alive:
                continue
            rec = self.advice.get(t.entry.entry_id)
            if rec and rec.divergence_position is not None \
                    and not rec.died_at_insertion \
                    and rec.divergence_position <= child_length:
                t.alive = False
                del t.values[rec.divergence_position:]

    # -- growth ---------------------------------------------------------------

    def _append_bit(self, bit: int, child_values: dict[int, Capital]) -> None:
        self.prefix = self.prefix.append(bit)
        for t in self.terms:
            if t.alive:
                t.values.append(child_values[t.index])

    def _step(self) -> None:
        """One greedy extension step, with death handling and bound check."""
        parent_len = len(self.prefix)
        self._apply_scheduled_kills(parent_len + 1)
        w0, w1 = self.prefix.append(0), self.prefix.append(1)
        while True:
            try:
                vals0 = {t.index: self._eval_term(t, w0)
                         for t in self.terms if t.alive}
                vals1 = {t.index: self._eval_term(t, w1)
                         for t in self.terms if t.alive}
            except _TermDied as death:
                self._kill(death.term, parent_len + 1, False, death.race)
                continue
            break
        alive = [t for t in self.terms if t.alive]
        parent = self.d_at(parent_len)
        d0 = sum((t.alpha * vals0[t.index] for t in alive), Fraction(0))
        d1 = sum((t.alpha * vals1[t.index] for t in alive), Fraction(0))
        bit = _greedy_choice(parent, d0, d1, self.prefix)
        chosen = d0 if bit == 0 else d1
        if chosen >= CAPITAL_BOUND:
            raise FairnessViolation(
                f"bound broken at length {parent_len + 1}: {chosen} >= 2")
        self._append_bit(bit, vals0 if bit == 0 else vals1)

    def extend_to(self, target: int) -> None:
        limit = target if self.stop_length is None else min(target, self.stop_length)
        while len(self.prefix) < limit:
            self._step()

    def adopt_extension(self, word: Word) -> None:
        """Replace the prefix by a chosen extension, growing trajectories."""
        if not word.startswith(self.prefix):
            raise ValueError("adopted word must extend the prefix")
        for k in range(len(self.prefix), len(word)):
            u = Word(word[:k + 1])
            self._apply_scheduled_kills(k + 1)
            while True:
                try:
                    vals = {t.index: self._eval_term(t, u)
                            for t in self.terms if t.alive}
                except _TermDied as death:
                    self._kill(death.term, k + 1, False, death.race)
                    continue
                break
            self._append_bit(u.bit(k), vals)
            value = self.d_at(len(self.prefix))
            if value >= CAPITAL_BOUND:
                raise FairnessViolation(
                    f"adopted extension breaks the bound at length {k + 1}")

    # -- the defining closed class -------------------------------------------

    def closed_class(self, witness_cap: int = 10) -> ClosedClassEnum:
        """The class of sequences extending the prefix on which the current
        adversary stays below the bound.

        The cover hint is authoritative; the staged enumeration lists
        incompatibility witnesses exactly and capital-bound witnesses only
        up to `witness_cap` (a diagnostic view).
        """
        prefix = self.prefix
        snapshot = tuple((t.alpha, t.effective) for t in self.terms if t.alive)
        eval_steps = self.config.eval_steps

        def d_value(u: Word) -> Capital | None:
            total = Fraction(0)
            for alpha, eff in snapshot:
                try:
                    total += alpha * eff.value(u, StepBudget(eval_steps))
                except (OutOfBudget, RaceTimeout):
                    return None
            return total

        def hint(h: Word, t: int) -> bool:
            limit = min(len(h), len(prefix))
            for i in range(limit):
                if h[i] != prefix[i]:
                    return i + 1 <= t
            for i in range(min(len(h), t) + 1):
                v = d_value(Word(h[:i]))
                if v is not None and v >= CAPITAL_BOUND and i <= t:
                    return True
            return False

        def stage_words(t: int) -> tuple[Word, ...]:
            out: list[Word] = []
            for i in range(min(len(prefix), t)):
                flipped = Word(prefix[:i] + ("1" if prefix[i] == "0" else "0"))
                out.append(flipped)
            frontier = [Word("")]
            for _ in range(min(t, witness_cap)):
                new = []
                for u in frontier:
                    for b in (0, 1):
                        child = u.append(b)
                        v = d_value(child)
                        if v is not None and v >= CAPITAL_BOUND:
                            if child not in out:
                                out.append(child)
                        else:
                            new.append(child)
                frontier = new
            return tuple(out)

        return ClosedClassEnum(f"diag:{prefix}", stage_words, hint)


# --- probe -------------------------------------------------------------------


def divergence_probe(b: Strategy, state: DiagonalState, depth: int,
                     run_steps: int | None = None) -> tuple[Word, int] | None:
    """Bounded search for an extension of the prefix, below the bound, on
    which the strategy's finite run exhausts its budget.

    Explores extensions in preorder (bit 0 first), pruning children whose
    adversary value is not provably below the bound.  Returns the first
    hit and its preorder index; None means no divergence at this budget.
    """
    steps = run_steps if run_steps is not None else state.config.probe_run_steps

    def diverges(word: Word) -> bool:
        try:
            run_on_word(b, word, StepBudget(steps))
            return False
        except OutOfBudget:
            return True

    hit = _probe_walk(state, depth, diverges)
    return hit


def _probe_walk(state: DiagonalState, depth: int,
                test: Callable[[Word], bool] | None,
                target_index: int | None = None) -> tuple[Word, int] | None:
    """Shared preorder walk: forward mode tests nodes, replay mode stops at
    the recorded index without testing anything."""
    counter = 0

    def visit(node: Word, depth_left: int) -> tuple[Word, int] | None:
        nonlocal counter
        index = counter
        counter += 1
        if target_index is not None:
            if index == target_index:
                return node, index
        elif test is not None and test(node):
            return node, index
        if depth_left == 0:
            return None
        for bit in (0, 1):
            child = node.append(bit)
            value = state.d_value_quiet(child)
            if value is None or value >= CAPITAL_BOUND:
                continue
            found = visit(child, depth_left - 1)
            if found is not None:
                return found
        return None

    return visit(state.prefix, depth)


# --- insertion ----------------------------------------------------------------


def _validate_permutation(rule, horizon: int) -> bool:
    if isinstance(rule, Monotonic):
        return True
    if not isinstance(rule, Permutation):
        return False
    seen: set[int] = set()
    for j in range(horizon):
        p = rule.forward(j)
        if p in seen or rule.inverse(p) != j:
            return False
        seen.add(p)
    return True


def insert_entry(state: DiagonalState, entry: RosterEntry,
                 validity_horizon: int = 64) -> DiagonalState:
    """Resolve a roster entry to an effective martingale and add it to the
    adversary with a coefficient keeping the bound along the whole prefix.

    Total martingales join as they are; total injective strategies are
    monotonized (saving + averaging); partial martingales join raw, their
    divergence discovered and recorded during later evaluation; partial
    permutation strategies go through the three-way case split (invalid
    rule / divergence reachable below the bound / totalize then
    monotonize).
    """
    cfg = state.config
    advice = state.advice.get(entry.entry_id) if state.advice is not None else None
    base_record = EntryRecord(entry_id=entry.entry_id, kind=entry.kind)
    state.records[entry.entry_id] = base_record

    def discard(**kw) -> DiagonalState:
        state.records[entry.entry_id] = replace(base_record, **kw)
        return state

    effective: Martingale
    if entry.kind == KIND_TOTAL_MARTINGALE:
        usable = entry.payload.declared_total if advice is None else advice.usable
        if not usable:
            return discard(usable=False)
        effective = entry.payload
    elif entry.kind == KIND_TOTAL_INJECTIVE:
        strategy = entry.payload
        usable = (strategy.martingale.declared_total
                  and isinstance(strategy.rule, (Monotonic, Permutation, Injection))
                  and not (isinstance(strategy.rule, Injection)
                           and strategy.rule.moves_bound is None))
        if advice is not None:
            usable = advice.usable
        if not usable:
            return discard(usable=False)
        effective = monotonize(strategy, cfg.unknown_cap)
    elif entry.kind == KIND_PARTIAL_MARTINGALE:
        if advice is not None and advice.died_at_insertion:
            return discard(usable=False, divergence_position=advice.divergence_position,
                           died_at_insertion=True, race_timeout=advice.race_timeout)
        effective = entry.payload
    elif entry.kind == KIND_PARTIAL_PERMUTATION:
        strategy = entry.payload
        if advice is not None:
            if advice.invalid:
                return discard(usable=False, invalid=True)
            if advice.probe_index is not None:
                found = _probe_walk(state, cfg.probe_depth, None, advice.probe_index)
                if found is None:
                    raise ReplayMismatch(
                        f"probe index {advice.probe_index} unreachable")
                state.adopt_extension(found[0])
                return discard(usable=False,
                               divergence_position=advice.divergence_position,
                               probe_index=advice.probe_index)
            if advice.died_at_insertion:
                return discard(usable=False,
                               divergence_position=advice.divergence_position,
                               died_at_insertion=True, race_timeout=advice.race_timeout)
        else:
            if not _validate_permutation(strategy.rule, validity_horizon):
                return discard(usable=False, invalid=True)
            hit = divergence_probe(strategy, state, cfg.probe_depth)
            if hit is not None:
                word, index = hit
                state.adopt_extension(word)
                return discard(usable=False, divergence_position=len(word),
                               probe_index=index)
        try:
            totalized = totalize_strategy(
                strategy, state.closed_class(), depth=0,
                race_ticks=cfg.race_ticks, step_unit=cfg.race_step_unit)
        except RaceTimeout:
            if state.advice is not None:
                raise ReplayMismatch(
                    f"entry {entry.entry_id} raced out at insertion during replay")
            return discard(usable=True, divergence_position=len(state.prefix),
                           died_at_insertion=True, race_timeout=True)
        effective = monotonize(totalized, cfg.unknown_cap)
    else:
        raise ValueError(f"unknown kind {entry.kind!r}")

    term = _Term(index=len(state.terms), entry=entry, alpha=Fraction(0),
                 effective=effective, values=[])
    try:
        for k in range(len(state.prefix) + 1):
            term.values.append(state._eval_term(term, Word(state.prefix[:k])))
    except _TermDied as death:
        position = len(term.values)
        if state.advice is not None:
            raise ReplayMismatch(
                f"entry {entry.entry_id} died at insertion during replay")
        return discard(usable=True, divergence_position=position,
                       died_at_insertion=True, race_timeout=death.race)
    max_d = max(state.d_at(k) for k in range(len(state.prefix) + 1))
    max_eff = max(term.values)
    term.alpha = (CAPITAL_BOUND - max_d) / (2 * max(Fraction(1), max_eff))
    state.terms.append(term)
    state.records[entry.entry_id] = replace(base_record, usable=True)
    return state


def extend_below_bound(state: DiagonalState, target_len: int) -> DiagonalState:
    """Greedy extension keeping the adversary strictly below the bound."""
    if target_len < len(state.prefix):
        raise ValueError("target below current prefix length")
    state.extend_to(target_len)
    return state


# --- whole constructions -------------------------------------------------------


def _check_roster(roster: Sequence[RosterEntry], variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    want = VARIANT_KINDS[variant]
    for e in roster:
        if e.kind != want:
            raise ValueError(
                f"entry {e.entry_id} has kind {e.kind}, variant {variant} wants {want}")


def _check_schedule(schedule: Sequence[int]) -> None:
    if not schedule or schedule[0] != 0:
        raise ValueError("schedule must start at 0")
    for a, b in zip(schedule, schedule[1:]):
        if b <= a:
            raise ValueError("schedule must be strictly increasing")


def _landing_target(target: int, landing: LandingSet | None) -> int:
    if landing is None:
        return target
    stretched = landing.next_at(target)
    if stretched < target:
        raise ValueError(f"landing set went backwards at {target}")
    return stretched


def _run_engine(state: DiagonalState, roster: Sequence[RosterEntry],
                schedule: Sequence[int], landing: LandingSet | None,
                validity_horizon: int) -> None:
    for k, entry in enumerate(roster):
        if state.stop_length is not None and len(state.prefix) >= state.stop_length:
            break
        insert_entry(state, entry, validity_horizon)
        if k + 1 < len(schedule):
            target = _landing_target(schedule[k + 1], landing)
            state.extend_to(max(target, len(state.prefix)))
    final = _landing_target(schedule[-1], landing)
    state.extend_to(max(final, len(state.prefix)))


def _enumeration_pairs(state: DiagonalState) -> dict[int, tuple[int, int]]:
    """Final visited-set frontier snapshot per active injective entry."""
    pairs: dict[int, tuple[int, int]] = {}
    n = len(state.prefix)
    for t in state.terms:
        if not t.alive or not isinstance(t.entry.payload, Strategy):
            continue
        rule = t.entry.payload.rule
        if isinstance(rule, (Permutation, Injection)):
            report = visited_below(rule, n)
            if report.positions:
                pairs[t.entry.entry_id] = (t.index, max(report.positions))
    return pairs


def run_construction(roster: Sequence[RosterEntry], schedule: Sequence[int],
                     variant: str, config: ConstructionConfig | None = None,
                     landing: LandingSet | None = None,
                     schedule_id: str | None = None) -> ConstructionResult:
    """Run the staged construction and emit the prefix plus its certificate.

    Entries are inserted at successive schedule boundaries; leftover
    entries beyond the last boundary are inserted at the end (they shape
    the adversary but no further bits).  With a landing set, every
    boundary is stretched up to the next admissible length.
    """
    _check_roster(roster, variant)
    _check_schedule(schedule)
    cfg = config or ConstructionConfig()
    if cfg.validity_horizon is None:
        cfg = replace(cfg, validity_horizon=schedule[-1])
    state = DiagonalState(cfg)
    _run_engine(state, roster, schedule, landing, cfg.validity_horizon)
    pairs = _enumeration_pairs(state) if variant == "tir" else {}
    entries = tuple(
        replace(state.records[e.entry_id],
                enumeration_pair=pairs.get(e.entry_id))
        for e in roster)
    cert = Certificate(
        variant=variant,
        schedule_id=schedule_id or "inline:" + ",".join(map(str, schedule)),
        landing_id=landing.name if landing else "",
        target_length=len(state.prefix),
        entries=entries,
    )
    return ConstructionResult(
        word=state.prefix,
        certificate=cert,
        d_trajectory=state.d_trajectory(),
        terms=tuple(TermReport(t.entry.entry_id, t.alpha, tuple(t.values), t.alive)
                    for t in state.terms),
    )


def replay_certificate(cert: Certificate, n: int, roster: Sequence[RosterEntry],
                       schedule: Sequence[int],
                       config: ConstructionConfig | None = None,
                       landing: LandingSet | None = None) -> Word:
    """Reconstruct the length-n prefix from certificate advice alone.

    Re-executes the construction with every divergence, invalidity, and
    probe outcome read from the certificate, so no partiality is ever
    probed again.
    """
    if n > cert.target_length:
        raise ValueError(f"replay length {n} beyond target {cert.target_length}")
    _check_roster(roster, cert.variant)
    _check_schedule(schedule)
    by_id = {e.entry_id: e for e in roster}
    for rec in cert.entries:
        if rec.entry_id not in by_id:
            raise UnknownRosterId(rec.entry_id)
    cfg = config or ConstructionConfig()
    if cfg.validity_horizon is None:
        cfg = replace(cfg, validity_horizon=schedule[-1])
    state = DiagonalState(cfg)
    state.advice = {rec.entry_id: rec for rec in cert.entries}
    state.stop_length = n
    ordered = [by_id[rec.entry_id] for rec in cert.entries]
    _run_engine(state, ordered, schedule, landing, cfg.validity_horizon)
    return Word(state.prefix[:n])


def schedule_from_order(h_table: Sequence[int], stages: int) -> list[int]:
    """Stage boundaries from a tabulated order (non-decreasing, unbounded).

    f(0) = 0 and f(k) is the least n with h(n) >= k, bumped upward when
    needed to keep the schedule strictly increasing; describing a prefix of
    length n then needs about h(n) roster entries.
    """
    if any(b < a for a, b in zip(h_table, h_table[1:])):
        raise ValueError("order table must be non-decreasing")
    out = [0]
    for k in range(1, stages):
        n = next((i for i, v in enumerate(h_table) if v >= k), None)
        if n is None:
            raise ValueError(f"order table never reaches {k}; extend the table")
        out.append(max(n, out[-1] + 1))
    return out
