"""Martingales as budgeted evaluators, the fairness check, and the two
capital-level transforms (weighted sum, saving).

A martingale maps binary words to exact nonnegative capital and satisfies
the fairness condition 2*d(w) = d(w0) + d(w1) wherever the children are
defined.  Partiality is modeled by step budgets: an evaluation that raises
OutOfBudget counts as divergent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import Capital, OutOfBudget, StepBudget, Word, default_budget

EvalFn = Callable[[Word, StepBudget], Capital]


@dataclass(frozen=True)
class Martingale:
    """Budgeted evaluator from words to exact nonnegative capital.

    Evaluators are pure functions of (word, budget); concurrent evaluation
    at different words must agree with sequential evaluation.
    """

    fn: EvalFn
    initial_capital: Capital = Fraction(1)
    declared_total: bool = True
    name: str = "martingale"

    def value(self, w: str, budget: StepBudget | None = None) -> Capital:
        b = budget if budget is not None else default_budget()
        v = self.fn(Word(w), b)
        if v < 0:
            raise ValueError(f"martingale {self.name} produced negative value at {w!r}")
        return v


def constant(value: Fraction | int | str) -> Martingale:
    c = Fraction(value)
    if c < 0:
        raise ValueError("constant martingale must be nonnegative")

    def fn(w: Word, budget: StepBudget) -> Capital:
        budget.charge()
        return c

    return Martingale(fn, initial_capital=c, name=f"const:{c}")


def double_on(bit: int) -> Martingale:
    """Bets the whole capital on `bit` at every move: doubles or dies."""
    ch = str(bit)

    def fn(w: Word, budget: StepBudget) -> Capital:
        budget.charge(len(w) + 1)
        if w.count(ch) == len(w):
            return Fraction(2 ** len(w))
        return Fraction(0)

    return Martingale(fn, name=f"double_on:{bit}")


def pattern_bettor(pattern: str) -> Martingale:
    """Bets everything that the word follows `pattern` repeated cyclically."""
    p = Word(pattern)
    if not p:
        raise ValueError("pattern must be nonempty")

    def fn(w: Word, budget: StepBudget) -> Capital:
        budget.charge(len(w) + 1)
        for i in range(len(w)):
            if w.bit(i) != p.bit(i % len(p)):
                return Fraction(0)
        return Fraction(2 ** len(w))

    return Martingale(fn, name=f"pattern:{p}")


def lean_on(bit: int, stake: Fraction | str) -> Martingale:
    """Bets the fraction `stake` of its capital on `bit` at every move."""
    s = Fraction(stake)
    if not 0 < s <= 1:
        raise ValueError("stake must be in (0, 1]")
    win, lose = 1 + s, 1 - s
    ch = str(bit)

    def fn(w: Word, budget: StepBudget) -> Capital:
        budget.charge(len(w) + 1)
        hits = w.count(ch)
        return Fraction(1) * win**hits * lose ** (len(w) - hits)

    return Martingale(fn, name=f"lean:{bit}:{s}")


def from_table(table: dict[str, Fraction | int], name: str = "table") -> Martingale:
    """Finite table-backed martingale; evaluation diverges off the table."""
    vals = {Word(k): Fraction(v) for k, v in table.items()}

    def fn(w: Word, budget: StepBudget) -> Capital:
        budget.charge(len(w) + 1)
        if w not in vals:
            budget.diverge()
        return vals[w]

    return Martingale(fn, declared_total=False, name=name,
                      initial_capital=vals.get(Word(""), Fraction(1)))


def from_function(fn: Callable[[Word], Fraction], name: str,
                  initial: Fraction | int = 1, total: bool = True) -> Martingale:
    """Wrap a plain word->capital function as a budgeted martingale."""

    def eval_fn(w: Word, budget: StepBudget) -> Capital:
        budget.charge(len(w) + 1)
        return Fraction(fn(w))

    return Martingale(eval_fn, initial_capital=Fraction(initial),
                      declared_total=total, name=name)


def diverge_past(base: Martingale, length: int) -> Martingale:
    """Like `base` on words of length <= `length`; diverges on longer ones."""

    def fn(w: Word, budget: StepBudget) -> Capital:
        if len(w) > length:
            budget.diverge()
        return base.fn(w, budget)

    return Martingale(fn, initial_capital=base.initial_capital,
                      declared_total=False,
                      name=f"{base.name}!diverge_past:{length}")


def diverge_beyond(base: Martingale, marker: str) -> Martingale:
    """Like `base` except it diverges on proper extensions of `marker`."""
    m = Word(marker)

    def fn(w: Word, budget: StepBudget) -> Capital:
        if len(w) > len(m) and w.startswith(m):
            budget.diverge()
        return base.fn(w, budget)

    return Martingale(fn, initial_capital=base.initial_capital,
                      declared_total=False,
                      name=f"{base.name}!diverge_beyond:{m}")


@dataclass(frozen=True)
class FairnessReport:
    """Outcome of a fairness sweep to a given depth.

    `violations` holds (w, d(w), d(w0), d(w1)) tuples with 2*d(w) != d(w0)+d(w1).
    `definedness` holds words where exactly one child evaluated, or where a
    child evaluated while the parent diverged.
    `budget_exhausted` holds words whose own evaluation ran out of budget
    (reported, not fatal: legal for partial martingales).
    """

    depth: int
    violations: tuple[tuple[Word, Capital, Capital, Capital], ...]
    definedness: tuple[tuple[Word, str], ...]
    budget_exhausted: tuple[Word, ...]

    @property
    def ok(self) -> bool:
        return not self.violations and not self.definedness

    @property
    def empty(self) -> bool:
        return self.ok and not self.budget_exhausted

    def summary(self) -> str:
        if self.empty:
            return f"fair to depth {self.depth}"
        parts = []
        if self.violations:
            w, p, c0, c1 = self.violations[0]
            parts.append(f"{len(self.violations)} violations "
                         f"(first at {w!r}: 2*{p} != {c0}+{c1})")
        if self.definedness:
            parts.append(f"{len(self.definedness)} definedness defects "
                         f"(first at {self.definedness[0][0]!r})")
        if self.budget_exhausted:
            parts.append(f"{len(self.budget_exhausted)} budget exhaustions")
        return "; ".join(parts)


def check_fairness(m: Martingale, depth: int, steps: int | None = None) -> FairnessReport:
    """Check 2*d(w) = d(w0) + d(w1) exactly for every word with |w| < depth.

    Each evaluation runs under a fresh budget of `steps` so that a
    divergence at one word cannot starve another.
    """

    def evaluate(w: Word) -> Capital | None:
        budget = StepBudget(steps) if steps is not None else default_budget()
        try:
            return m.value(w, budget)
        except OutOfBudget:
            return None

    violations: list[tuple[Word, Capital, Capital, Capital]] = []
    definedness: list[tuple[Word, str]] = []
    exhausted: list[Word] = []
    values: dict[Word, Capital | None] = {Word(""): evaluate(Word(""))}
    if values[Word("")] is None:
        exhausted.append(Word(""))
    level = [Word("")]
    for _ in range(depth):
        next_level: list[Word] = []
        for w in level:
            children = (w.append(0), w.append(1))
            pair = []
            for c in children:
                v = evaluate(c)
                values[c] = v
                if v is None:
                    exhausted.append(c)
                pair.append(v)
            next_level.extend(children)
            v0, v1 = pair
            parent = values[w]
            if (v0 is None) != (v1 is None):
                definedness.append((w, "exactly one child defined"))
            elif v0 is not None and v1 is not None:
                if parent is None:
                    definedness.append((w, "children defined, parent diverges"))
                elif 2 * parent != v0 + v1:
                    violations.append((w, parent, v0, v1))
        level = next_level
    return FairnessReport(depth, tuple(violations), tuple(definedness),
                          tuple(exhausted))


def weighted_sum(terms: Sequence[tuple[Fraction | int | str, Martingale]]) -> Martingale:
    """The martingale sum(a_i * d_i) for positive coefficients a_i.

    Evaluates terms in list order, giving each a per-term budget equal to
    the remaining budget divided by the term count; the deterministic
    accounting keeps downstream constructions replayable.
    """
    if not terms:
        raise ValueError("weighted_sum needs at least one term")
    coeffs = [Fraction(a) for a, _ in terms]
    if any(a <= 0 for a in coeffs):
        raise ValueError("weighted_sum coefficients must be positive")
    parts = list(zip(coeffs, (m for _, m in terms)))

    def fn(w: Word, budget: StepBudget) -> Capital:
        share = budget.remaining // len(parts)
        total = Fraction(0)
        spent = 0
        for a, m in parts:
            sub = StepBudget(share)
            try:
                total += a * m.value(w, sub)
            except OutOfBudget:
                budget.charge(budget.remaining + 1)
            spent += share - sub.remaining
        budget.charge(max(spent, 1))
        return total

    return Martingale(
        fn,
        initial_capital=sum((a * m.initial_capital for a, m in parts), Fraction(0)),
        declared_total=all(m.declared_total for _, m in parts),
        name="sum(" + ",".join(f"{a}*{m.name}" for a, m in parts) + ")",
    )


@dataclass(frozen=True)
class SavingMartingale(Martingale):
    """Martingale with the saving discipline applied to a base martingale.

    Whenever the active part reaches twice the initial capital, half of it
    moves to a bank that is never wagered again and the stake scale halves.
    The bank is non-decreasing along any prefix chain and the active part
    stays below twice the initial capital.
    """

    base: Martingale = None  # type: ignore[assignment]
    # cascade state per word: (bank, active, scale_exponent); thread-confined
    _states: dict[Word, tuple[Capital, Capital, int]] = field(
        default_factory=dict, repr=False, compare=False)

    def _state_at(self, w: Word, budget: StepBudget) -> tuple[Capital, Capital, int]:
        chain = [w]
        while chain[-1] and chain[-1] not in self._states:
            chain.append(Word(chain[-1][:-1]))
        start = chain.pop()
        if start not in self._states:
            init = self.base.initial_capital
            bank, active, exp = Fraction(0), self.base.value(start, budget), 0
            bank, active, exp = self._cascade(bank, active, exp, 2 * init)
            self._states[start] = (bank, active, exp)
        for u in reversed(chain):
            parent = Word(u[:-1])
            bank, active, exp = self._states[parent]
            dv_parent = self.base.value(parent, budget)
            dv = self.base.value(u, budget)
            active = active + (dv - dv_parent) / 2**exp
            bank, active, exp = self._cascade(bank, active, exp,
                                              2 * self.base.initial_capital)
            self._states[u] = (bank, active, exp)
        return self._states[w]

    @staticmethod
    def _cascade(bank: Capital, active: Capital, exp: int,
                 threshold: Capital) -> tuple[Capital, Capital, int]:
        while active >= threshold:
            bank += active / 2
            active /= 2
            exp += 1
        return bank, active, exp

    def bank_at(self, w: str, budget: StepBudget | None = None) -> Capital:
        b = budget if budget is not None else default_budget()
        return self._state_at(Word(w), b)[0]

    def active_at(self, w: str, budget: StepBudget | None = None) -> Capital:
        b = budget if budget is not None else default_budget()
        return self._state_at(Word(w), b)[1]

    def scale_exponent_at(self, w: str, budget: StepBudget | None = None) -> int:
        b = budget if budget is not None else default_budget()
        return self._state_at(Word(w), b)[2]


def saving_transform(m: Martingale) -> SavingMartingale:
    """Apply the saving discipline to `m` (requires positive initial capital)."""
    if m.initial_capital <= 0:
        raise ValueError("saving transform needs positive initial capital")

    holder: list[SavingMartingale] = []

    def fn(w: Word, budget: StepBudget) -> Capital:
        bank, active, _ = holder[0]._state_at(w, budget)
        return bank + active

    sm = SavingMartingale(
        fn,
        initial_capital=m.initial_capital,
        declared_total=m.declared_total,
        name=f"saving({m.name})",
        base=m,
    )
    holder.append(sm)
    return sm
