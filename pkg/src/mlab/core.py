"""Foundational types shared by every module: binary words, exact capital,
step budgets, deterministic sequence sources, and checkpoint ladders.

All capital arithmetic is exact rational (`fractions.Fraction`); floating
point is never used for capital values.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

# Finite-stage artifact: no word ever needs more bits than this.
MAX_WORD_BITS = 1 << 20

DEFAULT_BUDGET_STEPS = 2_000_000

Capital = Fraction


class OutOfBudget(Exception):
    """A budgeted evaluation exceeded its step allowance.

    Consumers treat this as divergence: at desk scale a computation that
    does not halt within its budget is indistinguishable from one that
    never halts.
    """


class StepBudget:
    """Mutable step counter threaded through budgeted evaluations."""

    __slots__ = ("remaining",)

    def __init__(self, steps: int) -> None:
        self.remaining = int(steps)

    def charge(self, steps: int = 1) -> None:
        self.remaining -= steps
        if self.remaining < 0:
            self.remaining = 0
            raise OutOfBudget

    def diverge(self) -> None:
        """Consume everything: models a computation that never halts."""
        self.remaining = 0
        raise OutOfBudget


def default_budget() -> StepBudget:
    """Fresh budget sized from MLAB_BUDGET (steps), or the built-in default."""
    return StepBudget(int(os.environ.get("MLAB_BUDGET", DEFAULT_BUDGET_STEPS)))


class Word(str):
    """Finite binary word over {0,1}; bit i is defined iff i < len(w), 0-based.

    Immutable (a str subclass), so words can be shared freely across
    threads and used as dict keys.
    """

    __slots__ = ()

    def __new__(cls, bits: object = "") -> "Word":
        s = str.__new__(cls, bits)
        if len(s) > MAX_WORD_BITS:
            raise ValueError(f"word of {len(s)} bits exceeds cap {MAX_WORD_BITS}")
        if s.strip("01"):
            raise ValueError(f"word must contain only 0/1, got {s[:40]!r}")
        return s

    def bit(self, i: int) -> int:
        return ord(self[i]) - 48

    def append(self, bit: int | str) -> "Word":
        return Word(str.__add__(self, str(bit)))

    def is_prefix_of(self, other: str) -> bool:
        return other.startswith(self)

    def prefixes(self) -> Iterable["Word"]:
        """All prefixes from the empty word up to the word itself."""
        for n in range(len(self) + 1):
            yield Word(str.__getitem__(self, slice(0, n)))


EMPTY_WORD = Word("")


def word_from_bits(bits: Iterable[int]) -> Word:
    return Word("".join("1" if b else "0" for b in bits))


def format_capital(c: Capital) -> str:
    """Serialize a capital as "numerator/denominator"."""
    return f"{c.numerator}/{c.denominator}"


def parse_capital(s: str) -> Capital:
    c = Fraction(s)
    if c < 0:
        raise ValueError(f"capital must be nonnegative, got {s!r}")
    return c


@dataclass(frozen=True)
class SequenceSource:
    """Deterministic prefix oracle for an infinite bit sequence.

    `generator` maps a position to a bit and must return the same bit on
    repeated queries.
    """

    generator: Callable[[int], int]
    description: str

    def bit(self, i: int) -> int:
        b = self.generator(i)
        if b not in (0, 1):
            raise ValueError(f"source {self.description} produced non-bit {b!r}")
        return b


def sequence_prefix(source: SequenceSource, n: int) -> Word:
    """The first n bits of the source as a word."""
    if n < 0:
        raise ValueError("prefix length must be nonnegative")
    return word_from_bits(source.bit(i) for i in range(n))


def all_zeros() -> SequenceSource:
    return SequenceSource(lambda i: 0, "all-zeros")


def all_ones() -> SequenceSource:
    return SequenceSource(lambda i: 1, "all-ones")


def alternating() -> SequenceSource:
    return SequenceSource(lambda i: i % 2, "alternating")


def periodic(pattern: str) -> SequenceSource:
    w = Word(pattern)
    if not w:
        raise ValueError("periodic pattern must be nonempty")
    return SequenceSource(lambda i: w.bit(i % len(w)), f"periodic:{w}")


def from_word(w: str, pad: int = 0) -> SequenceSource:
    """Source whose first len(w) bits are w, padded with a constant after."""
    word = Word(w)
    return SequenceSource(
        lambda i: word.bit(i) if i < len(word) else pad,
        f"word:{word}+{pad}*",
    )


def pseudo_random(seed: int) -> SequenceSource:
    """Position-wise deterministic pseudo-random source."""

    def gen(i: int) -> int:
        return random.Random(f"mlab:{seed}:{i}").getrandbits(1)

    return SequenceSource(gen, f"random:{seed}")


class NotIncreasing(ValueError):
    """Checkpoint list is not strictly increasing from 0."""


class DoublingViolation(ValueError):
    """Checkpoint k+1 is smaller than twice checkpoint k."""

    def __init__(self, index: int, values: Sequence[int]):
        self.index = index
        super().__init__(
            f"checkpoint {values[index + 1]} at index {index + 1} "
            f"is below twice {values[index]}"
        )


@dataclass(frozen=True)
class Checkpoints:
    """Increasing ladder n_0=0 < n_1 < ... with n_{k+1} >= 2*n_k for k >= 1.

    The half-open intervals [n_k, n_{k+1}) partition [0, n_last).
    """

    values: tuple[int, ...]

    @property
    def interval_count(self) -> int:
        return len(self.values) - 1

    def interval(self, k: int) -> range:
        return range(self.values[k], self.values[k + 1])

    def interval_length(self, k: int) -> int:
        return self.values[k + 1] - self.values[k]


def validate_checkpoints(values: Sequence[int]) -> Checkpoints:
    """Validate a checkpoint list; raises NotIncreasing or DoublingViolation."""
    vals = tuple(int(v) for v in values)
    if not vals:
        raise ValueError("checkpoint list must be nonempty")
    if vals[0] != 0:
        raise NotIncreasing(f"first checkpoint must be 0, got {vals[0]}")
    for k in range(len(vals) - 1):
        if vals[k + 1] <= vals[k]:
            raise NotIncreasing(f"{vals[k + 1]} after {vals[k]} at index {k + 1}")
    for k in range(1, len(vals) - 1):
        if vals[k + 1] < 2 * vals[k]:
            raise DoublingViolation(k, vals)
    return Checkpoints(vals)
