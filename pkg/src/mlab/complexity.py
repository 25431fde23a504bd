"""A concrete prefix-free description system acting as a computable
surrogate for conditional plain complexity.

Programs are self-delimiting bit records with three opcodes:

* LITERAL  "0"  gamma(n+1)  <n payload bits>      -> the payload
* REPEAT   "10" gamma(L)    <L pattern bits>      -> pattern cycled to
                                                     `condition` bits
* CERT     "11" gamma(B)    <B certificate bits>  -> replay of a
                                                     construction
                                                     certificate at length
                                                     `condition`

Lengths are Elias-gamma coded, so no valid program is a proper prefix of
another and validity never depends on the condition.  The condition (the
target length n of "complexity of w given n") is a separate decoder input,
never encoded inside the program.

Frozen encoding facts (golden-tested): the shortest program is the empty
literal "01"; the all-zeros repeater is "1010" (4 bits); a literal for a
word of n bits costs n + 2*floor(log2(n+1)) + 2 bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

from .core import OutOfBudget, StepBudget, Word, default_budget

TAG_LITERAL = "0"
TAG_REPEAT = "10"
TAG_CERT = "11"

REPEAT_ZERO_COST = 4  # bits of the canonical all-zeros program "1010"


def encode_gamma(x: int) -> str:
    """Elias gamma code of x >= 1: floor(log2 x) zeros, then x in binary."""
    if x < 1:
        raise ValueError("gamma code needs a positive integer")
    b = bin(x)[2:]
    return "0" * (len(b) - 1) + b


def decode_gamma(bits: str, pos: int) -> tuple[int, int] | None:
    """Decode a gamma code at `pos`; returns (value, next position) or None."""
    zeros = 0
    while pos + zeros < len(bits) and bits[pos + zeros] == "0":
        zeros += 1
    end = pos + 2 * zeros + 1
    if end > len(bits):
        return None
    return int(bits[pos + zeros:end], 2), end


def literal_program(w: str) -> Word:
    word = Word(w)
    return Word(TAG_LITERAL + encode_gamma(len(word) + 1) + word)


def repeat_program(pattern: str) -> Word:
    p = Word(pattern)
    if not p:
        raise ValueError("repeat pattern must be nonempty")
    return Word(TAG_REPEAT + encode_gamma(len(p)) + p)


def cert_program(blob: bytes) -> Word:
    if not blob:
        raise ValueError("certificate payload must be nonempty")
    bits = "".join(format(byte, "08b") for byte in blob)
    return Word(TAG_CERT + encode_gamma(len(bits)) + bits)


def _bits_to_bytes(bits: str) -> bytes | None:
    if len(bits) % 8:
        return None
    return bytes(int(bits[i:i + 8], 2) for i in range(0, len(bits), 8))


@dataclass(frozen=True)
class DescriptionSystem:
    """Deterministic budgeted decoder for the fixed program format.

    `certificate_decoder(blob, n)` replays a serialized construction
    certificate to the length-n prefix; without one, CERT programs are
    invalid.
    """

    certificate_decoder: Callable[[bytes, int], Word] | None = None
    name: str = "fixed-record"

    def decode(self, program: str, condition: int,
               budget: StepBudget | None = None) -> Word | None:
        """Decode a program under the given condition; None on invalid input."""
        bgt = budget if budget is not None else default_budget()
        p = Word(program)
        bgt.charge(len(p) + 1)
        if not p:
            return None
        if p[0] == "0":
            parsed = decode_gamma(p, 1)
            if parsed is None:
                return None
            n_plus_1, pos = parsed
            n = n_plus_1 - 1
            if len(p) - pos != n:
                return None
            return Word(p[pos:])
        if len(p) < 2:
            return None
        if p[1] == "0":  # REPEAT
            parsed = decode_gamma(p, 2)
            if parsed is None:
                return None
            plen, pos = parsed
            if plen < 1 or len(p) - pos != plen:
                return None
            pattern = p[pos:]
            reps = -(-condition // plen)
            return Word((pattern * reps)[:condition])
        parsed = decode_gamma(p, 2)  # CERT
        if parsed is None:
            return None
        blen, pos = parsed
        if blen < 1 or len(p) - pos != blen:
            return None
        blob = _bits_to_bytes(p[pos:])
        if blob is None or self.certificate_decoder is None:
            return None
        try:
            bgt.charge(8 * len(blob))
            return self.certificate_decoder(blob, condition)
        except OutOfBudget:
            raise
        except Exception:
            return None


def enumerate_programs(max_len: int) -> Iterator[Word]:
    """All bit strings in length-then-lexicographic order, lengths 1..max_len."""
    for length in range(1, max_len + 1):
        for v in range(1 << length):
            yield Word(format(v, f"0{length}b"))


@dataclass(frozen=True)
class ComplexityBound:
    """A witnessed upper bound: decode(witness, condition) == word."""

    word: Word
    condition: int
    bound: int
    witness: Word


def complexity_upper(ds: DescriptionSystem, w: str, condition: int,
                     budget: StepBudget | None = None) -> ComplexityBound | None:
    """First program (in enumeration order) producing w under the condition.

    When the enumeration budget runs out before reaching the literal
    stratum, the canonical literal program is tried directly, so None is
    returned only if even that final check does not fit in the budget.
    """
    word = Word(w)
    bgt = budget if budget is not None else default_budget()
    fallback = literal_program(word)
    reserve = 8 * len(fallback) + 8
    enum_steps = max(bgt.remaining - reserve, 0)
    enum_budget = StepBudget(enum_steps)
    hit: Word | None = None
    try:
        for p in enumerate_programs(len(fallback)):
            if ds.decode(p, condition, enum_budget) == word:
                hit = p
                break
    except OutOfBudget:
        pass
    bgt.charge(enum_steps - enum_budget.remaining)
    if hit is not None:
        return ComplexityBound(word, condition, len(hit), hit)
    try:
        if ds.decode(fallback, condition, bgt) == word:
            return ComplexityBound(word, condition, len(fallback), fallback)
    except OutOfBudget:
        pass
    return None


@dataclass(frozen=True)
class EnumerationResult:
    """Deterministic low-complexity stream; `complete` is False when the
    budget truncated the enumeration."""

    words: tuple[Word, ...]
    complete: bool


def low_complexity_stream(ds: DescriptionSystem, length: int, condition: int,
                          threshold: int, budget: StepBudget | None = None
                          ) -> Iterator[tuple[int, Word, Word]]:
    """Yield (program index, program, word) for each word of the given
    length first produced by a program of at most `threshold` bits.

    The order is the program enumeration order and depends only on the
    description system, never on any sequence being bet on.
    """
    bgt = budget if budget is not None else default_budget()
    seen: set[Word] = set()
    for index, p in enumerate(enumerate_programs(threshold)):
        out = ds.decode(p, condition, bgt)
        if out is not None and len(out) == length and out not in seen:
            seen.add(out)
            yield index, p, out


def enumerate_low(ds: DescriptionSystem, length: int, condition: int,
                  threshold: int, budget: StepBudget | None = None
                  ) -> EnumerationResult:
    """Materialized low-complexity stream with a truncation flag."""
    bgt = budget if budget is not None else default_budget()
    words: list[Word] = []
    try:
        for _, _, w in low_complexity_stream(ds, length, condition, threshold, bgt):
            words.append(w)
    except OutOfBudget:
        return EnumerationResult(tuple(words), False)
    return EnumerationResult(tuple(words), True)


def valid_programs(max_len: int, condition: int,
                   ds: DescriptionSystem | None = None) -> list[Word]:
    """Every syntactically valid program of at most max_len bits."""
    system = ds if ds is not None else DescriptionSystem()
    out = []
    for p in enumerate_programs(max_len):
        if system.decode(p, condition, StepBudget(10 * max_len + 16)) is not None:
            out.append(p)
    return out
