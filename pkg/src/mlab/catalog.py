"""String-id catalog: martingales, scan rules, sources, schedules, landing
sets, and named rosters addressable from CLI configs and roster files.

Grammars (documented in docs/formats.md):

    martingale id   const:<q> | double_on:<bit> | pattern:<word>
                    | lean:<bit>:<stake>
                    with optional modifiers appended:
                    !diverge_past:<n> | !diverge_beyond:<word>
    rule id         monotonic | permutation:pair_swap
                    | permutation:block_rotate:<B>
                    | permutation:block_reverse:<B>
                    | permutation:block_shuffle:<B>:<seed>
                    | permutation:broken | injection:even
                    | injection:head:<p0>,<p1>,... | adaptive:bit_steer
    source id       all-zeros | all-ones | alternating | periodic:<word>
                    | random:<seed>
    schedule id     s64 | s512 | inline:<n0>,<n1>,...
    landing id      (empty) | multiples:<m>
    roster line     <kind> <martingale-id> [| <rule-id>]
"""

from __future__ import annotations

from fractions import Fraction

from . import martingales as mg
from . import strategies as sg
from .certificates import (
    KIND_PARTIAL_MARTINGALE,
    KIND_PARTIAL_PERMUTATION,
    KIND_TOTAL_INJECTIVE,
    KIND_TOTAL_MARTINGALE,
    KINDS,
)
from .complexity import DescriptionSystem
from .core import SequenceSource, Word, all_ones, all_zeros, alternating, periodic, pseudo_random
from .diagonalize import LandingSet, RosterEntry, replay_certificate
from .martingales import Martingale
from .strategies import ScanRule, Strategy


class CatalogError(ValueError):
    """Unknown or malformed catalog id."""


def martingale_by_id(spec: str) -> Martingale:
    base_id, _, rest = spec.partition("!")
    parts = base_id.split(":")
    try:
        if parts[0] == "const":
            m = mg.constant(Fraction(parts[1]))
        elif parts[0] == "double_on":
            m = mg.double_on(int(parts[1]))
        elif parts[0] == "pattern":
            m = mg.pattern_bettor(parts[1])
        elif parts[0] == "lean":
            m = mg.lean_on(int(parts[1]), Fraction(parts[2]))
        else:
            raise CatalogError(f"unknown martingale id {base_id!r}")
    except (IndexError, ValueError, ZeroDivisionError) as e:
        raise CatalogError(f"bad martingale id {spec!r}: {e}") from e
    if rest:
        mod = rest.split(":")
        if mod[0] == "diverge_past":
            m = mg.diverge_past(m, int(mod[1]))
        elif mod[0] == "diverge_beyond":
            m = mg.diverge_beyond(m, mod[1])
        else:
            raise CatalogError(f"unknown modifier {rest!r}")
    return m


def _broken_rule() -> sg.Permutation:
    """A map that revisits position 5: not a permutation (validity probe)."""
    return sg.Permutation(lambda j: 5 if j in (0, 3) else j + 10,
                          lambda p: 0 if p == 5 else p - 10, "broken")


def rule_by_id(spec: str) -> ScanRule:
    parts = spec.split(":")
    try:
        if parts[0] == "monotonic":
            return sg.Monotonic()
        if parts[0] == "permutation":
            if parts[1] == "pair_swap":
                return sg.pair_swap()
            if parts[1] == "block_rotate":
                return sg.block_rotate(int(parts[2]))
            if parts[1] == "block_reverse":
                return sg.block_reverse(int(parts[2]))
            if parts[1] == "block_shuffle":
                return sg.block_shuffle(int(parts[2]), int(parts[3]))
            if parts[1] == "broken":
                return _broken_rule()
        if parts[0] == "injection":
            if parts[1] == "even":
                return sg.even_injection()
            if parts[1] == "head":
                head = [int(x) for x in parts[2].split(",") if x]
                return sg.head_injection(head)
        if parts[0] == "adaptive" and parts[1] == "bit_steer":
            return sg.bit_steer()
    except (IndexError, ValueError) as e:
        raise CatalogError(f"bad rule id {spec!r}: {e}") from e
    raise CatalogError(f"unknown rule id {spec!r}")


def source_by_id(spec: str) -> SequenceSource:
    parts = spec.split(":")
    try:
        if parts[0] == "all-zeros":
            return all_zeros()
        if parts[0] == "all-ones":
            return all_ones()
        if parts[0] == "alternating":
            return alternating()
        if parts[0] == "periodic":
            return periodic(parts[1])
        if parts[0] == "random":
            return pseudo_random(int(parts[1]))
    except (IndexError, ValueError) as e:
        raise CatalogError(f"bad source id {spec!r}: {e}") from e
    raise CatalogError(f"unknown source id {spec!r}")


NAMED_SCHEDULES: dict[str, tuple[int, ...]] = {
    "s64": (0, 4, 16, 64),
    "s512": (0, 8, 32, 128, 512),
}


def schedule_by_id(spec: str) -> list[int]:
    if spec in NAMED_SCHEDULES:
        return list(NAMED_SCHEDULES[spec])
    if spec.startswith("inline:"):
        try:
            return [int(x) for x in spec[len("inline:"):].split(",")]
        except ValueError as e:
            raise CatalogError(f"bad inline schedule {spec!r}") from e
    raise CatalogError(f"unknown schedule id {spec!r}")


def schedule_id_for(values: list[int] | tuple[int, ...]) -> str:
    for name, sched in NAMED_SCHEDULES.items():
        if tuple(values) == sched:
            return name
    return "inline:" + ",".join(map(str, values))


def landing_by_id(spec: str) -> LandingSet | None:
    if not spec:
        return None
    parts = spec.split(":")
    if parts[0] == "multiples" and len(parts) == 2:
        m = int(parts[1])
        if m < 1:
            raise CatalogError("multiples landing needs a positive modulus")
        return LandingSet(spec, lambda n: n + (-n) % m)
    raise CatalogError(f"unknown landing id {spec!r}")


def strategy_from_ids(martingale_id: str, rule_id: str) -> Strategy:
    return Strategy(martingale_by_id(martingale_id), rule_by_id(rule_id))


# --- rosters -----------------------------------------------------------------

_KIND_ALIASES = {k: k for k in KINDS}
_KIND_ALIASES.update({
    "total-mart": KIND_TOTAL_MARTINGALE,
    "partial-mart": KIND_PARTIAL_MARTINGALE,
})

STANDARD_ROSTERS: dict[str, tuple[str, ...]] = {
    "tmr-std": (
        "total-martingale double_on:0",
        "total-martingale double_on:1",
        "total-martingale pattern:01",
        "total-martingale lean:0:1/2",
        "total-martingale const:1",
    ),
    "tir-std": (
        "total-injective double_on:0 | permutation:pair_swap",
        "total-injective pattern:01 | injection:even",
        "total-injective lean:1:1/2 | permutation:block_rotate:3",
        "total-injective double_on:1 | monotonic",
        "total-injective pattern:001 | permutation:block_reverse:4",
    ),
    "pmr-std": (
        "partial-martingale lean:1:1/2",
        "partial-martingale double_on:1!diverge_past:20",
        "partial-martingale pattern:01",
        "partial-martingale const:1!diverge_past:100",
        "partial-martingale double_on:0",
    ),
    "ppr-std": (
        "partial-permutation lean:0:1/3 | permutation:pair_swap",
        "partial-permutation double_on:1!diverge_past:4 | permutation:pair_swap",
        "partial-permutation const:1 | permutation:broken",
        "partial-permutation pattern:10 | permutation:block_reverse:4",
        "partial-permutation const:1 | monotonic",
    ),
}


def parse_roster_line(index: int, line: str) -> RosterEntry:
    head, _, rule_part = line.partition("|")
    tokens = head.split()
    if len(tokens) != 2:
        raise CatalogError(f"roster line needs '<kind> <martingale-id>': {line!r}")
    kind_token, mart_id = tokens
    kind = _KIND_ALIASES.get(kind_token)
    if kind is None:
        raise CatalogError(f"unknown roster kind {kind_token!r}")
    m = martingale_by_id(mart_id)
    if kind in (KIND_TOTAL_MARTINGALE, KIND_PARTIAL_MARTINGALE):
        if rule_part.strip():
            raise CatalogError(f"martingale entries take no rule: {line!r}")
        return RosterEntry(index, kind, m)
    rule_id = rule_part.strip()
    if not rule_id:
        raise CatalogError(f"strategy entries need a rule: {line!r}")
    return RosterEntry(index, kind, Strategy(m, rule_by_id(rule_id)))


def parse_roster(lines: list[str] | tuple[str, ...]) -> list[RosterEntry]:
    entries = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        entries.append(parse_roster_line(len(entries), line))
    if not entries:
        raise CatalogError("roster is empty")
    return entries


def roster_by_name(name: str) -> list[RosterEntry]:
    if name not in STANDARD_ROSTERS:
        raise CatalogError(f"unknown roster {name!r}; have {sorted(STANDARD_ROSTERS)}")
    return parse_roster(list(STANDARD_ROSTERS[name]))


def load_roster(name_or_path: str) -> list[RosterEntry]:
    if name_or_path in STANDARD_ROSTERS:
        return roster_by_name(name_or_path)
    with open(name_or_path, "r", encoding="ascii") as fh:
        return parse_roster(fh.read().splitlines())


# --- description system wiring ------------------------------------------------


def certificate_decoder(blob: bytes, n: int) -> Word:
    """Replay a serialized certificate against the public catalog.

    Only certificates whose schedule (and roster, via the variant's
    standard roster) are catalog-named can be decoded this way.
    """
    from .certificates import parse_certificate

    cert = parse_certificate(blob)
    roster = roster_by_name(f"{cert.variant}-std")
    schedule = schedule_by_id(cert.schedule_id)
    landing = landing_by_id(cert.landing_id)
    return replay_certificate(cert, n, roster, schedule, landing=landing)


def description_system(with_certificates: bool = True) -> DescriptionSystem:
    if with_certificates:
        return DescriptionSystem(certificate_decoder, "fixed-record+cert")
    return DescriptionSystem()
