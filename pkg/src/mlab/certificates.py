"""Construction certificates and their binary serialization.

A certificate is the compact replayable description of a diagonalization
run: which roster entries were usable, where the unusable ones died, and
how the stage schedule was named.  Together with the public roster catalog
it reconstructs the constructed prefix bit-exactly.

Binary layout (all multi-byte integers are unsigned LEB128):

    magic  b"MLC1"
    u8     version (1)
    u8     variant code (0 tmr, 1 tir, 2 pmr, 3 ppr)
    u8     schedule id length, then that many ASCII bytes
    u8     landing id length, then that many ASCII bytes (0 = none)
    leb    target prefix length
    leb    entry count
    per entry:
        leb  entry id
        u8   kind code (0 total-martingale, 1 partial-martingale,
                        2 total-injective, 3 partial-permutation)
        u8   flags: 0x01 usable/total, 0x02 divergent, 0x04 invalid,
                    0x08 race timeout, 0x10 has probe index,
                    0x20 has enumeration pair, 0x40 died at insertion
        [leb divergence position]   if flags & 0x02
        [leb probe index]           if flags & 0x10
        [leb, leb enumeration pair] if flags & 0x20

The serialized size is affine in the entry count and in log(target):
8*len(bytes) <= C1*entries + C2*records*ceil(log2(target+1)) + C3 with the
frozen constants C1=64, C2=4, C3=256 checked by golden test.
"""

from __future__ import annotations

from dataclasses import dataclass, field

VARIANTS = ("tmr", "tir", "pmr", "ppr")

KIND_TOTAL_MARTINGALE = "total-martingale"
KIND_PARTIAL_MARTINGALE = "partial-martingale"
KIND_TOTAL_INJECTIVE = "total-injective"
KIND_PARTIAL_PERMUTATION = "partial-permutation"
KINDS = (KIND_TOTAL_MARTINGALE, KIND_PARTIAL_MARTINGALE,
         KIND_TOTAL_INJECTIVE, KIND_PARTIAL_PERMUTATION)

SIZE_C1 = 64
SIZE_C2 = 4
SIZE_C3 = 256

_MAGIC = b"MLC1"
_VERSION = 1

_FLAG_USABLE = 0x01
_FLAG_DIVERGENT = 0x02
_FLAG_INVALID = 0x04
_FLAG_RACE = 0x08
_FLAG_PROBE = 0x10
_FLAG_PAIR = 0x20
_FLAG_AT_INSERTION = 0x40


class CertificateFormatError(ValueError):
    """Malformed certificate bytes."""


class UnknownRosterId(KeyError):
    """Certificate references an entry the roster catalog does not have."""


@dataclass(frozen=True)
class EntryRecord:
    """Replay advice for one roster entry."""

    entry_id: int
    kind: str
    usable: bool = True
    invalid: bool = False
    divergence_position: int | None = None
    died_at_insertion: bool = False
    race_timeout: bool = False
    probe_index: int | None = None
    enumeration_pair: tuple[int, int] | None = None


@dataclass(frozen=True)
class Certificate:
    variant: str
    schedule_id: str
    landing_id: str
    target_length: int
    entries: tuple[EntryRecord, ...]

    @property
    def divergence_records(self) -> int:
        return sum(1 for e in self.entries
                   if e.divergence_position is not None
                   or e.probe_index is not None
                   or e.enumeration_pair is not None)

    def size_bound_bits(self) -> int:
        """Frozen affine size bound in entries and log2(target)."""
        log_n = (self.target_length + 1).bit_length()
        return (SIZE_C1 * len(self.entries)
                + SIZE_C2 * self.divergence_records * log_n
                + SIZE_C3)


def _leb_encode(x: int) -> bytes:
    if x < 0:
        raise ValueError("LEB128 encodes nonnegative integers")
    out = bytearray()
    while True:
        byte = x & 0x7F
        x >>= 7
        if x:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _leb_decode(blob: bytes, pos: int) -> tuple[int, int]:
    x = 0
    shift = 0
    while True:
        if pos >= len(blob):
            raise CertificateFormatError("truncated varint")
        byte = blob[pos]
        pos += 1
        x |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return x, pos
        shift += 7
        if shift > 63:
            raise CertificateFormatError("varint too long")


def _ascii_field(s: str) -> bytes:
    raw = s.encode("ascii")
    if len(raw) > 255:
        raise ValueError("id string too long")
    return bytes([len(raw)]) + raw


def serialize_certificate(cert: Certificate) -> bytes:
    if cert.variant not in VARIANTS:
        raise ValueError(f"unknown variant {cert.variant!r}")
    out = bytearray(_MAGIC)
    out.append(_VERSION)
    out.append(VARIANTS.index(cert.variant))
    out += _ascii_field(cert.schedule_id)
    out += _ascii_field(cert.landing_id)
    out += _leb_encode(cert.target_length)
    out += _leb_encode(len(cert.entries))
    for e in cert.entries:
        if e.kind not in KINDS:
            raise ValueError(f"unknown kind {e.kind!r}")
        out += _leb_encode(e.entry_id)
        out.append(KINDS.index(e.kind))
        flags = 0
        flags |= _FLAG_USABLE if e.usable else 0
        flags |= _FLAG_DIVERGENT if e.divergence_position is not None else 0
        flags |= _FLAG_INVALID if e.invalid else 0
        flags |= _FLAG_RACE if e.race_timeout else 0
        flags |= _FLAG_PROBE if e.probe_index is not None else 0
        flags |= _FLAG_PAIR if e.enumeration_pair is not None else 0
        flags |= _FLAG_AT_INSERTION if e.died_at_insertion else 0
        out.append(flags)
        if e.divergence_position is not None:
            out += _leb_encode(e.divergence_position)
        if e.probe_index is not None:
            out += _leb_encode(e.probe_index)
        if e.enumeration_pair is not None:
            out += _leb_encode(e.enumeration_pair[0])
            out += _leb_encode(e.enumeration_pair[1])
    return bytes(out)


def parse_certificate(blob: bytes) -> Certificate:
    if blob[:4] != _MAGIC:
        raise CertificateFormatError("bad magic")
    if len(blob) < 6 or blob[4] != _VERSION:
        raise CertificateFormatError("unsupported version")
    variant_code = blob[5]
    if variant_code >= len(VARIANTS):
        raise CertificateFormatError("unknown variant code")
    pos = 6

    def ascii_field(pos: int) -> tuple[str, int]:
        if pos >= len(blob):
            raise CertificateFormatError("truncated id field")
        ln = blob[pos]
        pos += 1
        if pos + ln > len(blob):
            raise CertificateFormatError("truncated id field")
        return blob[pos:pos + ln].decode("ascii"), pos + ln

    schedule_id, pos = ascii_field(pos)
    landing_id, pos = ascii_field(pos)
    target, pos = _leb_decode(blob, pos)
    count, pos = _leb_decode(blob, pos)
    entries = []
    for _ in range(count):
        entry_id, pos = _leb_decode(blob, pos)
        if pos + 2 > len(blob):
            raise CertificateFormatError("truncated entry record")
        kind_code, flags = blob[pos], blob[pos + 1]
        pos += 2
        if kind_code >= len(KINDS):
            raise CertificateFormatError("unknown kind code")
        divergence = probe = pair = None
        if flags & _FLAG_DIVERGENT:
            divergence, pos = _leb_decode(blob, pos)
        if flags & _FLAG_PROBE:
            probe, pos = _leb_decode(blob, pos)
        if flags & _FLAG_PAIR:
            a, pos = _leb_decode(blob, pos)
            b, pos = _leb_decode(blob, pos)
            pair = (a, b)
        entries.append(EntryRecord(
            entry_id=entry_id,
            kind=KINDS[kind_code],
            usable=bool(flags & _FLAG_USABLE),
            invalid=bool(flags & _FLAG_INVALID),
            divergence_position=divergence,
            died_at_insertion=bool(flags & _FLAG_AT_INSERTION),
            race_timeout=bool(flags & _FLAG_RACE),
            probe_index=probe,
            enumeration_pair=pair,
        ))
    if pos != len(blob):
        raise CertificateFormatError("trailing bytes")
    return Certificate(VARIANTS[variant_code], schedule_id, landing_id,
                       target, tuple(entries))
