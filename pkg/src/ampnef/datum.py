"""Signatures, essential places, and line-bundle weights.

A signature records the group data: ``N`` places (indexed cyclically,
reported in ``1..N``), a common rank ``n``, and per-place ranks ``m_i`` of
the distinguished subbundle.  Places with ``0 < m_i < n`` are *essential*;
at extreme places the roles of ``V`` and ``F`` are swapped, which is what
the tilde ranks ``m~_i``/``n~_i`` encode.

Weights come in four flavours, all funnelled through :class:`FlagWeight`
(an ``N x n`` matrix of exact rationals, one column per graded piece of the
full flag, column 1 = bottom piece).  The partial-flag flavours expand into
that matrix via :func:`expand_weight`; the downstream inequality checkers
only ever see the expanded matrix or the native parallel form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union


class DatumError(ValueError):
    """Malformed signature, weight, or incompatible combination thereof."""


class DegenerateError(DatumError):
    """Operation undefined for this signature (e.g. no essential places)."""


# ---------------------------------------------------------------------------
# rationals <-> strings

def frac(x) -> Fraction:
    """Coerce ints, strings like ``"3/4"``, and Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise DatumError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise DatumError(f"not a rational: {x!r}") from exc
    if isinstance(x, float):
        raise DatumError("floating point is not accepted; pass 'num/den' strings")
    raise DatumError(f"not a rational: {x!r}")


def frac_str(x: Fraction) -> str:
    """Canonical string form: ``"3"``, ``"-4/5"``."""
    return str(Fraction(x))


def is_prime(p: int) -> bool:
    if not isinstance(p, int) or isinstance(p, bool) or p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def check_prime(p) -> int:
    if not is_prime(p):
        raise DatumError(f"p must be a prime number, got {p!r}")
    return p


# ---------------------------------------------------------------------------
# signatures

@dataclass(frozen=True)
class Signature:
    """Group datum: ``N`` places of common rank ``n`` with subbundle ranks ``m``."""

    N: int
    n: int
    m: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.N, int) or self.N < 1:
            raise DatumError(f"no places: N must be a positive integer, got {self.N!r}")
        if not isinstance(self.n, int) or self.n < 2:
            raise DatumError(f"rank too small: n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "m", tuple(self.m))
        if len(self.m) != self.N:
            raise DatumError(
                f"need exactly one rank per place: got {len(self.m)} ranks for N={self.N}"
            )
        for i, mi in enumerate(self.m, start=1):
            if not isinstance(mi, int) or not 0 <= mi <= self.n:
                raise DatumError(f"m out of range at place {i}: {mi!r} not in [0, {self.n}]")

    # -- cyclic index helpers -------------------------------------------------

    def place(self, i: int) -> int:
        """Normalize an arbitrary integer place index into ``1..N``."""
        return (i - 1) % self.N + 1

    def grade(self, j: int) -> int:
        """Normalize an arbitrary integer graded index into ``1..n``."""
        return (j - 1) % self.n + 1

    # -- ranks ----------------------------------------------------------------

    def m_at(self, i: int) -> int:
        return self.m[self.place(i) - 1]

    def n_at(self, i: int) -> int:
        return self.n - self.m_at(i)

    def m_tilde(self, i: int) -> int:
        mi = self.m_at(i)
        return self.n if mi == 0 else mi

    def n_tilde(self, i: int) -> int:
        return self.n - self.m_tilde(i)

    # -- essential set --------------------------------------------------------

    def is_essential(self, i: int) -> bool:
        return 0 < self.m_at(i) < self.n

    @property
    def essential(self) -> tuple[int, ...]:
        """Sorted tuple of essential places."""
        return tuple(i for i in range(1, self.N + 1) if self.is_essential(i))

    @property
    def t(self) -> int:
        return len(self.essential)

    def gap(self, i: int) -> int:
        """Distance from place ``i`` to the next essential place (cyclically).

        Defined for every place as soon as one essential place exists; the
        gaps over the essential places themselves sum to ``N``.
        """
        if self.t == 0:
            raise DegenerateError("gap undefined: signature has no essential place")
        for a in range(1, self.N + 1):
            if self.is_essential(i + a):
                return a
        raise AssertionError("unreachable")

    def next_essential(self, i: int) -> int:
        return self.place(i + self.gap(i))


def validate_signature(N, n, m: Sequence[int]) -> Signature:
    return Signature(N, n, tuple(m))


def essential_set(sig: Signature):
    """Return ``(T, t, gaps)`` where gaps maps each essential place to its gap.

    ``gaps`` is ``None`` when there is no essential place.
    """
    T = sig.essential
    if not T:
        return T, 0, None
    return T, len(T), {i: sig.gap(i) for i in T}


# ---------------------------------------------------------------------------
# weights

@dataclass(frozen=True)
class FlagWeight:
    """Full-flag weight: rows indexed by place, entries by graded piece.

    ``rows[i-1][j-1]`` is the coefficient on the ``j``-th graded piece at
    place ``i``; ``j = 1`` is the bottom piece of the flag.
    """

    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "rows", tuple(tuple(frac(x) for x in row) for row in self.rows)
        )
        if not self.rows:
            raise DatumError("empty weight matrix")
        width = len(self.rows[0])
        if any(len(row) != width for row in self.rows):
            raise DatumError("ragged weight matrix")

    @property
    def N(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.rows[0])

    def entry(self, i: int, j: int) -> Fraction:
        """Entry at cyclic place ``i``, graded index ``j`` in ``1..n``."""
        if not 1 <= j <= self.n:
            raise DatumError(f"graded index out of range: {j} not in [1, {self.n}]")
        return self.rows[(i - 1) % self.N][j - 1]

    def __add__(self, other: "FlagWeight") -> "FlagWeight":
        if (self.N, self.n) != (other.N, other.n):
            raise DatumError("weight shape mismatch")
        return FlagWeight(
            tuple(
                tuple(a + b for a, b in zip(ra, rb))
                for ra, rb in zip(self.rows, other.rows)
            )
        )

    def scale(self, c) -> "FlagWeight":
        c = frac(c)
        return FlagWeight(tuple(tuple(c * x for x in row) for row in self.rows))

    @classmethod
    def zero(cls, sig: Signature) -> "FlagWeight":
        return cls(tuple(tuple(Fraction(0) for _ in range(sig.n)) for _ in range(sig.N)))


@dataclass(frozen=True)
class ParallelWeightX:
    """Weight on the minimal (coarsest) flag space: one rational per essential place,
    listed in increasing place order."""

    k: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(frac(x) for x in self.k))


@dataclass(frozen=True)
class MinimalFlagWeight:
    """Weight on a one-step refinement: parallel part ``k`` plus coefficient
    ``alpha`` on one extra flag piece of rank ``rank`` at place ``place``."""

    place: int
    rank: int
    k: tuple[Fraction, ...]
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(frac(x) for x in self.k))
        object.__setattr__(self, "alpha", frac(self.alpha))


@dataclass(frozen=True)
class BlockWeight:
    """Per-place constant blocks, bottom-up: ``blocks[i-1]`` is a tuple of
    ``(length, value)`` pairs whose lengths sum to ``n``."""

    blocks: tuple[tuple[tuple[int, Fraction], ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "blocks",
            tuple(
                tuple((int(l), frac(v)) for l, v in place_blocks)
                for place_blocks in self.blocks
            ),
        )


Weight = Union[FlagWeight, ParallelWeightX, MinimalFlagWeight, BlockWeight]


def _parallel_rows(sig: Signature, k: Sequence[Fraction]) -> list[list[Fraction]]:
    zero = Fraction(0)
    rows = [[zero] * sig.n for _ in range(sig.N)]
    for kl, i in zip(k, sig.essential):
        for j in range(sig.m_at(i)):
            rows[i - 1][j] = kl
    return rows


def expand_weight(sig: Signature, w: Weight) -> FlagWeight:
    """Expand any weight flavour into the full ``N x n`` matrix.

    Expansion rules (pullback to the full flag space):

    * ``ParallelWeightX``: value ``k_l`` on graded pieces ``1..m_i`` of the
      ``l``-th essential place, zero elsewhere.
    * ``MinimalFlagWeight`` at place ``i``, extra rank ``j``: the parallel
      part as above, except row ``i`` carries ``alpha`` on the pieces cut
      out by the extra flag step -- ``1..j`` when ``j < m_i``, or
      ``m_i+1..j`` when ``j > m_i``.  At a non-essential place the class has
      no parallel summand and the extra piece enters with ``-alpha``.
    * ``BlockWeight``: each graded piece gets its containing block's value.
    """
    if isinstance(w, FlagWeight):
        if (w.N, w.n) != (sig.N, sig.n):
            raise DatumError(
                f"weight shape {w.N}x{w.n} does not match signature {sig.N}x{sig.n}"
            )
        return w

    zero = Fraction(0)

    if isinstance(w, ParallelWeightX):
        if len(w.k) != sig.t:
            raise DatumError(
                f"parallel weight needs one entry per essential place: "
                f"got {len(w.k)}, expected t={sig.t}"
            )
        return FlagWeight(tuple(tuple(r) for r in _parallel_rows(sig, w.k)))

    if isinstance(w, MinimalFlagWeight):
        if len(w.k) != sig.t:
            raise DatumError(
                f"minimal flag weight needs one parallel entry per essential place: "
                f"got {len(w.k)}, expected t={sig.t}"
            )
        i = sig.place(w.place)
        j = w.rank
        if not 1 <= j <= sig.n - 1:
            raise DatumError(f"extra flag rank out of range: {j} not in [1, {sig.n - 1}]")
        rows = _parallel_rows(sig, w.k)
        row = [zero] * sig.n
        if sig.is_essential(i):
            mi = sig.m_at(i)
            ki = w.k[sig.essential.index(i)]
            if j == mi:
                raise DatumError(
                    "extra flag rank equals m at an essential place; "
                    "the weight is parallel -- use ParallelWeightX"
                )
            if j < mi:
                row[:j] = [w.alpha] * j
                row[j:mi] = [ki] * (mi - j)
            else:
                row[:mi] = [ki] * mi
                row[mi:j] = [w.alpha] * (j - mi)
        else:
            row[:j] = [-w.alpha] * j
        rows[i - 1] = row
        return FlagWeight(tuple(tuple(r) for r in rows))

    if isinstance(w, BlockWeight):
        if len(w.blocks) != sig.N:
            raise DatumError(
                f"block weight needs one block list per place: "
                f"got {len(w.blocks)}, expected N={sig.N}"
            )
        rows = []
        for i in range(1, sig.N + 1):
            place_blocks = w.blocks[i - 1]
            row = []
            cuts = set()
            total = 0
            for length, value in place_blocks:
                if length < 1:
                    raise DatumError(f"non-positive block length at place {i}")
                row.extend([value] * length)
                total += length
                cuts.add(total)
            if total != sig.n:
                raise DatumError(
                    f"block lengths at place {i} sum to {total}, expected n={sig.n}"
                )
            mi = sig.m_at(i)
            if 0 < mi < sig.n and mi not in cuts:
                raise DatumError(
                    f"blocks at place {i} do not refine the subbundle split: "
                    f"no cut at m_{i}={mi}"
                )
            rows.append(tuple(row))
        return FlagWeight(tuple(rows))

    raise DatumError(f"unknown weight flavour: {type(w).__name__}")


def collapse_to_parallel(sig: Signature, fw: FlagWeight) -> ParallelWeightX:
    """Inverse of parallel expansion; fails if the matrix is not of that shape."""
    if (fw.N, fw.n) != (sig.N, sig.n):
        raise DatumError("weight shape does not match signature")
    k = []
    for i in range(1, sig.N + 1):
        row = fw.rows[i - 1]
        if sig.is_essential(i):
            mi = sig.m_at(i)
            vals = set(row[:mi])
            if len(vals) != 1 or any(x != 0 for x in row[mi:]):
                raise DatumError(f"row {i} is not constant-then-zero at the m_{i} cut")
            k.append(row[0])
        else:
            if any(x != 0 for x in row):
                raise DatumError(f"nonzero row at non-essential place {i}")
    return ParallelWeightX(tuple(k))


# ---------------------------------------------------------------------------
# JSON (de)serialization

def signature_to_json(sig: Signature) -> dict:
    return {"N": sig.N, "n": sig.n, "m": list(sig.m)}


def signature_from_json(doc) -> Signature:
    if not isinstance(doc, dict):
        raise DatumError("signature document must be a JSON object")
    try:
        return validate_signature(doc["N"], doc["n"], doc["m"])
    except KeyError as exc:
        raise DatumError(f"signature document missing key {exc.args[0]!r}") from exc


def weight_to_json(w: Weight) -> dict:
    if isinstance(w, FlagWeight):
        return {"kind": "flag", "rows": [[frac_str(x) for x in row] for row in w.rows]}
    if isinstance(w, ParallelWeightX):
        return {"kind": "parallelX", "k": [frac_str(x) for x in w.k]}
    if isinstance(w, MinimalFlagWeight):
        return {
            "kind": "minimal",
            "place": w.place,
            "rank": w.rank,
            "k": [frac_str(x) for x in w.k],
            "alpha": frac_str(w.alpha),
        }
    if isinstance(w, BlockWeight):
        return {
            "kind": "block",
            "blocks": [
                [[length, frac_str(value)] for length, value in place_blocks]
                for place_blocks in w.blocks
            ],
        }
    raise DatumError(f"unknown weight flavour: {type(w).__name__}")


def weight_from_json(doc) -> Weight:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DatumError("weight document must be a JSON object with a 'kind' key")
    kind = doc["kind"]
    try:
        if kind == "flag":
            return FlagWeight(tuple(tuple(frac(x) for x in row) for row in doc["rows"]))
        if kind == "parallelX":
            return ParallelWeightX(tuple(frac(x) for x in doc["k"]))
        if kind == "minimal":
            return MinimalFlagWeight(
                place=int(doc["place"]),
                rank=int(doc["rank"]),
                k=tuple(frac(x) for x in doc["k"]),
                alpha=frac(doc["alpha"]),
            )
        if kind == "block":
            return BlockWeight(
                tuple(
                    tuple((int(l), frac(v)) for l, v in place_blocks)
                    for place_blocks in doc["blocks"]
                )
            )
    except KeyError as exc:
        raise DatumError(f"weight document missing key {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise DatumError(f"malformed weight document: {exc}") from exc
    raise DatumError(f"unknown weight kind: {kind!r}")


def problem_to_json(p: int, sig: Signature, w: Weight) -> dict:
    doc = signature_to_json(sig)
    doc["p"] = p
    doc["weight"] = weight_to_json(w)
    return doc


def problem_from_json(doc):
    """Parse a full problem document ``{"p", "N", "n", "m", "weight"}``."""
    sig = signature_from_json(doc)
    try:
        p = check_prime(doc["p"])
        w = weight_from_json(doc["weight"])
    except KeyError as exc:
        raise DatumError(f"problem document missing key {exc.args[0]!r}") from exc
    expand_weight(sig, w)  # shape check against the signature
    return p, sig, w


def load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatumError(f"invalid JSON in {path}: {exc}") from exc
