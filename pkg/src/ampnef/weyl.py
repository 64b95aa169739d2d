"""Symmetric-group combinatorics for the stratification of the special fibre.

The group acting here is a product of ``N`` copies of ``S_n``, one per place
(the conjugate embeddings carry no extra information and are dropped; the
similitude factor contributes no reflections).  Strata are indexed by tuples
of minimal-length coset representatives for the block parabolic attached to
the signature (blocks ``(m_i, n - m_i)`` per place, collapsing to a single
block when ``m_i`` is extreme), ordered by either the componentwise Bruhat
order or the twisted order

    ``w' preceq w  iff  exists y in W_I with  y . w' . psi(y)^{-1} <= w``

componentwise, where ``psi`` rotates the place index: ``psi(y)_i = y_{i-1}``
for the default ``shift=1``.  The displayed relation in the source material
omits the inverse on ``psi(y)``; in the identity-frame model used here that
variant fails transitivity (first visible at ``N=3, n=4``), while the form
above passes reflexivity, antisymmetry, transitivity and length-monotonicity
in every enumerated case, so the inverse form is the one implemented.

Bruhat comparison of single permutations uses the rank-matrix criterion;
``bruhat_leq_subword`` is an independent recursive-descent oracle kept for
cross-checking at small rank.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, factorial

from .datum import DatumError, Signature
from .zipmodp import Mat, ZipPoint

__all__ = [
    "WeylError",
    "Perm",
    "perm_id",
    "perm_mul",
    "perm_inv",
    "inversions",
    "check_perm",
    "all_perms",
    "bruhat_leq_perm",
    "bruhat_leq_subword",
    "hodge_composition",
    "parabolic_perms",
    "parabolic_order",
    "is_min_rep",
    "min_rep_perms",
    "WeylElement",
    "weyl_identity",
    "bruhat_leq",
    "min_reps",
    "eo_dimension",
    "eo_space_dimension",
    "psi_shift",
    "twisted_preceq",
    "strata_poset",
    "standard_shape",
]


class WeylError(DatumError):
    """Ill-formed permutation data, non-minimal representatives, or a search
    space past the hard enumeration bound."""


Perm = tuple[int, ...]
"""One-line notation: ``w[j-1] = w(j)`` with entries a bijection of 1..n."""


def check_perm(w, n: int | None = None) -> Perm:
    """Validate (and normalize to a tuple) one-line permutation data."""
    t = tuple(int(v) for v in w)
    if n is not None and len(t) != n:
        raise WeylError(f"permutation has {len(t)} entries, expected {n}")
    if sorted(t) != list(range(1, len(t) + 1)):
        raise WeylError(f"not a permutation of 1..{len(t)}: {t}")
    return t


def perm_id(n: int) -> Perm:
    return tuple(range(1, n + 1))


def perm_mul(u: Perm, v: Perm) -> Perm:
    """Composition ``(u v)(j) = u(v(j))``."""
    if len(u) != len(v):
        raise WeylError("cannot compose permutations of different rank")
    return tuple(u[v[j] - 1] for j in range(len(u)))


def perm_inv(w: Perm) -> Perm:
    out = [0] * len(w)
    for j, v in enumerate(w):
        out[v - 1] = j + 1
    return tuple(out)


def inversions(w: Perm) -> int:
    """Coxeter length of a single permutation."""
    n = len(w)
    return sum(1 for a in range(n) for b in range(a + 1, n) if w[a] > w[b])


def all_perms(n: int):
    """All of ``S_n`` in lexicographic one-line order."""
    return itertools.permutations(range(1, n + 1))


def _rank_table(w: Perm) -> list[list[int]]:
    # r[i][j] = #{a <= i : w(a) <= j}, 1-based corners trimmed off
    n = len(w)
    r = [[0] * (n + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            r[i][j] = r[i - 1][j] + (1 if w[i - 1] <= j else 0)
    return r


def bruhat_leq_perm(u: Perm, v: Perm) -> bool:
    """``u <= v`` in the Bruhat order of ``S_n`` (rank-matrix criterion)."""
    if len(u) != len(v):
        raise WeylError("cannot compare permutations of different rank")
    ru, rv = _rank_table(u), _rank_table(v)
    n = len(u)
    return all(ru[i][j] >= rv[i][j] for i in range(1, n + 1) for j in range(1, n + 1))


def _simple(n: int, a: int) -> Perm:
    w = list(range(1, n + 1))
    w[a - 1], w[a] = w[a], w[a - 1]
    return tuple(w)


def bruhat_leq_subword(u: Perm, v: Perm) -> bool:
    """Independent Bruhat oracle by descent recursion; exponential, keep to
    small ``n``."""
    if u == v:
        return True
    lu, lv = inversions(u), inversions(v)
    if lu >= lv:
        return False
    n = len(v)
    for a in range(1, n):
        s = _simple(n, a)
        sv = perm_mul(s, v)
        if inversions(sv) < lv:
            su = perm_mul(s, u)
            if inversions(su) < lu:
                return bruhat_leq_subword(su, sv)
            return bruhat_leq_subword(u, sv)
    return False


# ---------------------------------------------------------------------------
# parabolic types and minimal representatives


def hodge_composition(n: int, m: int) -> tuple[int, ...]:
    """Block sizes of the parabolic at a place of rank ``m``: ``(m, n-m)``,
    or the full group when the filtration step is trivial."""
    if not 0 <= m <= n:
        raise WeylError(f"rank {m} out of range 0..{n}")
    if m == 0 or m == n:
        return (n,)
    return (m, n - m)


def _block_ranges(n: int, comp: tuple[int, ...]) -> list[range]:
    if sum(comp) != n or any(b <= 0 for b in comp):
        raise WeylError(f"not a composition of {n}: {comp}")
    out, start = [], 1
    for b in comp:
        out.append(range(start, start + b))
        start += b
    return out


def parabolic_order(n: int, comp: tuple[int, ...]) -> int:
    """``|W_I|`` for the block parabolic of the given composition."""
    _block_ranges(n, comp)
    out = 1
    for b in comp:
        out *= factorial(b)
    return out


def parabolic_perms(n: int, comp: tuple[int, ...]) -> tuple[Perm, ...]:
    """All elements of the block parabolic ``W_I`` (permuting within blocks)."""
    ranges = _block_ranges(n, comp)
    parts = [list(itertools.permutations(r)) for r in ranges]
    out = []
    for combo in itertools.product(*parts):
        w = [0] * n
        for rng, part in zip(ranges, combo):
            for pos, val in zip(rng, part):
                w[pos - 1] = val
        out.append(tuple(w))
    return tuple(out)


def is_min_rep(w: Perm, comp: tuple[int, ...]) -> bool:
    """Minimal length in ``W_I w``: ``w^{-1}`` increasing on each block."""
    wi = perm_inv(w)
    for rng in _block_ranges(len(w), comp):
        vals = [wi[a - 1] for a in rng]
        if any(vals[s] > vals[s + 1] for s in range(len(vals) - 1)):
            return False
    return True


def min_rep_perms(n: int, comp: tuple[int, ...]) -> tuple[Perm, ...]:
    """The coset representatives of minimal length, lex-sorted."""
    return tuple(w for w in all_perms(n) if is_min_rep(w, comp))


# ---------------------------------------------------------------------------
# product-group elements


@dataclass(frozen=True)
class WeylElement:
    """One permutation per place."""

    perms: tuple[Perm, ...]

    def __post_init__(self):
        if not self.perms:
            raise WeylError("no places: need at least one permutation")
        n = len(self.perms[0])
        object.__setattr__(
            self, "perms", tuple(check_perm(w, n) for w in self.perms)
        )

    @property
    def places(self) -> int:
        return len(self.perms)

    @property
    def rank(self) -> int:
        return len(self.perms[0])

    @property
    def length(self) -> int:
        return sum(inversions(w) for w in self.perms)

    def to_json(self) -> dict:
        return {"perms": [list(w) for w in self.perms], "length": self.length}


def weyl_identity(N: int, n: int) -> WeylElement:
    return WeylElement(tuple(perm_id(n) for _ in range(N)))


def _check_shapes(sig: Signature, w: WeylElement, role: str) -> None:
    if w.places != sig.N or w.rank != sig.n:
        raise WeylError(
            f"{role} has shape ({w.places} places, rank {w.rank}), "
            f"signature needs ({sig.N}, {sig.n})"
        )


def bruhat_leq(u: WeylElement, v: WeylElement) -> bool:
    """Componentwise (product) Bruhat order."""
    if u.places != v.places or u.rank != v.rank:
        raise WeylError("cannot compare elements of different shape")
    return all(bruhat_leq_perm(a, b) for a, b in zip(u.perms, v.perms))


_ENUM_BOUND = 100_000


def min_reps(sig: Signature, max_count: int = _ENUM_BOUND) -> tuple[WeylElement, ...]:
    """All stratum labels for the signature: per place, minimal representatives
    of the Hodge parabolic.  Sorted by (total length, one-line tuples)."""
    total = 1
    for i in range(1, sig.N + 1):
        total *= comb(sig.n, sig.m_at(i))
    if total > max_count:
        raise WeylError(
            f"stratum enumeration too large: {total} elements exceeds the "
            f"bound {max_count}"
        )
    per_place = [
        min_rep_perms(sig.n, hodge_composition(sig.n, sig.m_at(i)))
        for i in range(1, sig.N + 1)
    ]
    out = [WeylElement(c) for c in itertools.product(*per_place)]
    out.sort(key=lambda w: (w.length, w.perms))
    return tuple(out)


def eo_dimension(sig: Signature, w: WeylElement) -> int:
    """Dimension of the stratum labelled by ``w``: its length.  Rejects
    labels that are not minimal in their coset."""
    _check_shapes(sig, w, "element")
    for i in range(1, sig.N + 1):
        comp = hodge_composition(sig.n, sig.m_at(i))
        if not is_min_rep(w.perms[i - 1], comp):
            raise WeylError(
                f"not a minimal coset representative at place {i}: "
                f"{w.perms[i - 1]}"
            )
    return w.length


def eo_space_dimension(sig: Signature) -> int:
    """Dimension of the ambient space: the maximal stratum length
    ``sum_i m_i (n - m_i)``."""
    return sum(sig.m_at(i) * (sig.n - sig.m_at(i)) for i in range(1, sig.N + 1))


# ---------------------------------------------------------------------------
# twisted order


def psi_shift(perms: tuple[Perm, ...], shift: int = 1) -> tuple[Perm, ...]:
    """The place-rotation twist: component ``i`` of the output is component
    ``i - shift`` (cyclically) of the input."""
    N = len(perms)
    return tuple(perms[(i - shift) % N] for i in range(N))


def _parabolic_product(sig: Signature, limit: int):
    sizes = 1
    comps = []
    for i in range(1, sig.N + 1):
        comp = hodge_composition(sig.n, sig.m_at(i))
        comps.append(comp)
        sizes *= parabolic_order(sig.n, comp)
    if sizes > limit:
        raise WeylError(
            f"twisted-order search space too large: |W_I| = {sizes} exceeds "
            f"the bound {limit}"
        )
    return itertools.product(*[parabolic_perms(sig.n, c) for c in comps])


def twisted_preceq(
    sig: Signature,
    w_small: WeylElement,
    w_big: WeylElement,
    shift: int = 1,
    search_limit: int = _ENUM_BOUND,
) -> bool:
    """Closure order on stratum labels: ``w_small preceq w_big`` iff some
    ``y`` in the parabolic satisfies ``y . w_small . psi(y)^{-1} <= w_big``
    componentwise.  Both arguments must be minimal representatives."""
    eo_dimension(sig, w_small)
    eo_dimension(sig, w_big)
    for y in _parabolic_product(sig, search_limit):
        twisted = psi_shift(y, shift)
        if all(
            bruhat_leq_perm(
                perm_mul(perm_mul(y[i], w_small.perms[i]), perm_inv(twisted[i])),
                w_big.perms[i],
            )
            for i in range(sig.N)
        ):
            return True
    return False


def strata_poset(
    sig: Signature,
    order: str = "twisted",
    shift: int = 1,
    max_count: int = 4096,
) -> dict:
    """Nodes (all stratum labels with dimensions) and covering-relation edges
    under the requested order ("twisted" or "bruhat")."""
    if order not in ("twisted", "bruhat"):
        raise WeylError(f"unknown order {order!r}: use 'twisted' or 'bruhat'")
    reps = min_reps(sig, max_count=max_count)
    if order == "twisted":
        leq = lambda a, b: twisted_preceq(sig, a, b, shift=shift)
    else:
        leq = lambda a, b: bruhat_leq(a, b)
    k = len(reps)
    rel = [[leq(reps[a], reps[b]) for b in range(k)] for a in range(k)]
    edges = []
    for a in range(k):
        for b in range(k):
            if a == b or not rel[a][b]:
                continue
            # covering: nothing strictly between
            if any(
                rel[a][c] and rel[c][b] and c != a and c != b for c in range(k)
            ):
                continue
            edges.append([a, b])
    return {
        "order": order,
        "nodes": [w.to_json() for w in reps],
        "edges": edges,
        "spaceDimension": eo_space_dimension(sig),
    }


# ---------------------------------------------------------------------------
# standard points in coordinates


def standard_shape(sig: Signature, p: int, w: WeylElement) -> ZipPoint:
    """The split-coordinate point of shape ``w``: out of place ``i`` the
    forward map sends ``e_j`` to ``e_{w^{-1}(j)}`` for ``j`` up to the rank at
    place ``i+1`` (and kills the rest), while the backward map sends ``e_l``
    to ``e_{w(l)}`` exactly when that lands above the rank.  Here ``w`` is
    the permutation attached to the target place."""
    eo_dimension(sig, w)
    n = sig.n
    Vs: list[Mat] = []
    Fs: list[Mat] = []
    for i in range(1, sig.N + 1):
        wp = w.perms[sig.place(i + 1) - 1]
        wi = perm_inv(wp)
        m = sig.m_at(i + 1)
        V = [[0] * n for _ in range(n)]
        F = [[0] * n for _ in range(n)]
        for j in range(1, n + 1):
            if j <= m:
                V[wi[j - 1] - 1][j - 1] = 1
            if wp[j - 1] > m:
                F[wp[j - 1] - 1][j - 1] = 1
        Vs.append(V)
        Fs.append(F)
    return ZipPoint(sig=sig, p=p, V=tuple(Vs), F=tuple(Fs))
