"""Exact Picard-class bookkeeping on reductions of flag spaces.

Classes are sparse linear combinations of named generators:

* ``omega:i`` -- the distinguished subbundle determinant at place ``i``;
* ``sub:i:LABEL`` -- an auxiliary flag or divisor class at place ``i``
  (labels like ``F_2``, ``h_1``, ``E`` are free-form);
* ``H:i`` -- the full determinant at place ``i``;
* ``fiber:LABEL`` -- classes on a fibre (e.g. ``fiber:O1`` on a rational
  curve).

Coefficients are exact: :class:`fractions.Fraction` for numeric work, or
sympy expressions when weights stay symbolic.  Relations (always with
numeric coefficients, the prime being concrete) are eliminated exactly;
:func:`reduce_class` rewrites a class in a chosen basis and refuses to
guess when the relations do not determine the answer.

The second half packages the small amount of interval arithmetic needed to
split a boundary class between two sub-classes: :func:`feasible_t` returns
the exact range of mixing parameters for which both halves stay nef.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import sympy

from .datum import DatumError, Signature, check_prime, frac, frac_str


class PicardError(DatumError):
    pass


# ---------------------------------------------------------------------------
# generators

def gen_omega(i: int) -> str:
    return f"omega:{i}"


def gen_sub(i: int, label: str) -> str:
    return f"sub:{i}:{label}"


def gen_H(i: int) -> str:
    return f"H:{i}"


def gen_fiber(label: str) -> str:
    return f"fiber:{label}"


# ---------------------------------------------------------------------------
# coefficients (Fraction or sympy)

def coeff_is_zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    return sympy.cancel(sympy.expand(sympy.sympify(c))) == 0


def _coerce(c):
    if isinstance(c, bool):
        raise PicardError(f"not a coefficient: {c!r}")
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, float):
        raise PicardError("floating point coefficients are not accepted")
    if isinstance(c, str):
        return frac(c)
    return c  # Fraction or sympy expression


class ClassExpr:
    """Immutable sparse linear combination of generators."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable = ()):
        d: dict = {}
        items = terms.items() if isinstance(terms, dict) else terms
        for g, c in items:
            if not isinstance(g, str):
                raise PicardError(f"generator ids are strings, got {g!r}")
            c = _coerce(c)
            d[g] = d[g] + c if g in d else c
        object.__setattr__(self, "_terms", {g: c for g, c in d.items() if not coeff_is_zero(c)})

    def __setattr__(self, *args):
        raise AttributeError("ClassExpr is immutable")

    @classmethod
    def single(cls, gen: str, coef=1) -> "ClassExpr":
        return cls([(gen, coef)])

    @classmethod
    def zero(cls) -> "ClassExpr":
        return cls()

    def terms(self):
        return tuple(sorted(self._terms.items()))

    def generators(self):
        return tuple(sorted(self._terms))

    def coeff(self, gen: str):
        return self._terms.get(gen, Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __add__(self, other: "ClassExpr") -> "ClassExpr":
        return ClassExpr(list(self._terms.items()) + list(other._terms.items()))

    def __sub__(self, other: "ClassExpr") -> "ClassExpr":
        return self + other.scale(-1)

    def __neg__(self) -> "ClassExpr":
        return self.scale(-1)

    def scale(self, c) -> "ClassExpr":
        c = _coerce(c)
        if coeff_is_zero(c):
            return ClassExpr()
        return ClassExpr([(g, c * v) for g, v in self._terms.items()])

    def __repr__(self):
        if not self._terms:
            return "ClassExpr(0)"
        parts = [f"({c})*[{g}]" for g, c in self.terms()]
        return "ClassExpr(" + " + ".join(parts) + ")"

    def to_json(self) -> list:
        out = []
        for g, c in self.terms():
            if isinstance(c, Fraction):
                s = frac_str(c)
            else:
                cn = sympy.nsimplify(sympy.cancel(c), rational=True)
                if not isinstance(cn, sympy.Rational):
                    raise PicardError(f"cannot serialize symbolic coefficient on [{g}]")
                s = frac_str(Fraction(int(cn.p), int(cn.q)))
            out.append({"gen": g, "coef": s})
        return out

    @classmethod
    def from_json(cls, doc) -> "ClassExpr":
        if not isinstance(doc, list):
            raise PicardError("class document must be a JSON list of terms")
        terms = []
        for item in doc:
            try:
                terms.append((item["gen"], frac(item["coef"])))
            except (TypeError, KeyError) as exc:
                raise PicardError(f"malformed class term: {item!r}") from exc
        return cls(terms)


def exprs_equal(a: ClassExpr, b: ClassExpr) -> bool:
    return (a - b).is_zero()


# ---------------------------------------------------------------------------
# relations and exact elimination

def _substitute(e: ClassExpr, solved: dict) -> ClassExpr:
    terms = []
    for g, c in e.terms():
        if g in solved:
            terms.extend((g2, c * c2) for g2, c2 in solved[g].terms())
        else:
            terms.append((g, c))
    return ClassExpr(terms)


def _eliminate(relations: Sequence[ClassExpr], basis: frozenset) -> dict:
    """Exact Gaussian elimination; returns pivot -> expression-in-the-rest.

    Pivots are chosen among non-basis generators (smallest id first); a
    relation that reduces to a dependence among basis generators alone is an
    inconsistency and raises.
    """
    solved: dict = {}
    for rel in relations:
        row = _substitute(rel, solved)
        if row.is_zero():
            continue
        candidates = [g for g in row.generators() if g not in basis]
        if not candidates:
            raise PicardError(
                "inconsistent relations: the requested basis classes are not independent"
            )
        piv = min(candidates)
        pc = row.coeff(piv)
        sol = (row - ClassExpr.single(piv, pc)).scale(Fraction(-1) / pc if isinstance(pc, Fraction) else -1 / pc)
        for g in list(solved):
            v = solved[g]
            cv = v.coeff(piv)
            if not coeff_is_zero(cv):
                solved[g] = v - ClassExpr.single(piv, cv) + sol.scale(cv)
        solved[piv] = sol
    return solved


def reduce_class(x: ClassExpr, relations: Sequence[ClassExpr], basis: Sequence[str]) -> ClassExpr:
    """Rewrite ``x`` in terms of ``basis`` modulo the relations.

    Raises when the relations do not pin ``x`` down to the basis ("not in
    span") or force a dependence among the basis classes themselves.
    """
    basis_set = frozenset(basis)
    solved = _eliminate(relations, basis_set)
    y = _substitute(x, solved)
    leftover = [g for g in y.generators() if g not in basis_set]
    if leftover:
        raise PicardError(f"not in span of the basis: residual generator(s) {leftover}")
    return y


def verify_identity(lhs: ClassExpr, rhs: ClassExpr, relations: Sequence[ClassExpr]) -> bool:
    """Whether ``lhs = rhs`` holds modulo the relations (exactly)."""
    solved = _eliminate(relations, frozenset())
    return _substitute(lhs - rhs, solved).is_zero()


# ---------------------------------------------------------------------------
# pullback along essential Verschiebung, and descent-chain relations

def vpullback_class(sig: Signature, p: int, expr: ClassExpr, target_place: int) -> ClassExpr:
    """Class of the twisted pullback of a subbundle of the distinguished
    bundle at ``target_place``: multiply by ``p`` and, when the target place
    is essential, subtract ``p`` times its ``omega``; at an extreme place the
    pullback map has no kernel correction.
    """
    check_prime(p)
    i = sig.place(target_place)
    out = expr.scale(p)
    if sig.is_essential(i):
        out = out - ClassExpr.single(gen_omega(i), p)
    return out


def _flag_gen(sig: Signature, i: int, j: int) -> Optional[str]:
    if j == 0:
        return None
    if j == sig.n:
        return gen_H(i)
    return gen_sub(i, f"F_{j}")


def chain_relations(sig: Signature, p: int, conditions) -> list[ClassExpr]:
    """Relations from a descent chain of flag bundles.

    Each condition ``((i, j), (i2, j2))`` asserts that the rank-``j`` flag
    bundle at place ``i`` is the twisted-pullback of the rank-``j2`` one at
    place ``i2``; well-typedness requires ``i2 = i + 1`` cyclically and
    ``j = j2 + n~_{i2}``.  Anchors ``[F_{m_i}] = [omega_i]`` are added for
    every essential place that appears.
    """
    check_prime(p)
    rels = []
    involved = set()
    for cond in conditions:
        try:
            (i, j), (i2, j2) = cond
        except (TypeError, ValueError) as exc:
            raise PicardError(f"malformed condition {cond!r}") from exc
        i, i2 = sig.place(i), sig.place(i2)
        if not (1 <= j <= sig.n) or not (0 <= j2 <= sig.n):
            raise PicardError(f"flag rank out of range in condition {cond!r}")
        if i2 != sig.place(i + 1) or j != j2 + sig.n_tilde(i2):
            raise PicardError(
                f"ill-typed condition (({i},{j}),({i2},{j2})): "
                f"expected i2 = i+1 cyclically and j = j2 + n~_i2 = {j2 + sig.n_tilde(i2)}"
            )
        involved.update([i, i2])
        lhs = ClassExpr.single(_flag_gen(sig, i, j))
        tgt = _flag_gen(sig, i2, j2)
        rhs = ClassExpr.single(tgt) if tgt is not None else ClassExpr.zero()
        rels.append(lhs - vpullback_class(sig, p, rhs, i2))
    for i in sorted(involved):
        if sig.is_essential(i):
            rels.append(
                ClassExpr.single(gen_sub(i, f"F_{sig.m_at(i)}")) - ClassExpr.single(gen_omega(i))
            )
    return rels


# ---------------------------------------------------------------------------
# named divisor classes

def hasse_class(kind: str, **params) -> ClassExpr:
    """Divisor classes of the recurring partial Hasse invariants.

    Kinds:

    * ``"Zj"`` (params ``p, N, j, rank, place=1``): vanishing locus of the
      ``j``-th descent invariant against the rank-``rank`` flag piece:
      ``(p^{jN}-1)[omega] - (p^{jN}-p^{(j-1)N})[F_rank]``.
    * ``"tower"`` (params ``p, N, ranks=(a,b,c), place=1``): the tower-level
      invariant ``p^N [F_a] - (p^N+1)[F_b] + [F_c]``; a zero rank means the
      zero class.
    * ``"schubert"`` (params ``p, gap, source, target``): boundary of a
      cross-place Schubert divisor,
      ``p^gap [omega_target] - [omega_source] + [F] + [E]`` with the two
      correction classes at the source place.
    * ``"combined"`` (params ``p, N, s``): the weighted sum of the tower
      invariants ``h_1..h_{s-1}``, coefficient
      ``(1 + p^N + ... + p^{uN}) / p^{uN}`` on ``h_{s-1-u}``.
    """
    try:
        if kind == "Zj":
            p, N, j, rank = params["p"], params["N"], params["j"], params["rank"]
            place = params.get("place", 1)
            check_prime(p)
            q = Fraction(p) ** N
            return ClassExpr(
                [
                    (gen_omega(place), q**j - 1),
                    (gen_sub(place, f"F_{rank}"), -(q**j - q ** (j - 1))),
                ]
            )
        if kind == "tower":
            p, N, ranks = params["p"], params["N"], params["ranks"]
            place = params.get("place", 1)
            check_prime(p)
            a, b, c = ranks
            q = Fraction(p) ** N
            terms = []
            for rank, coef in ((a, q), (b, -(q + 1)), (c, Fraction(1))):
                if rank != 0:
                    terms.append((gen_sub(place, f"F_{rank}"), coef))
            return ClassExpr(terms)
        if kind == "schubert":
            p, gap, source, target = (
                params["p"],
                params["gap"],
                params["source"],
                params["target"],
            )
            check_prime(p)
            return ClassExpr(
                [
                    (gen_omega(target), Fraction(p) ** gap),
                    (gen_omega(source), Fraction(-1)),
                    (gen_sub(source, "F"), Fraction(1)),
                    (gen_sub(source, "E"), Fraction(1)),
                ]
            )
        if kind == "combined":
            p, N, s = params["p"], params["N"], params["s"]
            check_prime(p)
            if s < 2:
                raise PicardError("combined invariant needs tower height s >= 2")
            q = Fraction(p) ** N
            terms = []
            for u in range(s - 1):
                coef = sum(q**v for v in range(u + 1)) / q**u
                terms.append((gen_sub(1, f"h_{s - 1 - u}"), coef))
            return ClassExpr(terms)
    except KeyError as exc:
        raise PicardError(f"hasse_class({kind!r}) missing parameter {exc.args[0]!r}") from exc
    raise PicardError(f"unknown invariant kind: {kind!r}")


# ---------------------------------------------------------------------------
# nef-interval for splitting a boundary class

def _solve_unit_interval(pairs) -> Optional[tuple[Fraction, Fraction]]:
    """Intersect ``{t in [0,1] : a*t >= b for all (a, b)}`` exactly."""
    lo, hi = Fraction(0), Fraction(1)
    for a, b in pairs:
        if a > 0:
            lo = max(lo, b / a)
        elif a < 0:
            hi = min(hi, b / a)
        elif b > 0:
            return None
    return (lo, hi) if lo <= hi else None


def feasible_t(
    p: int,
    N: int,
    a1: int,
    s: int,
    k1,
    k2,
    alpha,
    variant: str = "case1",
    *,
    n: Optional[int] = None,
    m: Optional[int] = None,
    delta: Optional[int] = None,
    offset: Optional[int] = None,
) -> Optional[tuple[Fraction, Fraction]]:
    """Exact range of mixing parameters ``t`` keeping both halves of a split nef.

    A boundary class is written as ``t``-fraction plus ``(1-t)``-fraction of
    two auxiliary classes; each half contributes one linear inequality in
    ``t``.  The split coefficients are ``A = p^{(s-1)N}(p^N-1)/(p^{sN}-1)``
    and ``B = 1 - A``, with ``s`` the tower height.

    Variants:

    * ``"case1"``: generic cross-place inequality against the next entry
      ``k2``, gap ``a1``.
    * ``"case2"``: single essential place; ``k2`` is replaced by ``k1`` and
      the gap by the full cycle length ``N``.
    * ``"case3"`` / ``"case3prime"``: single essential place of extreme rank
      ``n-1`` resp. ``1``; needs ``n``, the refined rank ``m`` and the layer
      increment ``delta``, and the inequalities pick up geometric weights.

    By default the inequalities bound ``(k1 - alpha)``-multiples (refinement
    at the essential place).  With ``offset=d`` the bounded factor becomes
    ``alpha / p^d`` instead (refinement at a non-essential place at cyclic
    distance ``d`` past the essential one).

    Returns the interval ``(lo, hi)`` within ``[0, 1]``, or None when empty.
    """
    check_prime(p)
    if N < 1 or a1 < 1 or s < 2:
        raise PicardError("need N >= 1, a1 >= 1 and tower height s >= 2")
    k1, k2, alpha = frac(k1), frac(k2), frac(alpha)
    q = Fraction(p) ** N
    A = q ** (s - 1) * (q - 1) / (q**s - 1)
    B = (q ** (s - 1) - 1) / (q**s - 1)
    factor = (k1 - alpha) if offset is None else alpha / Fraction(p) ** offset

    if variant == "case2":
        k2, a1 = k1, N
        variant = "case1"

    if variant == "case1":
        D = Fraction(p) ** a1 * k1 - k2
        scale = Fraction(p) ** a1
        pairs = [(D, scale * A * factor), (-D, scale * B * factor - D)]
        return _solve_unit_interval(pairs)

    if variant in ("case3", "case3prime"):
        if n is None or m is None or delta is None:
            raise PicardError(f"variant {variant!r} needs n, m and delta")
        ms = m + (s - 1) * delta
        m0 = m - delta
        if variant == "case3":
            eI_hi, eI_lo = n - ms, n - ms - 1
            eII_hi, eII_lo = n - m0, n - m0 - 1
        else:
            eI_hi, eI_lo = ms, ms - 1
            eII_hi, eII_lo = m0, m0 - 1
        if min(eI_lo, eII_lo) < 0:
            raise PicardError(
                f"tower ranks leave the admissible range (exponents {eI_lo}, {eII_lo})"
            )
        cI = q**eI_hi - q**eI_lo
        dI = q**eI_hi - 1
        cII = q**eII_hi - q**eII_lo
        dII = q**eII_hi - 1
        pairs = [
            (cI * k1, dI * A * factor),
            (-cII * k1, dII * B * factor - cII * k1),
        ]
        return _solve_unit_interval(pairs)

    raise PicardError(f"unknown feasible_t variant: {variant!r}")
