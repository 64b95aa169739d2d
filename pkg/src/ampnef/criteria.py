"""Ampleness and nefness criteria as explicit families of rational inequalities.

Every check produces the same shape of answer: a :class:`Verdict` listing the
constraints that failed.  A constraint is a named pair ``(lhs, rhs)`` with the
convention ``lhs > rhs`` for ampleness and ``lhs >= rhs`` for nefness, so the
boundary of the ample cone is visible as nef-passing weights whose only ample
failures are exact ties.

The inequality families split by the number ``t`` of essential places:

* ``case1`` (``t = 0``): the variety is a product of flag varieties; only the
  within-block dominance chains appear.
* ``case2`` / ``case2prime`` (``t = 1`` with the essential rank ``n-1``
  resp. ``1``): one extra inequality mixing all places, with a geometric-sum
  coefficient on the left.  The published closed form with a single power
  ``p^{(n-2)N}`` is *not* equivalent for non-parallel weights; the
  geometric-sum ("lemma") form is the one consistent with the step-by-step
  descent, and is the default here.  Pass ``case2_form="theorem"`` to get the
  other reading.
* ``case3`` (everything else): one cross-place inequality per essential place.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from .datum import (
    DatumError,
    DegenerateError,
    FlagWeight,
    MinimalFlagWeight,
    ParallelWeightX,
    Signature,
    Weight,
    check_prime,
    expand_weight,
    frac_str,
)

Mode = Literal["ample", "nef"]
Case2Form = Literal["lemma", "theorem"]


class CaseTag(str, enum.Enum):
    CASE1 = "case1"
    CASE2 = "case2"
    CASE2PRIME = "case2prime"
    CASE3 = "case3"


@dataclass(frozen=True)
class Constraint:
    """One named inequality: ample wants ``lhs > rhs``, nef wants ``lhs >= rhs``."""

    name: str
    lhs: Fraction
    rhs: Fraction

    def holds(self, mode: Mode) -> bool:
        return self.lhs > self.rhs if mode == "ample" else self.lhs >= self.rhs

    @property
    def tight(self) -> bool:
        return self.lhs == self.rhs

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": frac_str(self.lhs), "rhs": frac_str(self.rhs)}


@dataclass(frozen=True)
class Verdict:
    satisfied: bool
    mode: Mode
    failures: tuple[Constraint, ...]

    def to_json(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "mode": self.mode,
            "failures": [c.to_json() for c in self.failures],
        }


def _verdict(constraints, mode: Mode) -> Verdict:
    if mode not in ("ample", "nef"):
        raise DatumError(f"mode must be 'ample' or 'nef', got {mode!r}")
    failures = tuple(c for c in constraints if not c.holds(mode))
    return Verdict(satisfied=not failures, mode=mode, failures=failures)


def classify_case(sig: Signature) -> CaseTag:
    """Which inequality family applies to this signature."""
    t = sig.t
    if t == 0:
        return CaseTag.CASE1
    if t == 1:
        m0 = sig.m_at(sig.essential[0])
        if m0 == sig.n - 1:
            return CaseTag.CASE2
        if m0 == 1:
            return CaseTag.CASE2PRIME
    return CaseTag.CASE3


def _weighted_column_sum(p, w: FlagWeight, start: int, length: int, ja: int, jb: int):
    """``sum_{u=0}^{length-1} p^{-u} (k^{start+u}_{ja} - k^{start+u}_{jb})``."""
    total = Fraction(0)
    pw = Fraction(1)
    for u in range(length):
        total += pw * (w.entry(start + u, ja) - w.entry(start + u, jb))
        pw /= p
    return total


def constraint_rows(
    p: int, sig: Signature, w: FlagWeight, case2_form: Case2Form = "lemma"
) -> list[Constraint]:
    """The full constraint list for a full-flag weight.

    Lines 1-2 of every case are the within-block dominance chains: ascending
    in the graded index inside ``[1..m_i]`` and inside ``[m_i+1..n]`` at each
    essential place, and over all of ``[1..n]`` at a non-essential place.
    The case-specific third line mixes places as documented on the module.
    """
    check_prime(p)
    if case2_form not in ("lemma", "theorem"):
        raise DatumError(f"case2_form must be 'lemma' or 'theorem', got {case2_form!r}")
    if (w.N, w.n) != (sig.N, sig.n):
        raise DatumError("weight shape does not match signature")
    n = sig.n
    rows: list[Constraint] = []

    for i in range(1, sig.N + 1):
        if sig.is_essential(i):
            blocks = [(1, sig.m_at(i)), (sig.m_at(i) + 1, n)]
        else:
            blocks = [(1, n)]
        for lo, hi in blocks:
            for j in range(lo, hi):
                rows.append(Constraint(f"block({i}).{j}", w.entry(i, j + 1), w.entry(i, j)))

    case = classify_case(sig)
    if case is CaseTag.CASE1:
        return rows

    if case in (CaseTag.CASE2, CaseTag.CASE2PRIME):
        i0 = sig.essential[0]
        N = sig.N
        qN = Fraction(p) ** N
        coef = (
            sum(qN**u for u in range(n - 1))
            if case2_form == "lemma"
            else qN ** (n - 2)
        )
        s_full = _weighted_column_sum(p, w, i0, N, 1, n)
        if case is CaseTag.CASE2:
            rhs = sum(
                (qN ** (r - 2)) * _weighted_column_sum(p, w, i0, N, r, n)
                for r in range(2, n)
            )
            rows.append(Constraint("case2.line3", coef * s_full, Fraction(rhs)))
        else:
            rhs = sum(
                (qN ** (n - 1 - r)) * _weighted_column_sum(p, w, i0, N, 1, r)
                for r in range(2, n)
            )
            rows.append(Constraint("case2p.line3", coef * s_full, Fraction(rhs)))
        return rows

    for il in sig.essential:
        a = sig.gap(il)
        inext = sig.place(il + a)
        lhs = (Fraction(p) ** a) * _weighted_column_sum(p, w, il, a, 1, n)
        rhs = w.entry(inext, sig.m_at(inext)) - w.entry(inext, sig.m_at(inext) + 1)
        rows.append(Constraint(f"cross({il}->{inext})", lhs, rhs))
    return rows


def check_flag(
    p: int,
    sig: Signature,
    w: Weight,
    mode: Mode = "ample",
    case2_form: Case2Form = "lemma",
) -> Verdict:
    """Decide ampleness/nefness of a full-flag weight (any flavour is expanded)."""
    fw = expand_weight(sig, w)
    return _verdict(constraint_rows(p, sig, fw, case2_form), mode)


def check_X(p: int, sig: Signature, w: ParallelWeightX, mode: Mode = "ample") -> Verdict:
    """Decide ampleness/nefness on the coarsest flag space, in native coordinates.

    One inequality per essential place: ``p^{a(i)} k_i`` against the entry at
    the next essential place.  This is the only checker for which the ample
    (strict) mode is meaningful on partial-flag weights; expanding to the full
    flag introduces constant blocks that always fail strict dominance.
    """
    check_prime(p)
    if not isinstance(w, ParallelWeightX):
        raise DatumError("check_X expects a ParallelWeightX")
    if sig.t == 0:
        raise DegenerateError(
            "no essential places: the coarsest flag space is a point"
        )
    if len(w.k) != sig.t:
        raise DatumError(
            f"parallel weight needs one entry per essential place: "
            f"got {len(w.k)}, expected t={sig.t}"
        )
    T = sig.essential
    rows = []
    for l, il in enumerate(T):
        a = sig.gap(il)
        inext = sig.place(il + a)
        knext = w.k[T.index(inext)]
        rows.append(
            Constraint(f"cross({il}->{inext})", (Fraction(p) ** a) * w.k[l], knext)
        )
    return _verdict(rows, mode)


def check_partial_nef(
    p: int, sig: Signature, w: Weight, case2_form: Case2Form = "lemma"
) -> Verdict:
    """Nefness of a partial-flag weight, via expansion to the full flag.

    Only the weak inequalities are meaningful after expansion (the pulled-back
    bundle is never ample on a positive-dimensional fibre), hence nef-only.
    """
    fw = expand_weight(sig, w)
    return _verdict(constraint_rows(p, sig, fw, case2_form), "nef")


# ---------------------------------------------------------------------------
# closed-form crosscheck for one-step refinements

#: crosscheck families with a published closed form; the complementary
#: ("dual") families are derived by the same descent and carry distinct tags.
LISTED_CROSSCHECK_CASES = frozenset(
    {
        "step4.case1",
        "step4.case2",
        "step2.case2",
        "step5.case1",
        "step5.case2",
        "step5.case3",
    }
)


def crosscheck_case(sig: Signature, w: MinimalFlagWeight) -> str:
    """Which closed-form family covers this one-step refinement weight."""
    if len(w.k) != sig.t:
        raise DatumError(
            f"minimal flag weight needs one parallel entry per essential place: "
            f"got {len(w.k)}, expected t={sig.t}"
        )
    i = sig.place(w.place)
    j = w.rank
    if not 1 <= j <= sig.n - 1:
        raise DatumError(f"extra flag rank out of range: {j} not in [1, {sig.n - 1}]")
    t = sig.t
    if t == 0:
        return "flagvariety"
    if sig.is_essential(i):
        mi = sig.m_at(i)
        if j == mi:
            raise DatumError(
                "extra flag rank equals m at an essential place; "
                "the weight is parallel -- use ParallelWeightX"
            )
        if t >= 2:
            return "step4.case1" if j < mi else "step4.case1dual"
        if mi == sig.n - 1:
            return "step2.case2"
        if mi == 1:
            return "step2.case2dual"
        return "step4.case2" if j < mi else "step4.case2dual"
    # extra flag at a non-essential place
    if t >= 2:
        return "step5.case1"
    m1 = sig.m_at(sig.essential[0])
    if m1 == sig.n - 1:
        return "step5.case3"
    if m1 == 1:
        return "step5.case3dual"
    return "step5.case2"


def _csv_rows(p, sig: Signature, k, skip=None):
    """Cross-place rows ``p^{a(i_l)} k_l >= k_{l+1}`` over the essential places."""
    T = sig.essential
    rows = []
    for l, il in enumerate(T):
        if skip is not None and il == skip:
            continue
        inext = sig.next_essential(il)
        rows.append(
            Constraint(
                f"cross({il}->{inext})",
                (Fraction(p) ** sig.gap(il)) * k[l],
                k[T.index(inext)],
            )
        )
    return rows


def crosscheck_constraints(p: int, sig: Signature, w: MinimalFlagWeight) -> list[Constraint]:
    """Closed-form nefness constraints for a one-step refinement weight.

    Derived by pushing the weight down the descent tower; equivalent to
    ``check_partial_nef`` with the default (geometric-sum) case-2 form, which
    is what the crosscheck tests pin down.
    """
    check_prime(p)
    case = crosscheck_case(sig, w)
    i = sig.place(w.place)
    j = w.rank
    alpha = w.alpha
    n, N = sig.n, sig.N
    T = sig.essential
    k = list(w.k)
    P = Fraction(p)
    qN = P**N

    if case == "flagvariety":
        return [Constraint("flagvariety.alpha", alpha, Fraction(0))]

    if case == "step4.case1":
        li = T.index(i)
        head = [Constraint("step4.ktop", k[li], alpha)]
        rows = _csv_rows(p, sig, k, skip=i)
        inext = sig.next_essential(i)
        head.append(
            Constraint(
                f"cross({i}->{inext})",
                (P ** sig.gap(i)) * alpha,
                k[T.index(inext)],
            )
        )
        return head + rows

    if case == "step4.case1dual":
        head = [Constraint("step4.alphanonpos", Fraction(0), alpha)]
        rows = []
        for l, il in enumerate(T):
            inext = sig.next_essential(il)
            lhs = (P ** sig.gap(il)) * k[l]
            rhs = k[T.index(inext)]
            if inext == i:
                rhs = rhs - alpha
            rows.append(Constraint(f"cross({il}->{inext})", lhs, rhs))
        return head + rows

    if case == "step4.case2":
        return [
            Constraint("step4.ktop", k[0], alpha),
            Constraint("step4.cycle", qN * alpha, k[0]),
        ]

    if case == "step4.case2dual":
        return [
            Constraint("step4.alphanonpos", Fraction(0), alpha),
            Constraint("step4.cycle", qN * k[0], k[0] - alpha),
        ]

    if case == "step2.case2":
        l = j  # extra rank below m = n-1
        return [
            Constraint("step2.ktop", k[0], alpha),
            Constraint(
                "step2.cycle",
                (qN ** (n - l) - 1) * alpha,
                (qN ** (n - l - 1) - 1) * k[0],
            ),
        ]

    if case == "step2.case2dual":
        l = j  # extra rank above m = 1
        return [
            Constraint("step2.alphanonpos", Fraction(0), alpha),
            Constraint(
                "step2.cycle",
                (qN**l - 1) * k[0],
                (qN ** (l - 1) - 1) * (k[0] - alpha),
            ),
        ]

    # step5 families: the extra flag sits at a non-essential place at cyclic
    # distance d after the previous essential place.
    iprev = None
    for l in T:
        if (i - l) % N <= sig.gap(l) and (i - l) % N >= 1:
            iprev = l
            break
    assert iprev is not None, "non-essential place must lie in some gap"
    d = (i - iprev) % N
    shifted = alpha / P**d

    if case == "step5.case1":
        head = [Constraint("step5.alphanonneg", alpha, Fraction(0))]
        rows = []
        for l, il in enumerate(T):
            inext = sig.next_essential(il)
            lhs_val = k[l] - shifted if il == iprev else k[l]
            rows.append(
                Constraint(
                    f"cross({il}->{inext})",
                    (P ** sig.gap(il)) * lhs_val,
                    k[T.index(inext)],
                )
            )
        return head + rows

    if case == "step5.case2":
        return [
            Constraint("step5.alphanonneg", alpha, Fraction(0)),
            Constraint("step5.cycle", qN * (k[0] - shifted), k[0]),
        ]

    if case == "step5.case3":
        m = j  # extra flag rank at the non-essential place
        return [
            Constraint("step5.alphanonneg", alpha, Fraction(0)),
            Constraint(
                "step5.cycle",
                (qN ** (n - m) - 1) * (k[0] - shifted),
                (qN ** (n - m - 1) - 1) * k[0],
            ),
        ]

    if case == "step5.case3dual":
        m = j
        return [
            Constraint("step5.alphanonneg", alpha, Fraction(0)),
            Constraint(
                "step5.cycle",
                (qN**m - 1) * (k[0] - shifted),
                (qN ** (m - 1) - 1) * k[0],
            ),
        ]

    raise AssertionError(f"unhandled crosscheck case {case}")


def check_minimal_crosscheck(p: int, sig: Signature, w: MinimalFlagWeight) -> Verdict:
    """Nefness of a one-step refinement weight via the closed-form families."""
    return _verdict(crosscheck_constraints(p, sig, w), "nef")


def tight_failures(verdict: Verdict) -> tuple[Constraint, ...]:
    """The failures that are exact ties (boundary contacts)."""
    return tuple(c for c in verdict.failures if c.tight)
