"""Exact rational cone geometry for the cross-place nef cone.

The nef cone of the coarsest flag space, in essential-place coordinates
``x_1..x_t``, is cut out by one row per essential place:

    ``p^{a_s} x_s - x_{s+1} >= 0``   (indices cyclic, ``a_s`` the gap)

For ``t >= 2`` it is simplicial with explicit integer rays; for ``t = 1``
the single row degenerates to ``(p^{a_1} - 1) x_1 >= 0``.

The second half of the module implements the averaging dynamics that drags
the canonical (Hodge) weight towards the parallel diagonal: rescale into
tilted coordinates via :func:`xi_transform`, then repeatedly replace pairs
of adjacent coordinates by their mean, keeping only images that stay inside
the transformed cone.  The score of a generator set is the best ratio
``min_i g_i / max_i g_i``; reaching 1 means the diagonal is attained.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .datum import DatumError, check_prime, frac, frac_str


class ConesError(DatumError):
    pass


Vec = tuple[Fraction, ...]


def _vec(x) -> Vec:
    return tuple(frac(v) for v in x)


def _check_gaps(a) -> tuple[int, ...]:
    a = tuple(a)
    if not a:
        raise ConesError("empty gap vector")
    for g in a:
        if not isinstance(g, int) or g < 1:
            raise ConesError(f"gaps must be positive integers, got {g!r}")
    return a


@dataclass(frozen=True)
class Cone:
    """Finitely many homogeneous rows, each meaning ``row . x >= 0``."""

    rows: tuple[tuple[str, Vec], ...]

    def member(self, x: Sequence) -> tuple[bool, list[str]]:
        """Exact membership; returns the names of violated rows."""
        x = _vec(x)
        bad = []
        for name, row in self.rows:
            if len(row) != len(x):
                raise ConesError(
                    f"point has {len(x)} coordinates, cone lives in dimension {len(row)}"
                )
            if sum(c * v for c, v in zip(row, x)) < 0:
                bad.append(name)
        return not bad, bad


def csv_cone(p: int, a: Sequence[int]) -> Cone:
    """The cross-place nef cone for gap vector ``a`` at prime ``p``."""
    check_prime(p)
    a = _check_gaps(a)
    t = len(a)
    if t == 1:
        row = (Fraction(p) ** a[0] - 1,)
        return Cone(rows=(("cross(1->1)", row),))
    rows = []
    for s in range(t):
        row = [Fraction(0)] * t
        row[s] = Fraction(p) ** a[s]
        row[(s + 1) % t] = Fraction(-1)
        rows.append((f"cross({s + 1}->{(s + 1) % t + 1})", tuple(row)))
    return Cone(rows=tuple(rows))


def csv_rays(p: int, a: Sequence[int]) -> tuple[Vec, ...]:
    """Integer ray generators of the cross-place cone, one per essential place.

    Ray ``s`` has a 1 in slot ``s`` and accumulates the gap powers going
    around the cycle: slot ``s+l`` holds ``p^{a_s + ... + a_{s+l-1}}``.
    The vectors are left unnormalized (entries are honest powers of ``p``).
    Requires ``t >= 2``; the ``t = 1`` cone is a half-line or the whole line
    and has no interesting ray structure.
    """
    check_prime(p)
    a = _check_gaps(a)
    t = len(a)
    if t < 2:
        raise ConesError("rays need at least two essential places")
    rays = []
    for s in range(t):
        ray = [Fraction(0)] * t
        ray[s] = Fraction(1)
        acc = Fraction(1)
        for l in range(1, t):
            acc *= Fraction(p) ** a[(s + l - 1) % t]
            ray[(s + l) % t] = acc
        rays.append(tuple(ray))
    return tuple(rays)


def decompose_in_rays(
    p: int, a: Sequence[int], x: Sequence
) -> Optional[tuple[Fraction, ...]]:
    """Write ``x`` as a nonnegative combination of the rays, or None.

    Exact Gaussian solve of the square system; a point lies in the cone
    exactly when all coefficients are nonnegative.
    """
    rays = csv_rays(p, a)
    x = _vec(x)
    t = len(rays)
    if len(x) != t:
        raise ConesError(f"point has {len(x)} coordinates, expected {t}")
    # columns are rays; solve M c = x
    M = [[rays[s][r] for s in range(t)] for r in range(t)]
    rhs = list(x)
    cols = list(range(t))
    sol = [Fraction(0)] * t
    rowi = 0
    pivots = []
    for col in cols:
        piv = None
        for r in range(rowi, t):
            if M[r][col] != 0:
                piv = r
                break
        if piv is None:
            raise ConesError("rays are linearly dependent")
        M[rowi], M[piv] = M[piv], M[rowi]
        rhs[rowi], rhs[piv] = rhs[piv], rhs[rowi]
        d = M[rowi][col]
        M[rowi] = [v / d for v in M[rowi]]
        rhs[rowi] = rhs[rowi] / d
        for r in range(t):
            if r != rowi and M[r][col] != 0:
                f = M[r][col]
                M[r] = [v - f * w for v, w in zip(M[r], M[rowi])]
                rhs[r] = rhs[r] - f * rhs[rowi]
        pivots.append(col)
        rowi += 1
    for r, col in enumerate(pivots):
        sol[col] = rhs[r]
    if any(c < 0 for c in sol):
        return None
    return tuple(sol)


# ---------------------------------------------------------------------------
# tilted coordinates and the averaging dynamics

def xi_transform(p: int, a: Sequence[int], x: Sequence) -> Vec:
    """Tilt into coordinates where the cross rows become a near-order:
    ``xi(x)_l = x_l * p^{a_1 + ... + a_{l-1}}``."""
    check_prime(p)
    a = _check_gaps(a)
    x = _vec(x)
    if len(x) != len(a):
        raise ConesError("dimension mismatch")
    out = []
    e = 0
    for l, v in enumerate(x):
        out.append(v * Fraction(p) ** e)
        e += a[l]
    return tuple(out)


def xi_inverse(p: int, a: Sequence[int], y: Sequence) -> Vec:
    check_prime(p)
    a = _check_gaps(a)
    y = _vec(y)
    if len(y) != len(a):
        raise ConesError("dimension mismatch")
    out = []
    e = 0
    for l, v in enumerate(y):
        out.append(v / Fraction(p) ** e)
        e += a[l]
    return tuple(out)


def tilted_cone(p: int, a: Sequence[int]) -> Cone:
    """The tilt-preimage of the cross-place cone: vectors whose
    :func:`xi_transform` image lies in :func:`csv_cone`.

    In closed form this is a chain of descents ``x_1 >= x_2 >= ... >= x_t``
    plus one wrap-around row ``p^{a_1+...+a_t} x_t >= x_1``.
    """
    check_prime(p)
    a = _check_gaps(a)
    t = len(a)
    if t == 1:
        return csv_cone(p, a)
    rows = []
    for s in range(t - 1):
        row = [Fraction(0)] * t
        row[s] = Fraction(1)
        row[s + 1] = Fraction(-1)
        rows.append((f"desc({s + 1})", tuple(row)))
    wrap = [Fraction(0)] * t
    wrap[t - 1] = Fraction(p) ** sum(a)
    wrap[0] = Fraction(-1)
    rows.append(("wrap", tuple(wrap)))
    return Cone(rows=tuple(rows))


def hodge_seed(p: int, a: Sequence[int]) -> Vec:
    """The canonical weight in essential coordinates: ``(1, p^{-a_1},
    p^{-(a_1+a_2)}, ...)``; its tilt is the all-ones vector."""
    check_prime(p)
    a = _check_gaps(a)
    out = []
    e = 0
    for l in range(len(a)):
        out.append(Fraction(1) / Fraction(p) ** e)
        e += a[l]
    return tuple(out)


def average_step(y: Sequence, j: int) -> Vec:
    """Replace entries ``j`` and ``j+1`` (1-indexed) by their mean.

    Preserves the coordinate sum, which is what makes the dynamics converge
    towards the diagonal.
    """
    y = _vec(y)
    if not 1 <= j <= len(y) - 1:
        raise ConesError(f"averaging position out of range: {j} not in [1, {len(y) - 1}]")
    mean = (y[j - 1] + y[j]) / 2
    return y[: j - 1] + (mean, mean) + y[j + 1 :]


def diagonal_score(gens: Sequence[Vec]) -> Fraction:
    """Best ``min/max`` coordinate ratio over the generators (1 = diagonal)."""
    best = None
    for g in gens:
        hi = max(g)
        if hi <= 0:
            continue
        r = min(g) / hi
        if best is None or r > best:
            best = r
    if best is None:
        raise ConesError("no generator with a positive coordinate")
    return best


def _hull_prune(gens: list[Vec]) -> list[Vec]:
    """Keep the extreme points among generators sharing a coordinate sum.

    All vectors produced by the dynamics have the same sum (averaging is
    sum-preserving), so the generated cone section is the convex hull of the
    generators inside that hyperplane; interior points are redundant.
    """
    gens = sorted(set(gens))
    t = len(gens[0])
    if len(gens) <= 2 or t > 3:
        return gens
    if t == 2:
        lo = min(gens, key=lambda g: g[0])
        hi = max(gens, key=lambda g: g[0])
        return sorted({lo, hi})
    # t == 3: exact 2D hull in the (y1, y2) chart (y3 is determined)
    pts = sorted({(g[0], g[1]): g for g in gens}.items())

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(seq):
        out = []
        for q, _ in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], q) <= 0:
                out.pop()
            out.append(q)
        return out

    lower = half(pts)
    upper = half(list(reversed(pts)))
    hull_keys = set(lower) | set(upper)
    keep = [g for key, g in pts if key in hull_keys]
    return sorted(keep)


@dataclass(frozen=True)
class ClosureResult:
    """Trace of the averaging dynamics (vectors in seed coordinates)."""

    generators: tuple[tuple[Vec, ...], ...]  # per iteration, iteration 0 = seed
    scores: tuple[Fraction, ...]
    converged: bool  # score reached 1 exactly
    truncated: bool  # generator cap hit at some iteration

    @property
    def final_score(self) -> Fraction:
        return self.scores[-1]

    def to_json(self) -> dict:
        return {
            "iterations": len(self.scores) - 1,
            "scores": [frac_str(s) for s in self.scores],
            "final_score": frac_str(self.final_score),
            "converged": self.converged,
            "truncated": self.truncated,
            "generators": [
                [[frac_str(v) for v in g] for g in gen_set]
                for gen_set in self.generators
            ],
        }


def averaging_closure(
    p: int, a: Sequence[int], max_iter: int = 30, max_generators: int = 512
) -> ClosureResult:
    """Iterate admissible averaging steps from the canonical seed.

    An averaging image is admissible when it stays inside the tilt-preimage
    cone (boundary included).  Each iteration adds every admissible image,
    prunes to extreme points, and records the best diagonal score.  The
    best-scoring generator is always retained, so the score trace is
    nondecreasing.  Stops early once the diagonal is reached exactly -- a
    diagonal generator is proportional to the all-ones parallel weight.
    """
    check_prime(p)
    a = _check_gaps(a)
    if len(a) < 2:
        raise ConesError("averaging dynamics needs at least two essential places")
    if max_iter < 0:
        raise ConesError("max_iter must be nonnegative")
    cone = tilted_cone(p, a)
    t = len(a)
    seed = hodge_seed(p, a)
    gens: list[Vec] = [seed]
    traces = [tuple(gens)]
    scores = [diagonal_score(gens)]
    truncated = False
    for _ in range(max_iter):
        if scores[-1] == 1:
            break
        candidates = set(gens)
        for g in gens:
            for j in range(1, t):
                img = average_step(g, j)
                if cone.member(img)[0]:
                    candidates.add(img)
        best = max(candidates, key=lambda g: (diagonal_score([g]), g))
        pruned = _hull_prune(sorted(candidates))
        if best not in pruned:
            pruned = sorted(pruned + [best])
        if len(pruned) > max_generators:
            truncated = True
            pruned = sorted(pruned, key=lambda g: (-diagonal_score([g]), g))[
                :max_generators
            ]
            pruned = sorted(pruned)
        gens = pruned
        traces.append(tuple(gens))
        scores.append(diagonal_score(gens))
    return ClosureResult(
        generators=tuple(traces),
        scores=tuple(scores),
        converged=scores[-1] == 1,
        truncated=truncated,
    )
