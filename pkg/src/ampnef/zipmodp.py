"""Finite-field models: semilinear-algebra points mod p and lattices mod p^2.

A :class:`ZipPoint` realizes a signature concretely over F_p: per place, a
pair of n x n matrices ``V_i : D_i -> D_{i+1}`` and ``F_i : D_{i+1} -> D_i``
with ``F V = V F = 0``, ``rank V_i = m_{i+1}``, ``im V = ker F`` and
``ker V = im F``.  (Over the prime field the twist is the identity, so
plain matrices suffice.)  :func:`empirical_slope` walks the descent loop on
such a point by literal kernel/preimage/intersection computations and hands
the measured rank trace to the exact slope machinery -- an independent
oracle for :func:`ampnef.slopes.generic_slope`.

A :class:`LatticePoint` lifts the picture to Z/p^2 with ``V F = F V = p``;
submodule chains between ``p D`` and ``D`` are where the quotient-dimension
formula ``dim V E_{i-1} / p E_i = m_i - l_i + l_{i-1}`` lives, checked here
by Smith normal form.

All matrices are plain lists of lists of ints; the module is self-contained
apart from sympy's Smith normal form.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

import sympy
from sympy.matrices.normalforms import smith_normal_form

from .datum import DatumError, Signature, check_prime


class ZipError(DatumError):
    pass


Mat = list[list[int]]


# ---------------------------------------------------------------------------
# dense exact linear algebra mod q (q = p or p^2 for the helpers that allow it)

def mat_mul(q: int, A: Mat, B: Mat) -> Mat:
    if not A or not B:
        return []
    rows, inner, cols = len(A), len(B), len(B[0])
    assert all(len(r) == inner for r in A), "dimension mismatch"
    out = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        Ai = A[i]
        for k in range(inner):
            a = Ai[k]
            if a:
                Bk = B[k]
                row = out[i]
                for j in range(cols):
                    row[j] = (row[j] + a * Bk[j]) % q
    return out


def identity(n: int) -> Mat:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def zeros(rows: int, cols: int) -> Mat:
    return [[0] * cols for _ in range(rows)]


def diag(entries: Sequence[int]) -> Mat:
    n = len(entries)
    out = zeros(n, n)
    for i, e in enumerate(entries):
        out[i][i] = e
    return out


def transpose(A: Mat) -> Mat:
    return [list(col) for col in zip(*A)] if A else []

def _rref(p: int, A: Mat) -> tuple[Mat, list[int]]:
    """Reduced row echelon form over F_p; returns (matrix, pivot columns)."""
    A = [[x % p for x in row] for row in A]
    if not A:
        return A, []
    rows, cols = len(A), len(A[0])
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i][c] % p), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = pow(A[r][c], -1, p)
        A[r] = [(x * inv) % p for x in A[r]]
        for i in range(rows):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [(x - f * y) % p for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A[:r], pivots


def col_rank(p: int, A: Mat) -> int:
    return len(_rref(p, transpose(A))[1]) if A and A[0] else 0


def column_space(p: int, A: Mat) -> Mat:
    """Basis of the column span, as columns of the returned matrix."""
    if not A:
        return []
    if not A[0]:
        return [[] for _ in A]
    R, _ = _rref(p, transpose(A))
    if not R:
        return [[] for _ in A]
    return transpose(R)


def kernel(p: int, A: Mat) -> Mat:
    """Basis of the right kernel, as columns."""
    if not A or not A[0]:
        return []
    R, pivots = _rref(p, A)
    cols = len(A[0])
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * cols
        v[fc] = 1
        for r, pc in enumerate(pivots):
            v[pc] = (-R[r][fc]) % p
        basis.append(v)
    return transpose(basis) if basis else [[] for _ in range(cols)]


def _cols(A: Mat) -> int:
    return len(A[0]) if A and A[0] else 0


def hstack(A: Mat, B: Mat) -> Mat:
    if not A or not _cols(A):
        return B
    if not B or not _cols(B):
        return A
    return [ra + rb for ra, rb in zip(A, B)]


def intersect(p: int, A: Mat, B: Mat) -> Mat:
    """Basis (as columns) of the intersection of two column spans."""
    na, nb = _cols(A), _cols(B)
    if na == 0 or nb == 0:
        return [[] for _ in A]
    K = kernel(p, hstack(A, [[-x % p for x in row] for row in B]))
    if _cols(K) == 0:
        return [[] for _ in A]
    coefA = [k[:na] for k in transpose(K)]
    vecs = [mat_vec(p, A, c) for c in coefA]
    return column_space(p, transpose(vecs))


def mat_vec(p: int, A: Mat, v: Sequence[int]) -> list[int]:
    return [sum(a * x for a, x in zip(row, v)) % p for row in A]


def preimage(p: int, M: Mat, U: Mat) -> Mat:
    """Basis (as columns) of ``{x : M x in span(U)}``."""
    nu = _cols(U)
    n = _cols(M)
    if nu == 0:
        return kernel(p, M)
    K = kernel(p, hstack(M, [[-x % p for x in row] for row in U]))
    xs = [k[:n] for k in transpose(K)]
    if not xs:
        return [[] for _ in range(n)]
    return column_space(p, transpose(xs))


def random_invertible(rng: random.Random, p: int, n: int) -> Mat:
    while True:
        A = [[rng.randrange(p) for _ in range(n)] for _ in range(n)]
        if col_rank(p, A) == n:
            return A


def invert(p: int, A: Mat) -> Mat:
    n = len(A)
    aug = [row[:] + identity(n)[i] for i, row in enumerate(A)]
    R, pivots = _rref(p, aug)
    if pivots[:n] != list(range(n)):
        raise ZipError("matrix is singular mod p")
    return [row[n:] for row in R]


def invert_mod_psq(p: int, A: Mat) -> Mat:
    """Inverse mod ``p^2`` of a matrix invertible mod ``p``, by one Newton
    lift of the mod-p inverse: ``X' = X (2I - A X)``."""
    q = p * p
    n = len(A)
    X = invert(p, [[x % p for x in row] for row in A])
    AX = mat_mul(q, A, X)
    corr = [[(2 * int(a == b) - AX[a][b]) % q for b in range(n)] for a in range(n)]
    return mat_mul(q, X, corr)


# ---------------------------------------------------------------------------
# points mod p

@dataclass(frozen=True)
class ZipPoint:
    """Concrete realization over F_p: ``V[i-1] : D_i -> D_{i+1}`` and
    ``F[i-1] : D_{i+1} -> D_i`` per place boundary (indices cyclic)."""

    sig: Signature
    p: int
    V: tuple[Mat, ...]
    F: tuple[Mat, ...]

    def V_at(self, i: int) -> Mat:
        """The map out of place ``i``."""
        return self.V[self.sig.place(i) - 1]

    def F_at(self, i: int) -> Mat:
        """The map into place ``i`` (from place ``i+1``)."""
        return self.F[self.sig.place(i) - 1]

    def omega(self, i: int) -> Mat:
        """Basis (as columns) of ``im V_{i-1}`` at place ``i``."""
        return column_space(self.p, self.V_at(i - 1))

    def omega_tilde(self, i: int) -> Mat:
        """``omega`` with the essential convention: the whole space when
        ``m_i`` is extreme-zero."""
        if self.sig.m_at(i) == 0:
            return identity(self.sig.n)
        return self.omega(i)


def sample_point(sig: Signature, p: int, seed: int = 0) -> ZipPoint:
    """Deterministic random point: ``V_i = P_{i+1} J Q_i`` and
    ``F_i = Q_i^{-1} J' P_{i+1}^{-1}`` with random invertible ``P, Q`` and
    complementary coordinate idempotents of rank ``m_{i+1}``."""
    check_prime(p)
    rng = random.Random(seed)
    n = sig.n
    P = [random_invertible(rng, p, n) for _ in range(sig.N)]
    Q = [random_invertible(rng, p, n) for _ in range(sig.N)]
    Vs, Fs = [], []
    for i in range(1, sig.N + 1):
        m_next = sig.m_at(i + 1)
        J = diag([1] * m_next + [0] * (n - m_next))
        Jp = diag([0] * m_next + [1] * (n - m_next))
        Pn = P[sig.place(i + 1) - 1]
        Qi = Q[i - 1]
        Vs.append(mat_mul(p, mat_mul(p, Pn, J), Qi))
        Fs.append(mat_mul(p, mat_mul(p, invert(p, Qi), Jp), invert(p, Pn)))
    return ZipPoint(sig=sig, p=p, V=tuple(Vs), F=tuple(Fs))


def random_subspace(rng: random.Random, p: int, basis: Mat, r: int) -> Mat:
    """Random rank-``r`` subspace of a column span, as columns."""
    nb = _cols(basis)
    if r > nb:
        raise ZipError(f"requested rank {r} exceeds ambient rank {nb}")
    while True:
        C = [[rng.randrange(p) for _ in range(r)] for _ in range(nb)]
        S = mat_mul(p, basis, C)
        if col_rank(p, S) == r:
            return S


def empirical_slope(pt: ZipPoint, i: int, S: Mat):
    """Measure the slope of the subspace spanned by the columns of ``S``
    inside ``omega~_i`` by walking the descent loop with literal linear
    algebra.  Returns an exact :class:`~ampnef.slopes.SlopeVector` (which
    re-validates the measured trace)."""
    from .slopes import slope_from_ranks

    sig, p = pt.sig, pt.p
    i = sig.place(i)
    n = sig.n
    amb = pt.omega_tilde(i)
    # S must sit inside omega~_i
    if col_rank(p, hstack(amb, S)) != col_rank(p, amb):
        raise ZipError("subspace does not lie inside omega~ at the base place")
    S = column_space(p, S)
    trace = [_cols(S)]
    cur = S
    for j in range(1, sig.N + 1):
        src = sig.place(i - j)          # the step maps D_src -> D_{src+1}
        tgt = sig.place(i - j + 1)
        if sig.m_at(tgt) == 0:
            # V into the target is zero; the essential substitute is F^{-1},
            # whose preimage is the literal F-image.
            W = column_space(p, mat_mul(p, pt.F_at(src), cur)) if _cols(cur) else cur
            W = W if _cols(W) else [[] for _ in range(n)]
        else:
            W = preimage(p, pt.V_at(src), cur)
        cap = S if j == sig.N else pt.omega_tilde(src)
        cur = intersect(p, W, cap)
        trace.append(_cols(cur))
    return slope_from_ranks(sig, i, trace)


# ---------------------------------------------------------------------------
# lattice points mod p^2 and chain quotients

@dataclass(frozen=True)
class LatticePoint:
    """Realization over Z/p^2 with ``V F = F V = p``; reduces mod p to a
    :class:`ZipPoint`-shaped datum."""

    sig: Signature
    p: int
    V: tuple[Mat, ...]
    F: tuple[Mat, ...]

    @property
    def q(self) -> int:
        return self.p * self.p

    def V_at(self, i: int) -> Mat:
        return self.V[self.sig.place(i) - 1]

    def F_at(self, i: int) -> Mat:
        return self.F[self.sig.place(i) - 1]

    def reduce_mod_p(self) -> ZipPoint:
        p = self.p
        return ZipPoint(
            sig=self.sig,
            p=p,
            V=tuple([[x % p for x in row] for row in M] for M in self.V),
            F=tuple([[x % p for x in row] for row in M] for M in self.F),
        )


def standard_lattice(sig: Signature, p: int) -> LatticePoint:
    """Split-coordinate lattice point: ``V = diag(1^m, p)`` and
    ``F = diag(p^m, 1)`` per boundary.  Every coordinate chain is stable
    here, so this is the natural base point for chain constructions."""
    check_prime(p)
    n = sig.n
    Vs, Fs = [], []
    for i in range(1, sig.N + 1):
        m_next = sig.m_at(i + 1)
        Vs.append(diag([1] * m_next + [p] * (n - m_next)))
        Fs.append(diag([p] * m_next + [1] * (n - m_next)))
    return LatticePoint(sig=sig, p=p, V=tuple(Vs), F=tuple(Fs))


def sample_lattice(sig: Signature, p: int, seed: int = 0) -> LatticePoint:
    """Deterministic random lattice point: ``V = P diag(1^m, p) Q`` and
    ``F = Q^{-1} diag(p, 1^m) P^{-1}`` with invertible lifts mod p^2."""
    check_prime(p)
    rng = random.Random(seed)
    q = p * p
    n = sig.n
    # invertible mod p => invertible mod p^2
    P = [random_invertible(rng, p, n) for _ in range(sig.N)]
    Q = [random_invertible(rng, p, n) for _ in range(sig.N)]
    Vs, Fs = [], []
    for i in range(1, sig.N + 1):
        m_next = sig.m_at(i + 1)
        DV = diag([1] * m_next + [p] * (n - m_next))
        DF = diag([p] * m_next + [1] * (n - m_next))
        Pn = P[sig.place(i + 1) - 1]
        Qi = Q[i - 1]
        Vs.append(mat_mul(q, mat_mul(q, Pn, DV), Qi))
        Fs.append(mat_mul(q, mat_mul(q, invert_mod_psq(p, Qi), DF), invert_mod_psq(p, Pn)))
    return LatticePoint(sig=sig, p=p, V=tuple(Vs), F=tuple(Fs))


@dataclass(frozen=True)
class ChainSelection:
    """Per-place submodules ``p D <= E_i <= D`` over Z/p^2, given by generator
    columns (the ``p D`` part is implicit); ``lengths[i-1]`` is
    ``dim_k E_i / p D``."""

    generators: tuple[Mat, ...]
    lengths: tuple[int, ...]


def module_size_log(p: int, n: int, gens: Mat) -> int:
    """``log_p`` of the size of the Z/p^2-span of the given columns together
    with ``p^2 Z^n`` (i.e. of the submodule of (Z/p^2)^n they generate),
    via Smith normal form over the integers."""
    q = p * p
    cols = [list(col) for col in zip(*gens)] if gens and gens[0] else []
    M = sympy.Matrix([list(c) for c in cols] + [[q * int(i == j) for j in range(n)] for i in range(n)]).T
    snf = smith_normal_form(M)
    dets = [abs(int(snf[i, i])) for i in range(min(snf.rows, snf.cols))]
    covol = 1
    for d in dets:
        covol *= max(d, 1)
    size = q**n // covol
    out = 0
    while size > 1:
        size //= p
        out += 1
    return out


def _span_with_p(p: int, n: int, gens: Mat) -> Mat:
    pI = diag([p] * n)
    return hstack(gens, pI) if gens and gens[0] else pI


def quotient_dims(lp: LatticePoint, chain: ChainSelection) -> list[int]:
    """Exact ``dim_k (V E_{i-1} / p E_i)`` per place.

    The chain must be stable (``V E_i <= E_{i+1}`` and ``F E_{i+1} <= E_i``);
    stability makes ``p E_i = V F E_i <= V E_{i-1}`` automatic, and the
    dimension comes out as ``m_i - l_i + l_{i-1}``.
    """
    sig, p, q = lp.sig, lp.p, lp.q
    n = sig.n
    if len(chain.generators) != sig.N:
        raise ZipError("chain needs one generator set per place")
    _check_chain_stable(lp, chain)
    dims = []
    for i in range(1, sig.N + 1):
        Eprev = _span_with_p(p, n, chain.generators[sig.place(i - 1) - 1])
        VE = mat_mul(q, lp.V_at(i - 1), Eprev)
        pEi = [
            [(p * x) % q for x in row]
            for row in _span_with_p(p, n, chain.generators[i - 1])
        ]
        big = module_size_log(p, n, VE)
        small = module_size_log(p, n, pEi)
        dims.append(big - small)
    return dims


def _check_chain_stable(lp: LatticePoint, chain: ChainSelection) -> None:
    sig, p, q = lp.sig, lp.p, lp.q
    n = sig.n
    for i in range(1, sig.N + 1):
        Ei = _span_with_p(p, n, chain.generators[i - 1])
        Enext = _span_with_p(p, n, chain.generators[sig.place(i + 1) - 1])
        VEi = mat_mul(q, lp.V_at(i), Ei)
        if not _submodule_of(p, n, VEi, Enext):
            raise ZipError(f"chain not V-stable at place {i}")
        FEnext = mat_mul(q, lp.F_at(i), Enext)
        if not _submodule_of(p, n, FEnext, Ei):
            raise ZipError(f"chain not F-stable at place {i}")


def _submodule_of(p: int, n: int, A: Mat, B: Mat) -> bool:
    return module_size_log(p, n, B) == module_size_log(p, n, hstack(A, B))


def coordinate_chain(
    lp_sig: Signature, p: int, subsets: Sequence[Sequence[int]]
) -> ChainSelection:
    """Chain given per place by coordinate subsets (1-based indices):
    ``E_i = span({e_j : j in S_i} + p D)``."""
    gens = []
    lengths = []
    for S in subsets:
        S = sorted(set(S))
        cols = [[int(r + 1 == j) for j in S] for r in range(lp_sig.n)]
        gens.append(cols)
        lengths.append(len(S))
    return ChainSelection(generators=tuple(gens), lengths=tuple(lengths))


def random_coordinate_subsets(
    sig: Signature, rng: random.Random
) -> list[list[int]]:
    """Random subsets satisfying the standard-point stability constraints:
    ``S_i  intersect [1..m_{i+1}] <= S_{i+1}`` and
    ``S_{i+1} intersect (m_{i+1}..n] <= S_i``."""
    n = sig.n
    S = [set(j for j in range(1, n + 1) if rng.random() < 0.5) for _ in range(sig.N)]
    changed = True
    while changed:
        changed = False
        for i in range(sig.N):
            nxt = (i + 1) % sig.N
            m_next = sig.m_at(i + 2)
            lowered = {j for j in S[i] if j <= m_next}
            if not lowered <= S[nxt]:
                S[nxt] |= lowered
                changed = True
            raised = {j for j in S[nxt] if j > m_next}
            if not raised <= S[i]:
                S[i] |= raised
                changed = True
    return [sorted(s) for s in S]


def conjugate_chain(
    lp: LatticePoint, chain: ChainSelection, seed: int = 0
) -> tuple[LatticePoint, ChainSelection]:
    """Change basis at every place by a random invertible matrix; the
    quotient dimensions are invariants of this action."""
    sig, p, q = lp.sig, lp.p, lp.q
    n = sig.n
    rng = random.Random(seed)
    U = [random_invertible(rng, p, n) for _ in range(sig.N)]
    Uinv = [invert_mod_psq(p, u) for u in U]
    Vs, Fs, gens = [], [], []
    for i in range(1, sig.N + 1):
        nxt = sig.place(i + 1) - 1
        Vs.append(mat_mul(q, U[nxt], mat_mul(q, lp.V_at(i), Uinv[i - 1])))
        Fs.append(mat_mul(q, U[i - 1], mat_mul(q, lp.F_at(i), Uinv[nxt])))
        gens.append(mat_mul(q, U[i - 1], chain.generators[i - 1]))
    return (
        LatticePoint(sig=sig, p=p, V=tuple(Vs), F=tuple(Fs)),
        ChainSelection(generators=tuple(gens), lengths=chain.lengths),
    )


# ---------------------------------------------------------------------------
# chains of subspaces mod p

@dataclass(frozen=True)
class FChain:
    """Per-place subspaces over F_p closed under both operators."""

    bases: tuple[Mat, ...]  # columns
    lengths: tuple[int, ...]


def _close_under_ops(pt: ZipPoint, seeds: Sequence[Mat]) -> FChain:
    sig, p = pt.sig, pt.p
    cur = [column_space(p, s) if _cols(s) else [[] for _ in range(sig.n)] for s in seeds]
    changed = True
    while changed:
        changed = False
        for i in range(1, sig.N + 1):
            nxt = sig.place(i + 1) - 1
            img = mat_mul(p, pt.V_at(i), cur[i - 1]) if _cols(cur[i - 1]) else []
            joined = column_space(p, hstack(cur[nxt], img)) if img and img[0] else cur[nxt]
            if _cols(joined) != _cols(cur[nxt]):
                cur[nxt] = joined
                changed = True
            imgF = mat_mul(p, pt.F_at(i), cur[nxt]) if _cols(cur[nxt]) else []
            joinedF = column_space(p, hstack(cur[i - 1], imgF)) if imgF and imgF[0] else cur[i - 1]
            if _cols(joinedF) != _cols(cur[i - 1]):
                cur[i - 1] = joinedF
                changed = True
    return FChain(bases=tuple(cur), lengths=tuple(_cols(b) for b in cur))


def find_chains(
    pt: ZipPoint,
    profile: Sequence[int],
    attempts: int = 200,
    seed: int = 0,
    settle: int = 50,
) -> tuple[list[FChain], bool]:
    """Search for operator-stable chains with the given rank profile.

    Tries the natural seeds (zero, images and kernels of the operators, the
    full space) and then random low-rank seeds, closing each under both
    operators.  The random phase stops once ``settle`` consecutive attempts
    add nothing new; the returned flag is True when the attempt budget ran
    out before that point (more attempts might still discover chains).
    """
    sig, p = pt.sig, pt.p
    n = sig.n
    profile = tuple(int(x) for x in profile)
    if len(profile) != sig.N:
        raise ZipError(f"profile needs N = {sig.N} entries, got {len(profile)}")
    rng = random.Random(seed)
    found: list[FChain] = []
    seen = set()

    def consider(chain: FChain) -> bool:
        if chain.lengths != profile:
            return False
        key = tuple(tuple(tuple(row) for row in b) for b in chain.bases)
        if key in seen:
            return False
        seen.add(key)
        found.append(chain)
        return True

    empty = [[[] for _ in range(n)]] * sig.N
    consider(_close_under_ops(pt, empty))
    consider(_close_under_ops(pt, [identity(n)] * sig.N))
    consider(_close_under_ops(pt, [pt.omega(i) for i in range(1, sig.N + 1)]))
    consider(
        _close_under_ops(pt, [kernel(p, pt.V_at(i)) for i in range(1, sig.N + 1)])
    )
    stale = 0
    for _ in range(attempts):
        seeds = []
        for i in range(sig.N):
            r = rng.randint(0, max(profile))
            if r == 0:
                seeds.append([[] for _ in range(n)])
            else:
                cols = [[rng.randrange(p) for _ in range(r)] for _ in range(n)]
                seeds.append(cols)
        stale = 0 if consider(_close_under_ops(pt, seeds)) else stale + 1
        if stale >= settle:
            return found, False
    return found, attempts > 0
