import random

import pytest

from ampnef.datum import Signature
from ampnef.slopes import generic_slope, total_and_chain
from ampnef.zipmodp import (
    ZipError,
    col_rank,
    column_space,
    conjugate_chain,
    coordinate_chain,
    diag,
    empirical_slope,
    find_chains,
    hstack,
    identity,
    intersect,
    invert,
    invert_mod_psq,
    kernel,
    mat_mul,
    module_size_log,
    preimage,
    quotient_dims,
    random_coordinate_subsets,
    random_invertible,
    random_subspace,
    sample_lattice,
    sample_point,
    standard_lattice,
    zeros,
)

from conftest import random_signature

SIG653 = Signature(3, 5, (4, 2, 3))


# ---------------------------------------------------------------------------
# linear algebra over F_p


def test_invert_round_trip():
    rng = random.Random(2)
    for p in (2, 3, 5):
        A = random_invertible(rng, p, 4)
        assert mat_mul(p, A, invert(p, A)) == identity(4)
        B = invert_mod_psq(p, A)
        assert mat_mul(p * p, A, B) == identity(4)


def test_kernel_and_rank_nullity():
    rng = random.Random(9)
    for _ in range(30):
        p = rng.choice((2, 3, 5))
        n = rng.randint(1, 5)
        A = [[rng.randrange(p) for _ in range(n)] for _ in range(n)]
        r = col_rank(p, A)
        K = kernel(p, A)
        assert (len(K[0]) if K else 0) == n - r
        if K and K[0]:
            prod = mat_mul(p, A, K)
            assert all(all(x == 0 for x in row) for row in prod)


def test_intersect_and_preimage():
    p = 3
    e1 = [[1], [0], [0]]
    e12 = [[1, 0], [0, 1], [0, 0]]
    e23 = [[0, 0], [1, 0], [0, 1]]
    got = intersect(p, e12, e23)
    assert col_rank(p, got) == 1
    assert col_rank(p, hstack(got, [[0], [1], [0]])) == 1  # spans e2
    A = diag([1, 0, 0])
    pre = preimage(p, A, e1)
    # A^{-1}(e1) = e1 + ker A = everything except nothing: rank 3
    assert col_rank(p, pre) == 3
    assert zeros(2, 2) == [[0, 0], [0, 0]]


# ---------------------------------------------------------------------------
# zip points


def test_sample_point_is_deterministic():
    a = sample_point(SIG653, 2, 0)
    b = sample_point(SIG653, 2, 0)
    assert a.V == b.V and a.F == b.F
    c = sample_point(SIG653, 2, 1)
    assert c.V != a.V


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("p", [2, 3])
def test_sample_point_operator_identities(p, seed):
    sig = Signature(2, 4, (3, 1))
    pt = sample_point(sig, p, seed)
    n = sig.n
    for i in range(1, sig.N + 1):
        V, F = pt.V_at(i), pt.F_at(i)
        m_next = sig.m_at(i + 1)
        assert mat_mul(p, V, F) == [[0] * n for _ in range(n)]
        assert mat_mul(p, F, V) == [[0] * n for _ in range(n)]
        assert col_rank(p, V) == m_next
        assert col_rank(p, F) == n - m_next


def test_omega_and_essential_variant():
    pt = sample_point(Signature(2, 3, (2, 0)), 3, 4)
    assert col_rank(3, pt.omega(1)) == 2
    assert pt.omega_tilde(2) == identity(3)
    assert pt.omega_tilde(1) == pt.omega(1)


def test_random_subspace_rank_and_bound():
    rng = random.Random(0)
    pt = sample_point(SIG653, 3, 0)
    S = random_subspace(rng, 3, pt.omega(1), 2)
    assert col_rank(3, S) == 2
    with pytest.raises(ZipError, match="exceeds ambient"):
        random_subspace(rng, 3, pt.omega(1), 9)


# ---------------------------------------------------------------------------
# empirical slopes


def test_omega_slope_worked_example():
    pt = sample_point(SIG653, 2, 0)
    sv = empirical_slope(pt, 1, pt.omega(1))
    assert sv.r_tilde == (4, 3, 2, 4)
    assert sv.r == (2, 3, 1)
    assert total_and_chain(SIG653, sv)[1]


def test_random_subspace_slope_worked_example():
    pt = sample_point(SIG653, 5, 3)
    rng = random.Random(3)
    S = random_subspace(rng, 5, pt.omega_tilde(1), 2)
    sv = empirical_slope(pt, 1, S)
    assert sv.r_tilde == (2, 1, 0, 0)
    assert sv.r == (2, 3, 3)


def test_slope_requires_subspace_of_omega():
    pt = sample_point(SIG653, 2, 0)
    with pytest.raises(ZipError, match="inside omega~"):
        empirical_slope(pt, 1, identity(5))


def test_empirical_slope_bounds():
    rng = random.Random(12)
    for _ in range(25):
        sig = random_signature(rng, max_places=3, max_rank=4)
        p = rng.choice((2, 3))
        pt = sample_point(sig, p, rng.randrange(1000))
        amb = pt.omega_tilde(1)
        r = rng.randint(0, col_rank(p, amb))
        S = random_subspace(rng, p, amb, r) if r else [[] for _ in range(sig.n)]
        sv = empirical_slope(pt, 1, S)
        floor = sum(sig.n_tilde(j) for j in range(1, sig.N + 1))
        assert sv.total >= floor
        gen = generic_slope(sig, 1, r)
        assert sv.r <= gen.r  # generic drops are the lexicographic max


def test_empirical_slope_conjugation_invariant():
    rng = random.Random(5)
    sig = Signature(2, 4, (2, 3))
    p = 3
    pt = sample_point(sig, p, 8)
    S = random_subspace(rng, p, pt.omega_tilde(1), 1)
    base = empirical_slope(pt, 1, S)
    U = [random_invertible(rng, p, sig.n) for _ in range(sig.N)]
    Ui = [invert(p, u) for u in U]
    Vs = tuple(
        mat_mul(p, U[sig.place(i + 1) - 1], mat_mul(p, pt.V_at(i), Ui[i - 1]))
        for i in range(1, sig.N + 1)
    )
    Fs = tuple(
        mat_mul(p, U[i - 1], mat_mul(p, pt.F_at(i), Ui[sig.place(i + 1) - 1]))
        for i in range(1, sig.N + 1)
    )
    moved = type(pt)(sig=sig, p=p, V=Vs, F=Fs)
    assert empirical_slope(moved, 1, mat_mul(p, U[0], S)).r == base.r


# ---------------------------------------------------------------------------
# lattice points and chain quotients


def test_standard_lattice_split_shape():
    lp = standard_lattice(Signature(2, 3, (1, 2)), 3)
    assert lp.V_at(1) == diag([1, 1, 3])  # next place has rank 2
    assert lp.F_at(1) == diag([3, 3, 1])
    zp = lp.reduce_mod_p()
    assert zp.V[0] == diag([1, 1, 0])


@pytest.mark.parametrize("maker", [standard_lattice, sample_lattice])
def test_lattice_vf_is_multiplication_by_p(maker):
    sig = Signature(2, 4, (2, 3))
    p = 3
    lp = maker(sig, p) if maker is standard_lattice else maker(sig, p, 6)
    q = p * p
    for i in range(1, sig.N + 1):
        assert mat_mul(q, lp.V_at(i), lp.F_at(i)) == diag([p] * sig.n)
        assert mat_mul(q, lp.F_at(i), lp.V_at(i)) == diag([p] * sig.n)


def test_module_size_log():
    assert module_size_log(3, 3, identity(3)) == 6  # the whole module
    assert module_size_log(3, 3, diag([3, 3, 3])) == 3
    assert module_size_log(3, 3, [[] for _ in range(3)]) == 0
    assert module_size_log(2, 2, [[1, 0], [0, 2]]) == 3


def test_quotient_dims_trivial_chains():
    sig = Signature(2, 3, (1, 2))
    lp = standard_lattice(sig, 3)
    full = coordinate_chain(sig, 3, [[1, 2, 3], [1, 2, 3]])
    assert quotient_dims(lp, full) == [1, 2]
    empty = coordinate_chain(sig, 3, [[], []])
    assert quotient_dims(lp, empty) == [1, 2]


def test_quotient_dims_worked_example():
    sig = Signature(2, 3, (1, 2))
    lp = standard_lattice(sig, 3)
    rng = random.Random(7)
    subs = random_coordinate_subsets(sig, rng)
    assert subs == [[1, 2, 3], [1, 2, 3]]
    chain = coordinate_chain(sig, 3, subs)
    assert chain.lengths == (3, 3)
    dims = quotient_dims(lp, chain)
    # closed form m_i - l_i + l_{i-1}
    assert dims == [1, 2]
    moved_lp, moved_chain = conjugate_chain(lp, chain, seed=11)
    assert quotient_dims(moved_lp, moved_chain) == dims
    assert moved_chain.lengths == chain.lengths


def test_quotient_dims_formula_randomized():
    rng = random.Random(31)
    for _ in range(40):
        sig = random_signature(rng, max_places=3, max_rank=4)
        p = rng.choice((2, 3, 5))
        lp = standard_lattice(sig, p)
        subs = random_coordinate_subsets(sig, rng)
        chain = coordinate_chain(sig, p, subs)
        dims = quotient_dims(lp, chain)
        for i in range(1, sig.N + 1):
            l_i = chain.lengths[i - 1]
            l_prev = chain.lengths[sig.place(i - 1) - 1]
            assert dims[i - 1] == sig.m_at(i) - l_i + l_prev


def test_random_subsets_satisfy_stability():
    rng = random.Random(3)
    for _ in range(40):
        sig = random_signature(rng, max_places=3, max_rank=5)
        subs = [set(s) for s in random_coordinate_subsets(sig, rng)]
        for i in range(sig.N):
            nxt = (i + 1) % sig.N
            m_next = sig.m_at(i + 2)
            assert {j for j in subs[i] if j <= m_next} <= subs[nxt]
            assert {j for j in subs[nxt] if j > m_next} <= subs[i]


def test_unstable_chain_is_rejected():
    sig = Signature(2, 3, (1, 2))
    lp = standard_lattice(sig, 3)
    bad = coordinate_chain(sig, 3, [[1], []])
    with pytest.raises(ZipError, match="not V-stable"):
        quotient_dims(lp, bad)
    short = coordinate_chain(sig, 3, [[1]])
    with pytest.raises(ZipError, match="one generator set per place"):
        quotient_dims(lp, short)


# ---------------------------------------------------------------------------
# stable chain search mod p


def test_find_chains_natural_profiles():
    pt = sample_point(SIG653, 2, 0)
    full, ran_out = find_chains(pt, (5, 5, 5), attempts=0)
    assert len(full) == 1 and not ran_out
    assert full[0].lengths == (5, 5, 5)
    zero, _ = find_chains(pt, (0, 0, 0), attempts=0)
    assert len(zero) == 1
    assert all(len(b[0]) == 0 for b in zero[0].bases)


def test_find_chains_omega_profile():
    pt = sample_point(SIG653, 2, 0)
    chains, ran_out = find_chains(pt, (4, 2, 3), attempts=200)
    assert len(chains) == 1 and not ran_out
    none, ran_out = find_chains(pt, (2, 0, 1), attempts=200)
    assert none == [] and not ran_out
    few, ran_out = find_chains(pt, (4, 2, 3), attempts=3)
    assert len(few) == 1 and ran_out  # budget below the settle threshold


def test_find_chains_profile_arity():
    pt = sample_point(SIG653, 2, 0)
    with pytest.raises(ZipError, match="N = 3 entries"):
        find_chains(pt, (1, 2))
