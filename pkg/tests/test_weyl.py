import itertools
import math

import pytest

from ampnef.datum import Signature
from ampnef.weyl import (
    WeylElement,
    WeylError,
    all_perms,
    bruhat_leq,
    bruhat_leq_perm,
    bruhat_leq_subword,
    check_perm,
    eo_dimension,
    eo_space_dimension,
    hodge_composition,
    inversions,
    is_min_rep,
    min_rep_perms,
    min_reps,
    parabolic_order,
    parabolic_perms,
    perm_id,
    perm_inv,
    perm_mul,
    psi_shift,
    standard_shape,
    strata_poset,
    twisted_preceq,
    weyl_identity,
)
from ampnef.zipmodp import col_rank, empirical_slope, mat_mul, zeros


# ---------------------------------------------------------------------------
# permutation plumbing


def test_check_perm_accepts_and_normalizes():
    assert check_perm([3, 1, 2]) == (3, 1, 2)
    assert check_perm((1,)) == (1,)
    assert check_perm((2, 1), n=2) == (2, 1)


@pytest.mark.parametrize("bad", [(1, 1, 2), (0, 1, 2), (1, 3), (2, 3, 4)])
def test_check_perm_rejects_non_permutations(bad):
    with pytest.raises(WeylError, match="not a permutation"):
        check_perm(bad)


def test_check_perm_rejects_wrong_arity():
    with pytest.raises(WeylError, match="has 3 entries, expected 4"):
        check_perm((1, 2, 3), n=4)


def test_perm_mul_applies_right_factor_first():
    # (uv)(j) = u(v(j))
    assert perm_mul((2, 1, 3), (1, 3, 2)) == (2, 3, 1)
    assert perm_mul(perm_id(4), (3, 1, 4, 2)) == (3, 1, 4, 2)


def test_perm_inverse_and_inversions():
    assert perm_inv((2, 3, 1)) == (3, 1, 2)
    for w in all_perms(4):
        assert perm_mul(w, perm_inv(w)) == perm_id(4)
        assert inversions(w) == inversions(perm_inv(w))
    assert inversions((3, 1, 2)) == 2
    assert inversions(perm_id(5)) == 0
    assert inversions((4, 3, 2, 1)) == 6


def test_all_perms_is_sorted_and_complete():
    ps = list(all_perms(3))
    assert len(ps) == 6
    assert ps == sorted(ps)
    assert ps[0] == (1, 2, 3) and ps[-1] == (3, 2, 1)


# ---------------------------------------------------------------------------
# Bruhat order on single permutations


def test_bruhat_known_facts_in_s3():
    # both length-1 elements sit below both length-2 elements
    assert bruhat_leq_perm((1, 3, 2), (2, 3, 1))
    assert bruhat_leq_perm((2, 1, 3), (3, 1, 2))
    # the two length-2 elements are incomparable
    assert not bruhat_leq_perm((3, 1, 2), (2, 3, 1))
    assert not bruhat_leq_perm((2, 3, 1), (3, 1, 2))
    # top and bottom
    for w in all_perms(3):
        assert bruhat_leq_perm((1, 2, 3), w)
        assert bruhat_leq_perm(w, (3, 2, 1))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_rank_matrix_test_agrees_with_subword_oracle(n):
    for u, v in itertools.product(all_perms(n), repeat=2):
        assert bruhat_leq_perm(u, v) == bruhat_leq_subword(u, v)


def test_bruhat_respects_length():
    for u, v in itertools.product(all_perms(3), repeat=2):
        if bruhat_leq_perm(u, v) and u != v:
            assert inversions(u) < inversions(v)


# ---------------------------------------------------------------------------
# parabolic data and minimal coset representatives


def test_hodge_composition_merges_degenerate_blocks():
    assert hodge_composition(3, 1) == (1, 2)
    assert hodge_composition(5, 3) == (3, 2)
    assert hodge_composition(3, 0) == (3,)
    assert hodge_composition(3, 3) == (3,)


def test_parabolic_subgroup_order_and_elements():
    assert parabolic_order(5, (2, 3)) == 12
    assert parabolic_order(4, (4,)) == 24
    WI = parabolic_perms(4, (2, 2))
    assert len(WI) == parabolic_order(4, (2, 2)) == 4
    # block-preserving: values stay inside their own block
    for w in WI:
        assert set(w[:2]) == {1, 2} and set(w[2:]) == {3, 4}


def test_is_min_rep_examples():
    # minimal means w^{-1} ascends within each block
    assert is_min_rep((2, 1, 3, 4), (1, 3))
    assert not is_min_rep((1, 3, 2, 4), (1, 3))
    assert is_min_rep(perm_id(4), (2, 2))
    assert not is_min_rep((2, 1, 3, 4), (2, 2))


@pytest.mark.parametrize(
    "n,m",
    [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3), (5, 2)],
)
def test_min_rep_count_is_binomial(n, m):
    reps = min_rep_perms(n, hodge_composition(n, m))
    assert len(reps) == math.comb(n, m)


@pytest.mark.parametrize("n,comp", [(3, (2, 1)), (4, (2, 2)), (4, (1, 3))])
def test_coset_decomposition_is_length_additive(n, comp):
    WI = parabolic_perms(n, comp)
    reps = min_rep_perms(n, comp)
    seen = set()
    for u, r in itertools.product(WI, reps):
        w = perm_mul(u, r)
        assert inversions(w) == inversions(u) + inversions(r)
        seen.add(w)
    assert len(seen) == math.factorial(n)


def test_min_rep_perms_are_sorted_and_minimal():
    reps = min_rep_perms(4, (2, 2))
    assert list(reps) == sorted(reps)
    assert all(is_min_rep(r, (2, 2)) for r in reps)


# ---------------------------------------------------------------------------
# tuples of permutations


def test_weyl_element_shape_checks():
    w = WeylElement(((2, 1, 3), (1, 3, 2)))
    assert w.places == 2 and w.rank == 3
    assert w.length == 1 + 1
    assert w.to_json() == {"perms": [[2, 1, 3], [1, 3, 2]], "length": 2}
    with pytest.raises(WeylError, match="has 3 entries, expected 2"):
        WeylElement(((1, 2), (1, 2, 3)))
    with pytest.raises(WeylError, match="need at least one permutation"):
        WeylElement(())


def test_weyl_identity_and_componentwise_bruhat():
    e = weyl_identity(2, 3)
    assert e.length == 0
    w = WeylElement(((2, 1, 3), (1, 3, 2)))
    assert bruhat_leq(e, w)
    assert not bruhat_leq(w, e)
    # one coordinate up, the other down: incomparable
    u = WeylElement(((2, 1, 3), (1, 2, 3)))
    v = WeylElement(((1, 2, 3), (1, 3, 2)))
    assert not bruhat_leq(u, v) and not bruhat_leq(v, u)
    with pytest.raises(WeylError, match="different shape"):
        bruhat_leq(e, weyl_identity(3, 3))


SIG12 = Signature(2, 3, (1, 2))
SIG11 = Signature(2, 3, (1, 1))


@pytest.mark.parametrize(
    "sig,count",
    [
        (Signature(1, 3, (1,)), 3),
        (SIG12, 9),
        (Signature(2, 4, (2, 0)), 6),
        (Signature(1, 4, (2,)), 6),
        (Signature(3, 3, (1, 2, 3)), 9),
    ],
)
def test_min_reps_count_is_product_of_binomials(sig, count):
    reps = min_reps(sig)
    assert len(reps) == count
    expect = 1
    for i in range(1, sig.N + 1):
        expect *= math.comb(sig.n, sig.m_at(i))
    assert count == expect
    # sorted by length first, then lexicographically
    keys = [(w.length, w.perms) for w in reps]
    assert keys == sorted(keys)


def test_min_reps_enumeration_bound():
    with pytest.raises(ValueError, match="stratum enumeration too large: 9 elements"):
        min_reps(SIG12, max_count=5)


# ---------------------------------------------------------------------------
# Ekedahl-Oort dimensions


def test_eo_dimension_is_the_length():
    reps = min_reps(SIG12)
    for w in reps:
        assert eo_dimension(SIG12, w) == w.length
    assert eo_dimension(SIG12, weyl_identity(2, 3)) == 0
    top = max(reps, key=lambda w: w.length)
    assert eo_dimension(SIG12, top) == eo_space_dimension(SIG12) == 4


def test_eo_dimension_rejects_non_minimal_words():
    bad = WeylElement(((1, 2, 3), (2, 1, 3)))
    with pytest.raises(ValueError, match=r"not a minimal coset representative at place 2: \(2, 1, 3\)"):
        eo_dimension(SIG12, bad)


@pytest.mark.parametrize(
    "sig,dim",
    [
        (Signature(1, 3, (1,)), 2),
        (SIG12, 4),
        (Signature(3, 5, (4, 2, 3)), 4 + 6 + 6),
        (Signature(2, 4, (2, 0)), 4),
    ],
)
def test_eo_space_dimension_formula(sig, dim):
    assert eo_space_dimension(sig) == dim
    assert dim == sum(sig.m_at(i) * (sig.n - sig.m_at(i)) for i in range(1, sig.N + 1))


# ---------------------------------------------------------------------------
# the twisted order


def test_psi_shift_rotates_components():
    x = ((1, 2), (2, 1), (1, 2))
    assert psi_shift(x, 1) == ((1, 2), (1, 2), (2, 1))
    assert psi_shift(x, 0) == x
    assert psi_shift(x, 3) == x
    assert psi_shift(psi_shift(x, 1), 1) == psi_shift(x, 2)


def test_twisted_order_is_reflexive_and_antisymmetric():
    reps = min_reps(SIG12)
    for w in reps:
        assert twisted_preceq(SIG12, w, w)
    for u, v in itertools.combinations(reps, 2):
        assert not (twisted_preceq(SIG12, u, v) and twisted_preceq(SIG12, v, u))


def test_twisted_order_identity_below_everything():
    e = weyl_identity(2, 3)
    for w in min_reps(SIG12):
        assert twisted_preceq(SIG12, e, w)


def test_twisted_order_frozen_relations():
    u = WeylElement(((1, 2, 3), (1, 3, 2)))
    v = WeylElement(((1, 2, 3), (3, 1, 2)))
    assert twisted_preceq(SIG12, u, v)
    # distinct length-1 strata can be twisted-incomparable
    a = WeylElement(((1, 2, 3), (1, 3, 2)))
    b = WeylElement(((2, 1, 3), (1, 2, 3)))
    assert not twisted_preceq(SIG12, a, b)
    assert not twisted_preceq(SIG12, b, a)


def test_twisted_order_requires_minimal_arguments():
    bad = WeylElement(((1, 2, 3), (2, 1, 3)))
    with pytest.raises(ValueError, match="not a minimal coset representative"):
        twisted_preceq(SIG12, bad, weyl_identity(2, 3))


def test_twisted_order_search_bound():
    sig = Signature(3, 6, (5, 5, 5))
    e = weyl_identity(3, 6)
    with pytest.raises(ValueError, match=r"twisted-order search space too large: \|W_I\| = 1728000"):
        twisted_preceq(sig, e, e)


# ---------------------------------------------------------------------------
# stratification posets


def test_poset_single_place_corank_one_is_a_chain():
    d = strata_poset(Signature(1, 3, (1,)), order="bruhat")
    assert [nd["perms"] for nd in d["nodes"]] == [[[1, 2, 3]], [[2, 1, 3]], [[2, 3, 1]]]
    assert d["edges"] == [[0, 1], [1, 2]]
    assert d["order"] == "bruhat"
    assert d["spaceDimension"] == 2


def test_poset_frozen_sizes():
    t = strata_poset(SIG11, order="twisted")
    assert len(t["nodes"]) == 9 and len(t["edges"]) == 14
    b = strata_poset(SIG12, order="bruhat")
    assert len(b["nodes"]) == 9 and len(b["edges"]) == 12


def test_poset_twisted_unbalanced_example():
    d = strata_poset(SIG12, order="twisted")
    assert d["spaceDimension"] == 4
    assert [nd["length"] for nd in d["nodes"]] == [0, 1, 1, 2, 2, 2, 3, 3, 4]
    assert d["edges"][:6] == [[0, 1], [0, 2], [1, 3], [1, 4], [1, 5], [2, 3]]
    assert len(d["edges"]) == 14


def test_poset_edges_are_covering_relations():
    d = strata_poset(SIG12, order="twisted")
    nodes = [WeylElement(tuple(tuple(p) for p in nd["perms"])) for nd in d["nodes"]]
    edge_set = {tuple(e) for e in d["edges"]}
    for lo, hi in edge_set:
        u, v = nodes[lo], nodes[hi]
        assert twisted_preceq(SIG12, u, v) and u != v
        for z in nodes:
            if z in (u, v):
                continue
            assert not (twisted_preceq(SIG12, u, z) and twisted_preceq(SIG12, z, v))
    # transitive closure of the covers recovers the full relation
    reach = {(k, k) for k in range(len(nodes))}
    frontier = set(edge_set)
    while frontier:
        reach |= frontier
        frontier = {
            (a, d2) for (a, b) in reach for (c, d2) in edge_set if b == c
        } - reach
    for a, b in itertools.product(range(len(nodes)), repeat=2):
        assert ((a, b) in reach) == twisted_preceq(SIG12, nodes[a], nodes[b])


def test_poset_rejects_unknown_order():
    with pytest.raises(ValueError, match="unknown order 'zip': use 'twisted' or 'bruhat'"):
        strata_poset(SIG12, order="zip")


# ---------------------------------------------------------------------------
# standard shapes


def test_identity_shape_is_the_split_point():
    sig = Signature(2, 4, (3, 1))
    pt = standard_shape(sig, 3, weyl_identity(2, 4))
    assert pt.omega(1) == [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 0]]
    assert pt.omega(2) == [[1], [0], [0], [0]]


@pytest.mark.parametrize("sig", [SIG12, Signature(1, 3, (2,)), Signature(2, 4, (2, 3))])
@pytest.mark.parametrize("p", [2, 3])
def test_standard_shapes_are_zip_points(sig, p):
    for w in min_reps(sig):
        pt = standard_shape(sig, p, w)
        for i in range(1, sig.N + 1):
            V, F = pt.V_at(i), pt.F_at(i)
            m_next = sig.m_at(sig.place(i + 1))
            assert col_rank(p, V) == m_next
            assert col_rank(p, F) == sig.n - m_next
            assert mat_mul(p, V, F) == zeros(sig.n, sig.n)
            assert mat_mul(p, F, V) == zeros(sig.n, sig.n)


def test_standard_shapes_are_separated_by_slopes():
    # probing a single omega-line distinguishes the three strata here
    sig = Signature(1, 3, (2,))
    got = {}
    for w in min_reps(sig):
        pt = standard_shape(sig, 2, w)
        probe = [[row[0]] for row in pt.omega(1)]
        got[w.perms[0]] = empirical_slope(pt, 1, probe).r
    assert got == {(1, 2, 3): (1,), (1, 3, 2): (1,), (3, 1, 2): (2,)}
