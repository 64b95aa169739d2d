import random
from fractions import Fraction

import pytest

from ampnef.cones import (
    ClosureResult,
    ConesError,
    average_step,
    averaging_closure,
    csv_cone,
    csv_rays,
    decompose_in_rays,
    diagonal_score,
    hodge_seed,
    tilted_cone,
    xi_inverse,
    xi_transform,
)


def test_cone_rows_t1():
    cone = csv_cone(2, (2,))
    assert cone.rows == (("cross(1->1)", (Fraction(3),)),)
    assert cone.member((1,)) == (True, [])
    assert cone.member((0,)) == (True, [])
    assert cone.member((-1,)) == (False, ["cross(1->1)"])


def test_ray_table():
    assert csv_rays(2, (1, 1)) == ((1, 2), (2, 1))
    assert csv_rays(2, (1, 1, 1)) == ((1, 2, 4), (4, 1, 2), (2, 4, 1))
    assert csv_rays(3, (2, 1)) == ((1, 9), (3, 1))


def test_rays_need_two_places():
    with pytest.raises(ConesError, match="at least two"):
        csv_rays(2, (3,))


def test_rays_are_members_with_expected_tightness():
    rng = random.Random(5)
    for _ in range(40):
        t = rng.randint(2, 5)
        a = tuple(rng.randint(1, 3) for _ in range(t))
        p = rng.choice((2, 3))
        cone = csv_cone(p, a)
        for ray in csv_rays(p, a):
            ok, bad = cone.member(ray)
            assert ok and not bad
            tight = sum(
                1
                for _, row in cone.rows
                if sum(c * v for c, v in zip(row, ray)) == 0
            )
            assert tight == t - 1


def test_decompose_round_trip():
    rays = csv_rays(2, (1, 1, 1))
    x = tuple(r0 + 2 * r1 for r0, r1 in zip(rays[0], rays[1]))
    assert x == (9, 4, 8)
    assert decompose_in_rays(2, (1, 1, 1), x) == (1, 2, 0)
    assert decompose_in_rays(2, (1, 1, 1), (0, 0, 0)) == (0, 0, 0)
    assert decompose_in_rays(2, (1, 1, 1), (-1, 0, 0)) is None


def test_member_iff_decomposable():
    rng = random.Random(17)
    hits = 0
    for _ in range(500):
        t = rng.randint(2, 4)
        a = tuple(rng.randint(1, 2) for _ in range(t))
        p = rng.choice((2, 3))
        x = tuple(Fraction(rng.randint(-4, 8), rng.randint(1, 3)) for _ in range(t))
        inside = csv_cone(p, a).member(x)[0]
        coeffs = decompose_in_rays(p, a, x)
        assert inside == (coeffs is not None)
        if inside:
            hits += 1
            rays = csv_rays(p, a)
            recon = tuple(
                sum(c * ray[r] for c, ray in zip(coeffs, rays)) for r in range(t)
            )
            assert recon == x
    assert hits > 20  # the sampler actually lands inside sometimes


def test_dimension_mismatch():
    with pytest.raises(ConesError, match="dimension"):
        csv_cone(2, (1, 1)).member((1, 2, 3))
    with pytest.raises(ConesError, match="coordinates"):
        decompose_in_rays(2, (1, 1), (1, 2, 3))
    with pytest.raises(ConesError, match="gaps must be positive"):
        csv_cone(2, (1, 0))


# ---------------------------------------------------------------------------
# tilted coordinates


def test_xi_round_trip_and_seed():
    a = (1, 2)
    y = (Fraction(3, 2), Fraction(-1))
    assert xi_inverse(2, a, xi_transform(2, a, y)) == y
    assert xi_transform(2, a, hodge_seed(2, a)) == (1, 1)
    assert hodge_seed(2, (1, 1, 1)) == (1, Fraction(1, 2), Fraction(1, 4))


def test_tilted_cone_is_transform_preimage():
    rng = random.Random(0)
    for _ in range(300):
        t = rng.randint(2, 4)
        a = tuple(rng.randint(1, 3) for _ in range(t))
        p = rng.choice((2, 3))
        y = tuple(Fraction(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(t))
        assert (
            tilted_cone(p, a).member(y)[0]
            == csv_cone(p, a).member(xi_transform(p, a, y))[0]
        )


def test_tilted_rows_closed_form():
    cone = tilted_cone(2, (1, 2))
    names = [name for name, _ in cone.rows]
    assert names == ["desc(1)", "wrap"]
    assert dict(cone.rows)["wrap"] == (-1, 8)


# ---------------------------------------------------------------------------
# averaging dynamics


def test_average_step():
    assert average_step((1, 3, 7), 2) == (1, 5, 5)
    assert average_step((1, 3), 1) == (2, 2)
    with pytest.raises(ConesError, match="out of range"):
        average_step((1, 3), 2)


def test_diagonal_score():
    assert diagonal_score([(Fraction(1), Fraction(2))]) == Fraction(1, 2)
    assert diagonal_score([(1, 1, 1)]) == 1
    with pytest.raises(ConesError, match="positive coordinate"):
        diagonal_score([(Fraction(0), Fraction(-1))])


def test_closure_two_places_hits_diagonal_at_first_step():
    res = averaging_closure(2, (1, 1), max_iter=5)
    assert [str(s) for s in res.scores] == ["1/2", "1"]
    assert res.converged and not res.truncated
    doc = res.to_json()
    assert doc["iterations"] == 1 and doc["final_score"] == "1"
    assert doc["scores"] == ["1/2", "1"]


def test_closure_three_places_nearly_converges():
    res = averaging_closure(2, (1, 1, 1), max_iter=30)
    assert res.final_score == Fraction(626349397, 626349398)
    assert not res.converged
    assert res.final_score > Fraction(99, 100)
    # the score trace never decreases
    assert all(lo <= hi for lo, hi in zip(res.scores, res.scores[1:]))


def test_closure_guards():
    with pytest.raises(ConesError, match="two essential places"):
        averaging_closure(2, (3,))
    with pytest.raises(ConesError, match="nonnegative"):
        averaging_closure(2, (1, 1), max_iter=-1)


def test_closure_generators_stay_in_cone():
    res = averaging_closure(3, (2, 1), max_iter=10)
    cone = tilted_cone(3, (2, 1))
    for gen_set in res.generators:
        for g in gen_set:
            assert cone.member(g)[0]
    assert isinstance(res, ClosureResult)
