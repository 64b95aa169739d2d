"""Shared strategies and helpers for the suite."""

from fractions import Fraction

from hypothesis import strategies as st

from ampnef.datum import Signature

SMALL_PRIMES = (2, 3, 5)


@st.composite
def signatures(draw, max_places=4, max_rank=5, min_essential=0):
    N = draw(st.integers(1, max_places))
    n = draw(st.integers(2, max_rank))
    m = draw(
        st.lists(st.integers(0, n), min_size=N, max_size=N).map(tuple)
    )
    sig = Signature(N, n, m)
    if sig.t < min_essential:
        # patch enough places to be essential rather than rejecting the draw
        m = list(m)
        for i in range(N):
            if sum(1 for v in m if 0 < v < n) >= min_essential:
                break
            m[i] = draw(st.integers(1, n - 1))
        sig = Signature(N, n, tuple(m))
    return sig


def rationals(max_num=10, max_den=6):
    return st.fractions(
        min_value=-max_num, max_value=max_num, max_denominator=max_den
    )


def random_signature(rng, max_places=4, max_rank=5, min_essential=0):
    """random.Random-driven counterpart of the strategy, for seeded suites."""
    while True:
        N = rng.randint(1, max_places)
        n = rng.randint(2, max_rank)
        m = tuple(rng.randint(0, n) for _ in range(N))
        sig = Signature(N, n, m)
        if sig.t >= min_essential:
            return sig


def random_rational(rng, lo=-10, hi=10, max_den=4):
    den = rng.randint(1, max_den)
    return Fraction(rng.randint(lo * den, hi * den), den)
