from fractions import Fraction
from math import gcd, sqrt

import numpy as np
import pytest

from qsdesign.core import (
    DesignError,
    evaluate,
    hamming_distance,
    is_latin_square,
    l1_distance,
    l2_distance_sq,
    pair_counts,
    pairwise_l1,
    r_ave,
)
from qsdesign.glp import e_tilde, odd_primes
from qsdesign.optimizer import TAConfig
from qsdesign.single import (
    competitor_baseline,
    construct_nm,
    euler_phi,
    find_totient_modulus,
    has_totient_decomposition,
    latin_square_L,
    route_available,
    select_b1,
    select_b2,
    shift_constant,
    williams_latin_square,
)

import reference_data as ref

FAST = TAConfig(I=20, J=50)


def brute_phi(n):
    return sum(1 for k in range(1, n + 1) if gcd(k, n) == 1)


def test_euler_phi_matches_brute_force():
    assert [euler_phi(n) for n in range(1, 300)] == [brute_phi(n) for n in range(1, 300)]


@pytest.mark.parametrize("p", [5, 7, 11, 13, 17, 19, 23, 29, 31, 37])
def test_shift_selections_match_reference_table(p):
    mins, pair = ref.BEST_SHIFTS[p]
    assert select_b1(p).minimizers == mins
    assert select_b2(p).candidates == tuple(sorted(pair))


def test_b1_examples():
    s = select_b1(7)
    assert s.minimizers == (1, 2) and s.chosen == 1
    assert s.r_value == r_ave(e_tilde(7, 1))


def test_b2_p13_constant():
    s = select_b2(13)
    assert s.c == 4 and s.candidates == (1, 5)


def test_shift_constant_satisfies_its_inequality_minimally():
    for p in odd_primes(5, 200):
        c = shift_constant(p)
        assert 4 * (c * c + 2 * (c + 1) ** 2) >= p * p - 1
        if c > 0:
            assert 4 * ((c - 1) ** 2 + 2 * c * c) < p * p - 1 or (c - 1) ** 2 * 12 > p * p - 1


def test_b2_choice_prefers_larger_l2_then_smaller_b():
    for p in odd_primes(5, 60):
        s = select_b2(p)
        key = {b: l2_distance_sq(e_tilde(p, b)) for b in s.candidates}
        best = max(key.values())
        assert s.chosen == min(b for b in s.candidates if key[b] == best)


@pytest.mark.parametrize("m, N, cls", [(2, 5, "a"), (8, 17, "a"), (32, 128, "c"), (14, 29, "a"), (24, 65, "other")])
def test_find_totient_modulus(m, N, cls):
    dec = find_totient_modulus(m)
    assert (dec.N, dec.condition_class) == (N, cls)
    assert len(dec.h) == m and all(gcd(h, N) == 1 and 2 * h < N for h in dec.h)


def test_totient_modulus_preference_is_exhaustive():
    # every N with phi(N) = 2m lies below 8m^2; the chosen one is preferred among all of them
    rank = {"a": 0, "b": 1, "c": 2, "other": 3}
    from qsdesign.single import _totient_class

    for m in range(2, 60, 2):
        sols = [N for N in range(3, 8 * m * m + 1) if euler_phi(N) == 2 * m]
        if not sols:
            assert not has_totient_decomposition(m)
            continue
        dec = find_totient_modulus(m)
        assert dec.N == min(sols, key=lambda v: (rank[_totient_class(v)], v))


def test_totient_rejects_odd_m_and_gaps():
    with pytest.raises(DesignError):
        find_totient_modulus(7)
    assert not has_totient_decomposition(7)
    assert not has_totient_decomposition(17)  # phi(N) = 34 has no solution


def test_latin_square_L_m8():
    x, dec = latin_square_L(8)
    assert dec.N == 17 and dec.h == tuple(range(1, 9))
    assert x.values[0, 0] == 1
    assert (l1_distance(x), l2_distance_sq(x)) == (24, 90)


def test_latin_square_L_m14_ratios():
    x, _ = latin_square_L(14)
    n = m = 14
    assert l1_distance(x) == (n + 1) * m // 3
    assert round(sqrt(l2_distance_sq(x) / (n * (n + 1) * m // 6)), 3) == 0.958


@pytest.mark.parametrize("m", [2, 4, 6, 8, 10, 12, 14, 16, 20, 22, 24, 32])
def test_L_is_latin_and_class_a_is_equidistant(m):
    x, dec = latin_square_L(m)
    assert is_latin_square(x)
    if dec.condition_class == "a":
        assert set(pairwise_l1(x).tolist()) == {Fraction(m * (m + 1), 3)}


def test_williams_latin_square_examples():
    assert williams_latin_square(8).values[0].tolist() == [8, 7, 1, 6, 2, 5, 3, 4]
    assert williams_latin_square(2).values.tolist() == [[2, 1], [1, 2]]
    with pytest.raises(DesignError):
        williams_latin_square(5)


@pytest.mark.parametrize("m", range(2, 41, 2))
def test_williams_latin_square_is_pair_balanced(m):
    sq = williams_latin_square(m)
    assert is_latin_square(sq)
    assert set(pair_counts(sq).off_diagonal().tolist()) == {1}


def test_competitor_baseline_m6():
    d = competitor_baseline(6)
    assert (l1_distance(d.x), l2_distance_sq(d.x)) == (12, 28)
    assert round(float(r_ave(d.o)), 2) == 0.36
    assert all(sorted(r) == list(range(1, 7)) for r in d.o.values.tolist())
    with pytest.raises(DesignError):
        competitor_baseline(8)


def test_construct_nm_m6_reproduces_reference_design():
    d = construct_nm(6)
    r = evaluate(d)
    assert (r.d1, r.d2sq, r.dH, r.r_ave) == (14, 40, 6, Fraction(1, 5))
    assert set(r.t.off_diagonal().tolist()) == {1}
    expected = np.array(ref.DESIGN_6X6)
    assert d.o.values.tolist() == expected[:, 6:].tolist()
    assert sorted(d.x.values.tolist()) == sorted(expected[:, :6].tolist())
    assert d.meta["x_source"] == "equidistant"


def test_construct_nm_m8():
    r = evaluate(construct_nm(8, FAST, seed=0))
    assert (r.d1, r.d2sq, r.dH) == (24, 90, 8)
    assert r.r_ave <= Fraction(143, 1000)
    assert set(r.t.off_diagonal().tolist()) == {1}


def test_construct_nm_m4_uses_smallest_rave_shift():
    assert r_ave(construct_nm(4).o) == Fraction(1, 3)


@pytest.mark.parametrize("m", [2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22])
def test_construct_nm_structure(m):
    r = evaluate(construct_nm(m, FAST, seed=3))
    assert r.is_lhd and is_latin_square(construct_nm(m, FAST, seed=3).o)
    assert set(r.t.off_diagonal().tolist()) == {1}
    assert r.dH == m


def test_construct_nm_is_deterministic_per_seed():
    a = construct_nm(8, FAST, seed=11)
    b = construct_nm(8, FAST, seed=11)
    assert np.array_equal(a.o.values, b.o.values)


@pytest.mark.parametrize("m", [3, 5, 7, 9, 17])
def test_construct_nm_unsupported(m):
    assert route_available(m) is None
    with pytest.raises(DesignError, match="unsupported m"):
        construct_nm(m)


def test_route_a_wins_for_even_m_with_prime_successor():
    assert route_available(6) == "glp"
    assert has_totient_decomposition(6)
    assert route_available(8) == "totient"
