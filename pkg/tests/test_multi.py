import logging
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsdesign.core import (
    DesignError,
    QSDesign,
    QuantDesign,
    SeqDesign,
    evaluate,
    hamming_distance,
    hamming_matrix,
    is_latin_square,
    is_marginally_coupled,
    latin_blocks_structure,
    n2m_bounds,
    pair_counts,
    r_ave,
)
from qsdesign.glp import equidistant_design, e_tilde
from qsdesign.multi import (
    assemble_x,
    general_km,
    generate,
    paired_construct,
    ranked_shifts,
    supported_sizes,
    three_step,
)
from qsdesign.optimizer import TAConfig
from qsdesign.single import latin_square_L, williams_latin_square

import reference_data as ref

FAST = TAConfig(I=20, J=50)


def halves(rows):
    a = np.array(rows)
    m = a.shape[1] // 2
    return a[:, :m], a[:, m:]


def column_perm(block, f0):
    """0-based source column in f0 for every column of block (block = f0 columns, no lift)."""
    cols = [c.tolist() for c in f0.T]
    return [cols.index(c.tolist()) for c in block.T]


def ells_from_blocks(per_block):
    return [list(col) for col in zip(*per_block)]


# -- assembly -------------------------------------------------------------------


def test_12x4_reconstructs_from_its_reference_parts():
    x, o = halves(ref.DESIGN_12X4)
    f0 = e_tilde(5, 3)
    perms = [column_perm(np.array(fb), f0) for fb in ref.F_BLOCKS_12X4]
    assert perms == [[2, 3, 1, 0], [3, 2, 0, 1], [3, 0, 1, 2]]
    assert assemble_x(f0, perms, ref.ELLS_12X4).values.tolist() == x.tolist()
    assert o.tolist() == np.vstack([e_tilde(5, b) for b in (1, 3, 4)]).tolist()
    assert ranked_shifts(5)[:3] == [1, 3, 4]


def test_12x4_metrics():
    x, o = halves(ref.DESIGN_12X4)
    r = evaluate(QSDesign(QuantDesign(x), SeqDesign(o)))
    assert (r.d1, r.d2sq, r.dH, r.r_ave_decimal) == (6, 12, 2, "0.333")
    assert set(r.t.off_diagonal().tolist()) == {3}
    assert r.is_marginally_coupled


def test_12x6_reconstructs_from_its_parts():
    x, o = halves(ref.DESIGN_12X6)
    perms = [[2, 5, 1, 3, 4, 0], [4, 3, 1, 5, 0, 2]]
    ells = ells_from_blocks([[0, 0, 0, 1, 0, 0], [1, 1, 1, 0, 1, 1]])
    assert assemble_x(equidistant_design(6).values, perms, ells).values.tolist() == x.tolist()
    assert o.tolist() == np.vstack([e_tilde(7, 1), e_tilde(7, 6)]).tolist()
    r = evaluate(QSDesign(QuantDesign(x), SeqDesign(o)))
    assert (r.d1, r.d2sq, r.dH, r.r_ave) == (14, 40, 4, Fraction(1, 5))
    assert set(r.t.off_diagonal().tolist()) == {2}
    assert r.is_marginally_coupled


def test_16x8_reconstructs_from_its_parts():
    x, o = halves(ref.DESIGN_16X8)
    perm = [6, 7, 2, 5, 1, 3, 4, 0]
    ells = ells_from_blocks([[0, 0, 0, 0, 1, 0, 0, 0], [1, 1, 1, 1, 0, 1, 1, 1]])
    assert assemble_x(latin_square_L(8)[0].values, [perm, perm], ells).values.tolist() == x.tolist()
    m = williams_latin_square(8).values
    for blk in (o[:8], o[8:]):
        # each O block is M with its levels renamed
        lut = {int(a): int(b) for a, b in zip(m.ravel(), blk.ravel())}
        assert len(lut) == 8 and sorted(lut.values()) == list(range(1, 9))
        assert np.array_equal(np.vectorize(lut.get)(m), blk)


def test_assemble_x_validates_inputs():
    f0 = e_tilde(5, 3)
    with pytest.raises(DesignError):
        assemble_x(f0, [[0, 1, 2, 3]], [[0], [0], [0]])
    with pytest.raises(DesignError):
        assemble_x(f0, [[0, 1, 2, 3], [0, 1, 2, 3]], [[0, 0]] * 4)
    with pytest.raises(DesignError):
        assemble_x(f0, [[0, 1, 2, 2]], [[0]] * 4)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), k=st.integers(2, 6))
def test_assembled_x_collapses_to_k_bands(seed, k):
    rng = np.random.default_rng(seed)
    f0 = e_tilde(7, 2)
    m = 6
    x = assemble_x(f0, [rng.permutation(m).tolist() for _ in range(k)], [rng.permutation(k).tolist() for _ in range(m)])
    collapsed = -(-x.values // m)
    for col in collapsed.T:
        assert sorted(np.bincount(col)[1:].tolist()) == [m] * k


# -- three-step -----------------------------------------------------------------


@pytest.mark.parametrize("p, k", [(5, 3), (5, 5), (7, 2), (7, 4), (11, 3), (13, 13)])
def test_three_step_structure(p, k):
    m = p - 1
    for seed in range(5):
        d = three_step(p, k, seed)
        assert is_marginally_coupled(d) and latin_blocks_structure(d)
        assert set(pair_counts(d.o).off_diagonal().tolist()) == {k}
        assert hamming_distance(d.o) >= m - 3
        assert d.meta["route"] == "three-step"


def test_three_step_k_range():
    with pytest.raises(DesignError):
        three_step(7, 1)
    with pytest.raises(DesignError):
        three_step(7, 8)
    with pytest.raises(DesignError):
        three_step(9, 2)


def test_three_step_is_deterministic():
    a, b = three_step(11, 3, 4), three_step(11, 3, 4)
    assert np.array_equal(a.x.values, b.x.values) and np.array_equal(a.o.values, b.o.values)
    assert not np.array_equal(a.x.values, three_step(11, 3, 5).x.values)


def test_three_step_k2_logs_when_bound_preconditions_fail(caplog):
    with caplog.at_level(logging.WARNING, logger="qsdesign.multi"):
        for seed in range(10):
            d = three_step(11, 2, seed)
            hm = hamming_matrix(d.o)[np.triu_indices(20, 1)]
            fails = hm.min() < 8 or 2 * int((hm == 8).sum()) >= 100
            assert fails == any("precondition" in r.message for r in caplog.records)
            caplog.clear()


# -- paired ---------------------------------------------------------------------


@pytest.mark.parametrize("p", [5, 7, 11, 13, 17, 19, 23])
def test_paired_hamming_structure(p):
    m = p - 1
    d = paired_construct(p, seed=2)
    hm = hamming_matrix(d.o)[np.triu_indices(2 * m, 1)]
    assert hm.min() == m - 2
    assert int((hm == m - 2).sum()) == m
    assert is_marginally_coupled(d)
    assert set(pair_counts(d.o).off_diagonal().tolist()) == {2}
    r = evaluate(d)
    assert r.d1 <= n2m_bounds(m)[0] and r.d2sq <= n2m_bounds(m)[1]


def test_paired_p7_matches_reference_metrics():
    x, o = halves(ref.DESIGN_12X6)
    d = paired_construct(7, seed=0)
    assert d.o.values.tolist() == o.tolist()
    r = evaluate(d)
    assert (r.d1, r.dH) == (14, 4)


# -- general km -----------------------------------------------------------------


def test_general_km_m8_k2_matches_reference_metrics():
    r = evaluate(general_km(8, 2, seed=0))
    assert (r.d1, r.d2sq, r.dH) == (24, 90, 6)
    assert r.r_ave <= Fraction(15, 100)
    assert r.is_marginally_coupled


@pytest.mark.parametrize("seed", range(3))
def test_general_km_m8_k3_pair_counts(seed):
    d = general_km(8, 3, FAST, seed)
    assert set(pair_counts(d.o).off_diagonal().tolist()) == {3}
    assert all(is_latin_square(b) for b in np.split(d.o.values, 3))
    assert is_marginally_coupled(d)


def test_general_km_errors():
    with pytest.raises(DesignError):
        general_km(8, 1)
    with pytest.raises(DesignError):
        general_km(7, 2)


# -- dispatch -------------------------------------------------------------------


@pytest.mark.parametrize(
    "n, m, route",
    [(6, 6, "glp-williams"), (8, 8, "totient-williams"), (12, 6, "paired"), (18, 6, "three-step"), (16, 8, "general-km"), (48, 6, "general-km")],
)
def test_generate_routes(n, m, route):
    d = generate(n, m, FAST, seed=1)
    assert d.meta["route"] == route
    assert d.n == n and d.m == m
    assert is_marginally_coupled(d)


def test_generate_errors_name_the_problem():
    with pytest.raises(DesignError, match="multiple of m"):
        generate(13, 6)
    with pytest.raises(DesignError, match="supported n for this m: none"):
        generate(10, 5)
    with pytest.raises(DesignError, match="no construction"):
        generate(18, 9)


def test_supported_sizes_m4_and_m6():
    assert supported_sizes(4, 30) == [(4, "nm"), (8, "paired"), (12, "three-step"), (16, "three-step"), (20, "three-step"), (24, "general-km"), (28, "general-km")]
    assert [r for _, r in supported_sizes(6, 48)][-1] == "general-km"
    assert supported_sizes(9, 100) == []


def test_generated_rave_is_finite_fraction():
    assert isinstance(r_ave(generate(20, 4, seed=0).o), Fraction)
