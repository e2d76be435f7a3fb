"""Designs with as many runs as components (n = m).

Two families are covered.  When m+1 = p is an odd prime, both parts come from
leave-one-out Williams-transformed lattices: the sequence part is the shift
with the smallest average absolute correlation and the quantitative part is
the shift picked by a closed-form rule (or the equidistant design obtained
from the (2m+1)-point lattice when 2m+1 is also prime).  Otherwise, for even
m with phi(N) = 2m for some N, X is the multiplicative Latin square modulo N
and O is a level-permuted Williams Latin square found by threshold accepting.

Shift rule for X: take c = floor(sqrt((p^2-1)/12)), bumped by one when
c^2 + 2(c+1)^2 < (p^2-1)/4.  The variant without the square root,
c = floor((p^2-1)/12), is far too large (p=7 gives shifts {0, 3} instead of
the expected {4, 6}) and is not used.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from fractions import Fraction
from math import gcd, isqrt

import numpy as np

from .core import (
    DesignError,
    QSDesign,
    QuantDesign,
    SeqDesign,
    derive_seeds,
    l2_distance_sq,
    r_ave,
)
from .glp import equidistant_design, e_tilde, glp, is_prime, williams_inv, williams_inv_map
from .optimizer import TAConfig, ta_minimize_rave


@dataclass(frozen=True)
class B1Selection:
    p: int
    minimizers: tuple[int, ...]
    chosen: int
    r_value: Fraction


@dataclass(frozen=True)
class B2Selection:
    p: int
    c: int
    candidates: tuple[int, ...]
    chosen: int


@dataclass(frozen=True)
class TotientDecomposition:
    m: int
    N: int
    h: tuple[int, ...]
    condition_class: str  # "a" (N=p or 2p), "b" (N=4p), "c" (N=2^t), "other"


def rave_by_shift(p: int) -> list[Fraction]:
    """Exact r_ave of every leave-one-out Williams design, indexed by shift b."""
    return [r_ave(e_tilde(p, b)) for b in range(p)]


def select_b1(p: int) -> B1Selection:
    """Shifts whose leave-one-out Williams design has the smallest r_ave (ties -> smallest b)."""
    if p < 3 or not is_prime(p):
        raise DesignError(f"{p} is not an odd prime")
    values = rave_by_shift(p)
    best = min(values)
    mins = tuple(b for b, v in enumerate(values) if v == best)
    return B1Selection(p, mins, mins[0], best)


def shift_constant(p: int) -> int:
    c = isqrt((p * p - 1) // 12)
    # c^2 + 2(c+1)^2 >= (p^2-1)/4, cleared of the fraction
    if 4 * (c * c + 2 * (c + 1) ** 2) >= p * p - 1:
        return c
    return c + 1


def select_b2(p: int) -> B2Selection:
    """The +/- pair W^-1((p-1)/2 +/- c); the member with larger squared L2 distance is chosen."""
    if p < 3 or not is_prime(p):
        raise DesignError(f"{p} is not an odd prime")
    c = shift_constant(p)
    half = (p - 1) // 2
    cands = tuple(sorted({williams_inv((half + c) % p, p), williams_inv((half - c) % p, p)}))
    if len(cands) == 1:
        return B2Selection(p, c, cands, cands[0])
    chosen = max(cands, key=lambda b: (l2_distance_sq(e_tilde(p, b)), -b))
    return B2Selection(p, c, cands, chosen)


def euler_phi(n: int) -> int:
    result, rest, f = n, n, 2
    while f * f <= rest:
        if rest % f == 0:
            while rest % f == 0:
                rest //= f
            result -= result // f
        f += 1
    if rest > 1:
        result -= result // rest
    return result


def _totient_class(N: int) -> str:
    if N > 2 and is_prime(N):
        return "a"
    if N % 2 == 0 and N // 2 > 2 and is_prime(N // 2):
        return "a"
    if N % 4 == 0 and N // 4 > 2 and is_prime(N // 4):
        return "b"
    if N >= 8 and N & (N - 1) == 0:
        return "c"
    return "other"


_CLASS_RANK = {"a": 0, "b": 1, "c": 2, "other": 3}


@lru_cache(maxsize=None)
def find_totient_modulus(m: int) -> TotientDecomposition:
    """Pick N with phi(N) = 2m, preferring N = p or 2p, then 4p, then 2^t, then the smallest other N."""
    if m < 1 or m % 2:
        raise DesignError(f"m={m} must be a positive even integer")
    target = 2 * m
    # phi(N) >= sqrt(N/2), so every solution has N <= 8m^2
    for ceiling in (8 * m + 8, 8 * m * m):
        found = [N for N in range(3, ceiling + 1) if euler_phi(N) == target]
        if found:
            break
    else:
        raise DesignError(f"no N with phi(N) = {target}; m={m} has no totient decomposition")
    N = min(found, key=lambda v: (_CLASS_RANK[_totient_class(v)], v))
    h = tuple(x for x in range(1, (N + 1) // 2) if gcd(x, N) == 1)
    assert len(h) == m
    return TotientDecomposition(m, N, h, _totient_class(N))


def has_totient_decomposition(m: int) -> bool:
    if m < 1 or m % 2:
        return False
    try:
        find_totient_modulus(m)
    except DesignError:
        return False
    return True


def latin_square_L(m: int) -> tuple[QuantDesign, TotientDecomposition]:
    """Latin square l_ij = min(h_i h_j mod N, N - h_i h_j mod N), relabelled h_i -> i."""
    dec = find_totient_modulus(m)
    h = np.array(dec.h, dtype=np.int64)
    prod = np.outer(h, h) % dec.N
    raw = np.minimum(prod, dec.N - prod)
    index = {v: i + 1 for i, v in enumerate(dec.h)}
    relabelled = np.vectorize(index.__getitem__, otypes=[np.int64])(raw)
    return QuantDesign(relabelled), dec


def williams_latin_square(m: int) -> SeqDesign:
    """Pair-balanced Latin square: row i is W^-1 over Z_m shifted by i-1, with 0 written as m."""
    if m < 2 or m % 2:
        raise DesignError(f"Williams Latin square needs an even m >= 2, got {m}")
    h = williams_inv_map(m)
    sq = (h[None, :] + np.arange(m)[:, None]) % m
    sq[sq == 0] = m
    return SeqDesign(sq)


def competitor_baseline(m: int) -> QSDesign:
    """Baseline with X and O both equal to the first m rows of the (m+1)-point lattice."""
    p = m + 1
    if p < 3 or not is_prime(p):
        raise DesignError(f"baseline needs m+1 prime, got m={m}")
    rows = glp(p).values[:m]
    return QSDesign(QuantDesign(rows), SeqDesign(rows), {"route": "glp-baseline", "p": p})


def route_available(m: int) -> str | None:
    """"glp" when m+1 is an odd prime, "totient" for even m with a decomposition, else None."""
    if m >= 2 and is_prime(m + 1):
        return "glp"
    if has_totient_decomposition(m):
        return "totient"
    return None


def construct_nm(m: int, ta_config: TAConfig | None = None, seed: int = 0) -> QSDesign:
    """Build the n = m design for ``m`` components."""
    route = route_available(m)
    if route == "glp":
        p = m + 1
        b1 = select_b1(p)
        b2 = select_b2(p)
        o = SeqDesign(e_tilde(p, b1.chosen))
        x = QuantDesign(e_tilde(p, b2.chosen))
        meta = {"route": "glp-williams", "p": p, "b1": b1.chosen, "b2": b2.chosen, "x_source": "etilde"}
        if is_prime(2 * m + 1):
            eq = equidistant_design(m)
            # ties go to the equidistant design, which always attains the L1 bound
            if l2_distance_sq(eq) >= l2_distance_sq(x):
                x = eq
                meta["x_source"] = "equidistant"
        return QSDesign(x, o, meta)
    if route == "totient":
        x, dec = latin_square_L(m)
        opt_seed = derive_seeds(seed)[3]
        cfg = replace(ta_config or TAConfig(), seed=opt_seed)
        o, trace = ta_minimize_rave(williams_latin_square(m), cfg)
        meta = {"route": "totient-williams", "N": dec.N, "class": dec.condition_class, "seed": seed}
        return QSDesign(x, o, meta)
    reasons = []
    if not is_prime(m + 1):
        reasons.append(f"m+1={m + 1} is not an odd prime")
    if m % 2:
        reasons.append(f"m={m} is odd")
    else:
        reasons.append(f"no N with phi(N)={2 * m}")
    raise DesignError(f"unsupported m={m}: " + "; ".join(reasons))
