"""Good lattice point sets, Williams level maps and leave-one-out Latin squares."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import isqrt
from typing import Literal

import numpy as np

from .core import DesignError, QuantDesign

Transform = Literal["none", "williams"]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, isqrt(n) + 1, 2))


def odd_primes(lo: int, hi: int) -> list[int]:
    """Odd primes p with lo <= p <= hi."""
    return [p for p in range(max(lo, 3), hi + 1) if is_prime(p)]


def _check_odd_prime(p: int) -> None:
    if p < 3 or not is_prime(p):
        raise DesignError(f"{p} is not an odd prime")


@dataclass(frozen=True, eq=False)
class GlpSet:
    """p x (p-1) lattice: row i (1-based) is i*(1, ..., p-1) mod p; the last row is zero."""

    p: int
    values: np.ndarray

    @property
    def m(self) -> int:
        return self.p - 1


@dataclass(frozen=True, eq=False)
class ShiftedDesign:
    """(D0 + b) mod p, optionally passed through the Williams map; ``constant`` is its last-row value."""

    base: GlpSet
    b: int
    transform: Transform
    values: np.ndarray
    constant: int


@dataclass(frozen=True, eq=False)
class LeaveOneOutDesign:
    """m x m Latin square left after deleting the constant row and compacting levels to 1..m."""

    values: np.ndarray
    deleted_level: int
    relabel: dict[int, int]

    @property
    def m(self) -> int:
        return self.values.shape[0]


def glp(p: int) -> GlpSet:
    _check_odd_prime(p)
    rows = np.arange(1, p + 1, dtype=np.int64)[:, None]
    h = np.arange(1, p, dtype=np.int64)[None, :]
    vals = (rows * h) % p
    vals.setflags(write=False)
    return GlpSet(p, vals)


def williams(x: int, p: int) -> int:
    """Williams level map on Z_p: 2x below p/2, 2(p-x)-1 otherwise.

    Bijective for any modulus ``p >= 1``, odd or even.
    """
    if not 0 <= x < p:
        raise DesignError(f"residue {x} outside 0..{p - 1}")
    return 2 * x if 2 * x < p else 2 * (p - x) - 1


def williams_map(p: int) -> np.ndarray:
    """(W(0), ..., W(p-1))."""
    x = np.arange(p, dtype=np.int64)
    return np.where(2 * x < p, 2 * x, 2 * (p - x) - 1)


@lru_cache(maxsize=None)
def _williams_inverse_table(modulus: int) -> tuple[int, ...]:
    inv = [0] * modulus
    for x, y in enumerate(williams_map(modulus).tolist()):
        inv[y] = x
    return tuple(inv)


def williams_inv(y: int, modulus: int) -> int:
    if not 0 <= y < modulus:
        raise DesignError(f"residue {y} outside 0..{modulus - 1}")
    return _williams_inverse_table(modulus)[y]


def williams_inv_map(modulus: int) -> np.ndarray:
    """(W^-1(0), ..., W^-1(modulus-1))."""
    return np.array(_williams_inverse_table(modulus), dtype=np.int64)


def modified_williams(x: int, q: int) -> int:
    """Even-valued variant: 2x below q/2, 2(q-x) otherwise."""
    if not 0 <= x < q:
        raise DesignError(f"residue {x} outside 0..{q - 1}")
    return 2 * x if 2 * x < q else 2 * (q - x)


def shifted(d0: GlpSet, b: int, transform: Transform = "williams") -> ShiftedDesign:
    p = d0.p
    if not 0 <= b < p:
        raise DesignError(f"shift {b} outside 0..{p - 1}")
    vals = (d0.values + b) % p
    constant = b
    if transform == "williams":
        vals = williams_map(p)[vals]
        constant = williams(b, p)
    elif transform != "none":
        raise DesignError(f"unknown transform {transform!r}")
    vals.setflags(write=False)
    return ShiftedDesign(d0, b, transform, vals, constant)


def leave_one_out(e: ShiftedDesign) -> LeaveOneOutDesign:
    """Drop the constant last row and relabel z -> z+1 (z < v), z (z > v)."""
    v = e.constant
    last = e.values[-1]
    if not np.all(last == v):
        raise DesignError(f"last row {last.tolist()} is not the constant {v} recorded for this design")
    body = e.values[:-1]
    out = np.where(body < v, body + 1, body)
    out.setflags(write=False)
    relabel = {z: (z + 1 if z < v else z) for z in range(e.base.p) if z != v}
    return LeaveOneOutDesign(out, v, relabel)


@lru_cache(maxsize=4096)
def _etilde_cached(p: int, b: int, transform: Transform) -> np.ndarray:
    return leave_one_out(shifted(glp(p), b, transform)).values


def e_tilde(p: int, b: int, transform: Transform = "williams") -> np.ndarray:
    """The leave-one-out design for shift ``b`` as an m x m array with entries 1..m."""
    _check_odd_prime(p)
    return _etilde_cached(p, b % p, transform)


def equidistant_design(m: int) -> QuantDesign:
    """L1-equidistant m x m LHD built from the (2m+1)-point lattice.

    Takes the leading m x m block of the (2m+1) x 2m lattice, maps it with
    :func:`modified_williams` and halves it.  Needs m even with m+1 and 2m+1
    both odd primes.
    """
    q = 2 * m + 1
    if m < 2 or m % 2 or not is_prime(m + 1) or not is_prime(q):
        raise DesignError(
            f"equidistant design inapplicable for m={m}: needs m even with m+1 and 2m+1 odd primes"
        )
    a1 = glp(q).values[:m, :m]
    x = np.where(2 * a1 < q, 2 * a1, 2 * (q - a1))
    return QuantDesign(x // 2)
