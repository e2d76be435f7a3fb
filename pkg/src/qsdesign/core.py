"""Design containers and exact evaluation of the design criteria.

Quantitative parts are Latin hypercube designs with integer levels ``1..n``;
sequence parts hold one permutation of ``1..m`` per row.  Every criterion is
computed in integer or rational arithmetic so that comparisons between
candidate designs are tie-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Any, NamedTuple

import numpy as np


class DesignError(ValueError):
    """Raised when a design or its parameters violate a structural requirement."""


def _as_int_matrix(values: Any) -> np.ndarray:
    arr = np.array(values, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DesignError(f"expected a non-empty 2-d integer matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _is_perm_rows(a: np.ndarray, k: int) -> bool:
    if a.shape[1] != k:
        return False
    return bool(np.array_equal(np.sort(a, axis=1), np.broadcast_to(np.arange(1, k + 1), a.shape)))


@dataclass(frozen=True, eq=False)
class QuantDesign:
    """n x m Latin hypercube design; every column is a permutation of 1..n."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_int_matrix(self.values)
        object.__setattr__(self, "values", arr)
        if not _is_perm_rows(arr.T, arr.shape[0]):
            raise DesignError("QuantDesign columns must each be a permutation of 1..n")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, QuantDesign) and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class SeqDesign:
    """n x m sequence design; every row is an ordering of components 1..m."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_int_matrix(self.values)
        object.__setattr__(self, "values", arr)
        if not _is_perm_rows(arr, arr.shape[1]):
            raise DesignError("SeqDesign rows must each be a permutation of 1..m")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SeqDesign) and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class BlockedSeqDesign:
    """k stacked m x m Latin squares, held as one km x m array."""

    values: np.ndarray
    k: int

    def __post_init__(self) -> None:
        arr = _as_int_matrix(self.values)
        object.__setattr__(self, "values", arr)
        m = arr.shape[1]
        if self.k < 1 or arr.shape[0] != self.k * m:
            raise DesignError(f"{arr.shape[0]} rows cannot hold k={self.k} blocks of side {m}")
        for i, block in enumerate(self.blocks):
            if not is_latin_square(block):
                raise DesignError(f"block {i + 1} is not a Latin square")

    @classmethod
    def stack(cls, blocks: list[np.ndarray]) -> "BlockedSeqDesign":
        return cls(np.vstack(blocks), len(blocks))

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def blocks(self) -> list[np.ndarray]:
        m = self.values.shape[1]
        return [self.values[i * m : (i + 1) * m] for i in range(self.k)]

    def to_seq(self) -> SeqDesign:
        return SeqDesign(self.values)


@dataclass(frozen=True)
class QSDesign:
    """A quantitative part ``x`` and a sequence part ``o`` sharing their runs.

    ``meta`` records how the design was produced (route tag, seed, and the
    construction parameters such as ``p``, ``k``, ``b`` values or ``N``).
    """

    x: QuantDesign
    o: SeqDesign
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.x.n != self.o.n or self.x.m != self.o.m:
            raise DesignError(
                f"X is {self.x.n}x{self.x.m} but O is {self.o.n}x{self.o.m}; shapes must agree"
            )

    @property
    def n(self) -> int:
        return self.x.n

    @property
    def m(self) -> int:
        return self.x.m


@dataclass(frozen=True, eq=False)
class PairCounts:
    """Adjacent-pair counts: ``t[i-1, j-1]`` is how often ``i`` is immediately followed by ``j``."""

    t: np.ndarray

    @property
    def m(self) -> int:
        return self.t.shape[0]

    def __getitem__(self, pair: tuple[int, int]) -> int:
        i, j = pair
        return int(self.t[i - 1, j - 1])

    def off_diagonal(self) -> np.ndarray:
        return self.t[~np.eye(self.m, dtype=bool)]

    @property
    def total(self) -> int:
        return int(self.off_diagonal().sum())

    @property
    def balanced(self) -> bool:
        off = self.off_diagonal()
        return off.size == 0 or bool(np.all(off == off[0]))


class MCDCheck(NamedTuple):
    """Outcome of the marginally-coupled test with the first violation found.

    ``violation`` is ``(o_column, level)`` (both 1-based) when the collapsed X
    levels for that component/position are not all distinct; ``("X", j)``
    when column ``j`` of X is not a permutation.
    """

    ok: bool
    violation: tuple[Any, int] | None = None

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class MetricsReport:
    d1: int
    d2sq: int
    dH: int
    r_ave: Fraction
    t: PairCounts
    d1_upper: int
    d2sq_upper: int
    dH_upper: int
    is_lhd: bool
    is_pair_balanced: bool
    is_marginally_coupled: bool
    # tighter bounds for n = 2m marginally coupled designs, when they apply
    d1_upper_2m: int | None = None
    d2sq_upper_2m: int | None = None

    @property
    def r_ave_decimal(self) -> str:
        return f"{float(self.r_ave):.3f}"

    def as_dict(self) -> dict[str, Any]:
        off = self.t.off_diagonal()
        return {
            "d1": self.d1,
            "d2sq": self.d2sq,
            "dH": self.dH,
            "r_ave": {
                "numerator": self.r_ave.numerator,
                "denominator": self.r_ave.denominator,
                "decimal": self.r_ave_decimal,
            },
            "t_min": int(off.min()) if off.size else 0,
            "t_max": int(off.max()) if off.size else 0,
            "d1_upper": self.d1_upper,
            "d2sq_upper": self.d2sq_upper,
            "dH_upper": self.dH_upper,
            "d1_upper_2m": self.d1_upper_2m,
            "d2sq_upper_2m": self.d2sq_upper_2m,
            "is_lhd": self.is_lhd,
            "is_pair_balanced": self.is_pair_balanced,
            "is_marginally_coupled": self.is_marginally_coupled,
        }

    def summary(self) -> str:
        off = self.t.off_diagonal()
        t_txt = f"t={int(off.min())}" if self.is_pair_balanced and off.size else "t=unbalanced"
        return (
            f"d1={self.d1} d2sq={self.d2sq} dH={self.dH} "
            f"r_ave={self.r_ave_decimal.rstrip('0').rstrip('.')} "
            f"{t_txt} MCD={str(self.is_marginally_coupled).lower()}"
        )


def _values(d: Any) -> np.ndarray:
    return d.values if isinstance(d, (QuantDesign, SeqDesign)) else np.asarray(d, dtype=np.int64)


def _row_pairs(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    if n < 2:
        raise DesignError("distance undefined for a single-run design")
    return np.triu_indices(n, 1)


def pairwise_l1(x: Any) -> np.ndarray:
    a = _values(x)
    iu = _row_pairs(a)
    return np.abs(a[:, None, :] - a[None, :, :]).sum(axis=2)[iu]


def l1_distance(x: Any) -> int:
    """Minimum L1 distance over all pairs of runs."""
    return int(pairwise_l1(x).min())


def l2_distance_sq(x: Any) -> int:
    """Minimum squared Euclidean distance over all pairs of runs."""
    a = _values(x)
    iu = _row_pairs(a)
    diff = a[:, None, :] - a[None, :, :]
    return int((diff * diff).sum(axis=2)[iu].min())


def hamming_matrix(o: Any) -> np.ndarray:
    a = _values(o)
    return (a[:, None, :] != a[None, :, :]).sum(axis=2)


def hamming_distance(o: Any) -> int:
    """Minimum number of differing positions over all pairs of runs."""
    a = _values(o)
    iu = _row_pairs(a)
    return int(hamming_matrix(a)[iu].min())


def _abs_corr(cov: int, var_u: int, var_v: int) -> Fraction:
    if var_u == var_v:
        return Fraction(abs(cov), var_u)
    prod = var_u * var_v
    root = isqrt(prod)
    if root * root == prod:
        return Fraction(abs(cov), root)
    # irrational: rational approximation with ~2^-120 relative error
    scale = 120
    return Fraction(abs(cov) * isqrt(prod << (2 * scale)), prod << scale)


def r_ave(o: Any) -> Fraction:
    """Average absolute Pearson correlation over all ordered column pairs.

    Works on integer sums only.  When two columns share their variance (always
    true when the columns hold the same multiset of levels, e.g. stacked Latin
    squares) the correlation is the rational ``cov / var`` and the result is
    exact; otherwise the square root is approximated far below float precision.
    """
    a = _values(o)
    n, m = a.shape
    if m < 2 or n < 2:
        raise DesignError("r_ave needs at least two runs and two columns")
    peak = int(np.abs(a).max())
    if n * n * peak * peak < 2**52:
        # float64 BLAS product is exact below 2**53
        f = a.astype(np.float64)
        sums = f.sum(axis=0)
        cov = (n * (f.T @ f) - np.outer(sums, sums)).round().astype(np.int64).astype(object)
    else:
        obj = a.astype(object)
        sums = obj.sum(axis=0)
        cov = n * obj.T.dot(obj) - np.outer(sums, sums)
    var = [int(cov[u, u]) for u in range(m)]
    if min(var) == 0:
        raise DesignError("zero variance column; correlation undefined")
    if all(v == var[0] for v in var):
        off = int(np.abs(cov).sum()) - sum(var)
        return Fraction(off, var[0] * m * (m - 1))
    total = sum(
        (_abs_corr(int(cov[u, v]), var[u], var[v]) for u in range(m) for v in range(m) if u != v),
        Fraction(0),
    )
    return total / (m * (m - 1))


def pair_counts(o: Any) -> PairCounts:
    a = _values(o)
    m = a.shape[1]
    t = np.zeros((m, m), dtype=np.int64)
    np.add.at(t, (a[:, :-1].ravel() - 1, a[:, 1:].ravel() - 1), 1)
    t.setflags(write=False)
    return PairCounts(t)


def bounds(n: int, m: int) -> tuple[int, int, int]:
    """Upper bounds on d1, squared d2 (any n x m LHD) and dH (any n-run sequence design)."""
    if n < 2 or m < 1:
        raise DesignError("bounds need n >= 2 and m >= 1")
    d1_upper = (n + 1) * m // 3
    d2sq_upper = n * (n + 1) * m // 6
    dh_upper = m if n <= m else m - 1
    return d1_upper, d2sq_upper, dh_upper


def n2m_bounds(m: int) -> tuple[int, int]:
    """Tighter d1 / squared-d2 bounds for marginally coupled designs with n = 2m."""
    if m < 2:
        raise DesignError("n2m_bounds needs m >= 2")
    return (m + 1) * m // 3, m * m * (m + 1) // 6


def n2m_bounds_apply(pair_hamming: np.ndarray, m: int) -> bool:
    """Preconditions for :func:`n2m_bounds`: dH >= m-2 and fewer than m^2/2 pairs at m-2."""
    return int(pair_hamming.min()) >= m - 2 and 2 * int(np.count_nonzero(pair_hamming == m - 2)) < m * m


def is_lhd(x: Any) -> bool:
    a = _values(x)
    return _is_perm_rows(a.T, a.shape[0])


def is_latin_square(o: Any) -> bool:
    a = _values(o)
    return a.shape[0] == a.shape[1] and _is_perm_rows(a, a.shape[1]) and _is_perm_rows(a.T, a.shape[0])


def _split_xo(d: Any) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(d, QSDesign):
        return d.x.values, d.o.values
    x, o = d
    return _values(x), _values(o)


def is_marginally_coupled(d: Any) -> MCDCheck:
    """Check the marginally coupled structure directly from its definition.

    X must be an LHD, and for every sequence position ``j`` and component
    ``c`` the ``k = n/m`` runs with ``O[:, j] == c`` must take each collapsed
    level ``ceil(x/m)`` exactly once in every column of X.
    """
    x, o = _split_xo(d)
    n, m = o.shape
    if n % m:
        raise DesignError(f"n={n} is not a multiple of m={m}")
    k = n // m
    for j in range(x.shape[1]):
        if not np.array_equal(np.sort(x[:, j]), np.arange(1, n + 1)):
            return MCDCheck(False, ("X", j + 1))
    collapsed = (x - 1) // m  # 0..k-1
    for j in range(m):
        for c in range(1, m + 1):
            rows = np.flatnonzero(o[:, j] == c)
            if rows.size != k:
                return MCDCheck(False, (j + 1, c))
            sub = np.sort(collapsed[rows], axis=0)
            if not np.all(sub == np.arange(k)[:, None]):
                return MCDCheck(False, (j + 1, c))
    return MCDCheck(True)


def latin_blocks_structure(d: Any) -> bool:
    """Structural form of the coupling test.

    For every X column, group the runs by collapsed level; the design is
    marginally coupled iff X is an LHD and every group of ``m`` runs forms a
    Latin square in O.
    """
    x, o = _split_xo(d)
    n, m = o.shape
    if n % m or not is_lhd(x):
        return False
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        for block in o[order].reshape(n // m, m, m):
            if not is_latin_square(block):
                return False
    return True


def derive_seeds(seed: int, count: int = 4) -> list[int]:
    """Independent child seeds, in a fixed order, from one root seed."""
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(count)]


def evaluate(d: QSDesign) -> MetricsReport:
    x, o = d.x.values, d.o.values
    n, m = o.shape
    d1u, d2u, dhu = bounds(n, m)
    t = pair_counts(o)
    mcd = bool(is_marginally_coupled(d)) if n % m == 0 else False
    hm = hamming_matrix(o)[np.triu_indices(n, 1)]
    dh = int(hm.min())
    d1u_2m = d2u_2m = None
    if mcd and n == 2 * m and n2m_bounds_apply(hm, m):
        d1u_2m, d2u_2m = n2m_bounds(m)
    return MetricsReport(
        d1=l1_distance(x),
        d2sq=l2_distance_sq(x),
        dH=dh,
        r_ave=r_ave(o),
        t=t,
        d1_upper=d1u,
        d2sq_upper=d2u,
        dH_upper=dhu,
        is_lhd=is_lhd(x),
        is_pair_balanced=t.balanced,
        is_marginally_coupled=mcd,
        d1_upper_2m=d1u_2m,
        d2sq_upper_2m=d2u_2m,
    )
