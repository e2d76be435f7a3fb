"""Threshold accepting search over level permutations of sequence designs.

Two objectives are supported: the average absolute column correlation of a
single Latin square, and the weighted criterion

    psi(O) = w * r_ave(O) + (1 - w) * (1 - dH(O) / (m - 1))

for k >= 2 stacked Latin squares, where each move relabels two levels inside
one block.  Level swaps never change the Latin-square structure or the
pair-balance counts, so only the objective needs tracking.

Objectives are compared exactly.  Every column of a Latin square (or a stack
of them) holds the same multiset of levels, so all column variances agree and
``r_ave`` reduces to ``sum |n*G_uv - s^2| / (var * m * (m-1))`` with ``G`` the
Gram matrix of the columns; the numerator is an integer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import BlockedSeqDesign, DesignError, SeqDesign, hamming_distance, is_latin_square, r_ave


@dataclass(frozen=True)
class TAConfig:
    """Threshold accepting budget and schedule.

    ``I`` outer iterations of ``J`` steps each; thresholds decay
    geometrically from ``T1`` to ``T_tau`` across the outer loop.  ``weight``
    is the r_ave weight in psi.
    """

    I: int = 100
    J: int = 100
    T1: float = 0.05
    T_tau: float = 1e-6
    seed: int = 0
    weight: Fraction = Fraction(1, 2)

    def __post_init__(self) -> None:
        if self.I < 1 or self.J < 1:
            raise DesignError("TAConfig needs I >= 1 and J >= 1")
        if not 0 < self.T_tau <= self.T1:
            raise DesignError("TAConfig needs 0 < T_tau <= T1")
        w = Fraction(self.weight)
        if not 0 <= w <= 1:
            raise DesignError("weight must lie in [0, 1]")
        object.__setattr__(self, "weight", w)


@dataclass
class TATrace:
    best_per_outer: list[Fraction] = field(default_factory=list)
    accepted: int = 0
    final: Fraction = Fraction(0)


def threshold_schedule(cfg: TAConfig) -> list[float]:
    """T_1..T_tau: J copies of T1, then J copies of gamma*T1, ... with gamma=(T_tau/T1)^(1/(I-1))."""
    if cfg.I == 1:
        return [cfg.T1] * cfg.J
    gamma = (cfg.T_tau / cfg.T1) ** (1.0 / (cfg.I - 1))
    out: list[float] = []
    for i in range(cfg.I):
        out.extend([cfg.T1 * gamma**i] * cfg.J)
    return out


def _factor(t: float) -> tuple[int, int]:
    return (Fraction(1) + Fraction(t)).as_integer_ratio()


def _abs_cov_total(a: np.ndarray) -> int:
    # float64 matmul is exact here: every partial sum stays far below 2**53 at desk scale
    f = a.astype(np.float64)
    n = a.shape[0]
    s = f.sum(axis=0)
    c = n * (f.T @ f) - np.outer(s, s)
    return int(round(float(np.abs(c).sum() - np.trace(c))))


def _variance_term(a: np.ndarray) -> int:
    col = a[:, 0].astype(object)
    return int(a.shape[0] * (col * col).sum() - col.sum() ** 2)


def _draw_swaps(rng: np.random.Generator, size: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    a = rng.integers(1, m + 1, size=size)
    b = rng.integers(1, m, size=size)
    b = b + (b >= a)
    return a, b


def _swap_levels(block: np.ndarray, a: int, b: int) -> np.ndarray:
    out = block.copy()
    out[block == a] = b
    out[block == b] = a
    return out


def ta_minimize_rave(o0: SeqDesign | np.ndarray, cfg: TAConfig | None = None) -> tuple[SeqDesign, TATrace]:
    """Minimise r_ave of a Latin square by swapping pairs of levels."""
    cfg = cfg or TAConfig()
    cur = np.array(o0.values if isinstance(o0, SeqDesign) else o0, dtype=np.int64)
    if not is_latin_square(cur):
        raise DesignError("ta_minimize_rave needs a Latin square")
    m = cur.shape[1]
    denom = _variance_term(cur) * m * (m - 1)
    cur_obj = _abs_cov_total(cur)
    best, best_obj = cur.copy(), cur_obj
    trace = TATrace()
    rng = np.random.default_rng(cfg.seed)
    sched = threshold_schedule(cfg)
    if m < 2:
        trace.final = Fraction(best_obj, denom)
        return SeqDesign(best), trace
    la, lb = _draw_swaps(rng, len(sched), m)
    step = 0
    for outer in range(cfg.I):
        num, den = _factor(sched[outer * cfg.J])
        for _ in range(cfg.J):
            if cur_obj == 0:
                break
            cand = _swap_levels(cur, int(la[step]), int(lb[step]))
            step += 1
            obj = _abs_cov_total(cand)
            if obj * den < num * cur_obj:
                cur, cur_obj = cand, obj
                trace.accepted += 1
                if cur_obj < best_obj:
                    best, best_obj = cur.copy(), cur_obj
        trace.best_per_outer.append(Fraction(best_obj, denom))
        if cur_obj == 0:
            break
    trace.final = Fraction(best_obj, denom)
    return SeqDesign(best), trace


def psi(o: np.ndarray | SeqDesign, weight: Fraction = Fraction(1, 2)) -> Fraction:
    """Weighted correlation / Hamming criterion for stacked designs (dH bound m-1)."""
    a = o.values if isinstance(o, SeqDesign) else np.asarray(o)
    m = a.shape[1]
    w = Fraction(weight)
    return w * r_ave(a) + (1 - w) * (1 - Fraction(hamming_distance(a), m - 1))


class _PsiState:
    """Incrementally maintained psi for a stack of Latin squares.

    The objective is kept as the integer ``psi * wd * denom * (m-1)`` where
    ``wd`` is the weight's denominator, so acceptance tests need no rationals.
    """

    def __init__(self, a: np.ndarray, k: int, weight: Fraction):
        self.a = a
        self.k = k
        self.m = m = a.shape[1]
        self.n = a.shape[0]
        self.wn, self.wd = weight.numerator, weight.denominator
        self.denom = _variance_term(a) * m * (m - 1)
        self.col_sum_sq = int(a[:, 0].sum()) ** 2
        f = a.astype(np.float64)
        self.gram = f.T @ f
        eq = (a[:, None, :] == a[None, :, :]).sum(axis=2)
        np.fill_diagonal(eq, -1)
        self.eq = eq

    def cov_total(self) -> int:
        c = np.abs(self.n * self.gram - self.col_sum_sq)
        return int(round(float(c.sum() - np.trace(c))))

    def scaled(self) -> int:
        dh = self.m - int(self.eq.max())
        return self.wn * (self.m - 1) * self.cov_total() + (self.wd - self.wn) * self.denom * (self.m - 1 - dh)

    def as_fraction(self, scaled: int) -> Fraction:
        return Fraction(scaled, self.wd * self.denom * (self.m - 1))

    def swap(self, j: int, lo: int, hi: int) -> tuple:
        """Exchange levels ``lo`` and ``hi`` inside block ``j``; returns an undo record."""
        m = self.m
        rows = slice(j * m, (j + 1) * m)
        blk = self.a[rows]
        # a Latin square row holds each level once: locate both in every row
        ua = np.argmax(blk == lo, axis=1)
        ub = np.argmax(blk == hi, axis=1)
        a = self.a
        delta = (a[:, ub] == lo).astype(np.int64) + (a[:, ua] == hi) - (a[:, ua] == lo) - (a[:, ub] == hi)
        delta[rows] = 0  # relabelling inside a block keeps its own coincidences
        old_blk = blk.copy()
        new_blk = old_blk.copy()
        new_blk[old_blk == lo] = hi
        new_blk[old_blk == hi] = lo
        fo, fn = old_blk.astype(np.float64), new_blk.astype(np.float64)
        gram_delta = fn.T @ fn - fo.T @ fo
        self.a[rows] = new_blk
        self.gram += gram_delta
        self.eq[rows] += delta.T
        self.eq[:, rows] += delta
        return rows, old_blk, gram_delta, delta

    def undo(self, record: tuple) -> None:
        rows, old_blk, gram_delta, delta = record
        self.a[rows] = old_blk
        self.gram -= gram_delta
        self.eq[rows] -= delta.T
        self.eq[:, rows] -= delta


def ta_minimize_psi(
    o0: BlockedSeqDesign, cfg: TAConfig | None = None
) -> tuple[BlockedSeqDesign, TATrace]:
    """Minimise psi over per-block level permutations of k >= 2 stacked Latin squares."""
    cfg = cfg or TAConfig()
    if o0.k < 2:
        raise DesignError("ta_minimize_psi needs k >= 2 blocks")
    k, m = o0.k, o0.m
    if m < 2:
        raise DesignError("ta_minimize_psi needs m >= 2")
    state = _PsiState(np.array(o0.values, dtype=np.int64), k, cfg.weight)
    cur_obj = state.scaled()
    best, best_obj = state.a.copy(), cur_obj
    trace = TATrace()
    rng = np.random.default_rng(cfg.seed)
    sched = threshold_schedule(cfg)
    blocks = rng.integers(0, k, size=len(sched))
    la, lb = _draw_swaps(rng, len(sched), m)
    step = 0
    for outer in range(cfg.I):
        num, den = _factor(sched[outer * cfg.J])
        for _ in range(cfg.J):
            if cur_obj == 0:
                break
            record = state.swap(int(blocks[step]), int(la[step]), int(lb[step]))
            step += 1
            obj = state.scaled()
            if obj * den < num * cur_obj:
                cur_obj = obj
                trace.accepted += 1
                if cur_obj < best_obj:
                    best, best_obj = state.a.copy(), cur_obj
            else:
                state.undo(record)
        trace.best_per_outer.append(state.as_fraction(best_obj))
        if cur_obj == 0:
            break
    trace.final = state.as_fraction(best_obj)
    return BlockedSeqDesign(best, k), trace
