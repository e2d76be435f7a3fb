"""Marginally coupled designs with n = k*m runs.

All routes share one assembly step.  The sequence part stacks k Latin
squares; the quantitative part stacks k column-permuted copies ``F_i`` of a
base LHD ``F0`` and lifts column j of block i by ``m * ell_j[i]``, where each
``ell_j`` is a permutation of 0..k-1.  Because every block of X then holds a
distinct band of m levels in every column, and every block of O is a Latin
square, each component/position pair meets each band exactly once.

Randomness: the root seed is split into four child seeds used, in order, for
row (or level) permutations of the O blocks, column permutations of F0, the
``ell`` draws, and the optimizer.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Sequence

import numpy as np

from .core import (
    BlockedSeqDesign,
    DesignError,
    QSDesign,
    QuantDesign,
    SeqDesign,
    derive_seeds,
    hamming_matrix,
    n2m_bounds_apply,
)
from .glp import equidistant_design, e_tilde, is_prime
from .optimizer import TAConfig, ta_minimize_psi
from .single import (
    construct_nm,
    has_totient_decomposition,
    latin_square_L,
    rave_by_shift,
    select_b1,
    select_b2,
    williams_latin_square,
)

log = logging.getLogger(__name__)

__all__ = [
    "BlockedSeqDesign",
    "assemble_x",
    "three_step",
    "paired_construct",
    "general_km",
    "generate",
    "supported_sizes",
]


def assemble_x(f0: np.ndarray, col_perms: Sequence[Sequence[int]], ells: Sequence[Sequence[int]]) -> QuantDesign:
    """Stack column-permuted copies of ``f0`` and lift column j of block i by ``m * ells[j][i]``.

    ``col_perms[i]`` lists, for each output column, the 0-based column of
    ``f0`` it copies.  ``ells[j]`` is a permutation of 0..k-1.
    """
    f0 = np.asarray(f0, dtype=np.int64)
    m = f0.shape[1]
    k = len(col_perms)
    if len(ells) != m:
        raise DesignError(f"need {m} ell vectors, got {len(ells)}")
    ell = np.asarray(ells, dtype=np.int64)  # m x k
    if ell.shape != (m, k) or not all(sorted(e) == list(range(k)) for e in ell.tolist()):
        raise DesignError("each ell_j must be a permutation of 0..k-1")
    blocks = []
    for i, perm in enumerate(col_perms):
        if sorted(perm) != list(range(m)):
            raise DesignError(f"column permutation {i + 1} is not a permutation of 0..{m - 1}")
        blocks.append(f0[:, list(perm)] + m * ell[:, i][None, :])
    return QuantDesign(np.vstack(blocks))


def _random_x(f0: np.ndarray, k: int, col_seed: int, ell_seed: int) -> tuple[QuantDesign, dict]:
    m = f0.shape[1]
    rc = np.random.default_rng(col_seed)
    re = np.random.default_rng(ell_seed)
    col_perms = [rc.permutation(m).tolist() for _ in range(k)]
    ells = [re.permutation(k).tolist() for _ in range(m)]
    return assemble_x(f0, col_perms, ells), {"col_perms": col_perms, "ells": ells}


def _f0_for_prime(p: int) -> tuple[np.ndarray, str]:
    m = p - 1
    if is_prime(2 * m + 1) and m % 2 == 0:
        return equidistant_design(m).values, "equidistant"
    return e_tilde(p, select_b2(p).chosen), "etilde"


def ranked_shifts(p: int) -> list[int]:
    """Shifts ordered by (r_ave, b)."""
    vals = rave_by_shift(p)
    return sorted(range(p), key=lambda b: (vals[b], b))


def _check_n2m_bounds(o: np.ndarray, m: int) -> None:
    hm = hamming_matrix(o)[np.triu_indices(o.shape[0], 1)]
    if not n2m_bounds_apply(hm, m):
        log.warning("n=2m design does not meet the dH >= m-2 precondition of the 2m distance bounds")


def three_step(p: int, k: int, seed: int = 0) -> QSDesign:
    """Stack the k lowest-r_ave leave-one-out designs (rows shuffled) and build X over them."""
    if p < 3 or not is_prime(p):
        raise DesignError(f"{p} is not an odd prime")
    m = p - 1
    if not 2 <= k <= m + 1:
        raise DesignError(f"k={k} outside 2..{m + 1} for p={p}")
    row_seed, col_seed, ell_seed, _ = derive_seeds(seed)
    shifts = ranked_shifts(p)[:k]
    rr = np.random.default_rng(row_seed)
    blocks = [e_tilde(p, b)[rr.permutation(m)] for b in shifts]
    o = BlockedSeqDesign.stack(blocks)
    f0, f0_source = _f0_for_prime(p)
    x, draws = _random_x(f0, k, col_seed, ell_seed)
    if k == 2:
        _check_n2m_bounds(o.values, m)
    meta = {"route": "three-step", "p": p, "k": k, "shifts": shifts, "f0": f0_source, "seed": seed}
    return QSDesign(x, o.to_seq(), meta)


def paired_construct(p: int, seed: int = 0) -> QSDesign:
    """k = 2 design pairing the best shift b with p - b; no row shuffling."""
    if p < 3 or not is_prime(p):
        raise DesignError(f"{p} is not an odd prime")
    m = p - 1
    _, col_seed, ell_seed, _ = derive_seeds(seed)
    b1 = select_b1(p).chosen
    b_pair = (p - b1) % p
    o = BlockedSeqDesign.stack([e_tilde(p, b1), e_tilde(p, b_pair)])
    f0, f0_source = _f0_for_prime(p)
    x, _ = _random_x(f0, 2, col_seed, ell_seed)
    _check_n2m_bounds(o.values, m)
    meta = {"route": "paired", "p": p, "k": 2, "shifts": [b1, b_pair], "f0": f0_source, "seed": seed}
    return QSDesign(x, o.to_seq(), meta)


def general_km(m: int, k: int, ta_config: TAConfig | None = None, seed: int = 0) -> QSDesign:
    """k level-permuted Williams squares tuned by threshold accepting, X from the modular Latin square."""
    if k < 2:
        raise DesignError("general_km needs k >= 2")
    if not has_totient_decomposition(m):
        raise DesignError(f"m={m} has no totient decomposition (needs even m with phi(N) = 2m)")
    lvl_seed, col_seed, ell_seed, opt_seed = derive_seeds(seed)
    x0, dec = latin_square_L(m)
    base = williams_latin_square(m).values
    rl = np.random.default_rng(lvl_seed)
    blocks = []
    for _ in range(k):
        relabel = np.concatenate([[0], rl.permutation(m) + 1])
        blocks.append(relabel[base])
    cfg = replace(ta_config or TAConfig(), seed=opt_seed)
    o, trace = ta_minimize_psi(BlockedSeqDesign.stack(blocks), cfg)
    x, _ = _random_x(x0.values, k, col_seed, ell_seed)
    meta = {
        "route": "general-km",
        "k": k,
        "N": dec.N,
        "class": dec.condition_class,
        "psi": str(trace.final),
        "seed": seed,
    }
    return QSDesign(x, o.to_seq(), meta)


def _route(n: int, m: int) -> str | None:
    if m < 1 or n < 1 or n % m:
        return None
    k = n // m
    prime = m >= 2 and is_prime(m + 1)
    if k == 1:
        return "nm" if prime or has_totient_decomposition(m) else None
    if prime and k == 2:
        return "paired"
    if prime and 3 <= k <= m + 1:
        return "three-step"
    if has_totient_decomposition(m):
        return "general-km"
    return None


def supported_sizes(m: int, max_n: int) -> list[tuple[int, str]]:
    """Every (n, route) with n = k*m <= max_n that :func:`generate` can build."""
    out = []
    for n in range(m, max_n + 1, m):
        r = _route(n, m)
        if r:
            out.append((n, r))
    return out


def generate(n: int, m: int, ta_config: TAConfig | None = None, seed: int = 0) -> QSDesign:
    """Build a design with n runs and m components via the first applicable route."""
    if m < 2:
        raise DesignError("m must be at least 2")
    if n < m or n % m:
        raise DesignError(f"n must be a multiple of m (got n={n}, m={m})")
    route = _route(n, m)
    k = n // m
    if route == "nm":
        return construct_nm(m, ta_config, seed)
    if route == "paired":
        return paired_construct(m + 1, seed)
    if route == "three-step":
        return three_step(m + 1, k, seed)
    if route == "general-km":
        return general_km(m, k, ta_config, seed)
    sizes = supported_sizes(m, max(n, 10 * m))
    listing = ", ".join(str(s) for s, _ in sizes) or "none"
    raise DesignError(
        f"no construction for n={n}, m={m}: needs m+1 prime (k <= m+1) or even m with phi(N)=2m; "
        f"supported n for this m: {listing}"
    )
