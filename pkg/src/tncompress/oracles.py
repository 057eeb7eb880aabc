"""Independent brute-force oracles and rank-bound checkers.

These deliberately avoid the optimized contraction engine so that tests
comparing the two are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .ranks import effective_rank  # re-exported for test convenience
from .tensor import singular_values
from .topology import TNFactorSet, mode_pairs

__all__ = [
    "brute_force_contract", "generate_cp", "generate_tucker",
    "check_theorem1", "bipartitions", "numerical_rank", "effective_rank",
    "RankBoundReport",
]

RANK_THRESHOLD = 1e-6
MAX_TERMS = 10 ** 8


def brute_force_contract(f: TNFactorSet) -> np.ndarray:
    """Literal evaluation of the full nested bond sum, one bond assignment
    at a time, independent of any contraction-order optimization."""
    topo = f.topology
    order = topo.order
    pairs = mode_pairs(order)
    bond_sizes = [topo.ranks[p] for p in pairs]
    terms = int(np.prod(topo.dims)) * int(np.prod(bond_sizes))
    if terms > MAX_TERMS:
        raise ValueError(f"brute-force sum of {terms} terms exceeds budget")

    out = np.zeros(topo.dims)
    for assignment in np.ndindex(*bond_sizes):
        bond_at = dict(zip(pairs, assignment))
        vecs = []
        for k in range(1, order + 1):
            idx = tuple(slice(None) if j == k
                        else bond_at[(min(j, k), max(j, k))]
                        for j in range(1, order + 1))
            vecs.append(f.factors[k - 1][idx])
        term = vecs[0]
        for v in vecs[1:]:
            term = np.multiply.outer(term, v)
        out += term
    return out


def generate_cp(dims, r_cp: int, seed: int) -> np.ndarray:
    """Sum of r_cp random rank-1 outer products."""
    if r_cp < 1:
        raise ValueError("CP rank must be positive")
    rng = np.random.default_rng(seed)
    dims = tuple(dims)
    out = np.zeros(dims)
    for _ in range(r_cp):
        term = rng.standard_normal(dims[0])
        for d in dims[1:]:
            term = np.multiply.outer(term, rng.standard_normal(d))
        out += term
    return out


def generate_tucker(dims, ranks, seed: int) -> np.ndarray:
    """Random core multiplied by a random factor matrix along every mode."""
    dims = tuple(dims)
    ranks = tuple(ranks)
    if len(ranks) != len(dims) or any(r < 1 for r in ranks):
        raise ValueError("need one positive rank per mode")
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(ranks)
    for k, (d, r) in enumerate(zip(dims, ranks)):
        mat = rng.standard_normal((d, r))
        t = np.moveaxis(np.tensordot(mat, t, axes=(1, k)), 0, k)
    return t


def bipartitions(order: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All unordered mode bipartitions, canonically with mode 1 on the left."""
    modes = list(range(1, order + 1))
    result = []
    for size in range(1, order):
        for left in combinations(modes[1:], size - 1):
            a = (1,) + left
            b = tuple(m for m in modes if m not in a)
            if b:
                result.append((a, b))
    return result


def generalized_unfold(t: np.ndarray, row_modes, col_modes) -> np.ndarray:
    axes = [m - 1 for m in row_modes] + [m - 1 for m in col_modes]
    a = np.transpose(np.asarray(t), axes)
    rows = int(np.prod([t.shape[m - 1] for m in row_modes]))
    return a.reshape((rows, -1), order="F")


def numerical_rank(mat: np.ndarray, threshold: float = RANK_THRESHOLD) -> int:
    s = singular_values(mat)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > threshold * s[0]))


@dataclass
class RankBoundReport:
    generator: str
    rows: list[dict]

    @property
    def ok(self) -> bool:
        return all(r["ok"] for r in self.rows)


def check_theorem1(t: np.ndarray, generator: str, r_cp: int | None = None,
                   tucker_ranks=None, tn_ranks: dict | None = None) -> RankBoundReport:
    """Check that every generalized-unfolding rank respects the bound
    implied by the generator: min over the available CP / Tucker / bond
    products.  The bond-product clause only applies when a TN rank table
    is supplied; otherwise it is reported as not applicable."""
    t = np.asarray(t)
    rows = []
    for a, b in bipartitions(t.ndim):
        observed = numerical_rank(generalized_unfold(t, a, b))
        candidates = []
        tn_bound = None
        if generator == "cp":
            if r_cp is None:
                raise ValueError("CP generator requires r_cp")
            candidates.append(r_cp)
            if tn_ranks is not None:
                tn_bound = int(np.prod([tn_ranks[(min(i, j), max(i, j))]
                                        for i in a for j in b]))
                candidates.append(tn_bound)
        elif generator == "tucker":
            if tucker_ranks is None:
                raise ValueError("Tucker generator requires tucker_ranks")
            candidates.append(int(np.prod([tucker_ranks[m - 1] for m in a])))
            candidates.append(int(np.prod([tucker_ranks[m - 1] for m in b])))
        else:
            raise ValueError(f"unknown generator {generator!r}")
        bound = min(candidates)
        rows.append({
            "row_modes": a, "col_modes": b, "observed": observed,
            "bound": bound, "tn_bound": tn_bound, "ok": observed <= bound,
        })
    return RankBoundReport(generator, rows)
