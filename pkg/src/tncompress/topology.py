"""Generalized tensor-network topology and factor sets.

A topology over N modes carries a bond rank R[m, n] for every pair
1 <= m < n <= N.  Factor k is an N-way tensor whose axis j holds the bond
to mode j (rank R[min(j,k), max(j,k)]) except axis k, which holds the mode
size I_k.  Bonds of rank 1 are structurally present but non-influential.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TopologyError


def mode_pairs(order: int) -> list[tuple[int, int]]:
    """All (m, n) with 1 <= m < n <= order, lexicographic."""
    return [(m, n) for m in range(1, order + 1) for n in range(m + 1, order + 1)]


@dataclass(frozen=True)
class TNTopology:
    dims: tuple[int, ...]
    ranks: dict[tuple[int, int], int] = field(compare=False)

    def __post_init__(self):
        n = len(self.dims)
        if n < 2:
            raise TopologyError("topology needs at least 2 modes")
        expected = set(mode_pairs(n))
        if set(self.ranks) != expected:
            raise TopologyError(
                f"rank table must cover exactly the {len(expected)} mode pairs")
        if any(r < 1 for r in self.ranks.values()):
            raise TopologyError("every bond rank must be >= 1")

    @property
    def order(self) -> int:
        return len(self.dims)

    def rank(self, m: int, n: int) -> int:
        return self.ranks[(m, n)] if m < n else self.ranks[(n, m)]

    def factor_shape(self, k: int) -> tuple[int, ...]:
        """Shape of factor k (1-based): bonds in ascending partner order
        with the mode size I_k in position k."""
        return tuple(self.dims[k - 1] if j == k else self.rank(j, k)
                     for j in range(1, self.order + 1))


@dataclass
class TNFactorSet:
    topology: TNTopology
    factors: list[np.ndarray]

    def __post_init__(self):
        if len(self.factors) != self.topology.order:
            raise TopologyError("factor count must equal the topology order")
        for k, f in enumerate(self.factors, start=1):
            want = self.topology.factor_shape(k)
            if tuple(f.shape) != want:
                raise TopologyError(
                    f"factor {k} has shape {tuple(f.shape)}, expected {want}")

    def param_count(self) -> int:
        return sum(f.size for f in self.factors)


def tn_param_count(topo: TNTopology) -> int:
    """Total element count of a factor set with this topology."""
    return sum(int(np.prod(topo.factor_shape(k)))
               for k in range(1, topo.order + 1))


def prune_rank_one_edges(topo: TNTopology) -> list[tuple[int, int]]:
    """Bonds with rank 1; removable without changing the contraction."""
    return [pair for pair in mode_pairs(topo.order) if topo.ranks[pair] == 1]


def uniform_topology(dims, rank: int) -> TNTopology:
    dims = tuple(int(d) for d in dims)
    return TNTopology(dims, {p: rank for p in mode_pairs(len(dims))})


def random_factor_set(topo: TNTopology, seed: int) -> TNFactorSet:
    """I.i.d. normal factors scaled by the inverse square root of each
    factor's total bond size, so the contraction starts near unit scale."""
    rng = np.random.default_rng(seed)
    factors = []
    for k in range(1, topo.order + 1):
        shape = topo.factor_shape(k)
        bond_size = int(np.prod(shape)) // topo.dims[k - 1]
        factors.append(rng.standard_normal(shape) / np.sqrt(bond_size))
    return TNFactorSet(topo, factors)
