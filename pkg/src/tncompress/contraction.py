"""Contraction of a generalized tensor network back to a dense tensor."""

from __future__ import annotations

import numpy as np

from .topology import TNFactorSet, TNTopology, mode_pairs


def _labels(topo: TNTopology) -> tuple[list[list[int]], list[int]]:
    """Integer einsum labels: modes get 0..N-1, bonds N, N+1, ..."""
    n = topo.order
    bond = {pair: n + i for i, pair in enumerate(mode_pairs(n))}
    per_factor = []
    for k in range(1, n + 1):
        per_factor.append([k - 1 if j == k else bond[(min(j, k), max(j, k))]
                           for j in range(1, n + 1)])
    return per_factor, list(range(n))


def contract_network(f: TNFactorSet, squeeze_unit_bonds: bool = False) -> np.ndarray:
    """Multilinear contraction over all shared bond indices.

    With squeeze_unit_bonds the rank-1 bond axes are dropped from the
    factors before contracting; the result is unchanged because a size-1
    shared index sums a single term.
    """
    topo = f.topology
    labels, out = _labels(topo)
    operands = []
    if squeeze_unit_bonds:
        for fac, labs in zip(f.factors, labels):
            keep = [ax for ax, size in enumerate(fac.shape)
                    if size > 1 or labs[ax] < topo.order]
            operands.append(fac.reshape([fac.shape[ax] for ax in keep]))
            labels_k = [labs[ax] for ax in keep]
            operands.append(labels_k)
    else:
        for fac, labs in zip(f.factors, labels):
            operands.append(fac)
            operands.append(labs)
    return np.einsum(*operands, out, optimize="greedy")
