"""Adaptive bond-rank selection from mode-pair spectra.

For each mode pair (m, n) the tensor is unfolded into I_m x I_n frontal
slices; the singular-value vectors of all slices (descending, zero-padded
to min(I_m, I_n)) are summed positionally, and the bond rank is the
smallest truncation length x whose squared norm retains a fraction kappa
of the squared norm of the full summed vector.  Note this is the squared
norm of the *summed* vector, not the summed spectral energy; the energy
curve is kept alongside as metadata only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BudgetError
from .tensor import as_array, mn_unfold, singular_values
from .topology import TNTopology, mode_pairs, tn_param_count

# Binary search on kappa stops once the bracket is this narrow.
KAPPA_RESOLUTION = 1.0 / 1024.0
_EPS = 1e-12


@dataclass(frozen=True)
class RankSelection:
    kappa: float
    ranks: dict[tuple[int, int], int]
    curves: dict[tuple[int, int], np.ndarray]
    energy_curves: dict[tuple[int, int], np.ndarray]

    def topology(self, dims) -> TNTopology:
        return TNTopology(tuple(int(d) for d in dims), dict(self.ranks))


def retention_curves(t) -> tuple[dict, dict]:
    """Cumulative retention-ratio curve per mode pair, plus the true
    spectral-energy curve kept as metadata."""
    a = as_array(t)
    curves, energy = {}, {}
    for m, n in mode_pairs(a.ndim):
        slices = mn_unfold(a, m, n)
        total = np.zeros(min(a.shape[m - 1], a.shape[n - 1]))
        energy_total = np.zeros_like(total)
        for k in range(slices.shape[2]):
            s = singular_values(slices[:, :, k])
            total[:s.size] += s
            energy_total[:s.size] += s ** 2
        sq = total ** 2
        denom = sq.sum()
        curves[(m, n)] = (np.cumsum(sq) / denom) if denom > 0 else np.ones_like(sq)
        edenom = energy_total.sum()
        energy[(m, n)] = (np.cumsum(energy_total) / edenom) if edenom > 0 \
            else np.ones_like(energy_total)
    return curves, energy


def ranks_from_curves(curves: dict, kappa: float) -> dict[tuple[int, int], int]:
    if not 0.0 < kappa <= 1.0:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    ranks = {}
    for pair, curve in curves.items():
        hits = np.nonzero(curve >= kappa - _EPS)[0]
        ranks[pair] = int(hits[0]) + 1 if hits.size else curve.size
    return ranks


def determine_ranks(t, kappa: float) -> RankSelection:
    if not 0.0 < kappa <= 1.0:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    curves, energy = retention_curves(t)
    return RankSelection(kappa, ranks_from_curves(curves, kappa), curves, energy)


class BudgetSearchResult(NamedTuple):
    kappa: float
    selection: RankSelection
    achieved_ratio: float
    tn_params: int
    dense_params: int


def kappa_for_budget(t, target_ratio: float) -> BudgetSearchResult:
    """Largest kappa whose rank table fits a dense/TN parameter budget.

    Since ranks are non-decreasing in kappa, feasibility is monotone and a
    binary search on (0, 1] is valid.
    """
    if target_ratio <= 1.0:
        raise ValueError(f"target_ratio must exceed 1, got {target_ratio}")
    a = as_array(t)
    dense = a.size
    curves, energy = retention_curves(a)

    def params_at(kappa: float) -> int:
        ranks = ranks_from_curves(curves, kappa)
        return tn_param_count(TNTopology(a.shape, ranks))

    def feasible(kappa: float) -> bool:
        return dense >= target_ratio * params_at(kappa)

    floor = sum(a.shape)  # all bonds at rank 1
    if dense < target_ratio * floor:
        raise BudgetError(
            f"target ratio {target_ratio} unattainable; best is "
            f"{dense / floor:.4f}x with {floor} parameters", floor)

    if feasible(1.0):
        best = 1.0
    else:
        # kappas at or below the first curve point give all-rank-1 tables,
        # which the floor check above proved feasible.
        best = min(float(c[0]) for c in curves.values())
        lo, hi = 0.0, 1.0
        for _ in range(32):
            if hi - lo <= KAPPA_RESOLUTION:
                break
            mid = (lo + hi) / 2.0
            if feasible(mid):
                lo = mid
                best = max(best, mid)
            else:
                hi = mid

    ranks = ranks_from_curves(curves, best)
    selection = RankSelection(best, ranks, curves, energy)
    tn = tn_param_count(TNTopology(a.shape, ranks))
    return BudgetSearchResult(best, selection, dense / tn, tn, dense)


def effective_rank(mat: np.ndarray, kappa: float) -> int:
    """Smallest x with ||sigma_{1:x}||^2 / ||sigma||^2 >= kappa; 0 for the
    zero matrix."""
    if not 0.0 < kappa <= 1.0:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    s = singular_values(np.asarray(mat))
    total = float((s ** 2).sum())
    if total == 0.0:
        return 0
    cum = np.cumsum(s ** 2) / total
    return int(np.nonzero(cum >= kappa - _EPS)[0][0]) + 1
