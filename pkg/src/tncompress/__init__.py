"""Tensor-network compression toolkit.

Trains small networks with a low-rank-inducing ADMM regularizer, then
adaptively decomposes their weight tensors into generalized tensor-network
format under a storage budget, replacing dense conv/FC layers with exact
TN-contraction layers.
"""

from .admm import AdmmConfig, AdmmState, balanced_fold, balanced_unfold, svt
from .als import AlsConfig, als_fit
from .contraction import contract_network
from .layers import (TensorizationPlan, complexity_conv, complexity_fc,
                     conv2d_dense, conv2d_tn, fc_tn, plan_tensorization)
from .ranks import (RankSelection, determine_ranks, effective_rank,
                    kappa_for_budget)
from .tensor import (DenseTensor, SvdResult, fold_k, frobenius_norm,
                     k_unfold, mn_unfold, svd)
from .topology import (TNFactorSet, TNTopology, prune_rank_one_edges,
                       tn_param_count, uniform_topology)

__all__ = [
    "AdmmConfig", "AdmmState", "AlsConfig", "DenseTensor", "RankSelection",
    "SvdResult", "TNFactorSet", "TNTopology", "TensorizationPlan",
    "als_fit", "balanced_fold", "balanced_unfold", "complexity_conv",
    "complexity_fc", "contract_network", "conv2d_dense", "conv2d_tn",
    "determine_ranks", "effective_rank", "fc_tn", "fold_k",
    "frobenius_norm", "k_unfold", "kappa_for_budget", "mn_unfold",
    "plan_tensorization", "prune_rank_one_edges", "svd", "svt",
    "tn_param_count", "uniform_topology",
]

__version__ = "0.1.0"
