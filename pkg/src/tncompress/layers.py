"""Dense and tensor-network forward passes for conv and FC layers, plus
tensorization planning and parameter/FLOP accounting.

Convolutions are valid-padding, stride 1, bias-free.  A conv kernel is a
K x K x S x T tensor (spatial, spatial, in-channels, out-channels); a conv
input is W x H x S.  FC weights are M x N matrices acting as y = W x, and
are tensorized to (I_1..I_m, J_1..J_n) with little-endian flattening on
both sides before decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log

import numpy as np

from .contraction import contract_network
from .errors import TopologyError
from .tensor import as_array
from .topology import TNFactorSet, tn_param_count, uniform_topology


# ---------------------------------------------------------------------------
# tensorization planning

def _factorizations(value: int, length: int, minimum: int = 2):
    """Ascending tuples of factors >= minimum with the given product."""
    if length == 1:
        if value >= minimum:
            yield (value,)
        return
    d = minimum
    while d * d ** (length - 1) <= value:
        if value % d == 0:
            for rest in _factorizations(value // d, length - 1, d):
                yield (d,) + rest
        d += 1


def _max_order(value: int) -> int:
    """Number of prime factors with multiplicity."""
    n, total, d = value, 0, 2
    while d * d <= n:
        while n % d == 0:
            n //= d
            total += 1
        d += 1
    return total + (1 if n > 1 else 0)


def _split_dim(value: int, order: int) -> tuple[tuple[int, ...], bool]:
    """Minimum log-variance split of value into `order` factors.  Falls back
    to the largest feasible order padded with ones when `order` exceeds the
    prime-factor count, and reports that via the flag."""
    if order < 1:
        raise ValueError("target order must be >= 1")
    feasible_order = min(order, max(_max_order(value), 1))
    best = None
    for cand in _factorizations(value, feasible_order):
        logs = [log(f) for f in cand]
        mean = sum(logs) / len(logs)
        var = sum((x - mean) ** 2 for x in logs) / len(logs)
        key = (var, cand)
        if best is None or key < best:
            best = key
    if best is None:  # value == 1
        factors = (1,) * order
        return factors, order > 1
    factors = (1,) * (order - feasible_order) + best[1]
    return factors, feasible_order < order


@dataclass(frozen=True)
class TensorizationPlan:
    out_factors: tuple[int, ...]  # I_1..I_m, product M
    in_factors: tuple[int, ...]   # J_1..J_n, product N
    reduced: bool = False         # a side could not reach the target order

    @property
    def rows(self) -> int:
        return int(np.prod(self.out_factors))

    @property
    def cols(self) -> int:
        return int(np.prod(self.in_factors))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.out_factors + self.in_factors


def plan_tensorization(rows: int, cols: int, target_order: int = 2) -> TensorizationPlan:
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be positive")
    out_factors, out_reduced = _split_dim(rows, target_order)
    in_factors, in_reduced = _split_dim(cols, target_order)
    return TensorizationPlan(out_factors, in_factors, out_reduced or in_reduced)


def tensorize_matrix(mat: np.ndarray, plan: TensorizationPlan) -> np.ndarray:
    mat = np.asarray(mat)
    if mat.shape != (plan.rows, plan.cols):
        raise ValueError(f"matrix shape {mat.shape} does not match plan")
    return mat.reshape(plan.dims, order="F")


def detensorize_matrix(t, plan: TensorizationPlan) -> np.ndarray:
    a = as_array(t)
    if tuple(a.shape) != plan.dims:
        raise ValueError(f"tensor shape {tuple(a.shape)} does not match plan")
    return a.reshape((plan.rows, plan.cols), order="F")


# ---------------------------------------------------------------------------
# layer specs

@dataclass
class LayerSpec:
    """Tagged layer description; weights are a dense array or a factor set."""

    kind: str                      # "conv" or "fc"
    weights: object                # np.ndarray or TNFactorSet
    plan: TensorizationPlan | None = None   # fc only
    meta: dict = field(default_factory=dict)

    @property
    def is_tn(self) -> bool:
        return isinstance(self.weights, TNFactorSet)

    def dense_param_count(self) -> int:
        if self.kind == "conv":
            k, _, s, t = self._conv_dims()
            return k * k * s * t
        return self.plan.rows * self.plan.cols

    def _conv_dims(self):
        if self.is_tn:
            return self.weights.topology.dims
        return self.weights.shape


# ---------------------------------------------------------------------------
# forward passes

def conv2d_dense(x, kernel) -> np.ndarray:
    """Valid stride-1 convolution of a W x H x S input with a K x K x S x T
    kernel, yielding (W-K+1) x (H-K+1) x T."""
    x = as_array(x)
    kernel = as_array(kernel)
    if x.ndim != 3 or kernel.ndim != 4 or kernel.shape[0] != kernel.shape[1]:
        raise ValueError("expected W x H x S input and K x K x S x T kernel")
    w, h, s = x.shape
    k = kernel.shape[0]
    if kernel.shape[2] != s:
        raise ValueError("kernel in-channels do not match input")
    if w < k or h < k:
        raise ValueError("spatial size smaller than the kernel")
    wo, ho = w - k + 1, h - k + 1
    out = np.zeros((wo, ho, kernel.shape[3]))
    for k1 in range(k):
        for k2 in range(k):
            out += np.einsum("whs,st->wht",
                             x[k1:k1 + wo, k2:k2 + ho, :], kernel[k1, k2])
    return out


def conv2d_tn(x, f: TNFactorSet, count_flops: bool = False):
    """TN-format convolution: contract the in-channel factor over the full
    input, merge the two spatial factors over their shared bond, convolve,
    then contract the out-channel factor."""
    x = as_array(x)
    topo = f.topology
    if topo.order != 4 or topo.dims[0] != topo.dims[1]:
        raise TopologyError("conv factor set must cover a K x K x S x T kernel")
    k, _, s, t = topo.dims
    if x.ndim != 3 or x.shape[2] != s:
        raise TopologyError("input channels do not match the factor set")
    w, h = x.shape[0], x.shape[1]
    if w < k or h < k:
        raise ValueError("spatial size smaller than the kernel")
    z1, z2, z3, z4 = f.factors
    wo, ho = w - k + 1, h - k + 1

    # channel stage over the full spatial extent
    p = np.einsum("whs,absc->whabc", x, z3)
    # spatial factors merged over their shared bond
    merged = np.einsum("xpad,pybe->xyabde", z1, z2)
    r14, r24, r34 = z4.shape[0], z4.shape[1], z4.shape[2]
    q = np.zeros((wo, ho, r14, r24, r34))
    for k1 in range(k):
        for k2 in range(k):
            q += np.einsum("abde,whabc->whdec",
                           merged[k1, k2], p[k1:k1 + wo, k2:k2 + ho])
    y = np.einsum("whdec,dect->wht", q, z4)
    if not count_flops:
        return y
    r12, r13, r23 = z1.shape[1], z1.shape[2], z2.shape[2]
    flops = (w * h * s * r13 * r23 * r34                # channel stage
             + k * k * r12 * r13 * r23 * r14 * r24      # spatial merge
             + wo * ho * k * k * r13 * r23 * r14 * r24 * r34  # convolution
             + wo * ho * t * r14 * r24 * r34)           # out-channel stage
    return y, flops


def fc_tn(x: np.ndarray, f: TNFactorSet, plan: TensorizationPlan) -> np.ndarray:
    """TN-format linear map: fold x into its input factorization, contract
    through the factor network, flatten the output factorization."""
    x = np.asarray(x)
    if f.topology.dims != plan.dims:
        raise ValueError("factor set dims do not match the tensorization plan")
    if x.shape != (plan.cols,):
        raise ValueError(f"input length {x.shape} does not match plan")
    m = len(plan.out_factors)
    order = f.topology.order
    from .topology import mode_pairs
    bond = {pair: order + i for i, pair in enumerate(mode_pairs(order))}
    operands = [x.reshape(plan.in_factors, order="F"),
                list(range(m, order))]
    for k in range(1, order + 1):
        labels = [k - 1 if j == k else bond[(min(j, k), max(j, k))]
                  for j in range(1, order + 1)]
        operands.append(f.factors[k - 1])
        operands.append(labels)
    out = np.einsum(*operands, list(range(m)), optimize="greedy")
    return out.flatten(order="F")


def fc_dense_from_tn(f: TNFactorSet, plan: TensorizationPlan) -> np.ndarray:
    """Reconstruct the dense M x N matrix behind a tensorized factor set."""
    return detensorize_matrix(contract_network(f), plan)


# ---------------------------------------------------------------------------
# complexity accounting

def complexity_conv(k: int, s: int, t: int, w: int, h: int, r: int) -> dict:
    """Parameter and FLOP reduction ratios for a uniform-rank TN conv layer,
    with the absolute counts behind them.

    `tn_flops` is the exact multiply count of the staged TN forward pass
    (valid output extent); `tn_flops_nominal` is the coarser closed form
    that treats the output extent as W x H, which the reduction ratio
    `c_conv` is defined against.
    """
    if min(k, s, t, w, h, r) < 1:
        raise ValueError("all layer dimensions and the rank must be positive")
    dense_params = k * k * s * t
    tn_params = (2 * k + s + t) * r ** 3
    dense_flops = k * k * s * t * w * h
    tn_flops_nominal = w * h * (s + t) * r ** 3 + w * h * k * k * r ** 5 + k * k * r ** 5
    wo, ho = w - k + 1, h - k + 1
    tn_flops = (w * h * s * r ** 3 + k * k * r ** 5
                + wo * ho * k * k * r ** 5 + wo * ho * t * r ** 3)
    return {
        "dense_params": dense_params,
        "tn_params": tn_params,
        "p_conv": dense_params / tn_params,
        "dense_flops": dense_flops,
        "tn_flops": tn_flops,
        "tn_flops_nominal": tn_flops_nominal,
        "c_conv": dense_flops / tn_flops_nominal,
    }


def complexity_fc(plan: TensorizationPlan, r: int, batch: int = 1) -> dict:
    """Parameter and FLOP counts for a uniform-rank tensorized FC layer.
    For the two-factor-per-side case the parameter count reduces to the
    closed form (I_1 + I_2 + J_1 + J_2) * R^3."""
    if r < 1 or batch < 1:
        raise ValueError("rank and batch must be positive")
    topo = uniform_topology(plan.dims, r)
    params = tn_param_count(topo)
    order = len(plan.dims)
    flops = (plan.rows + plan.cols) * r ** (order - 1) * (batch + r ** (order - 2))
    return {
        "dense_params": plan.rows * plan.cols,
        "tn_params": params,
        "ratio": plan.rows * plan.cols / params,
        "dense_flops": plan.rows * plan.cols * batch,
        "tn_flops": flops,
    }
