"""End-to-end pipeline: train a toy network with the low-rank regularizer,
compress its layers into tensor-network format under a global retention
threshold or a storage budget, and evaluate either format."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .admm import AdmmConfig
from .als import AlsConfig, als_fit
from .errors import BudgetError, ConfigError, FormatError
from .layers import (TensorizationPlan, conv2d_dense, conv2d_tn, fc_tn,
                     plan_tensorization, tensorize_matrix)
from .model_io import ModelContainer, load_model, save_model
from .ranks import KAPPA_RESOLUTION, ranks_from_curves, retention_curves
from .toynet import make_dataset, make_net, softmax_cross_entropy
from .topology import (TNFactorSet, TNTopology, prune_rank_one_edges,
                       tn_param_count)
from .training import train_stn


# ---------------------------------------------------------------------------
# key-value config files

def read_config(path) -> dict[str, str]:
    config = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            config[key.strip()] = value.strip()
    return config


TRAIN_KEYS = {"arch", "lambda", "lr", "steps", "period", "mu0", "rho",
              "mu_max", "batch", "seed", "data_seed"}


def parse_train_config(config: dict[str, str]) -> tuple[str, int, AdmmConfig]:
    unknown = set(config) - TRAIN_KEYS
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    if "data_seed" not in config:
        raise ConfigError("missing config key 'data_seed'")
    arch = config.get("arch", "mlp")
    if arch not in ("mlp", "tinycnn"):
        raise ConfigError(f"unknown architecture {arch!r}")
    try:
        cfg = AdmmConfig(
            lam=float(config.get("lambda", 0.005)),
            lr=float(config.get("lr", 0.05)),
            max_steps=int(config.get("steps", 2000)),
            period=int(config.get("period", 100)),
            mu0=float(config.get("mu0", 1.0)),
            rho=float(config.get("rho", 1.001)),
            mu_max=float(config.get("mu_max", 10.0)),
            batch_size=int(config.get("batch", 32)),
            seed=int(config.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return arch, int(config["data_seed"]), cfg


# ---------------------------------------------------------------------------
# container schema helpers

def _encode_ranks(ranks: dict) -> str:
    return ";".join(f"{m}-{n}:{r}" for (m, n), r in sorted(ranks.items()))


def _decode_ranks(text: str) -> dict:
    ranks = {}
    for item in text.split(";"):
        pair, r = item.split(":")
        m, n = pair.split("-")
        ranks[(int(m), int(n))] = int(r)
    return ranks


def _encode_dims(dims) -> str:
    return "x".join(str(d) for d in dims)


def _decode_dims(text: str) -> tuple[int, ...]:
    return tuple(int(d) for d in text.split("x"))


def net_to_container(net, arch: str, provenance: dict[str, str]) -> ModelContainer:
    container = ModelContainer()
    container.manifest["arch"] = arch
    container.manifest["layers"] = str(len(net.weights))
    for i, w in enumerate(net.weights):
        prefix = f"layer.{i}"
        if w.ndim == 4:
            container.manifest[f"{prefix}.kind"] = "conv"
        else:
            container.manifest[f"{prefix}.kind"] = "fc"
        container.manifest[f"{prefix}.format"] = "dense"
        container.manifest[f"{prefix}.dims"] = _encode_dims(w.shape)
        container.tensors[f"layer{i}/weight"] = w.astype(np.float32)
    container.manifest.update(provenance)
    return container


@dataclass
class _Layer:
    index: int
    kind: str
    fmt: str
    dims: tuple[int, ...]
    weight: np.ndarray | None = None
    factors: TNFactorSet | None = None
    plan: TensorizationPlan | None = None
    kept_dense: bool = False


def container_layers(container: ModelContainer) -> list[_Layer]:
    manifest = container.manifest
    try:
        count = int(manifest["layers"])
    except KeyError as exc:
        raise FormatError("manifest missing 'layers'") from exc
    layers = []
    for i in range(count):
        prefix = f"layer.{i}"
        kind = manifest[f"{prefix}.kind"]
        fmt = manifest[f"{prefix}.format"]
        dims = _decode_dims(manifest[f"{prefix}.dims"])
        layer = _Layer(i, kind, fmt, dims,
                       kept_dense=manifest.get(f"{prefix}.kept_dense") == "1")
        if f"{prefix}.plan_out" in manifest:
            layer.plan = TensorizationPlan(
                _decode_dims(manifest[f"{prefix}.plan_out"]),
                _decode_dims(manifest[f"{prefix}.plan_in"]))
        if fmt == "dense":
            layer.weight = container.tensors[f"layer{i}/weight"]
        elif fmt == "tn":
            ranks = _decode_ranks(manifest[f"{prefix}.ranks"])
            tensor_dims = layer.plan.dims if kind == "fc" else dims
            topo = TNTopology(tensor_dims, ranks)
            factors = [container.tensors[f"layer{i}/factor{k}"].astype(np.float64)
                       for k in range(topo.order)]
            layer.factors = TNFactorSet(topo, factors)
        else:
            raise FormatError(f"unknown layer format {fmt!r}")
        layers.append(layer)
    return layers


# ---------------------------------------------------------------------------
# compression

@dataclass
class CompressionReport:
    kappa: float
    rows: list[dict] = field(default_factory=list)

    @property
    def total_dense(self) -> int:
        return sum(r["dense_params"] for r in self.rows)

    @property
    def total_tn(self) -> int:
        return sum(r["tn_params"] for r in self.rows)

    @property
    def total_ratio(self) -> float:
        return self.total_dense / self.total_tn

    def write_csv(self, path) -> None:
        cols = ["layer", "kind", "dense_params", "tn_params", "ratio",
                "rse", "ranks", "pruned_edges", "kept_dense"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for r in self.rows:
                writer.writerow([r[c] for c in cols])
            writer.writerow(["total", "", self.total_dense, self.total_tn,
                             f"{self.total_ratio:.6f}", "",
                             f"kappa={self.kappa:.6f}", "", ""])


def _layer_tensor(layer: _Layer) -> tuple[np.ndarray, TensorizationPlan | None]:
    """Weight tensor to decompose: the kernel itself for conv layers, the
    tensorized matrix for FC layers."""
    if layer.kind == "conv":
        return layer.weight.astype(np.float64), None
    plan = plan_tensorization(layer.dims[0], layer.dims[1], target_order=2)
    return tensorize_matrix(layer.weight.astype(np.float64), plan), plan


def _search_global_kappa(tensors: list[np.ndarray], target_ratio: float) -> float:
    """Binary search for the largest kappa whose per-layer rank tables (with
    the keep-dense rule) fit the total parameter budget."""
    curve_sets = [retention_curves(t)[0] for t in tensors]
    dense_counts = [t.size for t in tensors]
    total_dense = sum(dense_counts)

    def total_tn(kappa: float) -> int:
        total = 0
        for t, curves, dense in zip(tensors, curve_sets, dense_counts):
            topo = TNTopology(t.shape, ranks_from_curves(curves, kappa))
            total += min(tn_param_count(topo), dense)
        return total

    def feasible(kappa: float) -> bool:
        return total_dense >= target_ratio * total_tn(kappa)

    floor = sum(min(sum(t.shape), t.size) for t in tensors)
    if total_dense < target_ratio * floor:
        raise BudgetError(
            f"target ratio {target_ratio} unattainable; best is "
            f"{total_dense / floor:.4f}x", floor)
    if feasible(1.0):
        return 1.0
    best = min(float(c[0]) for curves in curve_sets for c in curves.values())
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
    return best


def compress_container(container: ModelContainer, kappa: float | None = None,
                       budget: float | None = None,
                       als_cfg: AlsConfig = AlsConfig()) -> tuple[ModelContainer, CompressionReport]:
    if (kappa is None) == (budget is None):
        raise ValueError("give exactly one of kappa or budget")
    layers = container_layers(container)
    if any(layer.fmt != "dense" for layer in layers):
        raise FormatError("can only compress a dense-format model")
    prepared = [_layer_tensor(layer) for layer in layers]
    if kappa is None:
        kappa = _search_global_kappa([t for t, _ in prepared], budget)
    elif not 0.0 < kappa <= 1.0:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")

    out = ModelContainer(manifest=dict(container.manifest))
    out.manifest["kappa"] = f"{kappa:.10f}"
    report = CompressionReport(kappa)
    for layer, (tensor, plan) in zip(layers, prepared):
        prefix = f"layer.{layer.index}"
        curves, _ = retention_curves(tensor)
        ranks = ranks_from_curves(curves, kappa)
        topo = TNTopology(tensor.shape, ranks)
        tn_params = tn_param_count(topo)
        dense_params = tensor.size
        row = {"layer": layer.index, "kind": layer.kind,
               "dense_params": dense_params,
               "ranks": _encode_ranks(ranks),
               "pruned_edges": _encode_ranks(
                   {p: 1 for p in prune_rank_one_edges(topo)}) or "-"}
        if plan is not None:
            out.manifest[f"{prefix}.plan_out"] = _encode_dims(plan.out_factors)
            out.manifest[f"{prefix}.plan_in"] = _encode_dims(plan.in_factors)
        if tn_params >= dense_params:
            # TN form would not shrink this layer; keep it dense, flagged
            out.manifest[f"{prefix}.kept_dense"] = "1"
            out.tensors[f"layer{layer.index}/weight"] = \
                layer.weight.astype(np.float32)
            row.update(tn_params=dense_params, ratio=1.0, rse=0.0,
                       kept_dense=1)
        else:
            cfg = AlsConfig(max_sweeps=als_cfg.max_sweeps, tol=als_cfg.tol,
                            seed=als_cfg.seed + layer.index)
            factors, rse = als_fit(tensor, topo, cfg)
            out.manifest[f"{prefix}.format"] = "tn"
            out.manifest[f"{prefix}.ranks"] = _encode_ranks(ranks)
            for k, f in enumerate(factors.factors):
                out.tensors[f"layer{layer.index}/factor{k}"] = \
                    f.astype(np.float32)
            row.update(tn_params=tn_params, ratio=dense_params / tn_params,
                       rse=f"{rse:.8f}", kept_dense=0)
        report.rows.append(row)
    return out, report


# ---------------------------------------------------------------------------
# evaluation

def _layer_apply(layer: _Layer):
    if layer.fmt == "dense":
        w = layer.weight.astype(np.float64)
        if layer.kind == "conv":
            return lambda x: conv2d_dense(x, w)
        return lambda x: w @ x
    if layer.kind == "conv":
        return lambda x: conv2d_tn(x, layer.factors)
    return lambda x: fc_tn(x, layer.factors, layer.plan)


def model_logits(container: ModelContainer, x: np.ndarray) -> np.ndarray:
    """Forward a batch through the container's architecture, dispatching
    each layer to its dense or TN implementation."""
    arch = container.manifest["arch"]
    layers = container_layers(container)
    apply_fns = [_layer_apply(layer) for layer in layers]
    if arch == "mlp":
        l1, l2 = apply_fns
        return np.stack([l2(np.maximum(l1(np.asarray(xi, dtype=np.float64)), 0.0))
                         for xi in x])
    if arch == "tinycnn":
        conv, fc = apply_fns
        logits = []
        for xi in x:
            act = np.maximum(conv(np.asarray(xi, dtype=np.float64)), 0.0)
            flat = act.flatten(order="F")
            logits.append(fc(flat))
        return np.stack(logits)
    raise FormatError(f"unknown architecture {arch!r}")


def evaluate_container(container: ModelContainer, data_seed: int) -> dict:
    arch = container.manifest["arch"]
    data = make_dataset(arch, data_seed)
    logits = model_logits(container, data.x_test)
    loss, acc, _ = softmax_cross_entropy(logits, data.y_test)
    return {"loss": loss, "accuracy": acc}


# ---------------------------------------------------------------------------
# top-level entry points

def run_train(config_path, out_path, log_path=None):
    raw = open(config_path, encoding="utf-8").read()
    arch, data_seed, cfg = parse_train_config(read_config(config_path))
    net = make_net(arch, cfg.seed)
    data = make_dataset(arch, data_seed)
    net, log = train_stn(net, data, cfg)
    provenance = {
        "config_hash": hashlib.sha256(raw.encode("utf-8")).hexdigest(),
        "seed": str(cfg.seed),
        "data_seed": str(data_seed),
    }
    save_model(out_path, net_to_container(net, arch, provenance))
    if log_path is not None:
        log.write_csv(log_path)
    return log


def run_compress(model_path, out_path, kappa=None, budget=None,
                 report_path=None) -> CompressionReport:
    container = load_model(model_path)
    seed = int(container.manifest.get("seed", 0))
    compressed, report = compress_container(
        container, kappa=kappa, budget=budget, als_cfg=AlsConfig(seed=seed))
    save_model(out_path, compressed)
    if report_path is not None:
        report.write_csv(report_path)
    return report


def run_eval(model_path, data_config_path) -> dict:
    container = load_model(model_path)
    config = read_config(data_config_path)
    if "data_seed" not in config:
        raise ConfigError("missing config key 'data_seed'")
    return evaluate_container(container, int(config["data_seed"]))


def emit_tradeoff(model_path, kappas, out_path) -> list[dict]:
    """Compress the model at each retention level and tabulate the size and
    accuracy trade-off; the dataset comes from the model's provenance."""
    container = load_model(model_path)
    if "data_seed" not in container.manifest:
        raise FormatError("model carries no data_seed provenance")
    data_seed = int(container.manifest["data_seed"])
    seed = int(container.manifest.get("seed", 0))
    layer_count = int(container.manifest["layers"])
    rows = []
    for kappa in kappas:
        compressed, report = compress_container(
            container, kappa=kappa, als_cfg=AlsConfig(seed=seed))
        metrics = evaluate_container(compressed, data_seed)
        row = {"kappa": kappa, "total_ratio": report.total_ratio,
               "accuracy": metrics["accuracy"]}
        for r in report.rows:
            row[f"ratio_l{r['layer']}"] = r["ratio"]
        rows.append(row)
    with open(out_path, "w", newline="") as fh:
        cols = (["kappa", "total_ratio"]
                + [f"ratio_l{i}" for i in range(layer_count)] + ["accuracy"])
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([f"{row[c]:.6f}" if isinstance(row[c], float)
                             else row[c] for c in cols])
    return rows


def describe_model(model_path) -> str:
    container = load_model(model_path)
    layers = container_layers(container)
    lines = [f"arch: {container.manifest['arch']}"]
    if "kappa" in container.manifest:
        lines.append(f"kappa: {container.manifest['kappa']}")
    total = 0
    for layer in layers:
        if layer.fmt == "tn":
            params = layer.factors.param_count()
            detail = f"tn ranks {container.manifest[f'layer.{layer.index}.ranks']}"
        else:
            params = layer.weight.size
            detail = "dense" + (" (kept)" if layer.kept_dense else "")
        total += params
        lines.append(f"layer {layer.index}: {layer.kind} "
                     f"{_encode_dims(layer.dims)} {detail} params={params}")
    lines.append(f"total params: {total}")
    return "\n".join(lines)
