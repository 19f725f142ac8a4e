"""Corruption harness, ablation sweeps, phase diagram, and gate analysis.

Protocol: models train on clean data; corruption applies only to the
evaluation-time copy of the graph (edge Laplacians are rebuilt from the
corrupted edge set).  Every sweep row carries the exact config hash of the
runs behind it so any cell can be re-run bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graphcore import Graph, SparseMatrix, normalized_laplacian
from .model import (
    GhnModel,
    TrainConfig,
    _safe_evaluate,
    config_hash,
    run_training,
)
from .theory import classify_regime, spectral_norm

CORRUPTION_KINDS = ("edge_drop", "feature_mask", "feature_noise")

BIMODAL_STD_THRESHOLD = 0.10


@dataclass(frozen=True)
class CorruptionSpec:
    """One corruption: what to perturb, how much, and the seed that fixes it.

    ``mask_rows`` switches feature masking from independent entries (the
    default) to whole node rows.
    """

    kind: str
    level: float
    seed: int = 0
    mask_rows: bool = False

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise ConfigError(f"kind must be one of {CORRUPTION_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.level <= 1.0:
            raise ConfigError(f"corruption level must be in [0, 1], got {self.level}")


def corrupt(graph: Graph, spec: CorruptionSpec) -> Graph:
    """Pure, seed-deterministic corruption of an evaluation-time graph copy.

    Labels and masks are never touched.  Level 0 returns an identical graph.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "edge_drop":
        n_drop = int(np.floor(spec.level * graph.num_edges))
        if n_drop == 0:
            return graph.replace()
        keep = np.ones(graph.num_edges, dtype=bool)
        keep[rng.choice(graph.num_edges, size=n_drop, replace=False)] = False
        return graph.replace(edges=graph.edges[keep])
    if spec.kind == "feature_mask":
        features = graph.features.copy()
        if spec.mask_rows:
            n_rows = int(np.floor(spec.level * graph.num_nodes))
            if n_rows:
                features[rng.choice(graph.num_nodes, size=n_rows, replace=False)] = 0.0
        else:
            total = features.size
            n_entries = int(np.floor(spec.level * total))
            if n_entries:
                flat = features.ravel()
                flat[rng.choice(total, size=n_entries, replace=False)] = 0.0
        return graph.replace(features=features)
    # feature_noise: std scaled per feature so the level is dimensionless
    scale = spec.level * graph.features.std(axis=0)
    noise = rng.standard_normal(graph.features.shape) * scale
    return graph.replace(features=graph.features + noise)


def _corruption_seed(base: int, kind: str, level: float, train_seed: int) -> int:
    ss = np.random.SeedSequence(
        [base, CORRUPTION_KINDS.index(kind), int(round(level * 10_000)), train_seed]
    )
    return int(ss.generate_state(1)[0])


def evaluate_under_corruption(
    model: GhnModel, graph: Graph, spec: CorruptionSpec
) -> float:
    """Test accuracy of a clean-trained model on a corrupted evaluation copy."""
    corrupted = corrupt(graph, spec)
    L = normalized_laplacian(corrupted)
    return _safe_evaluate(model, corrupted, L)["test_acc"]


def robustness_curve(
    variants,
    graph: Graph,
    levels,
    seeds,
    base_config: TrainConfig = None,
    kinds=CORRUPTION_KINDS,
    corruption_seed: int = 0,
    record_sink: list = None,
):
    """Train clean per (variant, seed); evaluate across corruption kinds/levels.

    Returns rows of mean/std accuracy and the signed relative drop
    (corrupted - clean) / clean * 100.  Training records land in
    ``record_sink`` when one is supplied.
    """
    base = base_config or TrainConfig()
    L = normalized_laplacian(graph)
    rows = []
    for variant in variants:
        cfg = base.replace(variant=variant)
        models, cleans = [], []
        for seed in seeds:
            model, record = run_training(graph, L, cfg.replace(seed=seed))
            if record_sink is not None:
                record_sink.append(record)
            models.append(model)
            cleans.append(record.test_acc)
        clean_mean = float(np.mean(cleans))
        for kind in kinds:
            for level in levels:
                accs = [
                    evaluate_under_corruption(
                        model,
                        graph,
                        CorruptionSpec(
                            kind=kind,
                            level=level,
                            seed=_corruption_seed(corruption_seed, kind, level, seed),
                        ),
                    )
                    for model, seed in zip(models, seeds)
                ]
                mean = float(np.mean(accs))
                rows.append(
                    {
                        "variant": variant,
                        "kind": kind,
                        "level": level,
                        "mean": mean,
                        "std": float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0,
                        "clean_mean": clean_mean,
                        "relative_drop": relative_drop(clean_mean, mean),
                        "config_hash": config_hash(cfg),
                    }
                )
    return rows


def relative_drop(clean: float, corrupted: float) -> float:
    """Signed percentage change: 80 -> 72 reads as -10.0."""
    if clean == 0:
        return float("nan")
    return (corrupted - clean) / clean * 100.0


def bimodal_flag(accuracies) -> bool:
    """Across-seed sample std above 10 percentage points; None for single runs."""
    if len(accuracies) < 2:
        return None
    return bool(np.std(accuracies, ddof=1) > BIMODAL_STD_THRESHOLD)


def phase_diagram(
    retrieval_kind: str,
    beta_grid,
    k_grid,
    graph: Graph,
    seeds,
    base_config: TrainConfig = None,
    record_sink: list = None,
):
    """Train each (beta_init, K) cell over seeds; flag bimodal cells.

    ``beta_init`` varies the initialization only; the temperature stays
    learnable during each cell's training.
    """
    if retrieval_kind not in ("lse", "lsr"):
        raise ConfigError(f"phase diagram covers lse and lsr, got {retrieval_kind!r}")
    if not list(beta_grid) or not list(k_grid):
        raise ConfigError("phase diagram grids must be non-empty")
    base = base_config or TrainConfig()
    L = normalized_laplacian(graph)
    cells = []
    for beta_init in beta_grid:
        for k in k_grid:
            cfg = base.replace(
                variant=retrieval_kind, beta_init=float(beta_init), num_patterns=int(k)
            )
            records = [run_training(graph, L, cfg.replace(seed=s))[1] for s in seeds]
            if record_sink is not None:
                record_sink.extend(records)
            accs = [r.test_acc for r in records]
            cells.append(
                {
                    "variant": retrieval_kind,
                    "beta_init": float(beta_init),
                    "num_patterns": int(k),
                    "mean": float(np.mean(accs)),
                    "std": float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0,
                    "bimodal": bimodal_flag(accs),
                    "collapses": sum(r.collapse for r in records),
                    "config_hash": config_hash(cfg),
                }
            )
    return cells


def gate_analysis(models, graph: Graph, mask_levels, corruption_seed: int = 0):
    """Mean gate value and accuracy per feature-masking level.

    ``models`` holds one trained model per seed; the std columns are across
    seeds.  Gate values average over nodes, coordinates, iterations, layers.
    """
    models = list(models)
    if not models:
        raise ConfigError("gate analysis needs at least one trained model")
    if not list(mask_levels):
        raise ConfigError("gate analysis needs at least one masking level")
    if any(m.cfg.variant == "nomem" for m in models):
        raise ConfigError("gate analysis is undefined for the memory-disabled variant")
    rows = []
    for level in mask_levels:
        gate_means, accs = [], []
        for i, model in enumerate(models):
            spec = CorruptionSpec(
                kind="feature_mask",
                level=level,
                seed=_corruption_seed(corruption_seed, "feature_mask", level, i),
            )
            corrupted = corrupt(graph, spec)
            L = normalized_laplacian(corrupted)
            metrics = _safe_evaluate(model, corrupted, L)
            flat = [g for layer in metrics["gate_means"] for g in layer]
            gate_means.append(float(np.mean(flat)) if flat else float("nan"))
            accs.append(metrics["test_acc"])
        rows.append(
            {
                "level": level,
                "gate_mean": float(np.mean(gate_means)),
                "gate_std": float(np.std(gate_means, ddof=1)) if len(models) > 1 else 0.0,
                "acc_mean": float(np.mean(accs)),
                "acc_std": float(np.std(accs, ddof=1)) if len(models) > 1 else 0.0,
            }
        )
    return rows


SWEEP_AXES = {
    "lambda": "lam",
    "negative_lambda": "lam",
    "T": "iterations",
    "H": "heads",
    "alpha": "alpha",
    "K": "num_patterns",
    "hidden": "hidden_dim",
    "dropout": "dropout",
    "learning_rate": "learning_rate",
}


def ablation_sweep(
    axis: str, values, base_config: TrainConfig, graph: Graph, seeds, record_sink: list = None
):
    """One row of mean/std test accuracy and collapse count per axis value."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; options: {sorted(SWEEP_AXES)}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    field = SWEEP_AXES[axis]
    if field == "heads":
        bad = [v for v in values if base_config.hidden_dim % int(v)]
        if bad:
            raise ConfigError(
                f"hidden dimension {base_config.hidden_dim} not divisible by heads {bad}"
            )
    L = normalized_laplacian(graph)
    rows = []
    for value in values:
        cfg = base_config.replace(**{field: value})
        records = [run_training(graph, L, cfg.replace(seed=s))[1] for s in seeds]
        if record_sink is not None:
            record_sink.extend(records)
        accs = [r.test_acc for r in records]
        rows.append(
            {
                "axis": axis,
                "value": value,
                "mean": float(np.mean(accs)),
                "std": float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0,
                "collapses": sum(r.collapse for r in records),
                "bimodal": bimodal_flag(accs),
                "config_hash": config_hash(cfg),
            }
        )
    return rows


def operating_point(
    graph: Graph, base_config: TrainConfig, seeds, rescale_m_sq=None, record_sink: list = None
):
    """Trained operating points: learned temperature times squared pattern norm.

    Trains one model per seed, optionally rescales every bank so its squared
    spectral norm is pinned (a constructed check of the report path), and
    reports per-seed layer means with across-seed spread plus the convexity
    regime of the mean product.
    """
    from .theory import rescale_to_spectral_sq

    L = normalized_laplacian(graph)
    per_seed = []
    for seed in seeds:
        model, record = run_training(graph, L, base_config.replace(seed=seed))
        if record_sink is not None:
            record_sink.append(record)
        if rescale_m_sq is not None:
            for layer in model.layers:
                if layer.bank is not None:
                    layer.bank.patterns.data = rescale_to_spectral_sq(
                        layer.bank.patterns.data, float(rescale_m_sq)
                    )
        betas, norms, products = [], [], []
        for layer in model.layers:
            if layer.bank is None:
                continue
            beta = float(np.exp(layer.bank.log_beta.data))
            sq = spectral_norm(layer.bank.patterns.data) ** 2
            betas.append(beta)
            norms.append(sq)
            products.append(beta * sq)
        if not products:
            raise ConfigError("operating point needs a memory-enabled variant")
        per_seed.append(
            {
                "seed": seed,
                "beta": float(np.mean(betas)),
                "m_norm_sq": float(np.mean(norms)),
                "product": float(np.mean(products)),
                "per_layer_product": products,
                "collapse": record.collapse,
            }
        )
    products = [row["product"] for row in per_seed]
    mean_product = float(np.mean(products))
    return {
        "beta_mean": float(np.mean([r["beta"] for r in per_seed])),
        "m_norm_sq_mean": float(np.mean([r["m_norm_sq"] for r in per_seed])),
        "product_mean": mean_product,
        "product_std": float(np.std(products, ddof=1)) if len(products) > 1 else 0.0,
        "regime": classify_regime(mean_product),
        "per_seed": per_seed,
        "config_hash": config_hash(base_config),
    }
