"""The trainable network and its training loop.

Architecture: linear encoder with ReLU and dropout, a stack of retrieval
layers (each running the damped update for a fixed number of iterations,
with gating, a 0.1-weighted skip connection, LayerNorm, and dropout), and a
linear classifier.  Training is full-graph Adam on masked cross-entropy with
early stopping on validation accuracy; the best-validation parameters are
restored before the final test evaluation.

Determinism: everything stochastic derives from the run seed through named
SeedSequence streams, so a (config, seed) pair reproduces its run record
bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import autodiff as ad
from .autodiff import Value
from .dynamics import DynamicsConfig, iterate
from .errors import ConfigError, NumericsError
from .graphcore import Graph, SparseMatrix
from .memory import Gate, MemoryBank
from .theory import spectral_norm

# config keys that keep their raw decay; everything else is L2-regularized
DECAY_EXEMPT_SUBSTRINGS = ("log_beta", "gate_bias", "ln_gain", "ln_bias")


@dataclass
class TrainConfig:
    """One training configuration; defaults follow the standard grid's midpoint."""

    variant: str = "lse"
    hidden_dim: int = 64
    num_patterns: int = 64
    beta_init: float = 1.0
    lam: float = 0.3
    alpha: float = 0.3
    iterations: int = 4
    num_layers: int = 2
    groups: int = 8
    heads: int = 1
    dropout: float = 0.3
    gate_bias_init: float = 2.0
    skip_weight: float = 0.1
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    epochs: int = 300
    patience: int = 50
    seed: int = 0
    freeze_log_beta: bool = False

    def __post_init__(self):
        self.variant = str(self.variant).lower()
        if self.variant not in ("lse", "lsr", "hier", "nomem"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.epochs < 1 or self.patience < 1:
            raise ConfigError("epochs and patience must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def replace(self, **kwargs) -> "TrainConfig":
        data = self.to_dict()
        data.update(kwargs)
        return TrainConfig.from_dict(data)


def config_key(cfg: TrainConfig) -> str:
    """Canonical serialization of a config with the seed stripped."""
    data = cfg.to_dict()
    data.pop("seed")
    return json.dumps(data, sort_keys=True)


def config_hash(cfg: TrainConfig) -> str:
    return hashlib.sha256(config_key(cfg).encode()).hexdigest()[:12]


@dataclass
class LayerState:
    bank: MemoryBank = None
    gate: Gate = None
    ln_gain: Value = None
    ln_bias: Value = None


class GhnModel:
    """Encoder -> retrieval/smoothing layers -> linear classifier."""

    def __init__(self, cfg: TrainConfig, feature_dim: int, num_classes: int, rng):
        if num_classes < 2:
            raise ConfigError("need at least two classes")
        self.cfg = cfg
        self.feature_dim = feature_dim
        self.num_classes = num_classes
        h = cfg.hidden_dim

        def uniform(fan_in, shape):
            bound = 1.0 / np.sqrt(fan_in)
            return ad.parameter(rng.uniform(-bound, bound, size=shape))

        self.enc_weight = uniform(feature_dim, (feature_dim, h))
        self.enc_bias = ad.parameter(np.zeros(h))
        self.layers = []
        groups = cfg.groups if cfg.variant == "hier" else 1
        for _ in range(cfg.num_layers):
            layer = LayerState(
                ln_gain=ad.parameter(np.ones(h)), ln_bias=ad.parameter(np.zeros(h))
            )
            if cfg.variant != "nomem":
                layer.bank = MemoryBank.create(
                    cfg.num_patterns,
                    h,
                    rng,
                    beta_init=cfg.beta_init,
                    groups=groups,
                    heads=cfg.heads,
                )
                layer.gate = Gate.create(h, rng, bias_init=cfg.gate_bias_init)
            self.layers.append(layer)
        self.cls_weight = uniform(h, (h, num_classes))
        self.cls_bias = ad.parameter(np.zeros(num_classes))

    @classmethod
    def from_config(cls, cfg: TrainConfig, feature_dim: int, num_classes: int) -> "GhnModel":
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
        return cls(cfg, feature_dim, num_classes, rng)

    def dynamics_config(self) -> DynamicsConfig:
        return DynamicsConfig(
            lam=self.cfg.lam,
            alpha=self.cfg.alpha,
            iterations=self.cfg.iterations,
            variant=self.cfg.variant,
        )

    def named_parameters(self):
        params = [
            ("encoder.weight", self.enc_weight),
            ("encoder.bias", self.enc_bias),
        ]
        for i, layer in enumerate(self.layers):
            if layer.bank is not None:
                params.append((f"layers.{i}.patterns", layer.bank.patterns))
                params.append((f"layers.{i}.log_beta", layer.bank.log_beta))
                params.append((f"layers.{i}.gate_weight", layer.gate.weight))
                params.append((f"layers.{i}.gate_bias", layer.gate.bias))
            params.append((f"layers.{i}.ln_gain", layer.ln_gain))
            params.append((f"layers.{i}.ln_bias", layer.ln_bias))
        params.append(("classifier.weight", self.cls_weight))
        params.append(("classifier.bias", self.cls_bias))
        return params

    def trainable_parameters(self):
        skip_log_beta = self.cfg.freeze_log_beta
        return [
            (name, p)
            for name, p in self.named_parameters()
            if not (skip_log_beta and name.endswith("log_beta"))
        ]

    def num_parameters(self) -> int:
        return int(sum(p.data.size for _, p in self.named_parameters()))

    def forward(self, features: np.ndarray, L: SparseMatrix, training: bool = False, rng=None):
        """Logits over classes plus per-layer iteration diagnostics."""
        cfg = self.cfg
        dyn = self.dynamics_config()
        x = ad.relu(ad.add(ad.matmul(ad.Value(features), self.enc_weight), self.enc_bias))
        x = ad.dropout_mask(x, cfg.dropout, rng, training)
        diags = []
        for layer in self.layers:
            out, diag = iterate(x, layer.bank, layer.gate, dyn, L, training, rng)
            diags.append(diag)
            x = ad.layer_norm(
                ad.add(out, ad.scale(x, cfg.skip_weight)), layer.ln_gain, layer.ln_bias
            )
            x = ad.dropout_mask(x, cfg.dropout, rng, training)
        logits = ad.add(ad.matmul(x, self.cls_weight), self.cls_bias)
        if not np.isfinite(logits.data).all():
            raise NumericsError("non-finite logits in classifier head")
        return logits, diags

    def snapshot(self):
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def restore(self, state):
        for name, p in self.named_parameters():
            p.data = state[name].copy()

    def pattern_diagnostics(self):
        """beta * ||M||_sigma^2 per layer at the current parameters."""
        out = []
        for layer in self.layers:
            if layer.bank is None:
                continue
            beta = float(np.exp(layer.bank.log_beta.data))
            sigma = spectral_norm(layer.bank.patterns.data)
            out.append(beta * sigma * sigma)
        return out


class Adam:
    """Standard bias-corrected Adam with coupled L2 weight decay."""

    def __init__(self, params, lr, weight_decay=0.0, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for _, p in self.params]
        self.v = [np.zeros_like(p.data) for _, p in self.params]

    def zero_grad(self):
        for _, p in self.params:
            p.zero_grad()

    def step(self):
        self.t += 1
        for i, (name, p) in enumerate(self.params):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if self.weight_decay and not any(s in name for s in DECAY_EXEMPT_SUBSTRINGS):
                g = g + self.weight_decay * p.data
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1**self.t)
            v_hat = self.v[i] / (1 - self.beta2**self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class RunRecord:
    """Everything one training run produced, in a serializable form."""

    config: dict
    seed: int
    config_hash: str
    epochs: list
    best_epoch: int
    best_val_acc: float
    test_acc: float
    collapse: bool
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls(**json.loads(text))


def accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    if not mask.any():
        return float("nan")
    pred = logits[mask].argmax(axis=1)
    return float((pred == labels[mask]).mean())


def evaluate(model: GhnModel, graph: Graph, L: SparseMatrix) -> dict:
    logits, diags = model.forward(graph.features, L, training=False)
    data = logits.data
    gate_means = [d.gate_means for d in diags]
    return {
        "train_acc": accuracy(data, graph.labels, graph.train_mask),
        "val_acc": accuracy(data, graph.labels, graph.val_mask),
        "test_acc": accuracy(data, graph.labels, graph.test_mask),
        "gate_means": gate_means,
    }


def _safe_evaluate(model: GhnModel, graph: Graph, L: SparseMatrix) -> dict:
    """Evaluate, degrading to constant (chance-level) predictions when the
    model cannot produce finite logits; collapsed runs still yield a record."""
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return evaluate(model, graph, L)
    except NumericsError:
        zeros = np.zeros((graph.num_nodes, model.num_classes))
        return {
            "train_acc": accuracy(zeros, graph.labels, graph.train_mask),
            "val_acc": accuracy(zeros, graph.labels, graph.val_mask),
            "test_acc": accuracy(zeros, graph.labels, graph.test_mask),
            "gate_means": [],
        }


def train(model: GhnModel, graph: Graph, L: SparseMatrix, cfg: TrainConfig) -> RunRecord:
    """Full-graph Adam with early stopping on validation accuracy.

    A non-finite loss or state aborts optimization, flags the record as a
    collapse, and falls back to the best parameters seen so far."""
    rng_drop = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    train_idx = np.where(graph.train_mask)[0]
    if train_idx.size == 0:
        raise ConfigError("training mask is empty")
    opt = Adam(model.trainable_parameters(), cfg.learning_rate, cfg.weight_decay)
    best_state = model.snapshot()
    best_val = -1.0
    best_epoch = 0
    since_best = 0
    collapse = False
    epochs = []
    for epoch in range(1, cfg.epochs + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                logits, _ = model.forward(graph.features, L, training=True, rng=rng_drop)
                loss = ad.cross_entropy_with_logits(logits, graph.labels, train_idx)
                if not np.isfinite(loss.data):
                    raise NumericsError("non-finite training loss")
                ad.backward(loss)
                opt.step()
                opt.zero_grad()
                metrics = evaluate(model, graph, L)
                if not np.isfinite(metrics["val_acc"]):
                    raise NumericsError("non-finite validation metrics")
        except NumericsError:
            collapse = True
            break
        epochs.append(
            {
                "epoch": epoch,
                "train_loss": float(loss.data),
                "train_acc": metrics["train_acc"],
                "val_acc": metrics["val_acc"],
            }
        )
        if metrics["val_acc"] > best_val:
            best_val = metrics["val_acc"]
            best_epoch = epoch
            best_state = model.snapshot()
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    model.restore(best_state)
    final = _safe_evaluate(model, graph, L)
    gate_means = [g for layer in final["gate_means"] for g in layer]
    diagnostics = {
        "num_parameters": model.num_parameters(),
        "gate_mean": float(np.mean(gate_means)) if gate_means else None,
        "gate_means_per_layer": [
            float(np.mean(layer)) if layer else None for layer in final["gate_means"]
        ],
        "beta_m_sq_per_layer": model.pattern_diagnostics(),
    }
    return RunRecord(
        config=cfg.to_dict(),
        seed=cfg.seed,
        config_hash=config_hash(cfg),
        epochs=epochs,
        best_epoch=best_epoch,
        best_val_acc=best_val if epochs else final["val_acc"],
        test_acc=final["test_acc"],
        collapse=collapse,
        diagnostics=diagnostics,
    )


def run_training(graph: Graph, L: SparseMatrix, cfg: TrainConfig):
    """Build a model deterministically from the config seed and train it."""
    model = GhnModel.from_config(cfg, graph.feature_dim, graph.num_classes)
    record = train(model, graph, L, cfg)
    return model, record


def _train_job(args):
    graph, L, cfg_dict = args
    _, record = run_training(graph, L, TrainConfig.from_dict(cfg_dict))
    return record


@dataclass
class GridResult:
    best_config: TrainConfig
    records: list
    summary: list  # one row per config: mean/std val and test accuracy


def grid_search(graph: Graph, L: SparseMatrix, grid, seeds, workers: int = 1) -> GridResult:
    """Train every (config, seed), select by mean validation accuracy.

    Ties break on the lexicographically smallest canonical config key.
    Aggregation order is deterministic regardless of worker scheduling.
    """
    grid = list(grid)
    if not grid:
        raise ConfigError("empty grid")
    jobs = []
    for cfg in sorted(grid, key=config_key):
        for seed in seeds:
            jobs.append((graph, L, cfg.replace(seed=seed).to_dict()))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_train_job, jobs))
    else:
        records = [_train_job(j) for j in jobs]

    by_key = {}
    for record in records:
        cfg = TrainConfig.from_dict(record.config)
        by_key.setdefault(config_key(cfg), []).append(record)
    summary = []
    for key in sorted(by_key):
        runs = by_key[key]
        vals = [r.best_val_acc for r in runs]
        tests = [r.test_acc for r in runs]
        summary.append(
            {
                "config_key": key,
                "config_hash": runs[0].config_hash,
                "val_mean": float(np.mean(vals)),
                "val_std": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                "test_mean": float(np.mean(tests)),
                "test_std": float(np.std(tests, ddof=1)) if len(tests) > 1 else 0.0,
                "collapses": sum(r.collapse for r in runs),
            }
        )
    best_row = sorted(summary, key=lambda row: (-row["val_mean"], row["config_key"]))[0]
    best_config = TrainConfig.from_dict(json.loads(best_row["config_key"]) | {"seed": seeds[0]})
    return GridResult(best_config=best_config, records=records, summary=summary)


def save_model(model: GhnModel, path):
    """Persist parameters plus enough metadata to rebuild the model."""
    arrays = {name: p.data for name, p in model.named_parameters()}
    meta = json.dumps(
        {
            "config": model.cfg.to_dict(),
            "feature_dim": model.feature_dim,
            "num_classes": model.num_classes,
        }
    )
    np.savez(path, __meta__=np.frombuffer(meta.encode(), dtype=np.uint8), **arrays)


def load_model(path) -> GhnModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        model = GhnModel.from_config(
            TrainConfig.from_dict(meta["config"]), meta["feature_dim"], meta["num_classes"]
        )
        model.restore({name: data[name] for name, _ in model.named_parameters()})
    return model
