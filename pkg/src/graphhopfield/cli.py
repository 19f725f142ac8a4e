"""Command-line entry point: training, sweeps, corruption, theory checks.

Every command resolves one configuration (defaults < config file < --set
overrides), loads or synthesizes a dataset, and writes its outputs into the
output directory.  Output files carry the manifest hash in their names, and
re-running the same manifest reproduces the run records bit for bit.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure, 5 certificate failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, config
from .errors import ConfigError, DataError, NumericsError
from .experiments import (
    CorruptionSpec,
    ablation_sweep,
    corrupt,
    gate_analysis,
    operating_point,
    phase_diagram,
    robustness_curve,
)
from .graphcore import load_graph, normalized_laplacian, save_graph
from .model import load_model, run_training, save_model
from .synth import synthetic_graph
from .theory import run_verification_suite
from . import reporting

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_CERTIFICATE = 5


@dataclass
class RunManifest:
    """What a command ran on; the hash covers everything reproducibility needs."""

    command: str
    config: dict
    data: dict
    seeds: list
    out_dir: str
    timestamp: str

    def hash(self) -> str:
        payload = json.dumps(
            {
                "command": self.command,
                "config": self.config,
                "data": self.data,
                "seeds": self.seeds,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def write(self, out_dir: Path) -> str:
        h = self.hash()
        payload = asdict(self)
        payload["hash"] = h
        (out_dir / f"manifest_{h}.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
        return h


def _parse_floats(text: str):
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _parse_seeds(text: str):
    seeds = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "-" in tok[1:]:
            lo, hi = tok.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(tok))
    if not seeds:
        raise ConfigError(f"no seeds in {text!r}")
    return seeds


def _resolve_inputs(args):
    cfg = config.resolve_config(args.config, args.set)
    dataset = cfg["dataset"]
    if dataset == "files":
        paths = dict(
            edges=args.edges, features=args.features, labels=args.labels, splits=args.splits
        )
        missing = [k for k, v in paths.items() if v is None]
        if missing:
            raise DataError(
                f"dataset=files needs --edges/--features/--labels/--splits; missing {missing}"
            )
        graph = load_graph(paths["edges"], paths["features"], paths["labels"], paths["splits"])
        data_desc = {"dataset": "files", **paths}
    elif dataset in ("synth-homophilous", "synth-heterophilous"):
        kind = dataset.split("-", 1)[1]
        graph = synthetic_graph(
            kind,
            num_nodes=cfg["data_nodes"],
            feature_dim=cfg["data_features"],
            seed=cfg["data_seed"],
        )
        data_desc = {
            "dataset": dataset,
            "data_nodes": cfg["data_nodes"],
            "data_features": cfg["data_features"],
            "data_seed": cfg["data_seed"],
        }
    else:
        raise ConfigError(f"unknown dataset {dataset!r}")
    L = normalized_laplacian(graph, self_loops=cfg["self_loops"])
    return cfg, graph, L, data_desc


def _prepare(args, command, seeds):
    cfg, graph, L, data_desc = _resolve_inputs(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        command=command,
        config=cfg,
        data=data_desc,
        seeds=list(seeds),
        out_dir=str(out_dir),
        timestamp=datetime.now(timezone.utc).isoformat(),
    )
    run_hash = manifest.write(out_dir)
    return cfg, graph, L, out_dir, run_hash


def _append_records(out_dir: Path, run_hash: str, records):
    path = out_dir / f"run_records_{run_hash}.jsonl"
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json() + "\n")
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_train(args) -> int:
    seeds = _parse_seeds(args.seeds)
    cfg, graph, L, out_dir, run_hash = _prepare(args, "train", seeds)
    records, rows = [], []
    for seed in seeds:
        train_cfg = config.train_config_from(cfg, seed=seed)
        model, record = run_training(graph, L, train_cfg)
        records.append(record)
        save_model(model, out_dir / f"params_{run_hash}_seed{seed}.npz")
        rows.append(
            {
                "seed": seed,
                "best_epoch": record.best_epoch,
                "epochs_run": len(record.epochs),
                "val_acc": record.best_val_acc,
                "test_acc": record.test_acc,
                "collapse": record.collapse,
                "gate_mean": record.diagnostics.get("gate_mean"),
                "config_hash": record.config_hash,
            }
        )
        print(
            f"seed {seed}: val {record.best_val_acc:.4f}  test {record.test_acc:.4f}"
            + ("  [collapse]" if record.collapse else "")
        )
    _append_records(out_dir, run_hash, records)
    reporting.write_table(out_dir / f"train_metrics_{run_hash}.tsv", rows)
    if not args.no_figures:
        reporting.render_training_curves(
            records[0], out_dir / f"train_curves_{run_hash}_seed{seeds[0]}.png"
        )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg, graph, L, out_dir, run_hash = _prepare(args, "evaluate", [])
    model = load_model(args.params)
    if args.corrupt_kind:
        spec = CorruptionSpec(
            kind=args.corrupt_kind, level=args.corrupt_level, seed=args.corruption_seed
        )
        graph = corrupt(graph, spec)
        L = normalized_laplacian(graph, self_loops=cfg["self_loops"])
    from .model import _safe_evaluate

    metrics = _safe_evaluate(model, graph, L)
    row = {
        "train_acc": metrics["train_acc"],
        "val_acc": metrics["val_acc"],
        "test_acc": metrics["test_acc"],
        "corruption": args.corrupt_kind or "none",
        "level": args.corrupt_level if args.corrupt_kind else 0.0,
    }
    reporting.write_table(out_dir / f"evaluation_{run_hash}.tsv", [row])
    print(json.dumps(row, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args) -> int:
    seeds = _parse_seeds(args.seeds)
    cfg, graph, L, out_dir, run_hash = _prepare(args, "sweep", seeds)
    values = _parse_floats(args.values)
    if args.axis in ("T", "H"):
        values = [int(v) for v in values]
    base = config.train_config_from(cfg)
    records = []
    rows = ablation_sweep(args.axis, values, base, graph, seeds, record_sink=records)
    _append_records(out_dir, run_hash, records)
    table = out_dir / f"sweep_{args.axis}_{run_hash}.tsv"
    reporting.write_table(table, rows)
    for row in rows:
        print(
            f"{args.axis}={row['value']:g}: "
            + reporting.format_mean_std(row["mean"], row["std"])
            + (f"  collapses={row['collapses']}" if row["collapses"] else "")
        )
    if args.emit_plot_data:
        series = {args.axis: [(r["value"], r["mean"], r["std"]) for r in rows]}
        reporting.write_plot_data(out_dir / f"plotdata_sweep_{args.axis}_{run_hash}.tsv", series)
    if not args.no_figures:
        reporting.render_sweep(rows, out_dir / f"sweep_{args.axis}_{run_hash}.png", args.axis)
    return EXIT_OK


def cmd_corrupt(args) -> int:
    if args.write_dataset:
        cfg, graph, L, out_dir, run_hash = _prepare(args, "corrupt-write", [])
        spec = CorruptionSpec(
            kind=args.kinds, level=args.levels_single, seed=args.corruption_seed
        )
        corrupted = corrupt(graph, spec)
        target = Path(args.write_dataset)
        target.mkdir(parents=True, exist_ok=True)
        save_graph(
            corrupted,
            target / "edges.txt",
            target / "features.txt",
            target / "labels.txt",
            target / "splits.txt",
        )
        print(f"wrote corrupted dataset to {target}")
        return EXIT_OK
    seeds = _parse_seeds(args.seeds)
    cfg, graph, L, out_dir, run_hash = _prepare(args, "corrupt", seeds)
    kinds = tuple(k.strip() for k in args.kinds.split(","))
    levels = _parse_floats(args.levels)
    variants = tuple(v.strip() for v in args.variants.split(",")) if args.variants else (
        cfg["variant"],
    )
    records = []
    rows = robustness_curve(
        variants,
        graph,
        levels,
        seeds,
        base_config=config.train_config_from(cfg),
        kinds=kinds,
        corruption_seed=args.corruption_seed,
        record_sink=records,
    )
    _append_records(out_dir, run_hash, records)
    reporting.write_table(out_dir / f"corruption_{run_hash}.tsv", rows)
    for row in rows:
        print(
            f"{row['variant']:6s} {row['kind']:13s} level {row['level']:.2f}: "
            + reporting.format_mean_std(row["mean"], row["std"])
            + f"  drop {row['relative_drop']:+.1f}%"
        )
    if args.emit_plot_data:
        series = {}
        for row in rows:
            series.setdefault(f"{row['variant']}:{row['kind']}", []).append(
                (row["level"], row["mean"], row["std"])
            )
        reporting.write_plot_data(out_dir / f"plotdata_corruption_{run_hash}.tsv", series)
    if not args.no_figures:
        reporting.render_robustness(rows, out_dir / f"corruption_{run_hash}.png")
    return EXIT_OK


def cmd_phase_diagram(args) -> int:
    seeds = _parse_seeds(args.seeds)
    cfg, graph, L, out_dir, run_hash = _prepare(args, "phase-diagram", seeds)
    records = []
    cells = phase_diagram(
        args.retrieval,
        _parse_floats(args.beta_grid),
        [int(v) for v in _parse_floats(args.k_grid)],
        graph,
        seeds,
        base_config=config.train_config_from(cfg),
        record_sink=records,
    )
    _append_records(out_dir, run_hash, records)
    reporting.write_table(out_dir / f"phase_diagram_{run_hash}.tsv", cells)
    for cell in cells:
        flag = " [bimodal]" if cell["bimodal"] else ""
        print(
            f"beta={cell['beta_init']:g} K={cell['num_patterns']}: "
            + reporting.format_mean_std(cell["mean"], cell["std"])
            + flag
        )
    if args.emit_plot_data:
        series = {}
        for cell in cells:
            series.setdefault(f"K={cell['num_patterns']}", []).append(
                (cell["beta_init"], cell["mean"], cell["std"])
            )
        reporting.write_plot_data(out_dir / f"plotdata_phase_{run_hash}.tsv", series)
    if not args.no_figures:
        reporting.render_phase_diagram(cells, out_dir / f"phase_diagram_{run_hash}.png")
    return EXIT_OK


def cmd_gate_analysis(args) -> int:
    seeds = _parse_seeds(args.seeds)
    cfg, graph, L, out_dir, run_hash = _prepare(args, "gate-analysis", seeds)
    base = config.train_config_from(cfg)
    if base.variant == "nomem":
        raise ConfigError("gate analysis needs a gated (memory-enabled) variant")
    records, models = [], []
    for seed in seeds:
        model, record = run_training(graph, L, base.replace(seed=seed))
        models.append(model)
        records.append(record)
    rows = gate_analysis(models, graph, _parse_floats(args.levels), args.corruption_seed)
    _append_records(out_dir, run_hash, records)
    reporting.write_table(out_dir / f"gate_analysis_{run_hash}.tsv", rows)
    for row in rows:
        print(
            f"mask {row['level']:.0%}: gate "
            + reporting.format_mean_std(row["gate_mean"], row["gate_std"])
            + "  acc "
            + reporting.format_mean_std(row["acc_mean"], row["acc_std"])
        )
    if args.emit_plot_data:
        series = {
            "gate": [(r["level"], r["gate_mean"], r["gate_std"]) for r in rows],
            "accuracy": [(r["level"], r["acc_mean"], r["acc_std"]) for r in rows],
        }
        reporting.write_plot_data(out_dir / f"plotdata_gate_{run_hash}.tsv", series)
    if not args.no_figures:
        reporting.render_gate_analysis(rows, out_dir / f"gate_analysis_{run_hash}.png")
    return EXIT_OK


def cmd_verify_theory(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        command="verify-theory",
        config={"seed": args.seed},
        data={"dataset": "bundled-instances"},
        seeds=[args.seed],
        out_dir=str(out_dir),
        timestamp=datetime.now(timezone.utc).isoformat(),
    )
    run_hash = manifest.write(out_dir)
    certs = run_verification_suite(seed=args.seed)
    rows = []
    for cert in certs:
        rows.append(
            {
                "name": cert.name,
                "passed": cert.passed,
                "slack": cert.slack,
                "constants": json.dumps(cert.constants, sort_keys=True, default=float),
                "detail": cert.detail,
            }
        )
        status = "pass" if cert.passed else "FAIL"
        print(f"{status:4s}  {cert.name:34s} slack={cert.slack:+.3e}  {cert.detail}")
    reporting.write_table(out_dir / f"certificates_{run_hash}.tsv", rows)
    with open(out_dir / f"certificates_{run_hash}.jsonl", "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, default=float) + "\n")
    if not args.no_figures:
        reporting.render_certificates(certs, out_dir / f"certificates_{run_hash}.png")
    if all(c.passed for c in certs):
        print(f"{len(certs)} certificates passed")
        return EXIT_OK
    failed = [c.name for c in certs if not c.passed]
    print(f"certificate failure: {failed}", file=sys.stderr)
    return EXIT_CERTIFICATE


def cmd_operating_point(args) -> int:
    seeds = _parse_seeds(args.seeds)
    cfg, graph, L, out_dir, run_hash = _prepare(args, "operating-point", seeds)
    records = []
    report = operating_point(
        graph,
        config.train_config_from(cfg),
        seeds,
        rescale_m_sq=args.rescale_m_sq,
        record_sink=records,
    )
    _append_records(out_dir, run_hash, records)
    summary = {
        "beta": report["beta_mean"],
        "m_norm_sq": report["m_norm_sq_mean"],
        "product": report["product_mean"],
        "product_std": report["product_std"],
        "regime": report["regime"],
        "seeds": len(seeds),
        "config_hash": report["config_hash"],
    }
    reporting.write_table(out_dir / f"operating_point_{run_hash}.tsv", [summary])
    reporting.write_table(
        out_dir / f"operating_point_per_seed_{run_hash}.tsv",
        [
            {k: v for k, v in row.items() if k != "per_layer_product"}
            for row in report["per_seed"]
        ],
    )
    print(
        "operating point: "
        + reporting.format_mean_std(report["product_mean"], report["product_std"], digits=2)
        + f"  regime={report['regime']}"
    )
    if not args.no_figures:
        reporting.render_operating_point(report, out_dir / f"operating_point_{run_hash}.png")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(sub, seeds_default="0"):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    sub.add_argument("--out", default="ghn_out", help="output directory")
    sub.add_argument("--seeds", default=seeds_default, help="comma list or a-b range")
    sub.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    sub.add_argument("--edges", help="edge list file (dataset=files)")
    sub.add_argument("--features", help="feature matrix file (dataset=files)")
    sub.add_argument("--labels", help="label file (dataset=files)")
    sub.add_argument("--splits", help="split assignment file (dataset=files)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghn",
        description="Associative-memory retrieval coupled with Laplacian smoothing "
        "for node classification: training, experiments, and theory certificates.",
        epilog=config.describe_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"ghn {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="train one config over seeds")
    _add_common(train)
    train.set_defaults(func=cmd_train)

    ev = commands.add_parser("evaluate", help="evaluate saved parameters")
    _add_common(ev)
    ev.add_argument("--params", required=True, help="saved parameter file (.npz)")
    ev.add_argument("--corrupt-kind", choices=("edge_drop", "feature_mask", "feature_noise"))
    ev.add_argument("--corrupt-level", type=float, default=0.5)
    ev.add_argument("--corruption-seed", type=int, default=0)
    ev.set_defaults(func=cmd_evaluate)

    sweep = commands.add_parser("sweep", help="ablation sweep along one axis")
    _add_common(sweep, seeds_default="0,1,2")
    sweep.add_argument("--axis", required=True, help="lambda | T | H | alpha | ...")
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--emit-plot-data", action="store_true")
    sweep.set_defaults(func=cmd_sweep)

    cor = commands.add_parser("corrupt", help="clean-train / corrupted-eval robustness")
    _add_common(cor, seeds_default="0,1,2")
    cor.add_argument(
        "--kinds",
        default="edge_drop,feature_mask,feature_noise",
        help="comma list of corruption kinds (single kind with --write-dataset)",
    )
    cor.add_argument("--levels", default="0,0.25,0.5", help="comma list of levels")
    cor.add_argument("--variants", help="comma list of variants (default: config variant)")
    cor.add_argument("--corruption-seed", type=int, default=0)
    cor.add_argument("--emit-plot-data", action="store_true")
    cor.add_argument("--write-dataset", metavar="DIR", help="write one corrupted dataset copy")
    cor.add_argument(
        "--level", dest="levels_single", type=float, default=0.5, help="level for --write-dataset"
    )
    cor.set_defaults(func=cmd_corrupt)

    phase = commands.add_parser("phase-diagram", help="temperature x pattern-count grid")
    _add_common(phase, seeds_default="0,1,2")
    phase.add_argument("--retrieval", default="lse", choices=("lse", "lsr"))
    phase.add_argument("--beta-grid", default="0.2,1.0,5.0")
    phase.add_argument("--k-grid", default="16,64")
    phase.add_argument("--emit-plot-data", action="store_true")
    phase.set_defaults(func=cmd_phase_diagram)

    gate = commands.add_parser("gate-analysis", help="gate value vs feature masking")
    _add_common(gate, seeds_default="0,1,2")
    gate.add_argument("--levels", default="0,0.1,0.3,0.5,0.7")
    gate.add_argument("--corruption-seed", type=int, default=0)
    gate.add_argument("--emit-plot-data", action="store_true")
    gate.set_defaults(func=cmd_gate_analysis)

    verify = commands.add_parser("verify-theory", help="run the certificate suite")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--out", default="ghn_out")
    verify.add_argument("--no-figures", action="store_true")
    verify.set_defaults(func=cmd_verify_theory)

    op = commands.add_parser("operating-point", help="trained temperature-norm products")
    _add_common(op, seeds_default="0,1,2,3,4")
    op.add_argument(
        "--rescale-m-sq",
        type=float,
        help="pin every bank's squared spectral norm after training",
    )
    op.set_defaults(func=cmd_operating_point)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except NumericsError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
