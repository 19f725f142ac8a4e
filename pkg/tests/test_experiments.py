import numpy as np
import pytest

from graphhopfield.errors import ConfigError
from graphhopfield.experiments import (
    CorruptionSpec,
    ablation_sweep,
    bimodal_flag,
    corrupt,
    gate_analysis,
    operating_point,
    phase_diagram,
    relative_drop,
    robustness_curve,
)
from graphhopfield.graphcore import normalized_laplacian
from graphhopfield.model import GhnModel, TrainConfig, run_training
from graphhopfield.synth import synthetic_graph


def small_graph(n=100, seed=0, kind="homophilous"):
    return synthetic_graph(kind, num_nodes=n, feature_dim=8, seed=seed, avg_degree=8)


def quick_config(**kwargs):
    base = dict(hidden_dim=16, num_patterns=8, epochs=40, patience=20)
    base.update(kwargs)
    return TrainConfig(**base)


# ---------------------------------------------------------------------------
# corruption


def test_level_zero_is_identity():
    g = small_graph()
    for kind in ("edge_drop", "feature_mask", "feature_noise"):
        c = corrupt(g, CorruptionSpec(kind=kind, level=0.0, seed=3))
        np.testing.assert_array_equal(c.edges, g.edges)
        np.testing.assert_array_equal(c.features, g.features)


def test_full_edge_drop_leaves_self_loop_laplacian_zero():
    g = small_graph()
    c = corrupt(g, CorruptionSpec(kind="edge_drop", level=1.0, seed=0))
    assert c.num_edges == 0
    L = normalized_laplacian(c, self_loops=True)
    assert np.abs(L.to_dense()).max() == 0.0


def test_edge_drop_count():
    g = small_graph()
    c = corrupt(g, CorruptionSpec(kind="edge_drop", level=0.25, seed=1))
    assert c.num_edges == g.num_edges - int(np.floor(0.25 * g.num_edges))


def test_feature_mask_zeroes_exact_entry_count():
    g = small_graph().replace(features=np.ones((100, 4)))
    sub = g.replace(
        num_nodes=10,
        features=np.ones((10, 4)),
        edges=np.zeros((0, 2), dtype=np.int64),
        labels=np.zeros(10, dtype=np.int64),
        train_mask=np.zeros(10, dtype=bool),
        val_mask=np.zeros(10, dtype=bool),
        test_mask=np.zeros(10, dtype=bool),
    )
    c = corrupt(sub, CorruptionSpec(kind="feature_mask", level=0.5, seed=2))
    assert (c.features == 0).sum() == 20


def test_feature_mask_row_mode_zeroes_whole_rows():
    g = small_graph()
    c = corrupt(g, CorruptionSpec(kind="feature_mask", level=0.3, seed=2, mask_rows=True))
    zero_rows = (c.features == 0).all(axis=1)
    assert zero_rows.sum() == int(np.floor(0.3 * g.num_nodes))


def test_feature_noise_scales_with_per_feature_std():
    g = small_graph()
    level = 0.5
    c = corrupt(g, CorruptionSpec(kind="feature_noise", level=level, seed=4))
    delta = c.features - g.features
    expected = level * g.features.std(axis=0)
    # empirical std per column within 20% of the target scale
    np.testing.assert_allclose(delta.std(axis=0), expected, rtol=0.2)


def test_corruption_is_seed_deterministic():
    g = small_graph()
    spec = CorruptionSpec(kind="feature_mask", level=0.4, seed=9)
    a, b = corrupt(g, spec), corrupt(g, spec)
    np.testing.assert_array_equal(a.features, b.features)
    other = corrupt(g, CorruptionSpec(kind="feature_mask", level=0.4, seed=10))
    assert not np.array_equal(a.features, other.features)


def test_corruption_never_touches_labels_or_masks():
    g = small_graph()
    for kind in ("edge_drop", "feature_mask", "feature_noise"):
        c = corrupt(g, CorruptionSpec(kind=kind, level=0.7, seed=5))
        np.testing.assert_array_equal(c.labels, g.labels)
        np.testing.assert_array_equal(c.train_mask, g.train_mask)
        np.testing.assert_array_equal(c.test_mask, g.test_mask)


def test_corruption_spec_validation():
    with pytest.raises(ConfigError):
        CorruptionSpec(kind="bogus", level=0.5)
    with pytest.raises(ConfigError):
        CorruptionSpec(kind="edge_drop", level=1.5)


# ---------------------------------------------------------------------------
# detectors and arithmetic


def test_relative_drop_signed_percentage():
    assert relative_drop(80.0, 72.0) == pytest.approx(-10.0)
    assert relative_drop(0.8, 0.72) == pytest.approx(-10.0)
    assert relative_drop(0.5, 0.55) == pytest.approx(10.0)


def test_bimodality_detector_on_injected_multisets():
    split = [0.94] * 5 + [0.50] * 5
    assert bimodal_flag(split) is True
    assert bimodal_flag([0.94] * 10) is False
    assert bimodal_flag([0.94]) is None


# ---------------------------------------------------------------------------
# robustness protocol


def test_robustness_level_zero_matches_clean_accuracy():
    g = small_graph(n=80)
    rows = robustness_curve(
        ["lse"],
        g,
        levels=[0.0, 1.0],
        seeds=[0, 1],
        base_config=quick_config(epochs=25),
        kinds=("edge_drop",),
    )
    by_level = {row["level"]: row for row in rows}
    assert by_level[0.0]["mean"] == pytest.approx(by_level[0.0]["clean_mean"])
    assert by_level[0.0]["relative_drop"] == pytest.approx(0.0)
    # degradation sanity: fully removing edges cannot beat the clean graph by much
    assert by_level[1.0]["mean"] <= by_level[0.0]["mean"] + 0.05
    assert all("config_hash" in row for row in rows)


# ---------------------------------------------------------------------------
# phase diagram


def test_phase_diagram_cell_structure():
    g = small_graph(n=80)
    cells = phase_diagram(
        "lse", beta_grid=[1.0], k_grid=[8], graph=g, seeds=[0],
        base_config=quick_config(epochs=10),
    )
    assert len(cells) == 1
    cell = cells[0]
    assert cell["bimodal"] is None  # single seed: flag undefined
    assert cell["num_patterns"] == 8 and cell["beta_init"] == 1.0
    assert np.isfinite(cell["mean"])


def test_phase_diagram_validates_inputs():
    g = small_graph(n=80)
    with pytest.raises(ConfigError):
        phase_diagram("hier", [1.0], [8], g, [0])
    with pytest.raises(ConfigError):
        phase_diagram("lse", [], [8], g, [0])


# ---------------------------------------------------------------------------
# gate analysis


def test_gate_analysis_with_pinned_gate_reports_sigmoid_of_bias():
    g = small_graph(n=60)
    cfg = quick_config(num_layers=1)
    models = []
    for seed in range(2):
        model = GhnModel.from_config(cfg.replace(seed=seed), g.feature_dim, g.num_classes)
        for layer in model.layers:
            layer.gate.weight.data = np.zeros_like(layer.gate.weight.data)
            layer.gate.bias.data = np.full_like(layer.gate.bias.data, 2.0)
        models.append(model)
    rows = gate_analysis(models, g, mask_levels=[0.0, 0.5])
    expected = 1.0 / (1.0 + np.exp(-2.0))
    for row in rows:
        assert row["gate_mean"] == pytest.approx(expected, abs=1e-12)
        assert row["gate_std"] == pytest.approx(0.0, abs=1e-12)


def test_gate_analysis_rejects_memoryless_models_and_empty_levels():
    g = small_graph(n=60)
    nomem = GhnModel.from_config(
        quick_config(variant="nomem"), g.feature_dim, g.num_classes
    )
    with pytest.raises(ConfigError):
        gate_analysis([nomem], g, [0.0])
    gated = GhnModel.from_config(quick_config(), g.feature_dim, g.num_classes)
    with pytest.raises(ConfigError):
        gate_analysis([gated], g, [])


# ---------------------------------------------------------------------------
# sweeps


def test_sweep_rejects_indivisible_heads():
    g = small_graph(n=60)
    with pytest.raises(ConfigError, match="divisible"):
        ablation_sweep("H", [3], TrainConfig(hidden_dim=64), g, seeds=[0])


def test_sweep_rejects_unknown_axis():
    g = small_graph(n=60)
    with pytest.raises(ConfigError):
        ablation_sweep("bogus", [1], TrainConfig(), g, seeds=[0])


def test_sweep_rows_carry_hashes_and_stats():
    g = small_graph(n=80)
    rows = ablation_sweep(
        "T", [1, 2], quick_config(epochs=10), g, seeds=[0, 1]
    )
    assert [row["value"] for row in rows] == [1, 2]
    for row in rows:
        assert set(row) >= {"mean", "std", "collapses", "config_hash"}
        assert row["collapses"] == 0
    # distinct configs hash differently
    assert rows[0]["config_hash"] != rows[1]["config_hash"]


# ---------------------------------------------------------------------------
# operating point


def test_operating_point_constructed_boundary():
    g = small_graph(n=60)
    cfg = quick_config(epochs=8, freeze_log_beta=True, beta_init=1.0)
    report = operating_point(g, cfg, seeds=[0, 1], rescale_m_sq=2.0)
    assert report["product_mean"] == pytest.approx(2.0, abs=0.01)
    assert report["product_std"] <= 0.01
    assert report["regime"] == "convex_boundary"


def test_operating_point_rejects_memoryless_variant():
    g = small_graph(n=60)
    with pytest.raises(ConfigError):
        operating_point(g, quick_config(variant="nomem", epochs=3), seeds=[0])
