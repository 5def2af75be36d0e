"""Tests for experiment configs, presets and ablation grids."""
import numpy as np
import pytest

from cqdd import pipelines as pl
from cqdd.experiment import GRIDS, PRESETS, from_dict, grid, preset

# Hyperparameter table: |C|, n, n_a, L, T, N, schedule, metric
TABLE = {
    "planar_rings": (3, 1, 2, 15, 20, 1000, ("power", [0.005, 2]), "wass"),
    "polar_points": (6, 1, 2, 12, 20, 500, ("linear", [0.15]), "mmd"),
    "entanglement": (2, 2, 2, 12, 20, 125, ("power", [0.01, 2]), "wass"),
    "many_body": (2, 4, 2, 12, 30, 100, ("linspace", [0.1, 2.0]), "mmd"),
}


# =============================================================================
# Presets
# =============================================================================

@pytest.mark.parametrize("name", sorted(TABLE))
def test_table_presets_cell_for_cell(name):
    C, n, n_a, L, T, N, (kind, params), metric = TABLE[name]
    cfg = from_dict(preset(name))
    assert (len(cfg.classes), cfg.n, cfg.n_a, cfg.L, cfg.T, cfg.N, cfg.metric) == (C, n, n_a, L, T, N, metric)
    assert cfg.schedule == {"kind": kind, "params": params}


def test_rings_union_benchmark_preset():
    cfg = from_dict(preset("rings_union"))
    assert (cfg.T, cfg.n_a, cfg.L, cfg.N * len(cfg.classes)) == (20, 2, 12, 250)


def test_schedules_resolve():
    assert from_dict(preset("planar_rings")).make_schedule().deltas[-1] == pytest.approx(2.0)
    lin = from_dict(preset("many_body")).make_schedule().deltas
    assert (lin[0], lin[-1]) == pytest.approx((0.1, 2.0))


def test_polar_point_angles():
    cfg = from_dict(preset("polar_points"))
    mus = [m for m, _ in cfg.conditions().values()]
    np.testing.assert_allclose(mus, np.arange(6) * np.pi / 3)
    assert cfg.labels == ["+Z", "+Y", "-Z", "-Y", "+X", "-X"]


def test_every_preset_builds():
    for name in PRESETS:
        cfg = from_dict(preset(name))
        assert cfg.spec.num_params == 2 * cfg.L * (cfg.n + cfg.n_a)


# =============================================================================
# Config validation
# =============================================================================

def test_unknown_preset_and_keys():
    with pytest.raises(ValueError):
        preset("nope")
    with pytest.raises(ValueError):
        from_dict({**preset("entanglement"), "colour": "red"})
    with pytest.raises(ValueError):
        from_dict({**preset("entanglement"), "metric": "kl"})
    doc = preset("entanglement")
    del doc["seed"]
    with pytest.raises(ValueError):
        from_dict(doc)


def test_preset_reference_with_overrides():
    cfg = from_dict({"preset": "entanglement", "seed": 9, "trainer": {"learning_rate": 0.2}})
    assert cfg.seed == 9 and cfg.trainer.learning_rate == 0.2 and cfg.L == 12


def test_mixed_qubit_counts_rejected():
    doc = preset("entanglement")
    doc["classes"].append({"family": "planar_ring", "params": {"plane": "X"}})
    with pytest.raises(ValueError):
        from_dict(doc)


def test_unconditioned_union():
    doc = {**preset("rings_union"), "N": 5}
    cfg = from_dict({**doc, "unconditioned": True})
    assert list(cfg.conditions()) == ["union"]
    assert cfg.targets()["union"].shape == (10, 2)
    cond = from_dict(doc).targets()
    np.testing.assert_array_equal(cfg.targets()["union"], np.concatenate(list(cond.values())))


def test_basis_conditioning_capacity():
    cfg = from_dict({**preset("polar_points"), "conditioning": "basis"})
    with pytest.raises(ValueError, match="cannot uniquely represent more than 4 classes"):
        cfg.conditions()


# =============================================================================
# Grids
# =============================================================================

def test_constrained_ancilla_grid():
    points = pl.grid_points(grid("ancilla_constrained"))
    kept = [(d["n_a"], d["L"]) for d, skip in points if skip is None]
    assert kept == [(1, 12), (2, 6), (3, 4), (4, 3), (6, 2)]
    skipped = [d["n_a"] for d, skip in points if skip is not None]
    assert skipped == [5]


def test_unconstrained_ancilla_grid():
    points = pl.grid_points(grid("ancilla_unconstrained"))
    assert [(d["n_a"], d["L"]) for d, _ in points] == [(k, 12) for k in range(1, 7)]


@pytest.mark.parametrize("name,family", [("class_scaling_rings", "equator_ring"), ("class_scaling_ghz", "ghz_string")])
def test_class_scaling_grids(name, family):
    points = pl.grid_points(grid(name))
    assert [len(d["classes"]) for d, _ in points] == list(range(1, 9))
    for d, _ in points:
        cfg = from_dict(d)
        assert (cfg.T, cfg.L, cfg.n_a, cfg.N) == (20, 15, 2, 100)
        assert all(c.family == family for c in cfg.classes)


def test_model_scaling_grid_size():
    assert len(pl.grid_points(grid("model_scaling"))) == 5 * 3 * 3


def test_all_grids_expand():
    for name in GRIDS:
        assert pl.grid_points(grid(name))
