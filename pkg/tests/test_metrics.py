"""Tests for evaluation metrics."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cqdd import datasets as ds
from cqdd import metrics as mt
from cqdd import statevec as sv

from oracles import embed, meyer_wallach_reference, partial_trace_single, Z


def _haar(q, seed, size=None):
    return sv.haar_random(q, np.random.default_rng(seed), size)


# =============================================================================
# Meyer-Wallach
# =============================================================================

def test_reduced_qubit_matches_oracle():
    psi = _haar(3, 0)
    for k in range(3):
        np.testing.assert_allclose(mt.reduced_qubit(psi, k), partial_trace_single(psi, k, 3), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), q=st.integers(2, 4))
def test_meyer_wallach_matches_oracle(seed, q):
    psi = _haar(q, seed)
    assert mt.meyer_wallach(psi) == pytest.approx(meyer_wallach_reference(psi), abs=1e-10)
    assert 0 <= mt.meyer_wallach(psi) <= 1


def test_meyer_wallach_reference_values():
    prod = np.kron(_haar(1, 1), _haar(1, 2))
    assert mt.meyer_wallach(prod) == pytest.approx(0.0, abs=1e-12)
    assert mt.meyer_wallach(np.array([1, 0, 0, 1]) / np.sqrt(2)) == pytest.approx(1.0, abs=1e-12)
    w = np.array([0, 1, 1, 0, 1, 0, 0, 0]) / np.sqrt(3)
    assert mt.meyer_wallach(w) == pytest.approx(8 / 9, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_meyer_wallach_invariant_under_local_phases(seed):
    psi = _haar(3, seed)
    rot = psi
    for k, a in enumerate(np.random.default_rng(seed).uniform(0, 6, 3)):
        rot = sv.apply_rotation(rot, "Z", a, k)
    assert abs(mt.meyer_wallach(rot) - mt.meyer_wallach(psi)) < 1e-10


def test_meyer_wallach_batched():
    batch = _haar(2, 3, size=4)
    np.testing.assert_allclose(mt.meyer_wallach(batch), [mt.meyer_wallach(b) for b in batch], atol=1e-14)


# =============================================================================
# Subspace overlap
# =============================================================================

def test_subspace_overlap():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert mt.subspace_overlap(bell, [0, 3]) == pytest.approx(1.0)
    assert mt.subspace_overlap(bell, [1, 2]) == pytest.approx(0.0)
    psi = _haar(3, 4)
    parts = [[0, 5], [1, 2, 7], [3], [4, 6]]
    assert sum(mt.subspace_overlap(psi, p) for p in parts) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        mt.subspace_overlap(psi, [])
    with pytest.raises(ValueError):
        mt.subspace_overlap(psi, [1, 1])


# =============================================================================
# Magnetization
# =============================================================================

def test_magnetization_reference_states():
    dist, mean = mt.magnetization(sv.basis_state(4, 0))
    assert list(dist.support) == [4, 2, 0, -2, -4]
    np.testing.assert_allclose(dist.probabilities, [1, 0, 0, 0, 0])
    assert mean == pytest.approx(4)
    plus = np.full(16, 0.25)
    dist, mean = mt.magnetization(plus)
    np.testing.assert_allclose(dist.probabilities, np.array([1, 4, 6, 4, 1]) / 16)
    assert mean == pytest.approx(0, abs=1e-12)
    ghz = np.zeros(16)
    ghz[[0, 15]] = 2**-0.5
    dist, mean = mt.magnetization(ghz)
    np.testing.assert_allclose(dist.probabilities, [0.5, 0, 0, 0, 0.5])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_magnetization_mean_two_ways(seed):
    psi = _haar(4, seed)
    dist, mean = mt.magnetization(psi)
    assert dist.mean == pytest.approx(mean, abs=1e-10)
    assert dist.probabilities.sum() == pytest.approx(1.0, abs=1e-10)
    M = sum(embed({i: Z}, 4) for i in range(4))
    assert mean == pytest.approx(np.real(np.vdot(psi, M @ psi)), abs=1e-10)


def test_ensemble_magnetization_averages():
    batch = _haar(3, 6, size=10)
    dist, mean = mt.ensemble_magnetization(batch)
    per = [mt.magnetization(b) for b in batch]
    np.testing.assert_allclose(dist.probabilities, np.mean([d.probabilities for d, _ in per], axis=0), atol=1e-12)
    assert mean == pytest.approx(np.mean([m for _, m in per]), abs=1e-12)


# =============================================================================
# Per-class spread
# =============================================================================

def test_spread_zero_for_targets_and_near_100_for_haar():
    rng = np.random.default_rng(0)
    targets = {"a": ds.planar_ring("X", 150, rng), "b": ds.planar_ring("Y", 150, rng)}
    haar = {k: sv.haar_random(1, rng, size=150) for k in targets}
    spread = mt.per_class_spread(targets, targets, haar, "wass")
    assert all(v == pytest.approx(0.0, abs=1e-12) for v in spread.values())
    fresh = {k: sv.haar_random(1, rng, size=150) for k in targets}
    for v in mt.per_class_spread(fresh, targets, haar, "wass").values():
        assert 80 < v < 120


def test_spread_label_mismatch():
    a = _haar(1, 0, size=3)
    with pytest.raises(ValueError):
        mt.per_class_spread({"a": a}, {"b": a}, {"b": a}, "mmd")
