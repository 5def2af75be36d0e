"""Round-trip tests for state-set, model, record and manifest files."""
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cqdd import ansatz as az
from cqdd import io
from cqdd import statevec as sv


# =============================================================================
# State sets
# =============================================================================

@pytest.mark.parametrize("suffix", [".qset", ".jsonl"])
def test_state_set_round_trip_is_bit_exact(tmp_path, suffix):
    states = sv.haar_random(2, np.random.default_rng(0), size=7)
    path = io.write_state_set(tmp_path / f"s{suffix}", states, "S_Phi", {"seed": 3, "tag": "data"})
    back = io.read_state_set(path)
    assert back.states.tobytes() == states.tobytes()
    assert back.label == "S_Phi" and back.seed_record == {"seed": 3, "tag": "data"}
    assert back.num_qubits == 2


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), q=st.integers(1, 3), N=st.integers(1, 5))
def test_binary_round_trip_property(tmp_path_factory, seed, q, N):
    states = sv.haar_random(q, np.random.default_rng(seed), size=N)
    path = io.write_state_set(tmp_path_factory.mktemp("s") / "x.qset", states)
    np.testing.assert_array_equal(io.read_state_set(path).states, states)


def test_single_state_smoke(tmp_path):
    one = np.array([[1 / np.sqrt(2), 1j / np.sqrt(2)]])
    back = io.read_state_set(io.write_state_set(tmp_path / "one.qset", one, "x"))
    assert back.states.tobytes() == one.tobytes()


def test_binary_layout(tmp_path):
    path = io.write_state_set(tmp_path / "a.qset", np.array([[0.5 + 0.25j, -1.0]]), "a")
    raw = path.read_bytes()
    assert raw[:8] == io.MAGIC
    hlen = int.from_bytes(raw[8:12], "little")
    header = json.loads(raw[12:12 + hlen])
    assert header["num_qubits"] == 1 and header["N"] == 1
    np.testing.assert_array_equal(np.frombuffer(raw[12 + hlen:], "<f8"), [0.5, 0.25, -1.0, 0.0])


def test_truncated_file_rejected(tmp_path):
    path = io.write_state_set(tmp_path / "a.qset", sv.haar_random(1, np.random.default_rng(0), size=3))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        io.read_state_set(path)


def test_state_set_must_be_2d(tmp_path):
    with pytest.raises(ValueError):
        io.write_state_set(tmp_path / "a.qset", np.zeros(2))


# =============================================================================
# Models and records
# =============================================================================

def test_model_round_trip(tmp_path):
    spec = az.AnsatzSpec(2, 2, 3, "basis")
    thetas = np.random.default_rng(1).standard_normal((4, spec.num_params))
    model = az.DenoiseModel(spec, thetas, {"a": 0.0, "b": np.pi}, {"a": 0, "b": 3}, {"seed": 5})
    back = io.read_model(io.write_model(tmp_path / "m.json", model))
    assert back.spec == spec and back.T == 4
    assert back.thetas.tobytes() == thetas.tobytes()
    assert back.mu_table == model.mu_table and back.basis_table == model.basis_table
    assert back.metadata == {"seed": 5}


def test_model_version_checked():
    with pytest.raises(ValueError):
        io.model_from_dict({"format_version": 99})


def test_loss_records(tmp_path):
    with io.LossRecordWriter(tmp_path / "l.jsonl", "run") as w:
        w(2, 0, 0.5, 0.5)
        w(2, 1, 0.7, 0.5)
    recs = io.read_loss_records(tmp_path / "l.jsonl")
    assert recs[1] == {"run": "run", "step": 2, "iteration": 1, "loss": 0.7, "best": 0.5}


def test_csv_round_trip_uses_repr_floats(tmp_path):
    path = io.write_csv(tmp_path / "t.csv", ["a", "b"], [[0.1 + 0.2, "x"], [np.float64(1 / 3), 2]])
    rows = io.read_csv(path)
    assert float(rows[0]["a"]) == 0.1 + 0.2 and float(rows[1]["a"]) == 1 / 3
    assert path.read_text().splitlines()[0] == "a,b"


def test_manifest_lists_checksums(tmp_path):
    f = io.write_csv(tmp_path / "sub" / "t.csv", ["a"], [[1]])
    m = json.loads(io.write_manifest(tmp_path, [f], {"seed": 1}, {"norm_constant": 0.2}).read_text())
    assert m["files"] == {"sub/t.csv": io.sha256(f)}
    assert m["config_hash"] == io.config_hash({"seed": 1})
    assert m["norm_constant"] == 0.2
