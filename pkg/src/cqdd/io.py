"""On-disk formats.

State sets
    Binary ``.qset``: the 8-byte magic ``CQDDSET\\0``, a little-endian uint32
    header length, a UTF-8 JSON header (``format_version``, ``num_qubits``,
    ``N``, ``label``, ``seed_record``) and then ``N * 2**q`` amplitudes as
    little-endian float64 ``(real, imag)`` pairs in index order.
    Text ``.jsonl``: the same header as the first line, then one
    ``{"re": [...], "im": [...]}`` object per state.

Models are JSON documents; floats are written with ``repr`` precision so
every format round-trips bit-exactly.
"""
import csv
import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import AnsatzSpec, DenoiseModel

FORMAT_VERSION = 1
MAGIC = b"CQDDSET\x00"


@dataclass
class StateSet:
    states: np.ndarray
    label: str = ""
    seed_record: dict = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return int(self.states.shape[1]).bit_length() - 1


def _header(states: np.ndarray, label: str, seed_record: dict) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "num_qubits": int(states.shape[1]).bit_length() - 1,
        "N": int(states.shape[0]),
        "label": label,
        "seed_record": seed_record or {},
    }


def write_state_set(path, states, label: str = "", seed_record: dict | None = None) -> Path:
    """Write a set; ``.jsonl`` suffix selects the text format, anything else binary."""
    path = Path(path)
    states = np.ascontiguousarray(np.asarray(states, dtype=complex))
    if states.ndim != 2:
        raise ValueError("state set must be a 2-D array")
    header = _header(states, label, seed_record or {})
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".jsonl":
        with open(path, "w") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for row in states:
                fh.write(json.dumps({"re": row.real.tolist(), "im": row.imag.tolist()}) + "\n")
        return path
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(states.astype("<c16").tobytes())
    return path


def read_state_set(path) -> StateSet:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
        if head == MAGIC:
            (size,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(size).decode("utf-8"))
            dim = 1 << header["num_qubits"]
            data = np.frombuffer(fh.read(), dtype="<c16")
            if data.size != header["N"] * dim:
                raise ValueError(f"{path}: expected {header['N'] * dim} amplitudes, found {data.size}")
            states = data.reshape(header["N"], dim).astype(complex)
            return StateSet(states, header["label"], header["seed_record"])
    with open(path) as fh:
        header = json.loads(fh.readline())
        rows = [json.loads(line) for line in fh if line.strip()]
    if header.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {header.get('format_version')}")
    states = np.array([np.array(r["re"]) + 1j * np.array(r["im"]) for r in rows], dtype=complex)
    return StateSet(states.reshape(header["N"], 1 << header["num_qubits"]), header["label"], header["seed_record"])


def model_to_dict(model: DenoiseModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "artifact_version": __version__,
        "spec": {
            "n": model.spec.n,
            "n_a": model.spec.n_a,
            "L": model.spec.L,
            "conditioning": model.spec.conditioning,
        },
        "T": model.T,
        "thetas": np.asarray(model.thetas, dtype=float).tolist(),
        "mu_table": {k: float(v) for k, v in model.mu_table.items()},
        "basis_table": {k: int(v) for k, v in model.basis_table.items()},
        "metadata": model.metadata,
    }


def model_from_dict(doc: dict) -> DenoiseModel:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')}")
    spec = AnsatzSpec(**doc["spec"])
    thetas = np.array(doc["thetas"], dtype=float).reshape(doc["T"], spec.num_params)
    return DenoiseModel(spec, thetas, dict(doc["mu_table"]), dict(doc.get("basis_table", {})), doc.get("metadata", {}))


def write_model(path, model: DenoiseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), indent=1, sort_keys=True) + "\n")
    return path


def read_model(path) -> DenoiseModel:
    return model_from_dict(json.loads(Path(path).read_text()))


class LossRecordWriter:
    """Line-delimited loss records: one JSON object per training iteration."""

    def __init__(self, path, run: str = ""):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.run = run
        self._fh = open(self.path, "w")

    def __call__(self, k: int, it: int, loss: float, best: float) -> None:
        rec = {"run": self.run, "step": k, "iteration": it, "loss": loss, "best": best}
        self._fh.write(json.dumps(rec) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_loss_records(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()


def write_manifest(out_dir, files, config: dict, extra: dict | None = None) -> Path:
    """Write ``manifest.json`` listing every output file with its checksum."""
    out_dir = Path(out_dir)
    inventory = {}
    for f in sorted({Path(f) for f in files}):
        inventory[str(f.relative_to(out_dir))] = sha256(f)
    doc = {
        "artifact_version": __version__,
        "config_hash": config_hash(config),
        "config": config,
        "files": inventory,
    }
    doc.update(extra or {})
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path
