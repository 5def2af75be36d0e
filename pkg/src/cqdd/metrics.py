"""Evaluation metrics: entanglement, subspace weight, magnetization, per-class spread."""
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import distances as dist
from . import statevec as sv


def reduced_qubit(state: np.ndarray, qubit: int) -> np.ndarray:
    """Single-qubit reduced density matrix by partial trace (batched)."""
    state = np.asarray(state, dtype=complex)
    n = sv.num_qubits(state)
    x = state.reshape(state.shape[:-1] + (1 << qubit, 2, 1 << (n - 1 - qubit)))
    return np.einsum("...aib,...ajb->...ij", x, x.conj())


def meyer_wallach(state: np.ndarray):
    """Meyer-Wallach global entanglement ``(2/n) sum_i (1 - Tr rho_i^2)``."""
    state = np.asarray(state, dtype=complex)
    n = sv.num_qubits(state)
    total = 0.0
    for i in range(n):
        rho = reduced_qubit(state, i)
        total = total + (1.0 - np.sum(np.abs(rho) ** 2, axis=(-2, -1)))
    q = 2.0 / n * total
    return float(q) if np.ndim(q) == 0 else q


def subspace_overlap(state: np.ndarray, basis_indices: Sequence[int]):
    """Total Born weight on the given computational basis states."""
    idx = list(basis_indices)
    if not idx:
        raise ValueError("empty basis index set")
    if len(set(idx)) != len(idx):
        raise ValueError("basis indices must be distinct")
    state = np.asarray(state, dtype=complex)
    w = np.sum(np.abs(state[..., idx]) ** 2, axis=-1)
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class MagnetizationDistribution:
    support: np.ndarray
    probabilities: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.support @ self.probabilities)


def _basis_magnetization(n: int) -> np.ndarray:
    ones = np.array([bin(i).count("1") for i in range(1 << n)])
    return n - 2 * ones


def magnetization(state: np.ndarray) -> tuple[MagnetizationDistribution, float]:
    """Distribution of ``M = sum_i Z_i`` and its mean ``sum_i <Z_i>``.

    The support runs from ``n`` down to ``-n`` in steps of 2.
    """
    state = np.asarray(state, dtype=complex)
    n = sv.num_qubits(state)
    m = _basis_magnetization(n)
    support = np.arange(n, -n - 1, -2)
    p = np.abs(state) ** 2
    probs = np.array([p[m == s].sum() for s in support])
    mean = sum(sv.pauli_expectation(state, {i: "Z"}) for i in range(n))
    return MagnetizationDistribution(support, probs), float(mean)


def ensemble_magnetization(states: np.ndarray) -> tuple[MagnetizationDistribution, float]:
    """Magnetization distribution averaged over a set of states."""
    states = np.asarray(states, dtype=complex)
    n = sv.num_qubits(states)
    m = _basis_magnetization(n)
    support = np.arange(n, -n - 1, -2)
    p = np.mean(np.abs(states) ** 2, axis=0)
    probs = np.array([p[m == s].sum() for s in support])
    return MagnetizationDistribution(support, probs), float(support @ probs)


def per_class_spread(generated: Mapping, targets: Mapping, haar_ref: Mapping, metric: str) -> dict:
    """Per-class ``100 * D(generated_j, target_j) / D(haar_j, target_j)``."""
    if set(generated) != set(targets) or set(haar_ref) != set(targets):
        raise ValueError("generated, targets and haar_ref must share class labels")
    table = {}
    for lab, tgt in targets.items():
        gen = generated[lab]
        if len(gen) != len(tgt) or len(haar_ref[lab]) != len(tgt):
            raise ValueError(f"class {lab!r}: set sizes differ")
        table[lab] = 100.0 * dist.distance(metric, gen, tgt) / dist.distance(metric, haar_ref[lab], tgt)
    return table
