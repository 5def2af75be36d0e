"""Dense pure-state simulator.

States are complex numpy arrays whose last axis holds the ``2**q``
amplitudes; any leading axes are a batch. Qubit 0 is the most significant
bit of the amplitude index, so ``|q0 q1 ... >`` sits at index
``sum(bit_k * 2**(q-1-k))``. Ancilla registers are appended after the
system qubits, i.e. in the least significant positions.

All functions return new arrays and never modify their inputs.
"""
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateBranchError

NORM_TOL = 1e-10
BRANCH_CUTOFF = 1e-12

_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class MeasurementRecord:
    outcome: str
    probability: float


def num_qubits(state: np.ndarray) -> int:
    dim = np.shape(state)[-1]
    q = int(dim).bit_length() - 1
    if q < 0 or dim != 1 << q:
        raise ValueError(f"amplitude axis has length {dim}, not a power of two")
    return q


def basis_state(q: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(1 << q, dtype=complex)
    psi[index] = 1.0
    return psi


def normalize(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return state / np.linalg.norm(state, axis=-1, keepdims=True)


def norms(state: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(state) ** 2, axis=-1)


def haar_random(q: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Sample Haar-random pure states on ``q`` qubits.

    A normalized complex standard Gaussian vector is Haar distributed.
    With ``size`` given, returns an array of shape ``(size, 2**q)``.
    """
    if q < 1:
        raise ValueError(f"need at least one qubit, got {q}")
    shape = (1 << q,) if size is None else (size, 1 << q)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return normalize(z)


def _bits(q: int, qubit: int) -> np.ndarray:
    return (np.arange(1 << q) >> (q - 1 - qubit)) & 1


def _check_qubit(q: int, qubit: int) -> None:
    if not 0 <= qubit < q:
        raise ValueError(f"qubit {qubit} out of range for {q} qubits")


def _check_pair(q: int, p: int, r: int) -> None:
    _check_qubit(q, p)
    _check_qubit(q, r)
    if p == r:
        raise ValueError("two-qubit gate needs distinct qubits")


def apply_rotation(state: np.ndarray, axis: str, angle, qubit: int) -> np.ndarray:
    """Apply ``exp(-i angle P / 2)`` with ``P`` in {X, Y, Z} to one qubit.

    ``angle`` is a scalar or an array matching the batch shape of ``state``
    (one angle per state).
    """
    state = np.asarray(state, dtype=complex)
    q = num_qubits(state)
    _check_qubit(q, qubit)
    axis = axis.upper()
    batch = state.shape[:-1]
    angle = np.broadcast_to(np.asarray(angle, dtype=float), batch).reshape(-1, 1, 1)
    x = state.reshape(-1, 1 << qubit, 2, 1 << (q - 1 - qubit))
    a, b = x[:, :, 0, :], x[:, :, 1, :]
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if axis == "X":
        na, nb = c * a - 1j * s * b, -1j * s * a + c * b
    elif axis == "Y":
        na, nb = c * a - s * b, s * a + c * b
    elif axis == "Z":
        ph = np.exp(-0.5j * angle)
        na, nb = ph * a, np.conj(ph) * b
    else:
        raise ValueError(f"unknown rotation axis {axis!r}")
    return np.stack([na, nb], axis=2).reshape(state.shape)


def apply_rzz(state: np.ndarray, angle, p: int, r: int) -> np.ndarray:
    """Apply ``exp(-i angle Z_p Z_r / 2)``; ``angle`` may be per-state."""
    state = np.asarray(state, dtype=complex)
    q = num_qubits(state)
    _check_pair(q, p, r)
    parity = 1 - 2 * (_bits(q, p) ^ _bits(q, r))
    angle = np.asarray(angle, dtype=float)[..., None]
    return state * np.exp(-0.5j * angle * parity)


def apply_cz(state: np.ndarray, p: int, r: int) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    q = num_qubits(state)
    _check_pair(q, p, r)
    sign = 1 - 2 * (_bits(q, p) & _bits(q, r))
    return state * sign


def fidelity(a: np.ndarray, b: np.ndarray) -> np.ndarray | float:
    """``|<a|b>|**2``, broadcasting over leading axes."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    f = np.abs(np.sum(np.conj(a) * b, axis=-1)) ** 2
    return float(f) if f.ndim == 0 else f


def ancilla_state(n_a: int, mu: float, mode: str = "rx", basis_index: int | None = None) -> np.ndarray:
    """State of the conditioning register before the denoising circuit.

    ``rx``/``ry``/``rz`` prepare ``(R(mu)|0>)^{n_a}``; ``basis`` prepares the
    computational basis state ``basis_index`` and ignores ``mu``.
    """
    if n_a < 0:
        raise ValueError(f"negative ancilla count {n_a}")
    if mode == "basis":
        if basis_index is None or not 0 <= basis_index < (1 << n_a):
            raise ValueError(f"basis index {basis_index} invalid for {n_a} ancillas")
        return basis_state(n_a, basis_index)
    if mode not in ("rx", "ry", "rz"):
        raise ValueError(f"unknown conditioning mode {mode!r}")
    single = apply_rotation(basis_state(1), mode[1].upper(), mu, 0)
    out = np.ones(1, dtype=complex)
    for _ in range(n_a):
        out = np.kron(out, single)
    return out


def append_conditioned_ancilla(
    state: np.ndarray, n_a: int, mu: float, mode: str = "rx", basis_index: int | None = None
) -> np.ndarray:
    anc = ancilla_state(n_a, mu, mode, basis_index)
    state = np.asarray(state, dtype=complex)
    return (state[..., :, None] * anc).reshape(state.shape[:-1] + (-1,))


def _outcome(b: int, n_a: int) -> str:
    return format(b, f"0{n_a}b")


def ancilla_branches(state: np.ndarray, n_a: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a joint state into unnormalized system branches.

    Returns ``(branches, probs)`` with ``branches[..., b, :]`` the system
    component for ancilla outcome ``b`` and ``probs[..., b]`` its Born weight.
    """
    state = np.asarray(state, dtype=complex)
    q = num_qubits(state)
    if not 1 <= n_a < q:
        raise ValueError(f"need 1 <= n_a < num_qubits, got n_a={n_a}, q={q}")
    x = state.reshape(state.shape[:-1] + (1 << (q - n_a), 1 << n_a))
    branches = np.swapaxes(x, -1, -2)
    return branches, norms(branches)


def measure_discard_ancilla(state: np.ndarray, n_a: int, mode: str = "born", rng=None):
    """Projectively measure the trailing ``n_a`` qubits and drop them.

    Modes:
      born: sample one outcome, return ``(system_state, MeasurementRecord)``.
      postselect_zero: project onto ``|0...0>``, same return shape.
      exact_branches: return ``(states, records)`` for every outcome with
        nonzero probability; ``states`` has shape ``(k, 2**n)``.

    Only a single (unbatched) state is accepted; batched work goes through
    :func:`cqdd.ansatz.denoise_step`.
    """
    state = np.asarray(state, dtype=complex)
    if state.ndim != 1:
        raise ValueError("measure_discard_ancilla takes one state; use denoise_step for batches")
    if abs(norms(state) - 1.0) > NORM_TOL:
        raise ValueError(f"input not normalized (norm^2 = {norms(state)!r})")
    branches, probs = ancilla_branches(state, n_a)
    if mode == "born":
        if rng is None:
            raise ValueError("born mode needs an rng")
        b = int(rng.choice(len(probs), p=probs / probs.sum()))
    elif mode == "postselect_zero":
        b = 0
        if probs[0] < BRANCH_CUTOFF:
            raise DegenerateBranchError(f"all-zeros ancilla outcome has probability {probs[0]:.3e}")
    elif mode == "exact_branches":
        keep = np.flatnonzero(probs > BRANCH_CUTOFF)
        states = branches[keep] / np.sqrt(probs[keep])[:, None]
        records = [MeasurementRecord(_outcome(int(b), n_a), float(probs[b])) for b in keep]
        return states, records
    else:
        raise ValueError(f"unknown measurement mode {mode!r}")
    out = branches[b] / np.sqrt(probs[b])
    return out, MeasurementRecord(_outcome(b, n_a), float(probs[b]))


def pauli_expectation(state: np.ndarray, pauli_string: Mapping[int, str]) -> float:
    """``<psi| P |psi>`` for a Pauli string given as ``{qubit: 'X'|'Y'|'Z'}``."""
    state = np.asarray(state, dtype=complex)
    if not pauli_string:
        return 1.0
    q = num_qubits(state)
    phi = state
    for qubit, p in pauli_string.items():
        _check_qubit(q, qubit)
        x = phi.reshape(1 << qubit, 2, 1 << (q - 1 - qubit))
        phi = np.einsum("ij,ajb->aib", _PAULI[p.upper()], x).reshape(-1)
    return float(np.real(np.vdot(state, phi)))


def bloch_vector(state: np.ndarray) -> np.ndarray:
    """Bloch coordinates ``(x, y, z)`` of single-qubit states (batched)."""
    state = np.asarray(state, dtype=complex)
    if state.shape[-1] != 2:
        raise ValueError("bloch_vector needs single-qubit states")
    a, b = state[..., 0], state[..., 1]
    cross = np.conj(a) * b
    return np.stack([2 * cross.real, 2 * cross.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=-1)


def bloch_projection(state: np.ndarray, basis_a: int, basis_b: int) -> tuple[float, float, float, float]:
    """Bloch coordinates of the state restricted to span{|a>, |b>}.

    Returns ``(x, y, z, weight)`` where ``weight = |c_a|^2 + |c_b|^2``. The
    coordinates are NaN when the weight is at or below 1e-12.
    """
    state = np.asarray(state, dtype=complex)
    dim = state.shape[-1]
    if basis_a == basis_b:
        raise ValueError("projection needs two distinct basis states")
    for idx in (basis_a, basis_b):
        if not 0 <= idx < dim:
            raise ValueError(f"basis index {idx} out of range")
    a, b = state[basis_a], state[basis_b]
    w = float(abs(a) ** 2 + abs(b) ** 2)
    if w <= BRANCH_CUTOFF:
        return float("nan"), float("nan"), float("nan"), w
    cross = np.conj(a) * b
    return 2 * cross.real / w, 2 * cross.imag / w, (abs(a) ** 2 - abs(b) ** 2) / w, w


def projection_batch(states: np.ndarray, pair: Sequence[int]) -> np.ndarray:
    """Vectorized :func:`bloch_projection`; rows are ``(x, y, z, weight)``."""
    states = np.asarray(states, dtype=complex)
    a, b = states[..., pair[0]], states[..., pair[1]]
    w = np.abs(a) ** 2 + np.abs(b) ** 2
    cross = np.conj(a) * b
    with np.errstate(invalid="ignore", divide="ignore"):
        xyz = np.stack([2 * cross.real, 2 * cross.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=-1) / w[..., None]
    xyz[w <= BRANCH_CUTOFF] = np.nan
    return np.concatenate([xyz, w[..., None]], axis=-1)
