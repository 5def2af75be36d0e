"""Conditioned denoising circuits and backward generation.

One backward step appends a freshly prepared conditioning register to the
system, applies ``L`` layers of (RX, RY) rotations on every qubit followed by
an alternating nearest-neighbour CZ chain, then measures and discards the
ancillas.

Parameters of one step are laid out as ``theta.reshape(L, n + n_a, 2)``:
``[layer, qubit, 0]`` is the RX angle and ``[layer, qubit, 1]`` the RY angle.
"""
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import statevec as sv
from ._rng import stream
from .errors import DegenerateBranchError

CONDITIONING_MODES = ("rx", "ry", "rz", "basis")


@dataclass(frozen=True)
class AnsatzSpec:
    n: int
    n_a: int = 2
    L: int = 1
    conditioning: str = "rx"

    def __post_init__(self):
        if self.n < 1 or self.n_a < 0 or self.L < 0:
            raise ValueError(f"invalid ansatz dimensions n={self.n}, n_a={self.n_a}, L={self.L}")
        if self.conditioning not in CONDITIONING_MODES:
            raise ValueError(f"unknown conditioning mode {self.conditioning!r}")

    @property
    def width(self) -> int:
        return self.n + self.n_a

    @property
    def num_params(self) -> int:
        return 2 * self.L * self.width


def assign_mu(num_classes: int) -> list[float]:
    """Evenly spaced conditioning angles ``2 pi j / C`` in [0, 2 pi)."""
    if num_classes < 1:
        raise ValueError("need at least one class")
    return [2 * np.pi * j / num_classes for j in range(num_classes)]


def assign_basis(num_classes: int, n_a: int) -> list[int]:
    """Ancilla basis labels for basis-state conditioning.

    Two classes use the extreme states ``|0..0>`` and ``|1..1>``; otherwise
    classes take consecutive basis indices.
    """
    if num_classes > 1 << n_a:
        raise ValueError(
            f"basis conditioning with n_a={n_a} cannot uniquely represent more than {1 << n_a} classes"
        )
    if num_classes == 2:
        return [0, (1 << n_a) - 1]
    return list(range(num_classes))


def cz_pairs(width: int, layer: int) -> list[tuple[int, int]]:
    """CZ pairs of 1-based ``layer``: (0,1),(2,3),... on odd layers, (1,2),... on even."""
    start = 0 if layer % 2 == 1 else 1
    return [(p, p + 1) for p in range(start, width - 1, 2)]


def circuit_layout(spec: AnsatzSpec) -> list[tuple]:
    """Ordered gate plan: ``("rx"|"ry", qubit, param_index)`` and ``("cz", p, q)``."""
    plan = []
    w = spec.width
    for layer in range(1, spec.L + 1):
        base = (layer - 1) * 2 * w
        for qubit in range(w):
            plan.append(("rx", qubit, base + 2 * qubit))
            plan.append(("ry", qubit, base + 2 * qubit + 1))
        plan.extend(("cz", p, r) for p, r in cz_pairs(w, layer))
    return plan


def _ry_rx(tx: np.ndarray, ty: np.ndarray) -> np.ndarray:
    # RY(ty) @ RX(tx), stacked over the leading axis.
    cx, sx = np.cos(tx / 2), np.sin(tx / 2)
    cy, sy = np.cos(ty / 2), np.sin(ty / 2)
    return np.stack(
        [
            np.stack([cy * cx + 1j * sy * sx, -1j * cy * sx - sy * cx], axis=-1),
            np.stack([sy * cx - 1j * cy * sx, -1j * sy * sx + cy * cx], axis=-1),
        ],
        axis=-2,
    )


def _cz_diag(width: int, pairs) -> np.ndarray:
    idx = np.arange(1 << width)
    sign = np.ones(1 << width)
    for p, r in pairs:
        both = ((idx >> (width - 1 - p)) & 1) & ((idx >> (width - 1 - r)) & 1)
        sign = sign * (1 - 2 * both)
    return sign


def circuit_unitary(theta: np.ndarray, spec: AnsatzSpec) -> np.ndarray:
    """Dense ``2**(n+n_a)`` square unitary of the denoising circuit."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.num_params,):
        raise ValueError(f"expected {spec.num_params} parameters, got shape {theta.shape}")
    w = spec.width
    U = np.eye(1 << w, dtype=complex)
    angles = theta.reshape(spec.L, w, 2)
    for layer in range(1, spec.L + 1):
        mats = _ry_rx(angles[layer - 1, :, 0], angles[layer - 1, :, 1])
        local = mats[0]
        for m in mats[1:]:
            local = np.kron(local, m)
        U = (_cz_diag(w, cz_pairs(w, layer))[:, None] * local) @ U
    return U


def kraus_operators(
    theta: np.ndarray, spec: AnsatzSpec, mu: float, basis_index: int | None = None, U: np.ndarray | None = None
) -> np.ndarray:
    """Per-outcome system maps ``K[b] = (I x <b|) U (I x |anc(mu)>)``, shape ``(2**n_a, 2**n, 2**n)``.

    A precomputed circuit unitary ``U`` may be passed to skip rebuilding it.
    """
    if U is None:
        U = circuit_unitary(theta, spec)
    ds, da = 1 << spec.n, 1 << spec.n_a
    anc = sv.ancilla_state(spec.n_a, mu, spec.conditioning, basis_index)
    U4 = U.reshape(ds, da, ds, da)
    return np.einsum("ibjc,c->bij", U4, anc)


@dataclass
class BranchSet:
    states: np.ndarray
    weights: np.ndarray


def select_branches(branches: np.ndarray, probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Pick one branch per row by inverse-CDF sampling with the given uniforms."""
    cum = np.cumsum(probs, axis=-1)
    cum = cum / cum[:, -1:]
    choice = np.minimum(np.sum(cum <= uniforms[:, None], axis=-1), probs.shape[-1] - 1)
    # skip zero-probability outcomes that a uniform landing exactly on a cdf step could hit
    while True:
        bad = probs[np.arange(len(choice)), choice] <= 0
        if not bad.any():
            break
        choice[bad] -= 1
    chosen = branches[np.arange(len(choice)), choice]
    return chosen / np.sqrt(probs[np.arange(len(choice)), choice])[:, None]


def apply_kraus(
    states: np.ndarray, kraus: np.ndarray, meas_mode: str = "born", uniforms: np.ndarray | None = None
):
    """Apply precomputed Kraus maps to a batch ``(B, 2**n)`` of system states."""
    branches = np.einsum("bij,nj->nbi", kraus, states)
    probs = sv.norms(branches)
    if meas_mode == "born":
        return select_branches(branches, probs, uniforms)
    if meas_mode == "postselect_zero":
        p0 = probs[:, 0]
        if np.any(p0 < sv.BRANCH_CUTOFF):
            raise DegenerateBranchError(f"all-zeros ancilla outcome has probability {p0.min():.3e}")
        return branches[:, 0] / np.sqrt(p0)[:, None]
    if meas_mode == "exact_branches":
        keep = probs > sv.BRANCH_CUTOFF
        out = branches[keep] / np.sqrt(probs[keep])[:, None]
        weights = probs[keep] / len(states)
        return BranchSet(out, weights / weights.sum())
    raise ValueError(f"unknown measurement mode {meas_mode!r}")


def denoise_step(
    state: np.ndarray,
    theta_k: np.ndarray,
    mu: float,
    spec: AnsatzSpec,
    meas_mode: str = "born",
    rng: np.random.Generator | None = None,
    basis_index: int | None = None,
    uniforms: np.ndarray | None = None,
):
    """One backward step on a state or a batch of states.

    Born sampling consumes one uniform per state from ``rng`` unless explicit
    ``uniforms`` are given. ``exact_branches`` returns a :class:`BranchSet`.
    """
    state = np.asarray(state, dtype=complex)
    if sv.num_qubits(state) != spec.n:
        raise ValueError(f"state has {sv.num_qubits(state)} qubits, ansatz expects {spec.n}")
    if spec.n_a == 0:
        if meas_mode == "exact_branches":
            raise ValueError("exact_branches needs at least one ancilla")
        U = circuit_unitary(theta_k, spec)
        return state @ U.T
    single = state.ndim == 1
    batch = state.reshape(-1, state.shape[-1])
    K = kraus_operators(theta_k, spec, mu, basis_index)
    if meas_mode == "born" and uniforms is None:
        if rng is None:
            raise ValueError("born mode needs an rng or explicit uniforms")
        uniforms = rng.random(len(batch))
    out = apply_kraus(batch, K, meas_mode, None if uniforms is None else np.atleast_1d(uniforms))
    if single and not isinstance(out, BranchSet):
        return out[0]
    return out


@dataclass
class DenoiseModel:
    spec: AnsatzSpec
    thetas: np.ndarray
    mu_table: dict
    basis_table: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return len(self.thetas)

    def theta(self, k: int) -> np.ndarray:
        """Parameters of backward step ``k`` (1-based)."""
        return self.thetas[k - 1]

    def condition(self, label: str) -> tuple[float, int | None]:
        if label not in self.mu_table:
            raise ValueError(f"unknown class label {label!r}; known: {sorted(self.mu_table)}")
        return self.mu_table[label], self.basis_table.get(label)


def run_backward(
    start: np.ndarray,
    thetas: Sequence[np.ndarray],
    steps: Sequence[int],
    spec: AnsatzSpec,
    mu: float,
    seed: int,
    tag: str,
    basis_index: int | None = None,
) -> list[np.ndarray]:
    """Apply the given backward ``steps`` (e.g. T, T-1, ...) with Born sampling.

    ``thetas[i]`` is used for ``steps[i]``; the measurement uniforms for step
    ``k`` come from stream ``(seed, tag, k)``. Returns the input followed by
    each intermediate output.
    """
    sets = [np.asarray(start, dtype=complex)]
    for k, theta in zip(steps, thetas):
        u = stream(seed, tag, k).random(len(start))
        K = kraus_operators(theta, spec, mu, basis_index) if spec.n_a else None
        cur = sets[-1]
        nxt = apply_kraus(cur, K, "born", u) if K is not None else cur @ circuit_unitary(theta, spec).T
        sets.append(nxt)
    return sets


def generate(
    model: DenoiseModel,
    label: str,
    N: int,
    seed: int,
    mu: float | None = None,
    stream_key: str | None = None,
) -> list[np.ndarray]:
    """Generate ``N`` states for ``label``: Haar start, then steps T..1.

    Returns ``[S(T), S(T-1), ..., S(0)]``. ``mu`` overrides the class angle
    (used for conditioning sweeps). Random streams are keyed by
    ``stream_key`` (default: the label), so two labels sharing a key see the
    same Haar start and measurement draws.
    """
    key = label if stream_key is None else stream_key
    if N < 1:
        raise ValueError("N must be >= 1")
    class_mu, basis_index = model.condition(label)
    if mu is None:
        mu = class_mu
    start = sv.haar_random(model.spec.n, stream(seed, f"generate-haar/{key}"), size=N)
    steps = list(range(model.T, 0, -1))
    return run_backward(
        start, [model.theta(k) for k in steps], steps, model.spec, mu, seed, f"generate-meas/{key}", basis_index
    )
