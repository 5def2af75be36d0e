"""Target ensembles: rings, pole clusters, phased entangled families and
Ising ground states."""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import statevec as sv
from .errors import DegenerateGroundStateError

SQRT2 = np.sqrt(2.0)

POLAR_DIRECTIONS = ("+Z", "+Y", "-Z", "-Y", "+X", "-X")
GHZ_STRINGS = ("0000", "0001", "0010", "0100", "1000", "0011", "1001", "0101")
FAMILIES = (
    "planar_ring",
    "equator_ring",
    "polar_point",
    "bell",
    "ghz_phase",
    "w_phase",
    "product_phase",
    "ghz_string",
    "tlfim",
)


def _phases(N: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2 * np.pi, size=N)


def planar_ring(plane: str, N: int, rng: np.random.Generator) -> np.ndarray:
    """Great-circle rings: ``X`` lies in the YZ-plane, ``Y`` in XZ, ``Z`` in XY."""
    phi = _phases(N, rng)
    c, s = np.cos(phi), np.sin(phi)
    plane = plane.upper()
    if plane == "X":
        out = np.stack([c, -1j * s], axis=1)
    elif plane == "Y":
        out = np.stack([c, s], axis=1)
    elif plane == "Z":
        out = np.stack([np.ones(N), np.exp(-1j * phi)], axis=1) / SQRT2
    else:
        raise ValueError(f"unknown ring plane {plane!r}")
    return out.astype(complex)


def equator_alphas(num_classes: int) -> list[float]:
    return [j * np.pi / (num_classes + 1) for j in range(1, num_classes + 1)]


def equator_ring(alpha: float, N: int, rng: np.random.Generator) -> np.ndarray:
    """Ring of constant colatitude ``alpha``."""
    if not 0 < alpha < np.pi:
        raise ValueError(f"alpha must lie in (0, pi), got {alpha}")
    phi = _phases(N, rng)
    return np.stack([np.full(N, np.cos(alpha / 2), dtype=complex), np.exp(1j * phi) * np.sin(alpha / 2)], axis=1)


def _pole_pair(direction: str) -> tuple[np.ndarray, np.ndarray]:
    plus, minus = np.array([1, 1]) / SQRT2, np.array([1, -1]) / SQRT2
    iplus, iminus = np.array([1, 1j]) / SQRT2, np.array([1, -1j]) / SQRT2
    pairs = {
        "+Z": ([1, 0], [0, 1]),
        "-Z": ([0, 1], [1, 0]),
        "+X": (plus, minus),
        "-X": (minus, plus),
        "+Y": (iplus, iminus),
        "-Y": (iminus, iplus),
    }
    if direction not in pairs:
        raise ValueError(f"unknown pole {direction!r}; expected one of {POLAR_DIRECTIONS}")
    pole, partner = pairs[direction]
    return np.asarray(pole, dtype=complex), np.asarray(partner, dtype=complex)


def polar_cluster(direction: str, epsilon: float, N: int, rng: np.random.Generator) -> np.ndarray:
    """Noisy cluster ``pole + epsilon * c * partner`` with complex Gaussian ``c``."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    pole, partner = _pole_pair(direction)
    c = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return sv.normalize(pole[None, :] + epsilon * c[:, None] * partner[None, :])


def _two_level(N: int, dim: int, i: int, j: int, phi: np.ndarray) -> np.ndarray:
    out = np.zeros((N, dim), dtype=complex)
    out[:, i] = 1 / SQRT2
    out[:, j] = np.exp(1j * phi) / SQRT2
    return out


def bell_class(kind: str, N: int, rng: np.random.Generator) -> np.ndarray:
    """``phi``: (|00> + e^{i phi}|11>)/sqrt2; ``psi``: (|01> + e^{i phi}|10>)/sqrt2."""
    phi = _phases(N, rng)
    kind = kind.lower()
    if kind == "phi":
        return _two_level(N, 4, 0, 3, phi)
    if kind == "psi":
        return _two_level(N, 4, 1, 2, phi)
    raise ValueError(f"unknown Bell class {kind!r}")


def ghz_w_class(kind: str, N: int, rng: np.random.Generator) -> np.ndarray:
    phi = _phases(N, rng)
    kind = kind.upper()
    if kind == "GHZ3":
        return _two_level(N, 8, 0, 7, phi)
    if kind == "W3":
        out = np.zeros((N, 8), dtype=complex)
        out[:, 1] = out[:, 2] = 1 / np.sqrt(3)
        out[:, 4] = np.exp(1j * phi) / np.sqrt(3)
        return out
    raise ValueError(f"unknown class {kind!r}; expected GHZ3 or W3")


def product_phase_class(n: int, N: int, rng: np.random.Generator) -> np.ndarray:
    """``((|0> + e^{i phi}|1>)/sqrt2)^{tensor n}``."""
    phi = _phases(N, rng)
    weight = np.array([bin(i).count("1") for i in range(1 << n)])
    return np.exp(1j * phi[:, None] * weight[None, :]) / np.sqrt(2.0**n)


def ghz_string_class(x: str, N: int, rng: np.random.Generator) -> np.ndarray:
    """(|x> + e^{i phi}|not x>)/sqrt2 for a bitstring ``x``."""
    if not x or set(x) - {"0", "1"}:
        raise ValueError(f"invalid bitstring {x!r}")
    n = len(x)
    i = int(x, 2)
    return _two_level(N, 1 << n, i, i ^ ((1 << n) - 1), _phases(N, rng))


@lru_cache(maxsize=8)
def _ising_terms(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = np.arange(1 << n)
    z = 1 - 2 * ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1)
    # for n = 2 the ring has two bonds between qubits 0 and 1, which the roll reproduces
    zz = np.diag(np.sum(z * np.roll(z, -1, axis=1), axis=1).astype(float))
    zsum = np.diag(z.sum(axis=1).astype(float))
    xsum = np.zeros((1 << n, 1 << n))
    for k in range(n):
        xsum[idx, idx ^ (1 << (n - 1 - k))] += 1.0
    return zz, xsum, zsum


def tlfim_hamiltonian(n: int, g: float, h: float) -> np.ndarray:
    """``-sum Z_i Z_{i+1} - g sum X_i - h sum Z_i`` with periodic boundaries."""
    if n < 2:
        raise ValueError("TLFIM needs n >= 2")
    zz, xsum, zsum = _ising_terms(n)
    return -zz - g * xsum - h * zsum


def tlfim_ground(n: int, g: float, h: float, gap_tol: float = 1e-10) -> np.ndarray:
    """Unit-norm ground state of the periodic TLFIM chain.

    Raises DegenerateGroundStateError when the two lowest levels are closer
    than ``gap_tol``.
    """
    H = tlfim_hamiltonian(n, g, h)
    evals, evecs = np.linalg.eigh(H)
    if evals[1] - evals[0] < gap_tol:
        raise DegenerateGroundStateError(float(evals[0]), float(evals[1]))
    return evecs[:, 0].astype(complex)


def tlfim_class(h: float, N: int, rng: np.random.Generator, n: int = 4, g_mean: float = 0.5, g_std: float = 0.1) -> np.ndarray:
    """Ground states with ``g ~ Normal(g_mean, g_std)``; draws with g <= 0 are redrawn."""
    gs = []
    while len(gs) < N:
        g = rng.normal(g_mean, g_std)
        if g > 0:
            gs.append(g)
    return np.stack([tlfim_ground(n, g, h) for g in gs])


@dataclass(frozen=True)
class ClassSpec:
    family: str
    params: dict = field(default_factory=dict)
    N: int = 100
    label: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.N < 1:
            raise ValueError("N must be >= 1")

    @property
    def num_qubits(self) -> int:
        p = self.params
        if self.family in ("planar_ring", "equator_ring", "polar_point"):
            return 1
        if self.family == "bell":
            return 2
        if self.family in ("ghz_phase", "w_phase"):
            return 3
        if self.family == "product_phase":
            return int(p.get("n", 2))
        if self.family == "ghz_string":
            return len(p["x"])
        return int(p.get("n", 4))


def make_class(spec: ClassSpec, rng: np.random.Generator, N: int | None = None) -> np.ndarray:
    """Draw ``N`` (default ``spec.N``) states for a class specification."""
    N = spec.N if N is None else N
    p = spec.params
    f = spec.family
    if f == "planar_ring":
        return planar_ring(p["plane"], N, rng)
    if f == "equator_ring":
        return equator_ring(float(p["alpha"]), N, rng)
    if f == "polar_point":
        return polar_cluster(p["direction"], float(p.get("epsilon", 0.08)), N, rng)
    if f == "bell":
        return bell_class(p["kind"], N, rng)
    if f == "ghz_phase":
        return ghz_w_class("GHZ3", N, rng)
    if f == "w_phase":
        return ghz_w_class("W3", N, rng)
    if f == "product_phase":
        return product_phase_class(int(p.get("n", 2)), N, rng)
    if f == "ghz_string":
        return ghz_string_class(p["x"], N, rng)
    return tlfim_class(float(p["h"]), N, rng, n=int(p.get("n", 4)),
                       g_mean=float(p.get("g_mean", 0.5)), g_std=float(p.get("g_std", 0.1)))
