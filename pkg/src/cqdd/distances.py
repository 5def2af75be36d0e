"""Set-level distances between ensembles of pure states.

Both losses are built on the fidelity kernel ``|<a|b>|^2``. The Wasserstein
distance uses the infidelity as ground cost and is solved exactly: a linear
assignment when both sets are equally sized and unweighted, a transport LP
otherwise.
"""
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .errors import DegenerateNormalizationError

METRICS = ("mmd", "wass")
DEGENERATE_NORM = 1e-6


def _as_set(states) -> np.ndarray:
    states = np.asarray(states, dtype=complex)
    if states.ndim == 1:
        states = states[None, :]
    if states.ndim != 2 or len(states) == 0:
        raise ValueError("state set must be a nonempty (N, dim) array")
    return states


def _weights(w, n: int) -> np.ndarray:
    if w is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(w, dtype=float)
    if w.shape != (n,) or np.any(w < 0):
        raise ValueError("weights must be a nonnegative vector matching the set size")
    return w / w.sum()


def fidelity_matrix(A, B) -> np.ndarray:
    A, B = _as_set(A), _as_set(B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return np.abs(A.conj() @ B.T) ** 2


def cost_matrix(A, B) -> np.ndarray:
    """Infidelity cost ``C[i, j] = 1 - |<a_i|b_j>|^2`` clipped to [0, 1]."""
    return np.clip(1.0 - fidelity_matrix(A, B), 0.0, 1.0)


def pairwise_fidelity(A, B, wa=None, wb=None) -> float:
    """(Weighted) mean fidelity over all cross pairs of ``A`` and ``B``."""
    F = fidelity_matrix(A, B)
    return float(_weights(wa, F.shape[0]) @ F @ _weights(wb, F.shape[1]))


def mmd(A, B, wa=None, wb=None) -> float:
    return pairwise_fidelity(A, A, wa, wa) + pairwise_fidelity(B, B, wb, wb) - 2 * pairwise_fidelity(A, B, wa, wb)


def transport_plan(C: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact optimal transport plan for cost ``C`` and marginals ``a``, ``b``."""
    n, m = C.shape
    rows = np.zeros((n, n * m))
    for i in range(n):
        rows[i, i * m:(i + 1) * m] = 1.0
    cols = np.tile(np.eye(m), n)
    # one marginal constraint is implied by the others; drop it for a full-rank system
    A_eq = np.vstack([rows, cols[:-1]])
    b_eq = np.concatenate([a, b[:-1]])
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return np.maximum(res.x.reshape(n, m), 0.0)


def wasserstein(A, B, wa=None, wb=None) -> float:
    """Exact Wasserstein distance with infidelity cost.

    Equal sizes and no weights reduce to an assignment problem; anything
    else is solved as a general transport LP.
    """
    C = cost_matrix(A, B)
    n, m = C.shape
    if wa is None and wb is None and n == m:
        r, c = linear_sum_assignment(C)
        return float(C[r, c].sum() / n)
    P = transport_plan(C, _weights(wa, n), _weights(wb, m))
    return float(np.sum(P * C))


def distance(metric: str, A, B, wa=None, wb=None) -> float:
    if metric == "mmd":
        return mmd(A, B, wa, wb)
    if metric == "wass":
        return wasserstein(A, B, wa, wb)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def normalization_constant(targets: Sequence, haar: Sequence, metric: str) -> float:
    """``max_j D(haar_j, target_j)``, the distance a Haar-random generator would score."""
    if len(targets) != len(haar):
        raise ValueError("need one Haar reference set per target class")
    values = []
    for t, h in zip(targets, haar):
        if len(t) != len(h):
            raise ValueError(f"Haar reference size {len(h)} differs from class size {len(t)}")
        values.append(distance(metric, h, t))
    norm = max(values)
    if norm < DEGENERATE_NORM:
        raise DegenerateNormalizationError(f"normalization constant {norm:.3e} is degenerate (targets look Haar)")
    return norm


def class_loss(generated: Mapping, references: Mapping, metric: str, norm_constant: float = 1.0) -> float:
    """Mean normalized distance over classes, keyed by class label.

    A generated entry may be a weighted branch set (anything with ``states``
    and ``weights``), in which case the weighted transport path is used.
    """
    if set(generated) != set(references):
        raise ValueError(f"class labels differ: {sorted(generated)} vs {sorted(references)}")
    total = 0.0
    for label, ref in references.items():
        gen = generated[label]
        if hasattr(gen, "weights"):
            total += distance(metric, gen.states, ref, wa=gen.weights)
            continue
        if len(_as_set(gen)) != len(_as_set(ref)):
            raise ValueError(f"class {label!r}: unequal set sizes {len(gen)} vs {len(ref)}")
        total += distance(metric, gen, ref)
    return total / len(references) / norm_constant
