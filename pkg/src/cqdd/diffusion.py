"""Noise schedules and the forward scrambling process."""
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from . import statevec as sv
from ._rng import stream


@dataclass(frozen=True)
class NoiseSchedule:
    deltas: np.ndarray
    kind: str
    params: tuple

    @property
    def T(self) -> int:
        return len(self.deltas)

    def __post_init__(self):
        if len(self.deltas) < 1:
            raise ValueError("schedule needs T >= 1")
        if np.any(np.asarray(self.deltas) <= 0):
            raise ValueError("all schedule entries must be positive")


def make_schedule(kind: str, params: Sequence[float], T: int) -> NoiseSchedule:
    """Build ``delta_1..delta_T``.

    Kinds: ``power (c, p)`` gives ``c t**p``; ``linear (c,)`` gives ``c t``;
    ``constant (c,)``; ``linspace (x, y)`` gives T evenly spaced values from
    x to y inclusive.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    params = tuple(float(p) for p in params)
    t = np.arange(1, T + 1, dtype=float)
    if kind == "power":
        c, p = params
        deltas = c * t**p
    elif kind == "linear":
        (c,) = params
        deltas = c * t
    elif kind == "constant":
        (c,) = params
        deltas = np.full(T, c)
    elif kind == "linspace":
        x, y = params
        deltas = np.linspace(x, y, T)
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")
    if np.any(deltas <= 0):
        raise ValueError(f"schedule {kind}{params} produces nonpositive deltas")
    return NoiseSchedule(deltas, kind, params)


def draws_per_step(n: int) -> int:
    return 2 * n + n * (n - 1) // 2


def _draw_angles(rng: np.random.Generator, n: int, delta: float) -> np.ndarray:
    half = delta * np.pi / 8
    return rng.uniform(-half, half, size=draws_per_step(n))


def _apply_scrambling(states: np.ndarray, angles: np.ndarray) -> np.ndarray:
    # angles[..., :] ordered: (RZ, RY) per qubit, then RZZ per pair (p<q).
    n = sv.num_qubits(states)
    out = states
    for i in range(n):
        out = sv.apply_rotation(out, "Z", angles[..., 2 * i], i)
        out = sv.apply_rotation(out, "Y", angles[..., 2 * i + 1], i)
    for k, (p, r) in enumerate(combinations(range(n), 2)):
        out = sv.apply_rzz(out, angles[..., 2 * n + k], p, r)
    return out


def scrambling_step(state: np.ndarray, delta: float, rng: np.random.Generator) -> np.ndarray:
    """One random scrambling layer: RZ then RY on every qubit, then RZZ on all pairs.

    Every gate angle is an independent draw from U(-delta*pi/8, delta*pi/8).
    """
    state = np.asarray(state, dtype=complex)
    return _apply_scrambling(state, _draw_angles(rng, sv.num_qubits(state), delta))


@dataclass
class DiffusionTrajectory:
    sets: list
    label: str = ""
    seed_record: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return len(self.sets) - 1


def forward_diffuse(
    initial: np.ndarray, schedule: NoiseSchedule, seed: int, label: str = "", tag: str = "diffuse"
) -> DiffusionTrajectory:
    """Scramble every state of ``initial`` through ``schedule.T`` steps.

    Sample ``i`` at step ``t`` uses the stream ``(seed, tag/label, i, t)``, so
    the result is independent of evaluation order.
    """
    initial = np.asarray(initial, dtype=complex)
    if initial.ndim != 2 or len(initial) == 0:
        raise ValueError("initial set must be a nonempty (N, 2**n) array")
    n = sv.num_qubits(initial)
    full_tag = f"{tag}/{label}"
    sets = [initial]
    current = initial
    for t, delta in enumerate(schedule.deltas, start=1):
        angles = np.stack([_draw_angles(stream(seed, full_tag, i, t), n, delta) for i in range(len(initial))])
        current = _apply_scrambling(current, angles)
        sets.append(current)
    return DiffusionTrajectory(sets, label, {"seed": int(seed), "tag": full_tag})
