# # Entanglement measures on the target families
#
# Meyer-Wallach Q and subspace overlaps for the multi-qubit classes, plus the
# magnetization of the Ising ground states. No training involved.

# %%
import numpy as np

from cqdd import datasets as ds
from cqdd import metrics as mt
from cqdd import statevec as sv

rng = np.random.default_rng(0)

families = {
    "Bell phi": ds.bell_class("phi", 100, rng),
    "Bell psi": ds.bell_class("psi", 100, rng),
    "GHZ3": ds.ghz_w_class("GHZ3", 100, rng),
    "W3": ds.ghz_w_class("W3", 100, rng),
    "product, 3 qubits": ds.product_phase_class(3, 100, rng),
    "Haar, 2 qubits": sv.haar_random(2, rng, size=100),
}
for name, states in families.items():
    print(f"{name:18s} <Q> = {np.mean(mt.meyer_wallach(states)):.4f}")

# %% Subspace overlap separates the two Bell classes
for name in ("Bell phi", "Bell psi", "Haar, 2 qubits"):
    s = families[name]
    print(f"{name:18s} in {{00,11}}: {np.mean(mt.subspace_overlap(s, [0, 3])):.3f}"
          f"   in {{01,10}}: {np.mean(mt.subspace_overlap(s, [1, 2])):.3f}")

# %% Ising ground states with a random transverse field
for h in (0.25, -0.25):
    states = ds.tlfim_class(h, 100, rng)
    dist, mean = mt.ensemble_magnetization(states)
    print(f"h = {h:+.2f}: mean M = {mean:+.3f}, per site {mean / 4:+.3f}")
    print("   P(M):", dict(zip(dist.support.tolist(), dist.probabilities.round(3).tolist())))
