# # Planar rings, end to end
#
# Three rings of single-qubit states, one per Bloch plane. We scramble them
# toward Haar random states, train a small conditioned denoiser and look at
# what comes back. The budget here is tiny so the script finishes in about a
# minute; the `planar_rings_small` preset is the real run.

# %%
import numpy as np

from cqdd import distances as dist
from cqdd import statevec as sv
from cqdd.experiment import from_dict, preset
from cqdd.pipelines import diffuse_all
from cqdd.train import chained_outputs, haar_references, train_all

# six steps need a steeper schedule than the preset's to reach Haar
cfg = from_dict({**preset("planar_rings_small"), "N": 60, "T": 6, "L": 6,
                 "schedule": {"kind": "power", "params": [0.07, 2]},
                 "trainer": {"iterations_per_step": 600}})
targets = cfg.targets()
print({lab: s.shape for lab, s in targets.items()})

# %% [markdown]
# Each ring lies in the plane orthogonal to its axis, so that Bloch component
# is zero for every state.

# %%
for lab, states in targets.items():
    print(lab, np.abs(sv.bloch_vector(states)).max(axis=0).round(3))

# %% Forward diffusion
trajs = diffuse_all(cfg, targets)
haar = haar_references(targets, cfg.seed)
norm = dist.normalization_constant(list(targets.values()), list(haar.values()), "wass")
for t in range(cfg.T + 1):
    d = np.mean([dist.wasserstein(trajs[lab].sets[t], targets[lab]) for lab in targets]) / norm
    print(f"t={t:2d}  normalized distance to S(0): {d:.3f}")

# %% Train the backward steps, last step first
model, record = train_all(trajs, cfg.spec, cfg.conditions(), cfg.trainer, cfg.seed)
for k in sorted(record.best_loss, reverse=True):
    print(f"step {k}: best loss {record.best_loss[k]:.3f}")
print("train", round(record.final_train_loss, 3), "test", round(record.final_test_loss, 3))

# %% [markdown]
# Fresh Haar inputs, one conditioning angle per ring. A well-trained model
# pushes the matching Bloch component back toward zero.

# %%
gen = chained_outputs(model, targets, cfg.seed, "test")
for lab, states in gen.items():
    print(lab, "mean |component| per axis:", np.abs(sv.bloch_vector(states)).mean(axis=0).round(3))
