"""End-to-end runs behind the command line: each function writes its outputs
under ``out`` and returns the list of files it wrote."""
import copy
import itertools
import json
import logging
from pathlib import Path

import numpy as np

from . import ansatz as az
from . import datasets as ds
from . import diffusion as df
from . import distances as dist
from . import io
from . import metrics as mt
from . import statevec as sv
from ._rng import stream
from .experiment import ExperimentConfig, from_dict, preset
from .train import chained_outputs, haar_references, train_all

log = logging.getLogger("cqdd")

# basis states defining the target subspace of each entangled family
_SUBSPACES = {"bell:phi": (0, 3), "bell:psi": (1, 2), "ghz_phase": (0, 7), "w_phase": (1, 2, 4)}
# basis pairs used for projected Bloch coordinates
_PROJECTIONS = {"bell:phi": (0, 3), "bell:psi": (1, 2), "ghz_phase": (0, 7), "w_phase": (1, 4)}


def _family_key(c: ds.ClassSpec) -> str:
    return f"bell:{c.params['kind'].lower()}" if c.family == "bell" else c.family


def subspace_of(c: ds.ClassSpec):
    if c.family == "ghz_string":
        i = int(c.params["x"], 2)
        return (i, i ^ ((1 << len(c.params["x"])) - 1))
    return _SUBSPACES.get(_family_key(c))


def projection_of(c: ds.ClassSpec):
    if c.family == "ghz_string":
        return subspace_of(c)
    return _PROJECTIONS.get(_family_key(c))


def diffuse_all(cfg: ExperimentConfig, targets: dict | None = None) -> dict:
    targets = cfg.targets() if targets is None else targets
    schedule = cfg.make_schedule()
    return {lab: df.forward_diffuse(t, schedule, cfg.seed, lab) for lab, t in targets.items()}


def gen_data(cfg: ExperimentConfig, out) -> list[Path]:
    out = Path(out)
    return [
        io.write_state_set(out / "data" / f"{lab}.qset", states, lab, {"seed": cfg.seed, "tag": f"data/{lab}"})
        for lab, states in cfg.targets().items()
    ]


def diffuse(cfg: ExperimentConfig, out) -> list[Path]:
    """Write every diffusion step and a per-step distance table."""
    out = Path(out)
    targets = cfg.targets()
    trajs = diffuse_all(cfg, targets)
    haar = haar_references(targets, cfg.seed)
    norm = dist.normalization_constant(list(targets.values()), list(haar.values()), cfg.metric)
    files, rows = [], []
    schedule = cfg.make_schedule()
    for lab, traj in trajs.items():
        for t, states in enumerate(traj.sets):
            files.append(io.write_state_set(out / "diffuse" / lab / f"t{t:03d}.qset", states, lab,
                                            {**traj.seed_record, "t": t}))
            delta = float(schedule.deltas[t - 1]) if t else 0.0
            rows.append([lab, t, delta, dist.distance(cfg.metric, states, traj.sets[0]) / norm,
                         dist.distance(cfg.metric, states, haar[lab]) / norm])
    files.append(io.write_csv(out / "diffusion.csv",
                              ["label", "t", "delta", "dist_to_initial", "dist_to_haar"], rows))
    return files


def train(cfg: ExperimentConfig, out, run: str = "") -> tuple[list[Path], dict]:
    """Diffuse, train and write the model, loss records and per-step checkpoints."""
    out = Path(out)
    suffix = f"_{run}" if run else ""
    trajs = diffuse_all(cfg)
    files = []

    def checkpoint(k, theta):
        files.append(io.write_csv(out / f"checkpoints{suffix}" / f"step_{k:03d}.csv", ["theta"],
                                  [[float(v)] for v in theta]))

    with io.LossRecordWriter(out / f"loss_records{suffix}.jsonl", run or cfg.name) as writer:
        model, record = train_all(trajs, cfg.spec, cfg.conditions(), cfg.trainer, cfg.seed,
                                  callback=writer, log=log.info, on_step=checkpoint)
    files.append(writer.path)
    model.metadata["config"] = cfg.to_dict()
    model.metadata["config"]["trainer"].pop("threads")
    files.append(io.write_model(out / f"model{suffix}.json", model))
    files.append(io.write_csv(out / f"step_minima{suffix}.csv", ["run", "step", "best_loss"],
                              [[run or cfg.name, k, record.best_loss[k]] for k in sorted(record.best_loss, reverse=True)]))
    files.append(io.write_csv(out / f"final_loss{suffix}.csv", ["run", "split", "loss"],
                              [[run or cfg.name, "train", record.final_train_loss],
                               [run or cfg.name, "test", record.final_test_loss]]))
    summary = {"norm_constant": record.norm_constant, "final_train_loss": record.final_train_loss,
               "final_test_loss": record.final_test_loss, "model": model, "record": record}
    return files, summary


def check_architecture(model: az.DenoiseModel, cfg: ExperimentConfig) -> None:
    if model.spec != cfg.spec or model.T != cfg.T:
        raise ValueError(f"model architecture {model.spec}, T={model.T} does not match config {cfg.spec}, T={cfg.T}")
    if set(model.mu_table) != set(cfg.conditions()):
        raise ValueError("model class labels do not match config")


def sample(model: az.DenoiseModel, label: str, N: int, seed: int, out, all_steps: bool = False) -> list[Path]:
    out = Path(out)
    sets = az.generate(model, label, N, seed)
    files = []
    steps = range(model.T, -1, -1) if all_steps else [0]
    for t in steps:
        files.append(io.write_state_set(out / "samples" / label / f"t{t:03d}.qset", sets[model.T - t], label,
                                        {"seed": seed, "tag": f"generate/{label}", "t": t}))
    return files


def evaluate(model: az.DenoiseModel, cfg: ExperimentConfig, out) -> tuple[list[Path], dict]:
    """Normalized losses, spread table and task metrics for train and test generations."""
    check_architecture(model, cfg)
    out = Path(out)
    targets = cfg.targets()
    haar = haar_references(targets, cfg.seed)
    norm = dist.normalization_constant(list(targets.values()), list(haar.values()), cfg.metric)
    gen = {split: chained_outputs(model, targets, cfg.seed, split) for split in ("train", "test")}
    files = []

    rows = []
    for split, sets in gen.items():
        for lab in targets:
            rows.append([split, lab, 100 * dist.distance(cfg.metric, sets[lab], targets[lab]) / norm])
        rows.append([split, "mean", 100 * dist.class_loss(sets, targets, cfg.metric, norm)])
    files.append(io.write_csv(out / "losses.csv", ["split", "label", "loss_pct"], rows))

    spread = {split: mt.per_class_spread(sets, targets, haar, cfg.metric) for split, sets in gen.items()}
    files.append(io.write_csv(out / "spread.csv", ["label", "train_pct", "test_pct"],
                              [[lab, spread["train"][lab], spread["test"][lab]] for lab in targets]))

    class_of = {c.label: c for c in cfg.classes}
    sources = {"target": targets, **gen}
    if cfg.n >= 2:
        q_rows = [[src, lab, float(np.mean(mt.meyer_wallach(sets[lab])))]
                  for src, sets in sources.items() for lab in targets]
        files.append(io.write_csv(out / "entanglement.csv", ["source", "label", "mean_Q"], q_rows))
        o_rows = []
        for src, sets in sources.items():
            for lab in targets:
                sub = subspace_of(class_of[lab]) if lab in class_of else None
                if sub is not None:
                    o_rows.append([src, lab, "".join(format(i, f"0{cfg.n}b") + ";" for i in sub).rstrip(";"),
                                   float(np.mean(mt.subspace_overlap(sets[lab], sub)))])
        if o_rows:
            files.append(io.write_csv(out / "subspace_overlap.csv", ["source", "label", "subspace", "mean_overlap"], o_rows))
    if any(c.family == "tlfim" for c in cfg.classes) or cfg.n == 4:
        m_rows = []
        for src, sets in {**sources, "diffused_T": {lab: t.sets[-1] for lab, t in diffuse_all(cfg, targets).items()}}.items():
            for lab in targets:
                distn, mean = mt.ensemble_magnetization(sets[lab])
                m_rows.extend([src, lab, int(m), float(p), mean] for m, p in zip(distn.support, distn.probabilities))
        files.append(io.write_csv(out / "magnetization.csv", ["source", "label", "M", "probability", "mean_M"], m_rows))

    b_rows = []
    for src, sets in sources.items():
        for lab in targets:
            if cfg.n == 1:
                xyz = sv.bloch_vector(sets[lab])
                b_rows.extend([src, lab, i, *map(float, v), 1.0] for i, v in enumerate(xyz))
            else:
                pair = projection_of(class_of[lab]) if lab in class_of else None
                if pair is None:
                    continue
                proj = sv.projection_batch(sets[lab], pair[:2])
                b_rows.extend([src, lab, i, *map(float, v)] for i, v in enumerate(proj))
    if b_rows:
        files.append(io.write_csv(out / "bloch.csv", ["source", "label", "index", "x", "y", "z", "weight"], b_rows))
    return files, {"norm_constant": norm, "losses": rows, "spread": spread}


def partition_test_loss(model: az.DenoiseModel, targets: dict, metric: str, norm: float, seed: int,
                        parts: int = 5, size: int = 50) -> tuple[float, float]:
    """Mean and std over ``parts`` disjoint test subsets of ``size`` generated states each."""
    per_part = np.zeros(parts)
    for lab, tgt in targets.items():
        test = az.generate(model, lab, parts * size, seed, stream_key=f"ablate-test/{lab}")[-1]
        for p in range(parts):
            per_part[p] += dist.distance(metric, test[p * size:(p + 1) * size], tgt) / norm
    per_part /= len(targets)
    return float(per_part.mean()), float(per_part.std())


def grid_points(spec: dict) -> list[tuple[dict, str | None]]:
    """Expand a grid definition into ``(config_dict, skip_reason)`` pairs."""
    base = spec.get("base", {})
    base = preset(base) if isinstance(base, str) else copy.deepcopy(base)
    base.update(copy.deepcopy(spec.get("overrides", {})))
    if "trainer" in spec:
        base["trainer"] = {**base.get("trainer", {}), **spec["trainer"]}
    points = []
    if "grid" in spec:
        axes = spec["grid"]
        keys = sorted(axes)
        for values in itertools.product(*(axes[k] for k in keys)):
            points.append(({**copy.deepcopy(base), **dict(zip(keys, values))}, None))
    elif "ancilla" in spec:
        a = spec["ancilla"]
        for n_a in a["n_a"]:
            if a["mode"] == "constrained":
                if a["product"] % n_a:
                    points.append(({**copy.deepcopy(base), "n_a": n_a},
                                   f"L*n_a={a['product']} not divisible by n_a={n_a}"))
                    continue
                points.append(({**copy.deepcopy(base), "n_a": n_a, "L": a["product"] // n_a}, None))
            else:
                points.append(({**copy.deepcopy(base), "n_a": n_a, "L": a["L"]}, None))
    elif "class_counts" in spec:
        from .experiment import equator_classes, ghz_string_classes
        cc = spec["class_counts"]
        make = {"equator_ring": equator_classes, "ghz_string": ghz_string_classes}[cc["family"]]
        for count in cc["counts"]:
            points.append(({**copy.deepcopy(base), "classes": make(count)}, None))
    elif "points" in spec:
        points = [({**copy.deepcopy(base), **p}, None) for p in spec["points"]]
    return points


ABLATE_HEADER = ["point", "n_a", "L", "T", "N", "num_classes", "test_loss_mean", "test_loss_std", "status"]


def ablate(spec: dict, out, seed: int | None = None, threads: int | None = None) -> list[Path]:
    out = Path(out)
    rows = []
    for j, (doc, skip) in enumerate(grid_points(spec)):
        if seed is not None:
            doc["seed"] = seed
        if threads is not None:
            doc.setdefault("trainer", {})["threads"] = threads
        if skip is not None:
            rows.append([j, doc.get("n_a"), doc.get("L"), doc.get("T"), doc.get("N"), len(doc["classes"]), "", "",
                         f"skipped: {skip}"])
            continue
        cfg = from_dict(doc)
        trajs = diffuse_all(cfg)
        model, record = train_all(trajs, cfg.spec, cfg.conditions(), cfg.trainer, cfg.seed, log=log.info)
        targets = {lab: t.sets[0] for lab, t in trajs.items()}
        mean, std = partition_test_loss(model, targets, cfg.metric, record.norm_constant, cfg.seed)
        rows.append([j, cfg.n_a, cfg.L, cfg.T, cfg.N, len(cfg.classes), mean, std, "ok"])
    return [io.write_csv(out / "ablation.csv", ABLATE_HEADER, rows)]


def sweep_mu(model: az.DenoiseModel, cfg: ExperimentConfig, out, num_points: int = 33, N: int | None = None) -> list[Path]:
    """Generate at evenly spaced angles in [0, 2 pi] and measure distance to every class."""
    check_architecture(model, cfg)
    out = Path(out)
    targets = cfg.targets()
    N = N or cfg.N
    norm = model.metadata.get("norm_constant")
    if norm is None:
        haar = haar_references(targets, cfg.seed)
        norm = dist.normalization_constant(list(targets.values()), list(haar.values()), cfg.metric)
    labels = list(targets)
    header = ["mu"] + [f"dist_{lab}" for lab in labels] + ["sum", "note"]
    rows = []
    if model.spec.conditioning in ("rz", "basis") or len(labels) < 2:
        rows.append(["", *([""] * len(labels)), "", f"warning: model has no continuous conditioning "
                                                    f"({model.spec.conditioning}, {len(labels)} classes)"])
    for mu in np.linspace(0.0, 2 * np.pi, num_points):
        gen = az.generate(model, labels[0], N, cfg.seed, mu=float(mu), stream_key="sweep")[-1]
        d = [dist.distance(cfg.metric, gen, targets[lab][:N]) / norm for lab in labels]
        rows.append([float(mu), *d, float(sum(d)), ""])
    return [io.write_csv(out / "sweep_mu.csv", header, rows)]


def benchmark(cfg: ExperimentConfig, out) -> tuple[list[Path], dict]:
    """Conditioned per-class model versus one unconditioned model of the union."""
    out = Path(out)
    uncond = copy.deepcopy(cfg)
    uncond.unconditioned = True
    files, results = [], {}
    for run, c in (("conditioned", cfg), ("unconditioned", uncond)):
        f, summary = train(c, out, run)
        files += f
        results[run] = summary
    rows = [[run, r["final_train_loss"], r["final_test_loss"]] for run, r in results.items()]
    ratio = results["conditioned"]["final_test_loss"] / results["unconditioned"]["final_test_loss"]
    files.append(io.write_csv(out / "benchmark.csv", ["run", "final_train_loss", "final_test_loss"], rows))
    results["ratio"] = ratio
    return files, results


def rz_degenerate(model: az.DenoiseModel, N: int, seed: int) -> float:
    """Largest infidelity between classes' generations under shared random streams."""
    labels = list(model.mu_table)
    gens = [az.generate(model, lab, N, seed, stream_key="shared")[-1] for lab in labels]
    return float(max((1 - sv.fidelity(gens[0], g)).max() for g in gens[1:])) if len(gens) > 1 else 0.0


def compare_conditioning(cfg: ExperimentConfig, out, modes=("basis", "rx", "ry", "rz")) -> tuple[list[Path], list]:
    out = Path(out)
    rows = []
    for mode in modes:
        c = copy.deepcopy(cfg)
        c.conditioning = mode
        try:
            c.conditions()
        except ValueError as exc:
            rows.append([mode, "rejected", "", str(exc)])
            continue
        trajs = diffuse_all(c)
        model, record = train_all(trajs, c.spec, c.conditions(), c.trainer, c.seed, log=log.info)
        note = ""
        if mode == "rz":
            gap = rz_degenerate(model, c.N, c.seed)
            note = f"expected degenerate: max infidelity across classes {gap:.3e}"
        rows.append([mode, "ok", record.final_test_loss, note])
    return [io.write_csv(out / "conditioning.csv", ["mode", "status", "final_test_loss", "note"], rows)], rows
