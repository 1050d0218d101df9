"""Unsupervised construction of the labeled masking-effectiveness dataset.

For each design: measure the per-gate leakage baseline once, then repeatedly
draw a batch of not-yet-tried maskable gates, mask the batch (always starting
from the pristine design), re-measure, and label every batched gate by its
relative leakage reduction r = (before - after) / before against the
threshold ``theta_r`` (1 = good masking, 0 = bad).  Features always come from
the original circuit graph, so a sample describes the gate's neighborhood as
the classifier will later see it.

Both leakage runs of a design share one acquisition seed, which keeps the
samples of untouched gates bit-identical across the two runs; the reduction
ratio therefore isolates the effect of the inserted composites.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import EmptyDatasetError, PoolExhaustedError
from .graph import FeatureSchema, FeatureVector, graphify, structural_features
from .masking import is_maskable, modify
from .netlist import Netlist
from .sim import PowerModel
from .tvla import AcquisitionConfig, compare_leakage, leak_estimate, origin_scores

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatagenConfig:
    m_size: int = 200
    locality: int = 7
    iters: int = 100
    theta_r: float = 0.70
    traces: int = 10_000
    seed: int = 0
    cycles_per_trace: int = 2
    noise_sigma: float | None = None
    min_baseline: float = 1e-6

    def __post_init__(self):
        if not (0.0 < self.theta_r < 1.0):
            raise ValueError("theta_r must lie in (0, 1)")
        if self.m_size < 1:
            raise ValueError("m_size must be >= 1")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")

    def to_dict(self) -> dict:
        return {"M_size": self.m_size, "itr": self.iters,
                "theta_r": self.theta_r, "traces": self.traces, "seed": self.seed}


@dataclass(frozen=True)
class LabeledSample:
    features: FeatureVector
    label: int
    design: str
    gate_id: int
    iteration: int
    r_ratio: float


@dataclass
class Dataset:
    schema: FeatureSchema
    samples: list[LabeledSample]
    config: DatagenConfig | None = None

    @property
    def class_counts(self) -> tuple[int, int]:
        ones = sum(s.label for s in self.samples)
        return (len(self.samples) - ones, ones)

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, y): binary feature matrix and 0/1 labels."""
        X = np.stack([s.features.values for s in self.samples]).astype(np.uint8)
        y = np.array([s.label for s in self.samples], dtype=np.int64)
        return X, y

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.to_dict(),
            "config": self.config.to_dict() if self.config else None,
            "samples": [
                {"design": s.design, "gate": s.gate_id, "iter": s.iteration,
                 "r_ratio": s.r_ratio, "label": s.label,
                 "features": "".join("1" if b else "0" for b in s.features.values)}
                for s in self.samples
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "Dataset":
        schema = FeatureSchema.from_dict(d["schema"])
        samples = []
        for s in d["samples"]:
            bits = np.frombuffer(s["features"].encode(), dtype=np.uint8) - ord("0")
            if len(bits) != schema.feature_len:
                raise ValueError("feature string length disagrees with schema")
            samples.append(LabeledSample(
                features=FeatureVector(gate_id=s["gate"],
                                       values=bits.astype(np.uint8),
                                       neighborhood=()),
                label=int(s["label"]), design=s["design"], gate_id=s["gate"],
                iteration=s["iter"], r_ratio=float(s["r_ratio"])))
        cfg = None
        if d.get("config"):
            c = d["config"]
            cfg = DatagenConfig(m_size=c["M_size"], locality=schema.locality,
                                iters=c["itr"], theta_r=c["theta_r"],
                                traces=c["traces"], seed=c["seed"])
        return cls(schema=schema, samples=samples, config=cfg)


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dataset.to_json())


def load_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return Dataset.from_dict(json.load(fh))


def random_select(netlist: Netlist, pool, k: int,
                  gen: np.random.Generator) -> list[int]:
    """Uniform sample without replacement from the maskable subset of pool."""
    candidates = sorted(i for i in pool if is_maskable(netlist, i))
    if k > len(candidates):
        raise PoolExhaustedError(
            f"requested {k} gates, only {len(candidates)} maskable remain")
    if k == 0:
        return []
    picks = gen.choice(len(candidates), size=k, replace=False)
    return [candidates[int(p)] for p in picks]


def _acquisition(cfg: DatagenConfig, design_index: int,
                 secret_inputs) -> AcquisitionConfig:
    pm = PowerModel() if cfg.noise_sigma is None else PowerModel(noise_sigma=cfg.noise_sigma)
    return AcquisitionConfig(
        n_traces=cfg.traces,
        secret_inputs=None if secret_inputs is None else tuple(secret_inputs),
        cycles_per_trace=cfg.cycles_per_trace,
        power_model=pm,
        seed=rng.integer(cfg.seed, 0xDA, design_index),
        min_traces_per_group=min(200, cfg.traces),
    )


def cognition_generate(designs, cfg: DatagenConfig,
                       secret_inputs=None) -> Dataset:
    """Build the labeled dataset over one or more designs.

    ``secret_inputs`` optionally gives the secret input ids per design;
    by default the first-quarter rule applies.  Deterministic given
    (designs, cfg).
    """
    schema = FeatureSchema(cfg.locality)
    samples: list[LabeledSample] = []
    for j, design in enumerate(designs):
        secrets = None if secret_inputs is None else secret_inputs[j]
        graph = graphify(design)
        acq = _acquisition(cfg, j, secrets)
        baseline = leak_estimate(design, acq)
        base_abs = baseline.abs_t
        remaining = set(range(design.n_gates))
        gen = rng.generator(cfg.seed, rng.DOMAIN_SELECT, j)
        for run in range(cfg.iters):
            if cfg.m_size > len(remaining):
                break
            try:
                batch = random_select(design, remaining, cfg.m_size, gen)
            except PoolExhaustedError:
                break
            modified = modify(design, batch)
            remaining -= set(batch)
            mod_report = leak_estimate(modified, acq)
            after = origin_scores(mod_report, modified.origins, design.n_gates)
            for i in sorted(batch):
                if base_abs[i] < cfg.min_baseline:
                    log.debug("skip %s gate %d: baseline |t| %.2e below %.0e",
                              design.name, i, base_abs[i], cfg.min_baseline)
                    continue
                r = compare_leakage(base_abs, after, i)
                samples.append(LabeledSample(
                    features=structural_features(graph, cfg.locality, i, schema),
                    label=1 if r >= cfg.theta_r else 0,
                    design=design.name, gate_id=i, iteration=run, r_ratio=r))
    if not samples:
        raise EmptyDatasetError("no labeled samples were produced")
    return Dataset(schema=schema, samples=samples, config=cfg)
