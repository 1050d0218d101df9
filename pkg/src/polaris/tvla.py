"""Welch t-test leakage assessment with one-pass moment accumulation.

The accumulator keeps the running raw moments M1 (mean of y) and M2 (mean of
y^2) so that a single pass over the trace stream yields the sample mean and
population variance:

    M1' = M1 + (y - M1) / n'        M2' = M2 + (y^2 - M2) / n'
    mu = M1                         s^2 = M2 - M1^2   (clamped at 0)

Accumulators merge associatively, so trace acquisition can be sharded and
recombined without changing the result beyond floating-point tolerance.

A gate is flagged leaky when |t| exceeds the 4.5 distinguishability
threshold; a design whose gates all stay below it is reported as protected
with 99.999% confidence (the v values are reported so the v > 1000 condition
behind that confidence figure can be audited).
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng, sim
from .errors import InsufficientSamplesError, NegligibleBaselineError, ZeroTotalError
from .netlist import Netlist

LEAKY_THRESHOLD = 4.5
_SHARD = 2048


@dataclass(frozen=True)
class MomentAccumulator:
    """Streaming raw moments; values may be scalars or per-gate arrays."""

    n: int = 0
    M1: float | np.ndarray = 0.0
    M2: float | np.ndarray = 0.0

    @classmethod
    def zeros(cls, n_lanes: int) -> "MomentAccumulator":
        return cls(0, np.zeros(n_lanes), np.zeros(n_lanes))

    @classmethod
    def from_batch(cls, rows: np.ndarray) -> "MomentAccumulator":
        """Accumulator equivalent to folding every row of (n, lanes) once."""
        rows = np.asarray(rows, dtype=float)
        return cls(rows.shape[0], rows.mean(axis=0), (rows ** 2).mean(axis=0))

    def update(self, y) -> "MomentAccumulator":
        n = self.n + 1
        delta = y - self.M1
        return MomentAccumulator(
            n, self.M1 + delta / n, self.M2 + (np.square(y) - self.M2) / n)

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        wa, wb = self.n / n, other.n / n
        return MomentAccumulator(n, wa * self.M1 + wb * other.M1,
                                 wa * self.M2 + wb * other.M2)

    def finalize(self) -> tuple:
        """(mean, population variance); requires n >= 2."""
        if self.n < 2:
            raise InsufficientSamplesError(f"need n >= 2, have {self.n}")
        return self.M1, np.maximum(self.M2 - np.square(self.M1), 0.0)


def acc_update(a: MomentAccumulator, y) -> MomentAccumulator:
    return a.update(y)


def acc_merge(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    return a.merge(b)


def finalize(a: MomentAccumulator) -> tuple:
    return a.finalize()


def naive_variance(samples) -> float:
    """Two-pass population variance; the independent oracle for finalize."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise InsufficientSamplesError("need at least 2 samples")
    mu = samples.sum() / samples.size
    return float(((samples - mu) ** 2).sum() / samples.size)


@dataclass(frozen=True)
class GroupStats:
    mean: float
    var: float
    n: int

    @classmethod
    def from_accumulator(cls, a: MomentAccumulator) -> "GroupStats":
        mu, s2 = a.finalize()
        return cls(float(mu), float(s2), a.n)


def welch_t(g0: GroupStats, g1: GroupStats) -> tuple[float, float]:
    """Welch's t statistic and degrees of freedom.

    Sign convention: t > 0 when the fixed-group mean exceeds the random-group
    mean.  A zero pooled standard error yields t = 0 (equal means) or +-inf
    (the zero-variance flag), with v = nan.
    """
    if g0.n < 2 or g1.n < 2:
        raise InsufficientSamplesError("both groups need n >= 2")
    q0 = g0.var / g0.n
    q1 = g1.var / g1.n
    se2 = q0 + q1
    if se2 == 0.0:
        if g0.mean == g1.mean:
            return 0.0, math.nan
        return math.copysign(math.inf, g0.mean - g1.mean), math.nan
    t = (g0.mean - g1.mean) / math.sqrt(se2)
    v = se2 ** 2 / (q0 ** 2 / (g0.n - 1) + q1 ** 2 / (g1.n - 1))
    return t, v


def _welch_arrays(m0, v0, n0, m1, v1, n1):
    """Vectorized welch_t over per-gate statistics."""
    q0 = v0 / n0
    q1 = v1 / n1
    se2 = q0 + q1
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se2 > 0, (m0 - m1) / np.sqrt(se2),
                     np.where(m0 == m1, 0.0, np.sign(m0 - m1) * np.inf))
        v = np.where(se2 > 0,
                     se2 ** 2 / (q0 ** 2 / (n0 - 1) + q1 ** 2 / (n1 - 1)),
                     np.nan)
    return t, v


@dataclass
class TvlaReport:
    design: str
    n_traces: int
    threshold: float
    names: tuple[str, ...]
    gtypes: tuple[str, ...]
    t: np.ndarray
    v: np.ndarray

    @property
    def abs_t(self) -> np.ndarray:
        return np.abs(self.t)

    @property
    def leaky(self) -> np.ndarray:
        return self.abs_t > self.threshold

    @property
    def leaky_ids(self) -> list[int]:
        return [int(i) for i in np.nonzero(self.leaky)[0]]

    def summary(self) -> dict:
        non_input = np.array([g != "INPUT" for g in self.gtypes])
        sel = self.abs_t[non_input] if non_input.any() else self.abs_t
        return {
            "mean_abs_t": float(sel.mean()) if sel.size else 0.0,
            "median_abs_t": float(np.median(sel)) if sel.size else 0.0,
            "leaky_count": int(self.leaky.sum()),
            "protected": bool((self.abs_t <= self.threshold).all()),
        }

    def to_dict(self) -> dict:
        return {
            "design": self.design,
            "n_traces": self.n_traces,
            "threshold": self.threshold,
            "gates": [
                {"id": i, "name": self.names[i], "type": self.gtypes[i],
                 "t": float(self.t[i]),
                 "v": None if math.isnan(self.v[i]) else float(self.v[i]),
                 "leaky": bool(self.leaky[i])}
                for i in range(len(self.names))
            ],
            "summary": self.summary(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "TvlaReport":
        gates = d["gates"]
        return cls(
            design=d["design"], n_traces=d["n_traces"], threshold=d["threshold"],
            names=tuple(g["name"] for g in gates),
            gtypes=tuple(g["type"] for g in gates),
            t=np.array([g["t"] for g in gates]),
            v=np.array([math.nan if g["v"] is None else g["v"] for g in gates]),
        )


@dataclass(frozen=True)
class AcquisitionConfig:
    """Shared fixed-vs-random acquisition settings."""

    n_traces: int = 10_000
    secret_inputs: tuple[int, ...] | None = None  # None: first quarter rule
    fixed_value: tuple[int, ...] | None = None    # None: derived from seed
    cycles_per_trace: int = 2
    power_model: sim.PowerModel = field(default_factory=sim.PowerModel)
    threshold: float = LEAKY_THRESHOLD
    seed: int = 0
    min_traces_per_group: int = 200


def resolve_stimulus(netlist: Netlist, cfg: AcquisitionConfig,
                     group: sim.Group) -> sim.StimulusSpec:
    secrets = (tuple(cfg.secret_inputs) if cfg.secret_inputs is not None
               else sim.default_secret_inputs(netlist))
    if cfg.fixed_value is not None:
        fixed = tuple(cfg.fixed_value)
    else:
        fixed = tuple(int(b) for b in rng.bits(
            cfg.seed, rng.DOMAIN_FIXED_VALUE, np.array(secrets, dtype=np.int64)))
    return sim.StimulusSpec(secret_inputs=secrets, fixed_value=fixed,
                            group=group, cycles_per_trace=cfg.cycles_per_trace,
                            seed=cfg.seed)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("POLARIS_THREADS", "1")))
    except ValueError:
        return 1


def _group_accumulator(netlist: Netlist, spec: sim.StimulusSpec,
                       pm: sim.PowerModel, n_traces: int) -> MomentAccumulator:
    """Shard traces into fixed batches and merge in shard order.

    The shard size is constant, so the result is bit-identical for any
    worker count.
    """
    starts = list(range(0, n_traces, _SHARD))

    def shard(s: int) -> MomentAccumulator:
        return MomentAccumulator.from_batch(
            sim.trace_batch(netlist, spec, pm, s, min(_SHARD, n_traces - s)))

    workers = _threads()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(shard, starts))
    else:
        parts = [shard(s) for s in starts]
    acc = MomentAccumulator.zeros(len(netlist.gates))
    for p in parts:
        acc = acc.merge(p)
    return acc


def leak_estimate(netlist: Netlist, cfg: AcquisitionConfig | None = None) -> TvlaReport:
    """Per-gate fixed-vs-random TVLA over simulated traces."""
    cfg = cfg or AcquisitionConfig()
    if cfg.n_traces < cfg.min_traces_per_group:
        raise ValueError(
            f"n_traces {cfg.n_traces} below the {cfg.min_traces_per_group} minimum")
    spec_f = resolve_stimulus(netlist, cfg, sim.Group.FIXED)
    spec_r = resolve_stimulus(netlist, cfg, sim.Group.RANDOM)
    if not spec_f.secret_inputs:
        from .errors import NoSecretInputsError

        raise NoSecretInputsError("design has no secret inputs to fix")
    acc_f = _group_accumulator(netlist, spec_f, cfg.power_model, cfg.n_traces)
    acc_r = _group_accumulator(netlist, spec_r, cfg.power_model, cfg.n_traces)
    m0, v0 = acc_f.finalize()
    m1, v1 = acc_r.finalize()
    t, v = _welch_arrays(m0, v0, acc_f.n, m1, v1, acc_r.n)
    return TvlaReport(
        design=netlist.name, n_traces=cfg.n_traces, threshold=cfg.threshold,
        names=tuple(g.name for g in netlist.gates),
        gtypes=tuple(g.gtype.value for g in netlist.gates),
        t=t, v=v,
    )


def compare_leakage(before, after, i: int) -> float:
    """Relative leakage reduction (before - after) / before at gate i.

    ``after`` must already map masked composites back to their origin gate
    (see origin_scores); may be negative when masking made things worse.
    """
    b = float(before[i])
    if b < 1e-6:
        raise NegligibleBaselineError(f"gate {i} baseline |t| {b:.2e} < 1e-6")
    return (b - float(after[i])) / b


def origin_scores(after: TvlaReport, origins: dict[int, int],
                  n_original: int) -> np.ndarray:
    """Per-original-gate |t| with masked composites folded back.

    A masked gate's score is the max |t| over the gates of its replacement
    subcircuit (the origin-annotated internal nodes; the reused output node
    carries the functionally required unmasked net and is not counted).
    Unmasked gates keep their own |t|.
    """
    abs_t = after.abs_t
    scores = abs_t[:n_original].copy()
    masked: dict[int, float] = {}
    for new_id, origin in origins.items():
        cur = masked.get(origin, 0.0)
        masked[origin] = max(cur, float(abs_t[new_id]))
    for origin, score in masked.items():
        scores[origin] = score
    return scores


def aggregate_reduction(before: TvlaReport, after: TvlaReport,
                        origins: dict[int, int] | None = None) -> float:
    """Total leakage reduction in percent over the original gate universe."""
    n_original = len(before.names)
    total_before = float(before.abs_t.sum())
    if total_before == 0.0:
        raise ZeroTotalError("baseline total |t| is zero")
    mapped = origin_scores(after, origins or {}, n_original)
    return 100.0 * (total_before - float(mapped.sum())) / total_before


def mapped_report_stats(before: TvlaReport, after: TvlaReport,
                        origins: dict[int, int] | None = None) -> dict:
    """Before/after design metrics over the original gate universe."""
    n_original = len(before.names)
    mapped = origin_scores(after, origins or {}, n_original)
    non_input = np.array([g != "INPUT" for g in before.gtypes])
    return {
        "mean_abs_t_before": float(before.abs_t[non_input].mean()),
        "mean_abs_t_after": float(mapped[non_input].mean()),
        "leaky_before": int((before.abs_t > before.threshold).sum()),
        "leaky_after": int((mapped > before.threshold).sum()),
        "reduction_percent": aggregate_reduction(before, after, origins),
    }
