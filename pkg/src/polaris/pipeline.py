"""Model-guided masking end to end, plus run reports.

The flow: measure the baseline leakage (used for budget sizing and the
before/after comparison), score every maskable gate with the classifier
(optionally overridden by extracted rules), rank candidates by score with
ascending-id tie-break, mask the top slice of the ranking, and re-measure.
The budget is expressed either as a percentage of the baseline leaky-gate
count or as an absolute gate count.

Wall-clock per stage is recorded on the report object; the rendered artifact
files exclude it so that repeated seeded runs stay byte-identical.
"""

from __future__ import annotations

import enum
import json
import math
import re
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceedsCandidatesWarning, SchemaMismatchError
from .graph import graphify, structural_features
from .masking import (
    MaskPlan,
    maskable_ids,
    modify,
    origin_map_names,
    overhead_estimate,
    OverheadReport,
)
from .ml import predict_scores
from .netlist import Netlist
from .tvla import AcquisitionConfig, TvlaReport, leak_estimate, mapped_report_stats
from .xai import Decision, RuleSet, apply_rules


class BudgetMode(enum.Enum):
    PERCENT_OF_LEAKY = "percent_of_leaky"
    ABSOLUTE = "absolute"


@dataclass(frozen=True)
class MaskBudget:
    mode: BudgetMode
    value: float

    def __post_init__(self):
        if self.mode is BudgetMode.PERCENT_OF_LEAKY and not (0 < self.value <= 100):
            raise ValueError("percent budget must lie in (0, 100]")
        if self.mode is BudgetMode.ABSOLUTE and self.value < 1:
            raise ValueError("absolute budget must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "MaskBudget":
        """"<int>%" selects a share of the leaky-gate count; "<int>" a count."""
        text = text.strip()
        m = re.fullmatch(r"(\d+(?:\.\d+)?)\s*%", text)
        if m:
            return cls(BudgetMode.PERCENT_OF_LEAKY, float(m.group(1)))
        if re.fullmatch(r"\d+", text):
            return cls(BudgetMode.ABSOLUTE, int(text))
        raise ValueError(f"cannot parse budget '{text}' (want e.g. '50%' or '120')")

    def resolve(self, leaky_count: int) -> int:
        if self.mode is BudgetMode.PERCENT_OF_LEAKY:
            return math.floor(self.value / 100.0 * leaky_count)
        return int(self.value)

    def describe(self) -> str:
        if self.mode is BudgetMode.PERCENT_OF_LEAKY:
            return f"{self.value:g}% of leaky gates"
        return f"{int(self.value)} gates"


@dataclass
class RunReport:
    design: str
    budget: MaskBudget
    budget_count: int
    plan: MaskPlan
    candidates: list[tuple[int, float]]   # (gate id, score), ranking order
    before: TvlaReport
    after: TvlaReport
    mapped: dict
    reduction_percent: float
    overhead: OverheadReport
    origin_names: dict[str, str]
    timings: dict[str, float] = field(default_factory=dict)
    config_echo: dict = field(default_factory=dict)


def polaris_mask(netlist: Netlist, model, budget: MaskBudget,
                 rules: RuleSet | None = None,
                 acquisition: AcquisitionConfig | None = None,
                 locality: int | None = None,
                 rules_mode: str = "combined") -> tuple[Netlist, RunReport]:
    """Score, rank, mask, and re-measure one design.

    ``rules_mode``: "combined" lifts the score of rule-MASK gates to at
    least 0.99 and drops rule-DO_NOT_MASK gates; "rules_only" keeps only
    rule-MASK gates; "model_only" ignores the rules.
    """
    if locality is not None and locality != model.schema.locality:
        raise SchemaMismatchError(
            f"model was trained with locality {model.schema.locality}, got {locality}")
    if rules is not None and rules.schema != model.schema:
        raise SchemaMismatchError("rules schema disagrees with model schema")
    acq = acquisition or AcquisitionConfig()
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    before = leak_estimate(netlist, acq)
    timings["tvla_before"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    graph = graphify(netlist)
    candidates_ids = maskable_ids(netlist)
    L = model.schema.locality
    feats = np.stack([
        structural_features(graph, L, i, model.schema).values
        for i in candidates_ids
    ]) if candidates_ids else np.zeros((0, model.schema.feature_len), np.uint8)
    scores = predict_scores(model, feats) if candidates_ids else np.zeros(0)
    entries: list[tuple[int, float]] = []
    for k, gid in enumerate(candidates_ids):
        score = float(scores[k])
        if rules is not None and rules_mode != "model_only":
            verdict = apply_rules(rules, feats[k])
            if rules_mode == "rules_only":
                if verdict is not Decision.MASK:
                    continue
                score = 1.0
            elif verdict is Decision.DO_NOT_MASK:
                continue
            elif verdict is Decision.MASK:
                score = max(score, 0.99)
        entries.append((gid, score))
    entries.sort(key=lambda e: (-e[1], e[0]))
    timings["inference"] = time.perf_counter() - t0

    budget_count = budget.resolve(int(before.summary()["leaky_count"]))
    if budget_count > len(entries):
        warnings.warn(
            f"budget {budget_count} exceeds {len(entries)} candidates; clamping",
            BudgetExceedsCandidatesWarning)
        budget_count = len(entries)
    top = [gid for gid, _ in entries[:budget_count]]
    plan = MaskPlan(selected=tuple(sorted(top)), budget=budget_count)

    t0 = time.perf_counter()
    masked = modify(netlist, top)
    timings["modify"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    after = leak_estimate(masked, acq)
    timings["tvla_after"] = time.perf_counter() - t0

    mapped = mapped_report_stats(before, after, masked.origins)
    report = RunReport(
        design=netlist.name, budget=budget, budget_count=budget_count,
        plan=plan, candidates=entries, before=before, after=after,
        mapped=mapped, reduction_percent=mapped["reduction_percent"],
        overhead=overhead_estimate(netlist, masked, acq.power_model),
        origin_names=origin_map_names(masked), timings=timings,
        config_echo={"n_traces": acq.n_traces, "seed": acq.seed,
                     "threshold": acq.threshold, "locality": L,
                     "rules_mode": rules_mode if rules is not None else "model_only"},
    )
    return masked, report


def report_to_dict(report: RunReport, include_timings: bool = False) -> dict:
    d = {
        "design": report.design,
        "budget": {"mode": report.budget.mode.value, "value": report.budget.value,
                   "resolved_count": report.budget_count},
        "config": report.config_echo,
        "selection": {"ids": list(report.plan.selected),
                      "names": [report.before.names[i] for i in report.plan.selected]},
        "candidates": [{"id": gid, "name": report.before.names[gid],
                        "score": score} for gid, score in report.candidates],
        "before": report.before.to_dict(),
        "after": report.after.to_dict(),
        "mapped": report.mapped,
        "reduction_percent": report.reduction_percent,
        "overhead": report.overhead.to_dict(),
        "origin_map": report.origin_names,
    }
    if include_timings:
        d["timings"] = dict(report.timings)
    return d


def report_from_dict(d: dict) -> dict:
    """Light validation for stored report files; returns the dict itself."""
    for key in ("design", "budget", "before", "after", "mapped",
                "reduction_percent", "overhead"):
        if key not in d:
            raise ValueError(f"report file missing '{key}'")
    return d


def render_report_dict(d: dict) -> str:
    """Human-readable table for a stored or fresh report dict."""
    mapped = d["mapped"]
    ov = d["overhead"]["rendered"]
    lines = [
        f"design            : {d['design']}",
        f"budget            : {d['budget']['mode']} = {d['budget']['value']:g} "
        f"(masking {d['budget']['resolved_count']} gates)",
        f"selected gates    : {', '.join(d['selection']['names']) or '(none)'}",
        f"traces per group  : {d['before']['n_traces']}",
        "leakage (original gate universe, composites mapped to origin):",
        f"  mean |t| per gate : {mapped['mean_abs_t_before']:.4f} -> "
        f"{mapped['mean_abs_t_after']:.4f}",
        f"  leaky gates       : {mapped['leaky_before']} -> {mapped['leaky_after']}",
        f"  total leakage reduction : {d['reduction_percent']:.2f}%",
        "overhead (relative units):",
        f"  area  : {ov['area']}",
        f"  power : {ov['power']}",
        f"  delay : {ov['delay']}",
        f"protected after masking : "
        f"{'yes (99.999% confidence)' if d['after']['summary']['protected'] else 'no'}",
    ]
    return "\n".join(lines) + "\n"


def report_render(report: RunReport) -> str:
    """Deterministic text rendering (timings are rendered separately)."""
    return render_report_dict(report_to_dict(report))


def render_timings(timings: dict[str, float]) -> str:
    order = ("tvla_before", "inference", "modify", "tvla_after")
    lines = ["stage wall-clock (s):"]
    for stage in order:
        if stage in timings:
            lines.append(f"  {stage:<12}: {timings[stage]:.3f}")
    for stage, v in timings.items():
        if stage not in order:
            lines.append(f"  {stage:<12}: {v:.3f}")
    return "\n".join(lines) + "\n"


def report_json(report: RunReport, include_timings: bool = False) -> str:
    return json.dumps(report_to_dict(report, include_timings=include_timings),
                      indent=2, sort_keys=True) + "\n"
