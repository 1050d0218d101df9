"""Shapley-value attribution, rule extraction, and textual waterfalls.

Attributions use the interventional value function: the worth of a feature
coalition is the mean model score over the background set with all features
outside the coalition replaced by background values.  For stump ensembles
this has a closed form (each stump contributes only through its own feature),
which ``shap_additive`` exploits; ``shap_exact_enum`` evaluates the weighted
sum over all coalitions directly and serves as the oracle, and
``shap_sampled`` estimates it from antithetic permutation pairs with a
standard error per feature.

Explanations are computed on the margin scale, where additivity is exact:
base + sum(phi) equals the model margin to machine precision.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import rng
from .errors import CorruptFileError, SchemaMismatchError, TooManyFeaturesError
from .graph import FeatureSchema, FeatureVector, feature_semantics
from .ml import AdaBoostModel, predict_scores


@dataclass
class ShapExplanation:
    sample: np.ndarray
    base: float
    phis: np.ndarray
    fx: float


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, FeatureVector) else np.asarray(x)


def shap_exact_enum(score_fn, x, background, active=None) -> np.ndarray:
    """Exact Shapley values by full coalition enumeration.

    ``score_fn`` maps a (m, d) batch to m scores.  ``active`` restricts
    attribution to at most 20 feature indices (others stay fixed at the
    sample's values and receive zero attribution).
    """
    x = _values(x).astype(np.uint8)
    background = np.atleast_2d(np.asarray(background, dtype=np.uint8))
    d = len(x)
    active = list(range(d)) if active is None else list(active)
    h = len(active)
    if h > 20:
        raise TooManyFeaturesError(f"{h} active features exceed the limit of 20")
    vals = np.empty(1 << h)
    for mask in range(1 << h):
        rows = np.tile(x, (len(background), 1))
        for pos, f in enumerate(active):
            if not mask & (1 << pos):
                rows[:, f] = background[:, f]
        vals[mask] = float(np.mean(score_fn(rows)))
    fact = [math.factorial(k) for k in range(h + 1)]
    phis = np.zeros(d)
    for pos, f in enumerate(active):
        bit = 1 << pos
        total = 0.0
        others = [p for p in range(h) if p != pos]
        for size in range(h):
            weight = fact[size] * fact[h - size - 1] / fact[h]
            for combo in combinations(others, size):
                g = 0
                for p in combo:
                    g |= 1 << p
                total += weight * (vals[g | bit] - vals[g])
        phis[f] = total
    return phis


def shap_additive(model: AdaBoostModel, x, background) -> ShapExplanation:
    """Closed-form Shapley values for a stump ensemble on the margin scale.

    Per stump on feature f the attribution is nu * alpha * (h(x) - E_bg[h]);
    this equals the exact coalition sum because the margin is additive over
    single-feature terms.
    """
    xv = _values(x).astype(np.uint8)
    if len(xv) != model.schema.feature_len:
        raise SchemaMismatchError(
            f"sample has {len(xv)} features, model expects {model.schema.feature_len}")
    background = np.atleast_2d(np.asarray(background, dtype=np.uint8))
    phis = np.zeros(model.schema.feature_len)
    base = model.offset
    row = xv.reshape(1, -1)
    for st in model.stumps:
        contrib_x = model.nu * st.alpha * float(st.predict(row)[0])
        contrib_bg = model.nu * st.alpha * float(st.predict(background).mean())
        phis[st.feature] += contrib_x - contrib_bg
        base += contrib_bg
    fx = float(model.margin(row)[0])
    return ShapExplanation(sample=xv, base=base, phis=phis, fx=fx)


def shap_sampled(score_fn, x, background, n_perms: int, seed: int = 0,
                 active=None) -> tuple[np.ndarray, np.ndarray]:
    """Antithetic permutation estimate of the Shapley values.

    Draws ``n_perms`` random feature orders; each order and its reverse
    contribute one averaged marginal-contribution vector.  Returns
    (phi, standard error) per feature; the estimator is unbiased for the
    exact coalition sum.
    """
    if n_perms < 2:
        raise ValueError("n_perms must be >= 2")
    x = _values(x).astype(np.uint8)
    background = np.atleast_2d(np.asarray(background, dtype=np.uint8))
    d = len(x)
    active = list(range(d)) if active is None else list(active)
    h = len(active)
    cache: dict[int, float] = {}

    def val(mask: int) -> float:
        got = cache.get(mask)
        if got is not None:
            return got
        rows = np.tile(x, (len(background), 1))
        for pos, f in enumerate(active):
            if not mask & (1 << pos):
                rows[:, f] = background[:, f]
        out = float(np.mean(score_fn(rows)))
        cache[mask] = out
        return out

    def walk(order) -> np.ndarray:
        contrib = np.zeros(d)
        mask = 0
        prev = val(0)
        for pos in order:
            mask |= 1 << pos
            cur = val(mask)
            contrib[active[pos]] = cur - prev
            prev = cur
        return contrib

    pair_means = np.empty((n_perms, d))
    for k in range(n_perms):
        gen = rng.generator(seed, rng.DOMAIN_PERM, k)
        order = gen.permutation(h)
        pair_means[k] = 0.5 * (walk(order) + walk(order[::-1]))
    phi = pair_means.mean(axis=0)
    se = pair_means.std(axis=0, ddof=1) / math.sqrt(n_perms)
    return phi, se


# --- rules ---

class Decision(enum.Enum):
    MASK = "MASK"
    DO_NOT_MASK = "DO_NOT_MASK"
    NO_MATCH = "NO_MATCH"


@dataclass(frozen=True)
class Condition:
    feature: int
    negated: bool

    def matches(self, values: np.ndarray) -> bool:
        bit = int(values[self.feature])
        return bit == (0 if self.negated else 1)

    def render(self, schema: FeatureSchema) -> str:
        text = feature_semantics(schema, self.feature)
        if not self.negated:
            return text
        if " drives " in text:
            p, q = text.split(" drives ")
            return f"{p} and {q} are not connected"
        return text.replace(" = ", " ≠ ")


@dataclass(frozen=True)
class Rule:
    conditions: tuple[Condition, ...]
    procedure: Decision
    support: int
    mean_abs_phi: float

    def matches(self, values: np.ndarray) -> bool:
        return all(c.matches(values) for c in self.conditions)

    def render(self, schema: FeatureSchema) -> str:
        atoms = " && ".join(c.render(schema) for c in self.conditions)
        action = ("Select & Replace with masking gate"
                  if self.procedure is Decision.MASK else "Do not Mask")
        return f"As long as {atoms}: {action}"


@dataclass
class RuleSet:
    schema: FeatureSchema
    rules: list[Rule]

    def schema_digest(self) -> str:
        blob = json.dumps(self.schema.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_dict(self) -> dict:
        return {
            "schema_digest": self.schema_digest(),
            "schema": self.schema.to_dict(),
            "rules": [
                {"conditions": [
                    {"feature": c.feature, "negated": c.negated,
                     "text": c.render(self.schema)} for c in r.conditions],
                 "procedure": r.procedure.value,
                 "support": r.support,
                 "mean_abs_phi": r.mean_abs_phi}
                for r in self.rules
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RuleSet":
        schema = FeatureSchema.from_dict(d["schema"])
        rules = [
            Rule(conditions=tuple(Condition(int(c["feature"]), bool(c["negated"]))
                                  for c in r["conditions"]),
                 procedure=Decision(r["procedure"]),
                 support=int(r["support"]),
                 mean_abs_phi=float(r["mean_abs_phi"]))
            for r in d["rules"]
        ]
        return cls(schema=schema, rules=rules)


def save_rules(rs: RuleSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(rs.to_json())


def load_rules(path) -> RuleSet:
    try:
        with open(path, encoding="utf-8") as fh:
            return RuleSet.from_dict(json.load(fh))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise CorruptFileError(f"malformed rules file: {e}") from e


@dataclass(frozen=True)
class RuleExtractConfig:
    top_k: int = 5
    min_support: int = 10
    score_cutoff: float = 0.9
    quantile: float | None = None   # rank-based selection when set
    background_limit: int | None = None


def extract_rules(model: AdaBoostModel, dataset,
                  cfg: RuleExtractConfig | None = None) -> RuleSet:
    """Distill confident predictions into conjunctive masking rules.

    For every confidently scored sample the top_k features by |phi| become
    atoms (negated when the sample's bit is 0); identical conjunctions
    aggregate, support is the number of dataset samples that satisfy the
    conditions and carry the rule's class, and rules below min_support drop.
    Zero-attribution features never become atoms.
    """
    cfg = cfg or RuleExtractConfig()
    if dataset.schema != model.schema:
        raise SchemaMismatchError("dataset and model schemas differ")
    X, y = dataset.matrix()
    scores = predict_scores(model, X)
    n = len(scores)
    if cfg.quantile is not None:
        k = max(1, math.ceil(cfg.quantile * n))
        order = np.argsort(scores, kind="stable")
        mask_idx = list(order[-k:])
        dnm_idx = list(order[:k])
    else:
        mask_idx = [i for i in range(n) if scores[i] >= cfg.score_cutoff]
        dnm_idx = [i for i in range(n) if scores[i] <= 1.0 - cfg.score_cutoff]

    background = X
    if cfg.background_limit is not None and cfg.background_limit < n:
        pick = rng.generator(0xB6).choice(n, size=cfg.background_limit,
                                          replace=False)
        background = X[np.sort(pick)]

    groups: dict[tuple, dict] = {}
    for procedure, idxs in ((Decision.MASK, mask_idx),
                            (Decision.DO_NOT_MASK, dnm_idx)):
        for i in idxs:
            exp = shap_additive(model, X[i], background)
            abs_phi = np.abs(exp.phis)
            order = np.lexsort((np.arange(len(abs_phi)), -abs_phi))
            chosen = [int(f) for f in order[: cfg.top_k] if abs_phi[f] > 0]
            if not chosen:
                continue
            conds = tuple(sorted(
                (Condition(f, negated=bool(X[i, f] == 0)) for f in chosen),
                key=lambda c: (c.feature, c.negated)))
            key = (conds, procedure)
            g = groups.setdefault(key, {"phi_sum": 0.0, "count": 0})
            g["phi_sum"] += float(abs_phi[chosen].mean())
            g["count"] += 1

    rules = []
    for (conds, procedure), g in groups.items():
        sat = np.ones(n, dtype=bool)
        for c in conds:
            sat &= X[:, c.feature] == (0 if c.negated else 1)
        wanted = 1 if procedure is Decision.MASK else 0
        support = int((sat & (y == wanted)).sum())
        if support < cfg.min_support:
            continue
        rules.append(Rule(conditions=conds, procedure=procedure,
                          support=support,
                          mean_abs_phi=g["phi_sum"] / g["count"]))
    rules.sort(key=lambda r: (-r.support, -r.mean_abs_phi,
                              [(c.feature, c.negated) for c in r.conditions]))
    return RuleSet(schema=model.schema, rules=rules)


def apply_rules(rs: RuleSet, x) -> Decision:
    """First matching rule in sorted order wins; NO_MATCH otherwise."""
    values = _values(x)
    if len(values) != rs.schema.feature_len:
        raise SchemaMismatchError(
            f"sample has {len(values)} features, rules expect {rs.schema.feature_len}")
    for rule in rs.rules:
        if rule.matches(values):
            return rule.procedure
    return Decision.NO_MATCH


def waterfall_render(e: ShapExplanation, top_k: int = 5,
                     schema: FeatureSchema | None = None) -> str:
    """Textual waterfall: base, top_k signed bars, aggregated remainder, f(x)."""
    abs_phi = np.abs(e.phis)
    order = np.lexsort((np.arange(len(abs_phi)), -abs_phi))
    shown = [int(f) for f in order[:top_k] if abs_phi[f] > 0]
    rest = int((abs_phi > 0).sum()) - len(shown)
    shown_sum = float(e.phis[shown].sum()) if shown else 0.0
    remainder = e.fx - e.base - shown_sum
    peak = max((abs(float(e.phis[f])) for f in shown), default=0.0)

    def bar(v: float) -> str:
        width = 0 if peak == 0 else max(1, round(24 * abs(v) / peak))
        return ("+" if v >= 0 else "-") * width

    def label(f: int) -> str:
        if schema is None:
            return f"feature {f}"
        text = feature_semantics(schema, f)
        if e.sample[f]:
            return text
        return Condition(f, negated=True).render(schema)

    lines = ["prediction breakdown (margin scale)",
             f"  E[f(x)]  {e.base:+.9f}"]
    for f in shown:
        v = float(e.phis[f])
        lines.append(f"  {label(f):<34} {v:+.9f}  {bar(v)}")
    if rest > 0:
        noun = "other feature" if rest == 1 else "other features"
        lines.append(f"  {f'({rest} {noun})':<34} {remainder:+.9f}")
    lines.append(f"  f(x)     {e.fx:+.9f}")
    return "\n".join(lines) + "\n"
