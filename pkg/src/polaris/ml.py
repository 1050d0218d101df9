"""Self-contained training and inference for the masking classifier.

The primary model is AdaBoost over decision stumps on binary features.  Each
round picks the (feature, polarity) pair with the smallest weighted error
(ties: lowest feature index, then positive polarity), votes it with
alpha = 0.5 ln((1 - eps) / eps), and reweights samples through an exponential
update shrunk by the learning rate nu.  Training rows are canonicalized
(sorted) first, so the result is exactly invariant to sample order.

A bagged random forest with optional SMOTE oversampling is provided as the
secondary option; both models serialize to versioned JSON and predict
probabilities in [0, 1] (logistic margin for the boost, positive-vote
fraction for the forest).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import (
    CorruptFileError,
    DegenerateDatasetError,
    SchemaMismatchError,
    TooFewSamplesError,
    VersionUnsupportedError,
)
from .graph import FeatureSchema, FeatureVector

MODEL_FILE_VERSION = 1


@dataclass(frozen=True)
class Stump:
    feature: int
    polarity: int  # +1: predict +1 when bit is 1; -1: predict +1 when bit is 0
    alpha: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        s = 2 * X[:, self.feature].astype(np.int64) - 1
        return self.polarity * s


@dataclass(frozen=True)
class TrainConfig:
    rounds: int = 200
    nu: float = 0.01
    class_weight: str = "balanced"  # or "none"
    smote_k: int = 5
    smote_ratio: float = 1.0
    n_trees: int = 50
    max_depth: int = 8
    seed: int = 0

    def to_dict(self) -> dict:
        return {"rounds": self.rounds, "nu": self.nu,
                "class_weight": self.class_weight, "smote_k": self.smote_k,
                "smote_ratio": self.smote_ratio, "n_trees": self.n_trees,
                "max_depth": self.max_depth, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass
class AdaBoostModel:
    schema: FeatureSchema
    stumps: list[Stump]
    nu: float = 0.01
    offset: float = 0.0
    train_config: TrainConfig | None = None
    dataset_digest: str = ""
    history: dict = field(default_factory=dict)

    kind = "adaboost"

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        m = np.full(X.shape[0], self.offset, dtype=float)
        for st in self.stumps:
            m += self.nu * st.alpha * st.predict(X)
        return m


@dataclass
class TreeNode:
    feature: int = -1           # -1 marks a leaf
    vote: float = 0.5           # leaf probability of class 1
    left: "TreeNode | None" = None   # bit == 0 branch
    right: "TreeNode | None" = None  # bit == 1 branch

    def predict_row(self, x: np.ndarray) -> float:
        node = self
        while node.feature >= 0:
            node = node.right if x[node.feature] else node.left
        return node.vote

    def to_dict(self) -> dict:
        if self.feature < 0:
            return {"vote": self.vote}
        return {"feature": self.feature, "left": self.left.to_dict(),
                "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "feature" not in d:
            return cls(vote=float(d["vote"]))
        return cls(feature=int(d["feature"]),
                   left=cls.from_dict(d["left"]), right=cls.from_dict(d["right"]))


@dataclass
class RandomForestModel:
    schema: FeatureSchema
    trees: list[TreeNode]
    train_config: TrainConfig | None = None
    dataset_digest: str = ""
    oob_error: float | None = None

    kind = "random_forest"


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.array(sorted(range(len(y)),
                           key=lambda i: (X[i].tobytes(), int(y[i]))))


def _check_schema(model, n_features: int) -> None:
    if n_features != model.schema.feature_len:
        raise SchemaMismatchError(
            f"model expects {model.schema.feature_len} features, got {n_features}")


def _initial_weights(y_pm: np.ndarray, mode: str) -> np.ndarray:
    n = len(y_pm)
    if mode == "balanced":
        n_pos = int((y_pm > 0).sum())
        n_neg = n - n_pos
        w = np.where(y_pm > 0, 1.0 / (2 * n_pos), 1.0 / (2 * n_neg))
    else:
        w = np.full(n, 1.0 / n)
    return w


def train_adaboost(dataset, cfg: TrainConfig | None = None) -> AdaBoostModel:
    """Boosted decision stumps; deterministic and sample-order invariant."""
    cfg = cfg or TrainConfig()
    X, y01 = dataset.matrix()
    if len(set(y01.tolist())) < 2:
        raise DegenerateDatasetError("both classes must be present")
    order = _canonical_order(X, y01)
    X, y01 = X[order], y01[order]
    y = 2 * y01.astype(np.int64) - 1
    Xf = X.astype(float)
    w = _initial_weights(y, cfg.class_weight)
    d = X.shape[1]

    stumps: list[Stump] = []
    eps_hist: list[float] = []
    bound_hist: list[float] = []
    bound = 1.0
    for _ in range(cfg.rounds):
        wpos = np.where(y > 0, w, 0.0) @ Xf   # +1-class weight with bit 1
        wneg = np.where(y < 0, w, 0.0) @ Xf
        total_pos = float(w[y > 0].sum())
        err = np.empty(2 * d)
        err[0::2] = (total_pos - wpos) + wneg   # predict +1 on bit 1
        err[1::2] = 1.0 - err[0::2]             # opposite polarity
        best = int(np.argmin(err))
        eps = max(float(err[best]), 0.0)  # guard float cancellation below 0
        if eps >= 0.5 - 1e-9:
            break
        feature, polarity = best // 2, (1 if best % 2 == 0 else -1)
        alpha = 0.5 * math.log((1.0 - eps) / max(eps, 1e-12))
        st = Stump(feature, polarity, alpha)
        stumps.append(st)
        eps_hist.append(eps)
        bound *= 2.0 * math.sqrt(eps * (1.0 - eps))
        bound_hist.append(bound)
        if eps <= 1e-9:
            break
        w = w * np.exp(-cfg.nu * alpha * y * st.predict(X))
        w = w / w.sum()

    return AdaBoostModel(
        schema=dataset.schema, stumps=stumps, nu=cfg.nu, offset=0.0,
        train_config=cfg, dataset_digest=dataset.digest(),
        history={"eps": eps_hist, "loss_bound": bound_hist})


def smote(minority: np.ndarray, k: int, ratio: float,
          gen: np.random.Generator) -> np.ndarray:
    """Synthetic minority rows by rounded per-coordinate interpolation.

    Each synthetic point blends a random minority row with one of its k
    Hamming-nearest minority neighbors, using an independent uniform mixing
    coefficient per coordinate, then rounds back to {0, 1}.
    """
    minority = np.atleast_2d(np.asarray(minority, dtype=np.uint8))
    n = len(minority)
    if n <= k:
        raise TooFewSamplesError(f"need more than k={k} minority samples, have {n}")
    count = math.ceil(ratio * n)
    if count <= 0:
        return np.empty((0, minority.shape[1]), dtype=np.uint8)
    dist = (minority[:, None, :] != minority[None, :, :]).sum(axis=2)
    np.fill_diagonal(dist, dist.max() + 1)
    neighbors = np.argsort(dist, axis=1, kind="stable")[:, :k]
    out = np.empty((count, minority.shape[1]), dtype=np.uint8)
    for s in range(count):
        i = int(gen.integers(n))
        j = int(neighbors[i, int(gen.integers(k))])
        lam = gen.random(minority.shape[1])
        mixed = minority[i] + lam * (minority[j].astype(float) - minority[i])
        out[s] = np.rint(mixed).astype(np.uint8)
    return out


def _grow_tree(X, y01, idx, depth, max_depth, n_feats, gen) -> TreeNode:
    ys = y01[idx]
    p1 = float(ys.mean()) if len(ys) else 0.5
    if depth >= max_depth or len(idx) < 2 or p1 in (0.0, 1.0):
        return TreeNode(vote=p1)
    feats = np.sort(gen.choice(X.shape[1], size=n_feats, replace=False))
    best_f, best_gini = -1, None
    for f in feats:
        bits = X[idx, f]
        n1 = int(bits.sum())
        n0 = len(idx) - n1
        if n0 == 0 or n1 == 0:
            continue
        p_l = float(y01[idx[bits == 0]].mean())
        p_r = float(y01[idx[bits == 1]].mean())
        gini = (n0 * 2 * p_l * (1 - p_l) + n1 * 2 * p_r * (1 - p_r)) / len(idx)
        if best_gini is None or gini < best_gini - 1e-15:
            best_f, best_gini = int(f), gini
    if best_f < 0:
        return TreeNode(vote=p1)
    bits = X[idx, best_f]
    return TreeNode(
        feature=best_f,
        left=_grow_tree(X, y01, idx[bits == 0], depth + 1, max_depth, n_feats, gen),
        right=_grow_tree(X, y01, idx[bits == 1], depth + 1, max_depth, n_feats, gen),
    )


def train_random_forest(dataset, cfg: TrainConfig | None = None,
                        use_smote: bool = True) -> RandomForestModel:
    """Bagged Gini trees with SMOTE oversampling of the minority class."""
    cfg = cfg or TrainConfig()
    X, y01 = dataset.matrix()
    if len(set(y01.tolist())) < 2:
        raise DegenerateDatasetError("both classes must be present")
    order = _canonical_order(X, y01)
    X, y01 = X[order], y01[order]
    if use_smote and cfg.smote_ratio > 0:
        minority_label = int(np.bincount(y01, minlength=2).argmin())
        minority = X[y01 == minority_label]
        if len(minority) > cfg.smote_k:
            gen = rng.generator(cfg.seed, 0x5A)
            synth = smote(minority, cfg.smote_k, cfg.smote_ratio, gen)
            if len(synth):
                X = np.vstack([X, synth])
                y01 = np.concatenate([y01, np.full(len(synth), minority_label)])
    n = len(y01)
    n_feats = max(1, int(math.sqrt(X.shape[1])))
    trees: list[TreeNode] = []
    oob_votes = np.zeros(n)
    oob_counts = np.zeros(n, dtype=int)
    for t in range(cfg.n_trees):
        gen = rng.generator(cfg.seed, 0x7E, t)
        bag = gen.integers(0, n, size=n)
        tree = _grow_tree(X, y01, np.asarray(bag), 0, cfg.max_depth, n_feats, gen)
        trees.append(tree)
        oob = np.setdiff1d(np.arange(n), bag, assume_unique=False)
        for i in oob:
            oob_votes[i] += tree.predict_row(X[i])
            oob_counts[i] += 1
    covered = oob_counts > 0
    oob_error = None
    if covered.any():
        oob_pred = (oob_votes[covered] / oob_counts[covered]) >= 0.5
        oob_error = float((oob_pred != (y01[covered] == 1)).mean())
    return RandomForestModel(schema=dataset.schema, trees=trees,
                             train_config=cfg, dataset_digest=dataset.digest(),
                             oob_error=oob_error)


def predict_scores(model, X: np.ndarray) -> np.ndarray:
    """Probability-like scores in [0, 1] for a batch of feature rows."""
    X = np.atleast_2d(np.asarray(X, dtype=np.uint8))
    _check_schema(model, X.shape[1])
    if isinstance(model, AdaBoostModel):
        return 1.0 / (1.0 + np.exp(-model.margin(X)))
    votes = np.zeros(X.shape[0])
    for tree in model.trees:
        votes += np.array([1.0 if tree.predict_row(row) >= 0.5 else 0.0
                           for row in X])
    return votes / len(model.trees)


def predict_score(model, x) -> float:
    """Score for a single FeatureVector or feature row."""
    values = x.values if isinstance(x, FeatureVector) else np.asarray(x)
    return float(predict_scores(model, values.reshape(1, -1))[0])


# --- persistence ---

def _model_dict(model) -> dict:
    base = {
        "version": MODEL_FILE_VERSION,
        "kind": model.kind,
        "schema": model.schema.to_dict(),
        "train_config": model.train_config.to_dict() if model.train_config else None,
        "dataset_digest": model.dataset_digest,
    }
    if isinstance(model, AdaBoostModel):
        base["nu"] = model.nu
        base["offset"] = model.offset
        base["stumps"] = [[s.feature, s.polarity, s.alpha] for s in model.stumps]
        base["history"] = model.history
    else:
        base["trees"] = [t.to_dict() for t in model.trees]
        base["oob_error"] = model.oob_error
    return base


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_model_dict(model), indent=2, sort_keys=True) + "\n")


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CorruptFileError(f"cannot decode model file: {e}") from e
    try:
        version = d["version"]
        if version > MODEL_FILE_VERSION:
            raise VersionUnsupportedError(f"model file version {version} is newer "
                                          f"than supported {MODEL_FILE_VERSION}")
        schema = FeatureSchema.from_dict(d["schema"])
        tc = TrainConfig.from_dict(d["train_config"]) if d.get("train_config") else None
        if d["kind"] == "adaboost":
            return AdaBoostModel(
                schema=schema,
                stumps=[Stump(int(f), int(p), float(a)) for f, p, a in d["stumps"]],
                nu=float(d["nu"]), offset=float(d["offset"]),
                train_config=tc, dataset_digest=d.get("dataset_digest", ""),
                history=d.get("history", {}))
        if d["kind"] == "random_forest":
            return RandomForestModel(
                schema=schema,
                trees=[TreeNode.from_dict(t) for t in d["trees"]],
                train_config=tc, dataset_digest=d.get("dataset_digest", ""),
                oob_error=d.get("oob_error"))
        raise CorruptFileError(f"unknown model kind '{d['kind']}'")
    except VersionUnsupportedError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptFileError(f"malformed model file: {e}") from e
