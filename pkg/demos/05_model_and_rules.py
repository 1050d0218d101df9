"""Train the boosted-stump classifier, explain it, and extract rules.

The Shapley attributions of individual predictions distill into conjunctive
masking rules over the same vocabulary the features encode: gate types at
neighborhood positions and drive relations between them.

Run:  python demos/05_model_and_rules.py
"""

import numpy as np

from polaris import benchmarks
from polaris.datagen import DatagenConfig, cognition_generate
from polaris.ml import TrainConfig, predict_scores, train_adaboost
from polaris.xai import RuleExtractConfig, extract_rules, shap_additive, waterfall_render

designs = [benchmarks.load(n) for n in ("leaky1", "leaky2", "leaky3")]
dataset = cognition_generate(designs, DatagenConfig(
    m_size=4, locality=7, iters=8, traces=2000, seed=3))
model = train_adaboost(dataset, TrainConfig(rounds=200))
print(f"trained on {len(dataset.samples)} samples; "
      f"{len(model.stumps)} stump votes, learning rate {model.nu}")
print(f"first-round weighted errors: "
      f"{[round(e, 3) for e in model.history['eps'][:5]]}")

X, y = dataset.matrix()
scores = predict_scores(model, X)
acc = ((scores > 0.5).astype(int) == y).mean()
print(f"training accuracy: {acc:.2%}")
print()

top = int(np.argmax(scores))
sample = dataset.samples[top]
print(f"waterfall for the most mask-worthy sample "
      f"({sample.design} gate {sample.gate_id}, score {scores[top]:.3f}):")
print(waterfall_render(shap_additive(model, X[top], X), top_k=5,
                       schema=model.schema))

rules = extract_rules(model, dataset,
                      RuleExtractConfig(top_k=4, min_support=8, quantile=0.2))
print(f"{len(rules.rules)} extracted rule(s):")
for k, rule in enumerate(rules.rules):
    print(f"  [{k}] support={rule.support}  {rule.render(rules.schema)}")
