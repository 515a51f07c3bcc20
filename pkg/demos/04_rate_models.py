"""
Predicting the data rate from radio context
===========================================

Transmissions are joined with the nearest radio context to form labeled
samples, then four learners compete under 10-fold cross-validation: a
linear baseline, a single regression tree, a random forest, and a model
tree that trades leaves for per-leaf linear models.  Feature importance
says which of the nine context features carried the signal.
"""

from pathlib import Path

from drivecast.evaluate import cross_validate, mdi
from drivecast.learn import (Dataset, fit_cart, fit_forest, fit_linear,
                             fit_m5, leaf_count, load_model, save_model)
from drivecast.synth import SynthConfig, synth_trace
from drivecast.trace import FEATURE_NAMES, join_samples

OUT = Path(__file__).parent / "out" / "models-demo"
OUT.mkdir(parents=True, exist_ok=True)

result = synth_trace(SynthConfig(duration=2400.0, cadence=4.0,
                                 noise_sd=0.05, seed=11))
joined = join_samples(result.trace)
data = Dataset.from_samples(joined.samples)
print(f"samples: {data.n}, features: {data.d}")

# Cross-validated fit quality.  The forest should lead, the model tree
# should land close behind with far fewer leaves, and the linear
# baseline marks the floor a nonlinear learner has to beat.
learners = ["linear", "cart", "rf", "m5"]
print("\n10-fold cross-validation")
for name in learners:
    rep = cross_validate(name, data, k=10, seed=0)
    print(f"  {name:>7}: R^2 = {rep.r2:.3f}, MAE = {rep.mae:.3f}")

# Model size: leaves of a single tree vs the whole forest.
cart = fit_cart(data)
rf = fit_forest(data, seed=0)
m5 = fit_m5(data)
print(f"\nleaves: cart = {leaf_count(cart)}, m5 = {leaf_count(m5)}, "
      f"forest (all trees) = {leaf_count(rf)}")

# Which features did the forest actually use?
scores = mdi(rf)
ranked = sorted(zip(FEATURE_NAMES, scores), key=lambda t: -t[1])
print("\nforest importance (mean decrease in impurity)")
for name, s in ranked:
    print(f"  {name:>8}: {s:.3f}")

# Models serialize to JSON and come back predicting bit-identically.
path = OUT / "forest.json"
save_model(rf, path)
back = load_model(path)
same = (rf.predict(data) == back.predict(data)).all()
print(f"\nsaved {path.name}, round-trip predictions identical: {same}")
