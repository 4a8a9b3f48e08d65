"""
Training the sequence classifier
================================

A stacked LSTM reads each asset's inspection history and predicts its
health index H1..H5 (H5 = as new, H1 = imminent failure).
"""

from asset_health import metrics
from asset_health.dataset import pole_like, split_train_test, synthesize
from asset_health.features import fit_pipeline
from asset_health.network import ClassifierConfig
from asset_health.training import TrainConfig, train

# Labels depend on the degradation rate as well as the latest condition
fleet = synthesize(pole_like(n_assets=1000, timesteps=3, rate_weight=0.8, noise=0.05), seed=0)
train_ds, test_ds = split_train_test(fleet, 0.2, seed=0)

pipe = fit_pipeline(train_ds)
X = pipe.transform(train_ds)
model_cfg = ClassifierConfig(pipe.out_width, fleet.T, (10, 10))
tm = train(model_cfg, X, train_ds.labels, TrainConfig(epochs=200, seed=0), pipe)

for h in tm.history[:: max(1, len(tm.history) // 8)]:
    print(f"epoch {h['epoch']:4d}  train {h['train_loss']:.3f}  val {h['val_loss']:.3f}  val MP {h['val_mp']:.3f}")
print("chosen epoch", tm.chosen_epoch)

rep = metrics.report(tm.model, pipe, test_ds)
print(rep.to_text("LSTM"))
