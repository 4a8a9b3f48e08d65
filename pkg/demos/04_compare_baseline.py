"""
Does inspection history help?
=============================

The same split and training budget for the LSTM and for a feed-forward
network that only sees the latest inspection, on two kinds of fleets:
one whose labels depend on how fast assets degrade, and one whose labels
are fixed by the last snapshot alone.
"""

from asset_health.cli import run_compare
from asset_health.dataset import pole_like, synthesize
from asset_health.metrics import format_table
from asset_health.training import TrainConfig

cfg = TrainConfig(epochs=300, seed=0)
for title, rate_weight, noise in (("trend matters", 0.8, 0.05), ("snapshot only", 0.0, 0.0)):
    fleet = synthesize(pole_like(n_assets=1000, timesteps=3, rate_weight=rate_weight, noise=noise), seed=0)
    lstm, fnn, *_ = run_compare(fleet, None, (10, 10), cfg, 0.2, 0)
    print(f"== {title}")
    print(format_table([("LSTM", lstm), ("FNN", fnn)]))
    print(f"delta MP {lstm.mp - fnn.mp:+.3f}  delta MR {lstm.mr - fnn.mr:+.3f}\n")
