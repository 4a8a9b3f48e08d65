"""
Turning inspection records into features
========================================

A fleet of synthetic wood-pole-like assets, encoded into numeric rows.
"""

import numpy as np

from asset_health import features as F
from asset_health.dataset import pole_like, synthesize

# A small fleet: 2 inspections ten years apart, mild measurement noise
fleet = synthesize(pole_like(n_assets=200, noise=0.05), seed=1)
first = fleet.histories[0]
for rec in first.records:
    print(rec.inspection_time, rec.service_age, dict(rec.values))

# Ordered ratings become evenly spaced points inside (0, 1)
print([round(F.encode_ordered(i, 3), 3) for i in (1, 2, 3)])

# Unordered categories become dummy (one-hot) columns
print(F.encode_unordered(2, 3))

# The pipeline learns level maps and min-max bounds from the training fleet
pipe = F.fit_pipeline(fleet)
print(pipe.columns)
X = pipe.transform(fleet).values
print("tensor", X.shape, "range", X.min(), X.max())

# Values outside the training range are clamped
print(F.apply_minmax(150.0, *pipe.minmax_bounds["ground_circumference"]))
print(np.round(X[0], 3))
