"""
Filtering a count series
========================

Run the conjugate forward filter over a short series of counts, look at the
one-step negative binomial predictive at each step, and then forecast past
the end of the data.
"""

import numpy as np

from pgss import ModelSpec, filter_series, one_step_predictive
from pgss.harness import ObservedSeries, run_filter

spec = ModelSpec(a0=6.5, b0=1.2, gamma=0.75)
counts = [4, 7, 3, 0, 0, 2, 9, 5]

# The filter state is Gamma(a_t, b_t); b_t does not depend on the data.
states = filter_series(spec, counts)
for prev, post, y in zip(states[:-1], states[1:], counts):
    pred = one_step_predictive(prev, spec)
    print(f"t={post.t}  y={y}  predicted mean={pred.mean:6.3f}  "
          f"80% interval=[{pred.quantile(0.1)}, {pred.quantile(0.9)}]  "
          f"posterior=Gamma({post.a:.3f}, {post.b:.3f})")

# Forecasting restarts the model from the last posterior.
report = run_filter(ObservedSeries(np.array(counts)), spec, h=10, replicates=20_000, seed=1)
fc = report.forecast
print("\nh  mean(MC)  analytic mean  analytic var  P[y=0]")
for row in zip(fc["h"], fc["mean"], fc["analytic_mean"], fc["analytic_var"], fc["exact_zero_prob"]):
    print("{:2d}  {:7.3f}  {:13.3f}  {:12.3f}  {:6.4f}".format(*row))
