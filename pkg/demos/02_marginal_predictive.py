"""
Simulating the marginal predictive
==================================

Sample y_1..y_T from the model many times with the latent-path sampler and
with the chained negative binomial sampler, and compare both to the exact
mean, variance and zero probability.
"""

import numpy as np

from pgss import ModelSpec, build_ensemble, summarize
from pgss.analytics import variance_track, zero_prob_sequence

spec = ModelSpec(6.5, 1.2, 0.75)
T, N = 100, 20_000

exact_var = variance_track(spec, T).var_y
exact_zero = zero_prob_sequence(spec, T)

for sampler in ("path", "chain"):
    s = summarize(build_ensemble(spec, T, N, base_seed=3, sampler=sampler))
    print(f"\nsampler = {sampler}")
    print("  t   mean   var (exact)        zero rate (exact)   median  q90")
    for t in (1, 5, 20, 50, 100):
        i = t - 1
        print(f"{t:3d}  {s.mean[i]:5.2f}  {s.variance[i]:6.2f} ({exact_var[i]:6.2f})  "
              f"{s.zero_rate[i]:.4f} ({exact_zero[i]:.4f})    {s.quantiles[0.5][i]:4d}  {s.quantiles[0.9][i]:4d}")

# Same seed, same numbers, no matter how the work is split.
a = build_ensemble(spec, 20, 5000, 9).counts
b = build_ensemble(spec, 20, 5000, 9, n_jobs=2, chunk_size=1000).counts
print("\nidentical under threading:", np.array_equal(a, b))
