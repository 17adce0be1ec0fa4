"""
Mass piling up at zero
======================

The probability of a zero count rises to one with the horizon, for every
starting point. This script evaluates it exactly and finds how long the
climb takes for a few discount factors.
"""

from pgss import ModelSpec, first_crossing, zero_prob_sequence
from pgss.analytics import fixed_point_lower_bound, pgf, pgf_unit, scan_fixed_point_gap

spec = ModelSpec(6.5, 1.2, 0.75)
p = zero_prob_sequence(spec, 2000)
for t in (1, 10, 50, 200, 1000, 2000):
    print(f"P[y_{t} = 0] = {p[t - 1]:.6f}")

# The shape parameter only enters as an exponent.
print("\npgf(0.5, 20) =", pgf(0.5, 20, spec), "=", pgf_unit(0.5, 20, 1.2, 0.75) ** 6.5)

print("\ngamma  b0=b*: lower bound  first t with P[y_t=0] > 0.99 (a0=1)")
for g in (0.3, 0.5, 0.75, 0.9):
    fixed = ModelSpec(1.0, 1 / (1 - g), g)
    gap = scan_fixed_point_gap(g)
    print(f"{g:5.2f}  {fixed_point_lower_bound(g):.6f}  {first_crossing(fixed, 0.99):8d}"
          f"   (fixed-point gap positive: {gap.ok})")
