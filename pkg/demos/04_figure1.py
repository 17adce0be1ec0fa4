"""
The long-run predictive picture
===============================

Reproduce the four displays of the long-horizon experiment: the mean,
median and 10%/90% quantiles over t, the largest draw, the rate of zeros,
and histograms at t = 50 and t = 200. Data files are written to
./figure1_output; a plot is drawn when matplotlib is available.
"""

from pathlib import Path

from pgss import ModelSpec
from pgss.harness import ExperimentConfig, run_figure1

cfg = ExperimentConfig(seed=1, spec=ModelSpec(6.5, 1.2, 0.75), horizon=2000, replicates=50_000,
                       output_dir=Path("figure1_output"))
res = run_figure1(cfg)
c = res.columns
print("written:", *res.paths, sep="\n  ")
print(f"q50 first 0 at t={int((c['q50'] == 0).argmax()) + 1}, q90 first 0 at t={int((c['q90'] == 0).argmax()) + 1}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit(0)

fig, ax = plt.subplots(3, 2, figsize=(10, 10))
for a in ax[0]:
    a.plot(c["t"], c["mean"], "k", lw=0.7)
    a.plot(c["t"], c["q50"], "r")
    a.plot(c["t"], c["q10"], "b")
    a.plot(c["t"], c["q90"], "b")
ax[0, 1].set_xlim(0, 200)
ax[1, 0].plot(c["t"], c["max"])
ax[1, 0].set_title("largest draw")
ax[1, 1].plot(c["t"], c["zero_rate"], label="simulated")
ax[1, 1].plot(c["t"], c["exact_zero_prob"], "--", label="exact")
ax[1, 1].legend()
for a, h in zip(ax[2], (50, 200)):
    values, freq = res.histograms[h]
    a.bar(values, freq, width=1.0)
    a.set_title(f"t = {h}")
fig.tight_layout()
fig.savefig("figure1_output/figure1.png", dpi=120)
