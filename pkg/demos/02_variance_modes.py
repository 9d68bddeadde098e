"""
Three ways to get the variance
==============================

The printed closed forms for V(T) and for the recurrence moments of the
target state do not agree with simulation. This script puts the printed
formulas, a truncated series and the corrected closed form side by side and
lets a Monte Carlo run decide.
"""
from pathlib import Path

from absorbtime import (
    ElapsedQuery,
    SimConfig,
    load_matrix,
    passage_summary,
    simulate_elapsed,
    simulate_recurrence,
    variance_elapsed,
)
from absorbtime.oracle import random_corpus

P = load_matrix(Path(__file__).parent / "data" / "worked_example.csv")
ps = passage_summary(P, 2)

est = simulate_elapsed(P, 1, 2, SimConfig(seed=42, trajectories=1_000_000))
print(f"simulated: mean {est.mean:.5f} +- {est.se_mean:.5f}, "
      f"variance {est.variance:.5f} +- {est.se_variance:.5f}")

for mode in ("paper", "series", "corrected"):
    m = variance_elapsed(ps, ElapsedQuery(1, 2, mode))
    print(f"{mode:>9}: V = {m.variance:.10f}  z = {est.z_variance(m.variance):+8.2f}")

# 4744/375 from the printed formula is about 12.65; the data say 16/9

# The recurrence moments tau_jj, v_jj only differ between the two readings
# when the successors of j hit j with different probabilities.
for P, _, j in random_corpus(20240611, 200):
    ps = passage_summary(P, j)
    hits = {round(ps.H[k], 6) for k in ps.H if P.entries[j, k] > 0 and ps.H[k] > 0}
    if len(hits) >= 3 and 0.2 < ps.Hjj < 0.9:
        break

rec = simulate_recurrence(P, j, SimConfig(seed=6, trajectories=200_000))
print(f"\nreturn time to state {j} of a {P.n}-state chain (H_jj = {ps.Hjj:.3f})")
print(f"simulated: tau {rec.mean:.4f}, v {rec.variance:.4f}")
for mode, r in ps.recurrence.items():
    print(f"{mode:>9}: tau {r.tau:.4f} (z {rec.z_mean(r.tau):+7.1f}), "
          f"v {r.var:.4f} (z {rec.z_variance(r.var):+7.1f})")
