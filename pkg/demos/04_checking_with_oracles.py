"""
Checking analytic answers against two oracles
=============================================

Exact enumeration of P(T = t) gives mean and variance with a rigorous
truncation bound; Monte Carlo gives an independent noisy estimate. Both
are run here on random absorbing chains.
"""
import numpy as np

from absorbtime import (
    ElapsedQuery,
    SimConfig,
    enumerate_elapsed,
    passage_summary,
    simulate_elapsed,
    variance_elapsed,
)
from absorbtime.oracle import random_corpus

rows = []
for P, i, j in random_corpus(7, 12):
    m = variance_elapsed(passage_summary(P, j), ElapsedQuery(i, j))
    en = enumerate_elapsed(P, i, j, tail=1e-12)
    est = simulate_elapsed(P, i, j, SimConfig(seed=1, trajectories=50_000))
    rows.append((
        P.n, i, j, m.expectation, m.variance,
        abs(m.expectation - en.mean) <= en.mean_bound,
        est.z_mean(m.expectation), est.z_variance(m.variance),
    ))

print(" n  i  j      E(T)        V(T)  enum ok   z(E)   z(V)")
for n, i, j, e, v, ok, ze, zv in rows:
    print(f"{n:2d} {i:2d} {j:2d} {e:9.4f} {v:11.4f}  {str(ok):>7} {ze:+6.2f} {zv:+6.2f}")

z = np.array([r[6:] for r in rows])
print("largest |z|:", np.abs(z).max().round(2))

# the same seed gives the same estimate whatever the thread count
P, i, j = random_corpus(7, 1)[0]
a = simulate_elapsed(P, i, j, SimConfig(seed=3, trajectories=100_000))
b = simulate_elapsed(P, i, j, SimConfig(seed=3, trajectories=100_000, workers=4))
print("identical across workers:", a == b)
