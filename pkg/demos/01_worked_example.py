"""
Elapsed time between two observations of a chain
================================================

A four-state chain with two absorbing boundaries (0 and 3). We observe the
process in state 1 and later in state 2, and ask how many steps separate the
two sightings when state 2 is the *last* one seen before absorption.
"""
from pathlib import Path

import numpy as np

from absorbtime import (
    ElapsedQuery,
    classify,
    distribution_of_elapsed,
    load_matrix,
    passage_summary,
    variance_elapsed,
)

P = load_matrix(Path(__file__).parent / "data" / "worked_example.csv")
print(P.entries)

# canonical form: transient block Q, absorbing block R, fundamental matrix N
cs = classify(P)
print("transient", cs.transient, "absorbing", cs.absorbing)
print("N =\n", cs.fundamental)

# first passage to 2, conditioned on getting there at all
ps = passage_summary(P, 2)
print("H_12 =", ps.H[1], " H_22 =", ps.Hjj)
print("tau_12 =", ps.tau[1], " v_12 =", ps.var[1])
print("tau_22 =", ps.tau_jj, " v_22 =", ps.v_jj)

# the only route 1 -> 2 is direct and the only return is 2 -> 1 -> 2, so
# T = 1 + 2G with G geometric(1/4): E = 5/3, V = 16/9
m = variance_elapsed(ps, ElapsedQuery(1, 2))
print("E(T) =", m.expectation, " V(T) =", m.variance)

# the full law of T; odd values only
pmf = distribution_of_elapsed(cs, ps, ElapsedQuery(1, 2, tmax=9))
for t, p in enumerate(pmf, start=1):
    print(f"P(T = {t}) = {p:.6f}")
print("mass shown:", np.round(pmf.sum(), 6))
