"""
Age of an allele in a Wright-Fisher population
==============================================

A new mutation enters as a single copy. Today it is seen at some count. The
elapsed time between those two observations, conditioned on the allele
never returning to the observed count afterwards, is its age.
"""
import time

import numpy as np

from absorbtime import WrightFisherParams, allele_age

# neutral drift: the expected age grows with the observed count
p = WrightFisherParams(N=50)
for k in (1, 5, 10, 25, 50, 90):
    res = allele_age(p, k)
    print(f"N=50 neutral  count {k:3d}: age {res.expected_age:8.3f}  "
          f"sd {np.sqrt(res.age_variance):8.3f}")

# positive selection shortens the age of a common allele
for s in (0.0, 0.01, 0.05):
    res = allele_age(WrightFisherParams(N=50, s=s, h=0.5), 50)
    print(f"s = {s:<5}  count 50: age {res.expected_age:.3f}")

# the distribution of the age, for a small population
res = allele_age(WrightFisherParams(N=5, s=0.02), 3, distribution=True, tail=1e-10)
cdf = np.cumsum(res.distribution)
print("median age (N=5, count 3):", int(np.searchsorted(cdf, 0.5)) + 1)

# a larger population; the (2N+1) x (2N+1) matrix is dense
start = time.perf_counter()
res = allele_age(WrightFisherParams(N=200, s=0.01), 40)
print(f"N=200 count 40: age {res.expected_age:.3f} ({time.perf_counter() - start:.2f} s)")
