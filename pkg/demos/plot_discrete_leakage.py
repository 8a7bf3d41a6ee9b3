"""
Leakage of a discrete channel
=============================

Vulnerabilities, multiplicative leakage and Bayes' capacity of a small
channel, and what happens when a deterministic step runs first.
"""

import numpy as np

from bayescap.qif import (Channel, DeterministicChannel, GainFunction, Prior, bayes_capacity_discrete,
                          compose, identity_gain, mult_leakage, uniform_prior, v_post, v_prior)

# rows are secrets, columns are observations
M = Channel([[0.6, 0.4],
             [0.3, 0.7]])

pi = uniform_prior(2)
g = identity_gain(2)
print("V_prior        ", v_prior(pi, g))
print("V_post         ", v_post(pi, g, M))
print("leakage        ", mult_leakage(pi, g, M))
print("Bayes capacity ", bayes_capacity_discrete(M).value)

# capacity bounds leakage over every prior and gain function
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(1000):
    prior = Prior(rng.dirichlet([1, 1]))
    gain = GainFunction(rng.random((3, 2)) + 1e-3)
    worst = max(worst, mult_leakage(prior, gain, M))
print("largest leakage over 1000 random (prior, gain) pairs:", round(worst, 6))

# a deterministic, onto pre-processing step leaves the capacity unchanged
C = DeterministicChannel.from_mapping([0, 0, 1, 1, 0])
print("capacity of C.M", bayes_capacity_discrete(compose(C, M)).value)
