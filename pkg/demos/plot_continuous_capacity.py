"""
Capacity of the Gaussian and VMF noise channels
================================================

Closed forms checked against direct quadrature of the sup-density, then
evaluated at the size of the demo network, where only the log is finite.
"""

import math

from bayescap.capacity import (GaussianMechSpec, VmfMechSpec, capacity_oracle_gaussian, capacity_oracle_vmf,
                               gaussian_variants, log_bayes_capacity_gaussian, log_bayes_capacity_vmf,
                               select_gaussian_variant)

# two candidate coefficients exist for the tail term; quadrature picks one
print("selected tail coefficient:", select_gaussian_variant())

print("\n p  sigma  R   closed     oracle    literal")
for p in (1, 2, 3):
    for sigma, R in ((0.5, 1.0), (1.0, 1.0), (2.0, 2.0)):
        spec = GaussianMechSpec(p, sigma, R)
        closed = log_bayes_capacity_gaussian(spec).value
        oracle = capacity_oracle_gaussian(spec).value
        literal = math.exp(gaussian_variants(spec)["literal"])
        print(f"{p:2d} {sigma:5.1f} {R:4.1f} {closed:9.5f} {oracle:9.5f} {literal:9.5f}")

print("\n p  kappa   closed     oracle")
for p in (2, 3):
    for kappa in (0.1, 1.0, 20.0):
        spec = VmfMechSpec(p, kappa)
        print(f"{p:2d} {kappa:6.1f} {log_bayes_capacity_vmf(spec).value:9.5f} "
              f"{capacity_oracle_vmf(spec).value:9.5f}")

# 1210 parameters: the raw capacity overflows, the log does not
p = 1210
for sigma in (0.5, 2.0, 9.7):
    cap = log_bayes_capacity_gaussian(GaussianMechSpec(p, sigma))
    print(f"gaussian sigma={sigma:<4} ln C = {cap.nat_log:10.3f} nats ({cap.bits:.1f} bits)")
for kappa in (1.0, 50.0, 173.0):
    cap = log_bayes_capacity_vmf(VmfMechSpec(p, kappa))
    print(f"vmf      kappa={kappa:<5} ln C = {cap.nat_log:10.3f} nats")
