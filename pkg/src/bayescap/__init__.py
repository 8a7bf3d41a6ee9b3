"""Bayes' capacity as a leakage measure for DP-SGD against reconstruction attacks.

Submodules
----------
qif         discrete channels, vulnerability, leakage, Bayes' capacity
numerics    log-gamma, log-Bessel, quadrature oracles
capacity    closed-form capacities of the Gaussian and VMF mechanisms
mechanisms  clipping, Gaussian noise, VMF density and sampler
learner     toy MLP with exact gradients and the two DP-SGD rounds
attack      gradient-inversion reconstruction and MSE
harness     epsilon calibration and sweeps; ``report`` writes CSV/SVG
"""

from .capacity import (GaussianMechSpec, LogCapacity, Ordering, VmfMechSpec, capacity_oracle_gaussian,
                       capacity_oracle_vmf, log_bayes_capacity_gaussian, log_bayes_capacity_vmf,
                       safer_than)
from .qif import (Channel, DeterministicChannel, GainFunction, Prior, bayes_capacity_discrete,
                  compose, identity_gain, mult_leakage, uniform_prior, v_post, v_prior)

__version__ = "0.1.0"
