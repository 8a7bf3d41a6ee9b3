"""Noise channels applied to the averaged gradient in DP-SGD.

Randomness always comes from an explicitly passed ``numpy.random.Generator``;
use :func:`make_rng` to build one from an integer seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError
from .numerics import log_bessel_i

__all__ = [
    "VmfDensityParams",
    "clip",
    "gaussian_perturb",
    "log_vmf_normaliser",
    "make_rng",
    "scale_to_sphere",
    "vmf_log_density",
    "vmf_sample",
]

UNIT_TOL = 1e-9
MAX_REJECTIONS = 1000


def make_rng(seed) -> np.random.Generator:
    """Seeded PCG64 generator; ``seed`` may be an int or a tuple of ints."""
    return np.random.default_rng(seed)


def clip(v: np.ndarray, c: float) -> np.ndarray:
    """Rescale ``v`` so that its Euclidean norm is at most ``c``."""
    if not c > 0:
        raise DomainError(f"clip bound must be positive, got {c}")
    v = np.asarray(v, dtype=float)
    return v / max(1.0, np.linalg.norm(v) / c)


def gaussian_perturb(v: np.ndarray, sigma: float, c: float, L: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. ``N(0, (c sigma / L)^2)`` noise to every component.

    ``sigma = 0`` is allowed and returns ``v`` unchanged (the draw still
    happens, so the generator advances identically for every ``sigma``).
    """
    if sigma < 0 or L < 1:
        raise DomainError(f"need sigma >= 0 and L >= 1, got sigma={sigma}, L={L}")
    v = np.asarray(v, dtype=float)
    return v + (c * sigma / L) * rng.standard_normal(v.shape)


def scale_to_sphere(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise DegenerateInputError("cannot scale the zero vector onto the unit sphere")
    return v / n


@dataclass(frozen=True)
class VmfDensityParams:
    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or mu.size < 2:
            raise DomainError("mean direction must be a vector of dimension >= 2")
        if abs(np.linalg.norm(mu) - 1.0) > UNIT_TOL:
            raise DomainError(f"mean direction has norm {np.linalg.norm(mu)}, expected 1")
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        object.__setattr__(self, "mu", mu)

    @property
    def p(self) -> int:
        return self.mu.size


def log_vmf_normaliser(p: int, kappa: float) -> float:
    """``log C_{p,kappa}`` with ``C = (2 pi)^(nu+1) I_nu(kappa) / kappa^nu``, ``nu = p/2 - 1``."""
    nu = p / 2.0 - 1.0
    return (nu + 1.0) * math.log(2.0 * math.pi) + log_bessel_i(nu, kappa) - nu * math.log(kappa)


def vmf_log_density(params: VmfDensityParams, y: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    if y.shape != params.mu.shape:
        raise DomainError(f"y has shape {y.shape}, mean direction has {params.mu.shape}")
    if abs(np.linalg.norm(y) - 1.0) > UNIT_TOL:
        raise DomainError(f"y must be a unit vector, has norm {np.linalg.norm(y)}")
    return params.kappa * float(params.mu @ y) - log_vmf_normaliser(params.p, params.kappa)


def _sample_cosine(kappa: float, p: int, rng: np.random.Generator) -> float:
    """Wood (1994) rejection sampler for ``w = mu . y``."""
    d = p - 1.0
    b = d / (math.sqrt(4.0 * kappa**2 + d**2) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + d * math.log(1.0 - x0**2)
    for _ in range(MAX_REJECTIONS):
        z = rng.beta(d / 2.0, d / 2.0)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform()
        if kappa * w + d * math.log(1.0 - x0 * w) - c >= math.log(u):
            return w
    raise RuntimeError(f"VMF rejection sampler exceeded {MAX_REJECTIONS} proposals "
                       f"(p={p}, kappa={kappa})")


def vmf_sample(params: VmfDensityParams, rng: np.random.Generator) -> np.ndarray:
    """One draw from the von Mises-Fisher distribution on the unit sphere."""
    mu, p = params.mu, params.p
    w = _sample_cosine(params.kappa, p, rng)
    # Uniform direction in the tangent space at mu.
    v = rng.standard_normal(p)
    v -= (v @ mu) * mu
    v /= np.linalg.norm(v)
    y = w * mu + math.sqrt(max(0.0, 1.0 - w * w)) * v
    return y / np.linalg.norm(y)
