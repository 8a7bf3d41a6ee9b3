"""Bayes' capacity of the continuous DP-SGD noise mechanisms.

Closed forms are evaluated in log space so that model-sized dimensions
(``p`` in the thousands) never materialise an overflowing number. Each closed
form has an oracle that integrates the pointwise supremum of the output
density directly, for ``p <= 3``.

The Gaussian closed form is a two-term sum: an interior term (the ball of
clipped inputs, where the density peak is attained) and a tail term obtained by
pushing the peak to the nearest point of the ball. The coefficient in front of
the tail term appears in two versions: ``"literal"`` (2) and ``"derived"`` (1).
Both are implemented; :func:`select_gaussian_variant` picks whichever agrees
with the oracle, and the choice is carried on every :class:`LogCapacity`.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedDimensionError
from .numerics import (Estimate, QuadratureSpec, integrate_sup_density, log_bessel_i,
                       log_binomial, log_gamma, log_sum_exp)

__all__ = [
    "GaussianMechSpec",
    "LogCapacity",
    "Ordering",
    "VmfMechSpec",
    "capacity_oracle_gaussian",
    "capacity_oracle_vmf",
    "gaussian_variants",
    "log_bayes_capacity_gaussian",
    "log_bayes_capacity_vmf",
    "safer_than",
    "select_gaussian_variant",
]

LN2 = math.log(2.0)
TAIL_COEFFICIENTS = {"literal": 2.0, "derived": 1.0}


@dataclass(frozen=True)
class GaussianMechSpec:
    """Gaussian DP-SGD noise on a ``p``-dimensional ball of radius ``radius_R``.

    ``batch_L`` is accepted for completeness but does not enter the capacity:
    averaging divides signal and noise by the same factor.
    """

    p: int
    sigma: float
    radius_R: float = 1.0
    batch_L: int = 1
    clip_c: float = 1.0

    def __post_init__(self):
        if self.p < 1 or not self.sigma > 0 or not self.radius_R > 0 or self.batch_L < 1:
            raise DomainError(f"invalid Gaussian mechanism {self}")


@dataclass(frozen=True)
class VmfMechSpec:
    p: int
    kappa: float

    def __post_init__(self):
        if self.p < 2 or not self.kappa > 0:
            raise DomainError(f"invalid VMF mechanism {self}")


@dataclass(frozen=True)
class LogCapacity:
    nat_log: float
    bits: float
    variant: str | None = None

    @classmethod
    def from_nat_log(cls, nat_log: float, variant: str | None = None) -> "LogCapacity":
        return cls(nat_log, nat_log / LN2, variant)

    @property
    def value(self) -> float:
        """Raw capacity; overflows to ``inf`` for large models."""
        try:
            return math.exp(self.nat_log)
        except OverflowError:
            return math.inf


# ---------------------------------------------------------------------------
# Gaussian
# ---------------------------------------------------------------------------

def _log_gaussian_terms(spec: GaussianMechSpec) -> tuple[float, float]:
    """Log of the tail sum ``Z`` normalised by the derived coefficient, and the
    log of the interior term."""
    p, s, R = spec.p, spec.sigma, spec.radius_R
    i = np.arange(p, dtype=float)
    log_z_terms = (log_gamma((p - i) / 2.0) + (p - i) * (0.5 * LN2 + math.log(s))
                   + log_binomial(p - 1, i) + i * math.log(R))
    log_z = log_sum_exp(log_z_terms)
    common = -0.5 * p * LN2 - p * math.log(s)
    tail = log_z - log_gamma(p / 2.0) + common
    interior = p * math.log(R) - log_gamma(p / 2.0 + 1.0) + common
    return tail, interior


def gaussian_variants(spec: GaussianMechSpec) -> dict[str, float]:
    """Natural-log capacity under each tail coefficient."""
    tail, interior = _log_gaussian_terms(spec)
    return {name: float(np.logaddexp(tail + math.log(coef), interior))
            for name, coef in TAIL_COEFFICIENTS.items()}


_SELECTION_GRID = [(p, s, R) for p in (1, 2, 3) for s in (0.5, 1.0, 2.0) for R in (1.0, 2.0)]


@functools.lru_cache(maxsize=None)
def select_gaussian_variant(rtol: float = 1e-2) -> str:
    """Name of the tail coefficient that reproduces the oracle on ``p <= 3``.

    Raises ``RuntimeError`` unless exactly one variant matches every grid point.
    """
    matching = set(TAIL_COEFFICIENTS)
    for p, s, R in _SELECTION_GRID:
        spec = GaussianMechSpec(p, s, R)
        oracle = capacity_oracle_gaussian(spec).value
        for name, ln in gaussian_variants(spec).items():
            if abs(math.exp(ln) / oracle - 1.0) > rtol:
                matching.discard(name)
    if len(matching) != 1:
        raise RuntimeError(f"oracle selects {sorted(matching)} tail coefficients, expected one")
    return matching.pop()


def log_bayes_capacity_gaussian(spec: GaussianMechSpec, variant: str | None = None) -> LogCapacity:
    """Log Bayes' capacity of the Gaussian mechanism.

    ``variant`` defaults to the oracle-selected tail coefficient.
    """
    variant = variant or select_gaussian_variant()
    return LogCapacity.from_nat_log(gaussian_variants(spec)[variant], variant)


def _ball_projection_density(sigma: float, R: float):
    """``y -> sup_{|x| <= R} N(y; x, sigma^2 I)``: peak at ``y`` inside the
    ball, at the nearest surface point ``R y / |y|`` outside."""
    def f(y: np.ndarray) -> np.ndarray:
        p = y.shape[1]
        dist = np.maximum(np.linalg.norm(y, axis=1) - R, 0.0)
        return (2.0 * np.pi * sigma**2) ** (-p / 2.0) * np.exp(-dist**2 / (2.0 * sigma**2))
    return f


def capacity_oracle_gaussian(spec: GaussianMechSpec, quad: QuadratureSpec | None = None) -> Estimate:
    """Integrate the sup-density of the Gaussian mechanism numerically (``p <= 3``).

    Default quadrature truncates at ``R + 12 sigma`` and splits radial panels
    at ``R``, where the sup-density has a kink.
    """
    p, s, R = spec.p, spec.sigma, spec.radius_R
    if p > 3:
        raise UnsupportedDimensionError(f"Gaussian oracle supports p <= 3, got p = {p}")
    if quad is None:
        method = {1: "adaptive-1d", 2: "polar-2d", 3: "spherical-3d"}[p]
        breaks = (-R, R) if p == 1 else (R,)
        quad = QuadratureSpec(method, resolution=200 if p == 1 else 64,
                              truncation=R + 12.0 * s, breaks=breaks)
    return integrate_sup_density(_ball_projection_density(s, R), quad)


# ---------------------------------------------------------------------------
# von Mises-Fisher
# ---------------------------------------------------------------------------

def log_bayes_capacity_vmf(spec: VmfMechSpec) -> LogCapacity:
    p, k = spec.p, spec.kappa
    nu = p / 2.0 - 1.0
    ln = (LN2 - log_gamma(p / 2.0) + nu * math.log(k) - (p / 2.0) * LN2
          - log_bessel_i(nu, k) + k)
    return LogCapacity.from_nat_log(ln)


def capacity_oracle_vmf(spec: VmfMechSpec, quad: QuadratureSpec | None = None) -> Estimate:
    """Capacity of the VMF mechanism by quadrature on the circle or 2-sphere.

    The normaliser is itself obtained by integrating ``exp(kappa mu.y)`` over
    the sphere, so no Bessel function is involved.
    """
    p, k = spec.p, spec.kappa
    if p not in (2, 3):
        raise UnsupportedDimensionError(f"VMF oracle supports p in {{2, 3}}, got p = {p}")
    if quad is None:
        quad = QuadratureSpec("circle-1d" if p == 2 else "sphere-2d",
                              resolution=max(64, 8 * int(math.ceil(math.sqrt(k)))))
    mu = np.zeros(p)
    mu[-1] = 1.0
    # Work with exp(kappa (mu.y - 1)) so large kappa cannot overflow; the peak
    # over mean directions at y is attained with mean = y, giving exp(0) = 1.
    norm = integrate_sup_density(lambda y: np.exp(k * (y @ mu - 1.0)), quad)
    peak = integrate_sup_density(lambda y: np.ones(len(y)), quad)
    value = peak.value / norm.value
    err = value * (peak.error / peak.value + norm.error / norm.value)
    return Estimate(value, err)


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

class Ordering(enum.Enum):
    A_SAFER = "a-safer"
    B_SAFER = "b-safer"
    TIE = "tie"


def safer_than(a: LogCapacity, b: LogCapacity, tol: float = 1e-12) -> Ordering:
    """The mechanism with smaller capacity leaks less to a reconstruction attacker."""
    if abs(a.nat_log - b.nat_log) <= tol:
        return Ordering.TIE
    return Ordering.A_SAFER if a.nat_log < b.nat_log else Ordering.B_SAFER
