"""Special functions and quadrature used by the capacity closed forms and their oracles.

Everything that can overflow is evaluated in natural-log space. ``log_bessel_i``
switches between three evaluation routes:

* ascending power series (all terms positive, summed with log-sum-exp) for
  moderate order and argument,
* Hankel's large-argument expansion when ``kappa`` dominates ``nu**2``,
* Debye's uniform large-order expansion for ``nu >= 100``.

The quadrature routines integrate a vectorised density over one of a few fixed
domains and report an error estimate obtained by re-running at half resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericalError

__all__ = [
    "Estimate",
    "QuadratureSpec",
    "integrate_sup_density",
    "log_bessel_i",
    "log_binomial",
    "log_gamma",
    "log_sum_exp",
]

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def log_gamma(x):
    """Natural log of the Gamma function for positive real ``x``.

    Accepts a scalar or an array; returns the same kind. Arguments below 0.5
    are shifted up by one with ``lgamma(x) = lgamma(x + 1) - log(x)``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    small = arr < 0.5
    z = np.where(small, arr + 1.0, arr) - 1.0
    series = np.full_like(z, _LANCZOS_COEF[0])
    for k in range(1, len(_LANCZOS_COEF)):
        series = series + _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    out = _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(series)
    out = np.where(small, out - np.log(arr), out)
    return float(out) if out.ndim == 0 else out


def log_sum_exp(values: Sequence[float] | np.ndarray) -> float:
    """``log(sum(exp(values)))`` without overflow; ``-inf`` entries are allowed."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("log_sum_exp of an empty sequence")
    m = np.max(v)
    if m == -np.inf:
        return -math.inf
    if m == np.inf:
        return math.inf
    return float(m + math.log(np.sum(np.exp(v - m))))


def log_binomial(n, k):
    """``log C(n, k)`` through ``log_gamma``; vectorised over ``k``."""
    n_arr = np.asarray(n)
    k_arr = np.asarray(k)
    if np.any(k_arr < 0) or np.any(k_arr > n_arr):
        raise DomainError(f"log_binomial needs 0 <= k <= n, got n={n!r}, k={k!r}")
    out = (log_gamma(n_arr + 1.0) - log_gamma(k_arr + 1.0)
           - log_gamma(n_arr - k_arr + 1.0))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Modified Bessel function of the first kind, log space
# ---------------------------------------------------------------------------

_DEBYE_MIN_ORDER = 100.0
_HANKEL_MIN_ARG = 50.0


def _debye_polys(t: float) -> list[float]:
    t2 = t * t
    u1 = t * (3.0 - 5.0 * t2) / 24.0
    u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0
    u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2**2
                   - 425425.0 * t2**3) / 414720.0
    u4 = t2 * t2 * (4465125.0 - 94121676.0 * t2 + 349922430.0 * t2**2
                    - 446185740.0 * t2**3 + 185910725.0 * t2**4) / 39813120.0
    return [1.0, u1, u2, u3, u4]


def _log_bessel_debye(nu: float, kappa: float) -> float:
    z = kappa / nu
    root = math.sqrt(1.0 + z * z)
    # log(z / (1 + root)) written to stay accurate for tiny z
    eta = root + math.log(z) - math.log1p(root)
    t = 1.0 / root
    corr = sum(u / nu**k for k, u in enumerate(_debye_polys(t)))
    return (nu * eta - 0.5 * math.log(2.0 * math.pi * nu)
            - 0.25 * math.log1p(z * z) + math.log(corr))


def _log_bessel_hankel(nu: float, kappa: float) -> float:
    mu = 4.0 * nu * nu
    total, term, k = 1.0, 1.0, 1
    while k < 200:
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * kappa)
        if abs(nxt) >= abs(term):
            break
        total += nxt
        term = nxt
        if abs(term) < 1e-17 * abs(total):
            break
        k += 1
    return kappa - 0.5 * math.log(2.0 * math.pi * kappa) + math.log(total)


def _log_bessel_series(nu: float, kappa: float) -> float:
    # Terms peak near k ~ kappa / 2; carry enough past the peak to reach 1e-17.
    kmax = int(kappa / 2.0 + 12.0 * math.sqrt(kappa + 1.0) + 40.0)
    k = np.arange(kmax + 1, dtype=float)
    logs = ((2.0 * k + nu) * math.log(kappa / 2.0)
            - log_gamma(k + 1.0) - log_gamma(k + nu + 1.0))
    return log_sum_exp(logs)


def log_bessel_i(nu: float, kappa: float) -> float:
    """Natural log of ``I_nu(kappa)`` for ``nu >= 0``, ``kappa >= 0``.

    Stays finite where ``I_nu`` itself under- or overflows (``nu`` in the tens
    of thousands, ``kappa`` in the thousands). Returns ``-inf`` for
    ``kappa == 0`` and ``nu > 0``.
    """
    if not (nu >= 0.0 and kappa >= 0.0) or math.isinf(nu) or math.isinf(kappa):
        raise DomainError(f"log_bessel_i needs finite nu >= 0, kappa >= 0; got {nu}, {kappa}")
    if kappa == 0.0:
        return 0.0 if nu == 0.0 else -math.inf
    if nu >= _DEBYE_MIN_ORDER:
        return _log_bessel_debye(nu, kappa)
    if kappa >= max(_HANKEL_MIN_ARG, nu * nu):
        return _log_bessel_hankel(nu, kappa)
    return _log_bessel_series(nu, kappa)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

class Estimate(NamedTuple):
    """A numerical value with an absolute-error bound."""

    value: float
    error: float


_METHODS = ("adaptive-1d", "polar-2d", "spherical-3d", "circle-1d", "sphere-2d")


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration domain and resolution.

    ``truncation`` is the outer radius for unbounded domains (ignored on the
    circle and the sphere surface). ``breaks`` lists radii (or, for the 1-D
    line, absolute abscissae) where the integrand has a kink; panels are split
    there so Gauss-Legendre nodes never straddle it.
    """

    method: str
    resolution: int = 64
    truncation: float = 1.0
    breaks: tuple[float, ...] = ()

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown quadrature method {self.method!r}; expected one of {_METHODS}")
        if self.resolution < 16:
            raise ValueError(f"resolution must be >= 16, got {self.resolution}")
        if not self.truncation > 0:
            raise ValueError(f"truncation must be > 0, got {self.truncation}")

    @property
    def dim(self) -> int:
        return {"adaptive-1d": 1, "polar-2d": 2, "spherical-3d": 3,
                "circle-1d": 2, "sphere-2d": 3}[self.method]


def _checked(density: Callable[[np.ndarray], np.ndarray], pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(density(pts), dtype=float).reshape(len(pts))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NumericalError(f"density is {vals[i]} at y = {pts[i].tolist()}")
    return vals


def _radial_nodes(spec: QuadratureSpec, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre on [0, truncation] split at ``breaks``."""
    edges = sorted({0.0, spec.truncation, *(b for b in spec.breaks if 0 < b < spec.truncation)})
    x, w = np.polynomial.legendre.leggauss(n)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (b + a))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _angles(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def _fixed_rule(density, spec: QuadratureSpec, n: int) -> float:
    m = spec.method
    if m == "circle-1d":
        phi = _angles(n)
        pts = np.column_stack([np.cos(phi), np.sin(phi)])
        return float(np.sum(_checked(density, pts)) * 2.0 * np.pi / n)
    if m == "sphere-2d":
        ct, wt = np.polynomial.legendre.leggauss(n)
        phi = _angles(2 * n)
        C, P = np.meshgrid(ct, phi, indexing="ij")
        S = np.sqrt(1.0 - C**2)
        pts = np.column_stack([(S * np.cos(P)).ravel(), (S * np.sin(P)).ravel(), C.ravel()])
        vals = _checked(density, pts).reshape(C.shape)
        return float(np.sum(vals * wt[:, None]) * 2.0 * np.pi / (2 * n))
    r, wr = _radial_nodes(spec, n)
    if m == "polar-2d":
        phi = _angles(n)
        R, P = np.meshgrid(r, phi, indexing="ij")
        pts = np.column_stack([(R * np.cos(P)).ravel(), (R * np.sin(P)).ravel()])
        vals = _checked(density, pts).reshape(R.shape)
        return float(np.sum(vals * (wr * r)[:, None]) * 2.0 * np.pi / n)
    if m == "spherical-3d":
        ct, wt = np.polynomial.legendre.leggauss(n)
        phi = _angles(n)
        R, C, P = np.meshgrid(r, ct, phi, indexing="ij")
        S = np.sqrt(1.0 - C**2)
        pts = np.column_stack([(R * S * np.cos(P)).ravel(), (R * S * np.sin(P)).ravel(),
                               (R * C).ravel()])
        vals = _checked(density, pts).reshape(R.shape)
        w = (wr * r**2)[:, None, None] * wt[None, :, None] * (2.0 * np.pi / n)
        return float(np.sum(vals * w))
    raise AssertionError(m)


def integrate_sup_density(density_sup: Callable[[np.ndarray], np.ndarray],
                          domain: QuadratureSpec) -> Estimate:
    """Integrate a non-negative function over ``domain``.

    ``density_sup`` receives an ``(n, d)`` array of points (``d = 1`` on the
    line, 2 for the plane and circle, 3 for space and the sphere) and must
    return ``n`` values. On ``adaptive-1d`` the integral runs over
    ``[-truncation, truncation]`` with scipy's adaptive Gauss-Kronrod; the
    fixed rules report ``|I(n) - I(n/2)|`` as their error.
    """
    if domain.method == "adaptive-1d":
        T = domain.truncation
        pts = sorted({b for b in domain.breaks if -T < b < T})

        def f(y):
            return _checked(density_sup, np.array([[y]]))[0]

        val, err = integrate.quad(f, -T, T, points=pts or None, limit=domain.resolution,
                                  epsabs=1e-13, epsrel=1e-12)
        return Estimate(float(val), float(err))
    fine = _fixed_rule(density_sup, domain, domain.resolution)
    coarse = _fixed_rule(density_sup, domain, domain.resolution // 2)
    return Estimate(fine, abs(fine - coarse))
