"""Discrete quantitative information flow: channels, priors, gain functions, leakage.

A channel is a row-stochastic matrix ``M[x, y] = P(y | x)``. Vulnerabilities
follow the usual g-vulnerability definitions and Bayes' capacity is the sum of
column maxima, which bounds multiplicative leakage over every prior and every
non-negative gain function.

Objects are immutable: the wrapped arrays are marked read-only on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, FormatError, InvalidSizeError, ShapeError

__all__ = [
    "BayesCapacity",
    "Channel",
    "DeterministicChannel",
    "GainFunction",
    "Prior",
    "bayes_capacity_discrete",
    "compose",
    "identity_gain",
    "mult_leakage",
    "read_matrix",
    "uniform_prior",
    "v_post",
    "v_prior",
    "write_matrix",
]

ROW_SUM_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix from secrets (rows) to observations (columns).

    Rows whose sum is within ``ROW_SUM_TOL`` of one are renormalised; anything
    further off is rejected. All-zero columns are rejected as well, since an
    observation that can never occur is not part of the channel.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or 0 in m.shape:
            raise ShapeError(f"channel must be a non-empty 2-D matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < -ROW_SUM_TOL) or np.any(m > 1 + ROW_SUM_TOL):
            raise DomainError("channel entries must lie in [0, 1]")
        m = np.clip(m, 0.0, 1.0)  # absorb round-off from products
        sums = m.sum(axis=1)
        off = np.abs(sums - 1.0)
        if np.any(off > ROW_SUM_TOL):
            i = int(np.argmax(off))
            raise DomainError(f"row {i} sums to {sums[i]!r}, not 1")
        m = m / sums[:, None]
        if np.any(m.max(axis=0) == 0):
            raise DomainError(f"channel has all-zero column(s) {np.flatnonzero(m.max(axis=0) == 0).tolist()}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def identity(cls, n: int) -> "Channel":
        return cls(np.eye(n))

    def __repr__(self):
        return f"Channel({self.rows}x{self.cols})"


@dataclass(frozen=True, eq=False, repr=False)
class DeterministicChannel(Channel):
    """A channel with exactly one 1 per row, built from an index mapping.

    ``mapping[x]`` is the observation produced by secret ``x``. The mapping
    must be onto ``range(n_obs)``.
    """

    mapping: tuple[int, ...] = ()

    @classmethod
    def from_mapping(cls, mapping: Sequence[int], n_obs: int | None = None) -> "DeterministicChannel":
        idx = np.asarray(mapping, dtype=int)
        if idx.ndim != 1 or idx.size == 0:
            raise ShapeError("mapping must be a non-empty 1-D sequence")
        n_obs = int(idx.max()) + 1 if n_obs is None else n_obs
        if idx.min() < 0 or idx.max() >= n_obs:
            raise DomainError(f"mapping values must lie in [0, {n_obs})")
        m = np.zeros((idx.size, n_obs))
        m[np.arange(idx.size), idx] = 1.0
        # Channel.__post_init__ rejects the zero columns of a non-surjective map.
        return cls(m, tuple(int(i) for i in idx))


@dataclass(frozen=True, eq=False)
class Prior:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ShapeError(f"prior must be a non-empty vector, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DomainError("prior weights must be non-negative")
        s = w.sum()
        if abs(s - 1.0) > ROW_SUM_TOL:
            raise DomainError(f"prior sums to {s!r}, not 1")
        object.__setattr__(self, "weights", _frozen(w / s))

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True, eq=False)
class GainFunction:
    """Dense gain matrix ``gains[w, x]`` over actions ``w`` and secrets ``x``."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.array(self.gains, dtype=float)
        if g.ndim != 2 or 0 in g.shape:
            raise ShapeError(f"gain matrix must be non-empty 2-D, got shape {g.shape}")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise DomainError("gains must be finite and non-negative")
        if np.any(g.max(axis=0) <= 0):
            raise DomainError("every secret needs at least one action with positive gain")
        object.__setattr__(self, "gains", _frozen(g))

    @property
    def actions(self) -> int:
        return self.gains.shape[0]


@dataclass(frozen=True)
class BayesCapacity:
    """Bayes' capacity in three scales: raw, natural log, and bits."""

    value: float
    nat_log: float
    bits: float

    def __float__(self):
        return self.value


def identity_gain(n: int) -> GainFunction:
    """Gain 1 for guessing the secret exactly, 0 otherwise."""
    if n < 1:
        raise InvalidSizeError(f"identity gain needs n >= 1, got {n}")
    return GainFunction(np.eye(n))


def uniform_prior(n: int) -> Prior:
    if n < 1:
        raise InvalidSizeError(f"uniform prior needs n >= 1, got {n}")
    return Prior(np.full(n, 1.0 / n))


def v_prior(pi: Prior, g: GainFunction) -> float:
    """Best expected gain without observing anything: ``max_w sum_x pi_x g(w, x)``."""
    if g.gains.shape[1] != len(pi):
        raise ShapeError(f"gain has {g.gains.shape[1]} secrets, prior has {len(pi)}")
    return float(np.max(g.gains @ pi.weights))


def v_post(pi: Prior, g: GainFunction, m: Channel) -> float:
    """Posterior g-vulnerability ``sum_y max_w sum_x pi_x M[x, y] g(w, x)``."""
    if m.rows != len(pi):
        raise ShapeError(f"channel has {m.rows} rows, prior has {len(pi)} entries")
    if g.gains.shape[1] != m.rows:
        raise ShapeError(f"gain has {g.gains.shape[1]} secrets, channel has {m.rows}")
    joint = pi.weights[:, None] * m.matrix          # (x, y)
    return float(np.sum(np.max(g.gains @ joint, axis=0)))


def mult_leakage(pi: Prior, g: GainFunction, m: Channel) -> float:
    vp = v_prior(pi, g)
    if vp <= 0:
        raise DomainError("prior vulnerability is zero; multiplicative leakage undefined")
    return v_post(pi, g, m) / vp


def bayes_capacity_discrete(m: Channel) -> BayesCapacity:
    """Sum of column maxima of ``m``."""
    value = float(np.sum(np.max(m.matrix, axis=0)))
    ln = math.log(value)
    return BayesCapacity(value, ln, ln / math.log(2.0))


def compose(c: Channel, d: Channel) -> Channel:
    """Cascade ``c`` then ``d`` (the matrix product ``c @ d``)."""
    if c.cols != d.rows:
        raise ShapeError(f"cannot compose {c.rows}x{c.cols} with {d.rows}x{d.cols}")
    prod = c.matrix @ d.matrix
    # A cascade can still drop observations of d that no secret of c reaches.
    keep = prod.max(axis=0) > 0
    return Channel(prod[:, keep])


# ---------------------------------------------------------------------------
# Text format: first line "rows cols", then row-major decimals
# ---------------------------------------------------------------------------

def read_matrix(path: str | Path) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise FormatError(f"{path}: missing 'rows cols' header")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
        vals = [float(t) for t in tokens[2:]]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if rows < 1 or cols < 1 or len(vals) != rows * cols:
        raise FormatError(f"{path}: header says {rows}x{cols} but found {len(vals)} values")
    return np.array(vals).reshape(rows, cols)


def write_matrix(path: str | Path, matrix) -> None:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n")
