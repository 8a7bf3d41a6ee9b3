"""A small fully connected network and the two DP-SGD training loops.

Parameters live in one flat vector ``theta``; for each layer the weight matrix
(``out x in``, row-major) is stored first, then its bias. Hidden layers use the
chosen activation, the last layer produces logits for a softmax cross-entropy.

A round mirrors one client step in federated DP-SGD: per-example gradients are
clipped, averaged and noised; the noisy average is what the server sees
(:class:`LeakObservation`) before it applies the descent step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, DomainError, ShapeError
from .mechanisms import VmfDensityParams, clip, gaussian_perturb, scale_to_sphere, vmf_sample

log = logging.getLogger(__name__)

__all__ = [
    "ROUND_FUNCTIONS",
    "DpSgdParams",
    "Example",
    "LeakObservation",
    "MlpArch",
    "dpsgd_round_gaussian",
    "dpsgd_round_vmf",
    "grad",
    "init_params",
    "input_grad",
    "loss",
    "sample_batch",
    "train",
]


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


_ACTIVATIONS = {
    "sigmoid": (_sigmoid, lambda a, z: a * (1.0 - a)),
    "relu": (lambda z: np.maximum(z, 0.0), lambda a, z: (z > 0).astype(float)),
}


@dataclass(frozen=True)
class MlpArch:
    layer_sizes: tuple[int, ...] = (64, 16, 10)
    activation: str = "sigmoid"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise DomainError(f"need at least two positive layer sizes, got {sizes}")
        if self.activation not in _ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "layer_sizes", sizes)

    @classmethod
    def parse(cls, text: str, activation: str = "sigmoid") -> "MlpArch":
        """Build from a comma-separated spec such as ``"64,16,10"``."""
        return cls(tuple(int(t) for t in text.split(",")), activation)

    @property
    def param_count(self) -> int:
        s = self.layer_sizes
        return sum(a * b + b for a, b in zip(s[:-1], s[1:]))

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    def unpack(self, theta: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        if theta.shape != (self.param_count,):
            raise ShapeError(f"theta has shape {theta.shape}, architecture needs ({self.param_count},)")
        out, o = [], 0
        for a, b in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            W = theta[o:o + a * b].reshape(b, a)
            o += a * b
            out.append((W, theta[o:o + b]))
            o += b
        return out


@dataclass(frozen=True)
class Example:
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class DpSgdParams:
    """Hyperparameters of one DP-SGD run.

    ``sigma_or_kappa`` is the Gaussian noise multiplier or the VMF
    concentration, depending on which round function consumes it. A Gaussian
    multiplier of 0 switches noise off.
    """

    eta: float = 0.1
    sigma_or_kappa: float = 1.0
    batch_L: int = 1
    clip_c: float = 1.0
    rounds_T: int = 1

    def __post_init__(self):
        if not (self.eta > 0 and self.sigma_or_kappa >= 0 and self.batch_L >= 1
                and self.clip_c > 0 and self.rounds_T >= 0):
            raise DomainError(f"invalid DP-SGD parameters {self}")


@dataclass(frozen=True)
class LeakObservation:
    round: int
    g_tilde: np.ndarray
    theta_before: np.ndarray = field(repr=False)


def init_params(arch: MlpArch, rng: np.random.Generator) -> np.ndarray:
    """Uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` for weights and biases."""
    parts = []
    for a, b in zip(arch.layer_sizes[:-1], arch.layer_sizes[1:]):
        bound = 1.0 / np.sqrt(a)
        parts.append(rng.uniform(-bound, bound, a * b))
        parts.append(rng.uniform(-bound, bound, b))
    return np.concatenate(parts)


def _check_example(x: Example, arch: MlpArch) -> np.ndarray:
    f = np.asarray(x.features, dtype=float)
    if f.shape != (arch.n_inputs,):
        raise ShapeError(f"features have shape {f.shape}, network expects ({arch.n_inputs},)")
    if not 0 <= x.label < arch.n_classes:
        raise ShapeError(f"label {x.label} outside [0, {arch.n_classes})")
    return f


def _forward(theta, features, arch):
    act, _ = _ACTIVATIONS[arch.activation]
    layers = arch.unpack(theta)
    acts, zs = [features], []
    for i, (W, b) in enumerate(layers):
        z = W @ acts[-1] + b
        zs.append(z)
        acts.append(act(z) if i < len(layers) - 1 else z)
    return layers, acts, zs


def _softmax(z):
    e = np.exp(z - z.max())
    return e / e.sum()


def loss(theta: np.ndarray, x: Example, arch: MlpArch) -> float:
    """Softmax cross-entropy of one example."""
    f = _check_example(x, arch)
    _, acts, _ = _forward(theta, f, arch)
    z = acts[-1]
    m = z.max()
    return float(m + np.log(np.sum(np.exp(z - m))) - z[x.label])


def _backward(theta, f, label, arch):
    """Return parameter gradient and the error signal reaching the input."""
    _, dact = _ACTIVATIONS[arch.activation]
    layers, acts, zs = _forward(theta, f, arch)
    delta = _softmax(acts[-1])
    delta[label] -= 1.0
    pieces = []
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        pieces.append(delta)
        pieces.append(np.outer(delta, acts[i]).ravel())
        delta = W.T @ delta
        if i > 0:
            delta = delta * dact(acts[i], zs[i - 1])
    return np.concatenate(pieces[::-1]), delta


def grad(theta: np.ndarray, x: Example, arch: MlpArch) -> np.ndarray:
    """Exact gradient of :func:`loss` with respect to ``theta``."""
    f = _check_example(x, arch)
    return _backward(theta, f, x.label, arch)[0]


def input_grad(theta: np.ndarray, x: Example, arch: MlpArch) -> np.ndarray:
    """Gradient of :func:`loss` with respect to the input features."""
    f = _check_example(x, arch)
    return _backward(theta, f, x.label, arch)[1]


def _clipped_mean(theta, batch, arch, c):
    if len(batch) == 0:
        raise ValueError("empty batch")
    return np.mean([clip(grad(theta, x, arch), c) for x in batch], axis=0)


def dpsgd_round_gaussian(theta: np.ndarray, batch: Sequence[Example], params: DpSgdParams,
                         rng: np.random.Generator, arch: MlpArch, t: int = 0):
    """One Gaussian DP-SGD round; returns ``(theta_next, observation)``."""
    g = _clipped_mean(theta, batch, arch, params.clip_c)
    g_tilde = gaussian_perturb(g, params.sigma_or_kappa, params.clip_c, len(batch), rng)
    obs = LeakObservation(t, g_tilde, theta.copy())
    return theta - params.eta * g_tilde, obs


def dpsgd_round_vmf(theta: np.ndarray, batch: Sequence[Example], params: DpSgdParams,
                    rng: np.random.Generator, arch: MlpArch, t: int = 0):
    """One VMF DP-SGD round: average, project to the sphere, draw around it.

    A zero average gradient has no direction; a uniformly random unit vector
    stands in for it and the event is logged.
    """
    g = _clipped_mean(theta, batch, arch, params.clip_c)
    try:
        mu = scale_to_sphere(g)
    except DegenerateInputError:
        log.warning("round %d: zero averaged gradient, using a random direction", t)
        mu = scale_to_sphere(rng.standard_normal(g.shape))
    g_tilde = vmf_sample(VmfDensityParams(mu, params.sigma_or_kappa), rng)
    obs = LeakObservation(t, g_tilde, theta.copy())
    return theta - params.eta * g_tilde, obs


ROUND_FUNCTIONS = {"gaussian": dpsgd_round_gaussian, "vmf": dpsgd_round_vmf}


def sample_batch(rng: np.random.Generator, n: int, L: int) -> np.ndarray:
    """``L`` distinct indices out of ``range(n)``."""
    return rng.choice(n, size=L, replace=False)


def train(arch: MlpArch, dataset: Sequence[Example], params: DpSgdParams, mechanism: str,
          rng: np.random.Generator, theta0: np.ndarray | None = None):
    """Run ``params.rounds_T`` rounds; return ``(theta_T, observations)``.

    Each round draws ``batch_L`` distinct indices; rounds are independent.
    """
    if mechanism not in ROUND_FUNCTIONS:
        raise ValueError(f"mechanism must be one of {sorted(ROUND_FUNCTIONS)}, got {mechanism!r}")
    if len(dataset) < params.batch_L:
        raise DomainError(f"dataset of {len(dataset)} examples is smaller than L = {params.batch_L}")
    step = ROUND_FUNCTIONS[mechanism]
    theta = init_params(arch, rng) if theta0 is None else np.array(theta0, dtype=float)
    observations = []
    for t in range(params.rounds_T):
        idx = sample_batch(rng, len(dataset), params.batch_L)
        theta, obs = step(theta, [dataset[i] for i in idx], params, rng, arch, t)
        observations.append(obs)
    return theta, observations
