"""Noise calibration and the epsilon sweep linking capacity to attack success.

For every mechanism and noise level, each seed fixes one attacked image and
one initial model. The client runs a single DP-SGD round on that image alone;
the attacker inverts the leaked update. Records aggregate the reconstruction
MSE over seeds and carry the log Bayes' capacity of the noise channel.

Randomness is split per seed into independent streams (data and model, noise,
attack) so that neighbouring grid points reuse the same image, model and noise
direction and differ only in the noise level.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .attack import AttackConfig, invert_gradients
from .capacity import GaussianMechSpec, VmfMechSpec, log_bayes_capacity_gaussian, log_bayes_capacity_vmf
from .data import load_idx, synth_dataset
from .learner import DpSgdParams, MlpArch, dpsgd_round_gaussian, dpsgd_round_vmf, init_params
from .mechanisms import make_rng

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "epsilon_to_kappa",
    "epsilon_to_sigma",
    "load_config",
    "run_sweep",
]

WORKERS_ENV = "BAYESCAP_WORKERS"
MECHANISMS = ("gaussian", "vmf")


def epsilon_to_sigma(eps: float, delta: float, sensitivity: float = 2.0) -> float:
    """Classical Gaussian-mechanism calibration ``sensitivity * sqrt(2 ln(1.25/delta)) / eps``.

    The default sensitivity ``2 c / L`` with ``c = 1, L = 1`` covers replacing
    one example in a clipped average.
    """
    if not eps > 0 or not 0 < delta < 1 or not sensitivity > 0:
        raise ValueError(f"need eps > 0, 0 < delta < 1, sensitivity > 0; got {eps}, {delta}, {sensitivity}")
    return sensitivity * math.sqrt(2.0 * math.log(1.25 / delta)) / eps


def epsilon_to_kappa(eps: float) -> float:
    """VMF concentration for angular-metric privacy level ``eps`` (identity map)."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return float(eps)


@dataclass(frozen=True)
class ExperimentRecord:
    mechanism: str
    epsilon: float
    sigma_or_kappa: float
    log_bayes_capacity: float
    mse_mean: float
    mse_std: float
    n_seeds: int

    @property
    def failed(self) -> bool:
        return self.n_seeds == 0


@dataclass
class ExperimentConfig:
    """Sweep description; :func:`load_config` reads the same fields from JSON.

    Give ``epsilons`` to calibrate both mechanisms from privacy levels, or
    ``sigmas`` / ``kappas`` to set noise directly (these take precedence for
    their mechanism). ``radius_mode="per-layer"`` reports Gaussian capacity
    with ``R`` equal to the number of weight layers instead of ``radius``.
    """

    mechanisms: tuple[str, ...] = MECHANISMS
    epsilons: tuple[float, ...] | None = (1.0, 5.0, 10.0, 50.0, 173.0)
    sigmas: tuple[float, ...] | None = None
    kappas: tuple[float, ...] | None = None
    delta: float = 1e-5
    sensitivity: float | None = None
    seeds: tuple[int, ...] = tuple(range(10))
    arch: str = "64,16,10"
    activation: str = "sigmoid"
    dataset: dict = field(default_factory=lambda: {"source": "synthetic", "n": 100,
                                                   "resolution": 8, "seed": 0})
    attack: dict = field(default_factory=dict)
    eta: float = 0.1
    clip_c: float = 1.0
    batch_L: int = 1
    radius: float = 1.0
    radius_mode: str = "whole"
    output_dir: str = "sweep-out"
    workers: int | None = None

    def __post_init__(self):
        self.mechanisms = tuple(self.mechanisms)
        unknown = set(self.mechanisms) - set(MECHANISMS)
        if not self.mechanisms or unknown:
            raise ValueError(f"mechanisms must be a non-empty subset of {MECHANISMS}")
        for name in ("epsilons", "sigmas", "kappas"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, tuple(float(x) for x in v))
        for m in self.mechanisms:
            direct = self.sigmas if m == "gaussian" else self.kappas
            if not (direct or self.epsilons):
                raise ValueError(f"no noise grid for mechanism {m!r}")
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.radius_mode not in ("whole", "per-layer"):
            raise ValueError(f"radius_mode must be 'whole' or 'per-layer', got {self.radius_mode!r}")
        if self.batch_L != 1:
            raise ValueError("the attack reconstructs single-example rounds; batch_L must be 1")

    @property
    def mlp(self) -> MlpArch:
        return MlpArch.parse(self.arch, self.activation)

    @property
    def capacity_radius(self) -> float:
        if self.radius_mode == "per-layer":
            return float(len(self.mlp.layer_sizes) - 1)
        return self.radius

    def grid(self) -> list[tuple[str, float, float]]:
        """``(mechanism, epsilon, noise)`` triples; epsilon is NaN for direct grids."""
        sens = self.sensitivity or 2.0 * self.clip_c / self.batch_L
        out = []
        for m in self.mechanisms:
            direct = self.sigmas if m == "gaussian" else self.kappas
            if direct:
                out += [(m, math.nan, v) for v in direct]
            else:
                for e in self.epsilons:
                    noise = epsilon_to_sigma(e, self.delta, sens) if m == "gaussian" else epsilon_to_kappa(e)
                    out.append((m, e, noise))
        return out


def load_config(path) -> ExperimentConfig:
    raw = json.loads(Path(path).read_text())
    known = set(ExperimentConfig.__dataclass_fields__)
    extra = set(raw) - known
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    return ExperimentConfig(**raw)


def _load_dataset(cfg: ExperimentConfig):
    ds = dict(cfg.dataset)
    src = ds.get("source", "synthetic")
    if src == "synthetic":
        return synth_dataset(int(ds.get("n", 100)), int(ds.get("resolution", 8)),
                             make_rng(int(ds.get("seed", 0))))
    if src == "idx":
        return load_idx(ds["images"], ds["labels"], int(ds.get("downsample", 2)), ds.get("crop", 8))
    raise ValueError(f"unknown dataset source {src!r}")


def log_capacity_for(cfg: ExperimentConfig, mechanism: str, noise: float) -> float:
    p = cfg.mlp.param_count
    if mechanism == "gaussian":
        if noise == 0:
            return math.inf
        spec = GaussianMechSpec(p, noise, cfg.capacity_radius, cfg.batch_L, cfg.clip_c)
        return log_bayes_capacity_gaussian(spec).nat_log
    return log_bayes_capacity_vmf(VmfMechSpec(p, noise)).nat_log


def attack_one(cfg: ExperimentConfig, dataset, mechanism: str, noise: float, seed: int) -> float:
    """Reconstruction MSE for one seed at one noise level."""
    arch = cfg.mlp
    setup = make_rng((seed, 0))
    target = dataset[int(setup.integers(len(dataset)))]
    theta0 = init_params(arch, setup)
    params = DpSgdParams(eta=cfg.eta, sigma_or_kappa=noise, batch_L=1, clip_c=cfg.clip_c)
    noise_rng = make_rng((seed, 1, MECHANISMS.index(mechanism)))
    step = dpsgd_round_gaussian if mechanism == "gaussian" else dpsgd_round_vmf
    _, obs = step(theta0, [target], params, noise_rng, arch)
    acfg = AttackConfig(**{"normalize": mechanism == "vmf", **cfg.attack})
    res = invert_gradients(obs, arch, target.label, acfg, make_rng((seed, 2)), truth=target.features)
    return res.mse


def _run_point(args) -> ExperimentRecord:
    cfg, mechanism, eps, noise = args
    try:
        dataset = _load_dataset(cfg)
        errs = [attack_one(cfg, dataset, mechanism, noise, s) for s in cfg.seeds]
        cap = log_capacity_for(cfg, mechanism, noise)
        return ExperimentRecord(mechanism, eps, noise, cap, float(np.mean(errs)),
                                float(np.std(errs)), len(errs))
    except Exception:  # one bad grid point must not kill a long sweep
        log.exception("grid point %s eps=%s noise=%s failed", mechanism, eps, noise)
        return ExperimentRecord(mechanism, eps, noise, math.nan, math.nan, math.nan, 0)


def _workers(cfg: ExperimentConfig) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, cfg.workers or 1)


def _sort_key(r: ExperimentRecord):
    return (r.mechanism, r.sigma_or_kappa if r.mechanism == "vmf" else -r.sigma_or_kappa)


def run_sweep(cfg: ExperimentConfig, write: bool = True) -> list[ExperimentRecord]:
    """Run every grid point and, if ``write``, emit CSV and both figures.

    Records are ordered by mechanism, then from most to least noise. The output
    does not depend on the worker count.
    """
    jobs = [(cfg, m, e, v) for m, e, v in cfg.grid()]
    n = _workers(cfg)
    if n == 1:
        records = [_run_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            records = list(pool.map(_run_point, jobs))
    records.sort(key=_sort_key)
    if write:
        from .report import emit_csv, emit_scatter_svg

        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit_csv(records, out / "records.csv")
        ok = [r for r in records if not r.failed]
        if ok:
            emit_scatter_svg(ok, "epsilon", out / "fig-epsilon.svg")
            emit_scatter_svg(ok, "log_capacity", out / "fig-capacity.svg")
        (out / "config.json").write_text(json.dumps(asdict(cfg), indent=2, default=list) + "\n")
    return records
