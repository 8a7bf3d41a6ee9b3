"""Command-line entry point: ``bayescap <command> ...`` or ``python -m bayescap``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import qif
from .attack import AttackConfig, invert_gradients
from .capacity import (GaussianMechSpec, VmfMechSpec, capacity_oracle_gaussian, capacity_oracle_vmf,
                       log_bayes_capacity_gaussian, log_bayes_capacity_vmf)
from .data import load_idx, synth_dataset, write_pgm
from .harness import load_config, run_sweep
from .learner import ROUND_FUNCTIONS, DpSgdParams, LeakObservation, MlpArch, init_params, sample_batch
from .mechanisms import make_rng


def _matrix_lines(m: np.ndarray) -> str:
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in np.atleast_2d(m))


# --- qif --------------------------------------------------------------------

def cmd_qif_capacity(a):
    cap = qif.bayes_capacity_discrete(qif.Channel(qif.read_matrix(a.channel)))
    print(f"capacity {cap.value!r}\nnat_log {cap.nat_log!r}\nbits {cap.bits!r}")


def cmd_qif_leakage(a):
    ch = qif.Channel(qif.read_matrix(a.channel))
    pi = qif.Prior(qif.read_matrix(a.prior).ravel()) if a.prior else qif.uniform_prior(ch.rows)
    g = qif.GainFunction(qif.read_matrix(a.gain)) if a.gain else qif.identity_gain(ch.rows)
    print(f"v_prior {qif.v_prior(pi, g)!r}")
    print(f"v_post {qif.v_post(pi, g, ch)!r}")
    print(f"mult_leakage {qif.mult_leakage(pi, g, ch)!r}")
    print(f"bayes_capacity {qif.bayes_capacity_discrete(ch).value!r}")


def cmd_qif_compose(a):
    out = qif.compose(qif.Channel(qif.read_matrix(a.c)), qif.Channel(qif.read_matrix(a.d)))
    if a.out:
        qif.write_matrix(a.out, out.matrix)
    else:
        print(f"{out.rows} {out.cols}\n{_matrix_lines(out.matrix)}")


# --- capacity / oracle --------------------------------------------------------

def _print_log_capacity(cap):
    print(f"nat_log {cap.nat_log!r}\nbits {cap.bits!r}")
    if cap.variant:
        print(f"tail_coefficient {cap.variant}")


def _print_oracle(closed_ln: float, est):
    print(f"oracle {est.value!r}\noracle_error {est.error!r}")
    print(f"relative_discrepancy {math.exp(closed_ln) / est.value - 1.0!r}")


def cmd_capacity(a):
    if a.mech == "gaussian":
        spec = GaussianMechSpec(a.p, a.sigma, a.radius, a.batch)
        cap = log_bayes_capacity_gaussian(spec)
        _print_log_capacity(cap)
        if a.p <= 3:
            _print_oracle(cap.nat_log, capacity_oracle_gaussian(spec))
    else:
        spec = VmfMechSpec(a.p, a.kappa)
        cap = log_bayes_capacity_vmf(spec)
        _print_log_capacity(cap)
        if a.p <= 3:
            _print_oracle(cap.nat_log, capacity_oracle_vmf(spec))


def cmd_oracle(a):
    if a.mech == "gaussian":
        spec = GaussianMechSpec(a.p, a.sigma, a.radius, a.batch)
        est, cap = capacity_oracle_gaussian(spec), log_bayes_capacity_gaussian(spec)
    else:
        spec = VmfMechSpec(a.p, a.kappa)
        est, cap = capacity_oracle_vmf(spec), log_bayes_capacity_vmf(spec)
    _print_log_capacity(cap)
    _print_oracle(cap.nat_log, est)


# --- train / attack -------------------------------------------------------------

def _dataset(a, arch: MlpArch):
    if a.images:
        return load_idx(a.images, a.labels, a.downsample, a.crop)
    side = math.isqrt(arch.n_inputs)
    return synth_dataset(a.n, side, make_rng(a.data_seed))


def cmd_train(a):
    arch = MlpArch.parse(a.arch, a.activation)
    noise = a.sigma if a.mech == "gaussian" else a.kappa
    if noise is None:
        sys.exit(f"--{'sigma' if a.mech == 'gaussian' else 'kappa'} is required for --mech {a.mech}")
    data = _dataset(a, arch)
    params = DpSgdParams(a.eta, noise, a.batch, a.clip, a.rounds)
    if len(data) < params.batch_L:
        sys.exit(f"dataset has {len(data)} examples, fewer than --batch {params.batch_L}")
    rng = make_rng(a.seed)
    theta = init_params(arch, rng)
    step = ROUND_FUNCTIONS[a.mech]
    obs_lines, theta_lines, truth_lines = [], [], []
    for t in range(params.rounds_T):
        idx = sample_batch(rng, len(data), params.batch_L)
        batch = [data[i] for i in idx]
        theta, obs = step(theta, batch, params, rng, arch, t)
        obs_lines.append(_vector_line(obs.g_tilde))
        theta_lines.append(_vector_line(obs.theta_before))
        truth_lines.append(f"{batch[0].label} {_vector_line(batch[0].features)}")
    out = Path(a.out)
    out.write_text("".join(obs_lines))
    Path(f"{out}.theta").write_text("".join(theta_lines))
    Path(f"{out}.truth").write_text("".join(truth_lines))
    print(f"wrote {params.rounds_T} observations to {out}")


def _vector_line(v) -> str:
    return " ".join(repr(float(x)) for x in v) + "\n"


def _read_line(path, index: int) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    if not 0 <= index < len(lines):
        sys.exit(f"{path} has {len(lines)} lines; round {index} is out of range")
    return np.array([float(t) for t in lines[index].split()])


def cmd_attack(a):
    arch = MlpArch.parse(a.arch, a.activation)
    g = _read_line(a.obs, a.round)
    theta = _read_line(a.theta or f"{a.obs}.theta", a.round)
    truth_path = Path(a.truth or f"{a.obs}.truth")
    truth, label = None, a.label
    if truth_path.exists():
        row = _read_line(truth_path, a.round)
        truth = row[1:]
        label = int(row[0]) if label is None else label
    if label is None:
        sys.exit("--label is required when no truth file is available")
    cfg = AttackConfig(iterations=a.iters, step_size=a.step, tv_weight=a.tv, restarts=a.restarts,
                       match_loss=a.match_loss)
    res = invert_gradients(LeakObservation(a.round, g, theta), arch, label, cfg, make_rng(a.seed),
                           truth=truth)
    write_pgm(a.out, res.reconstruction)
    print(f"final_match_loss {res.final_match_loss!r}")
    if res.mse is not None:
        print(f"mse {res.mse!r}")
    print(f"reconstruction written to {a.out}")


def cmd_sweep(a):
    cfg = load_config(a.config)
    if a.output_dir:
        cfg.output_dir = a.output_dir
    records = run_sweep(cfg)
    for r in records:
        print(f"{r.mechanism:9s} eps={r.epsilon:<8.4g} noise={r.sigma_or_kappa:<10.4g} "
              f"logC={r.log_bayes_capacity:<10.4g} mse={r.mse_mean:.4f}±{r.mse_std:.4f} (n={r.n_seeds})")
    print(f"outputs in {cfg.output_dir}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bayescap", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    q = sub.add_parser("qif", help="discrete channel computations").add_subparsers(dest="qif_cmd", required=True)
    p = q.add_parser("capacity", help="Bayes' capacity of a channel file")
    p.add_argument("channel")
    p.set_defaults(func=cmd_qif_capacity)
    p = q.add_parser("leakage", help="vulnerabilities and multiplicative leakage")
    p.add_argument("--channel", required=True)
    p.add_argument("--prior", help="1 x n matrix file (default: uniform)")
    p.add_argument("--gain", help="|W| x n matrix file (default: identity)")
    p.set_defaults(func=cmd_qif_leakage)
    p = q.add_parser("compose", help="cascade two channels")
    p.add_argument("c")
    p.add_argument("d")
    p.add_argument("--out")
    p.set_defaults(func=cmd_qif_compose)

    for name, func in (("capacity", cmd_capacity), ("oracle", cmd_oracle)):
        s = sub.add_parser(name, help=f"{name} of a continuous mechanism").add_subparsers(dest="mech", required=True)
        g = s.add_parser("gaussian")
        g.add_argument("--p", type=int, required=True)
        g.add_argument("--sigma", type=float, required=True)
        g.add_argument("--radius", type=float, default=1.0)
        g.add_argument("--batch", type=int, default=1)
        g.set_defaults(func=func)
        v = s.add_parser("vmf")
        v.add_argument("--p", type=int, required=True)
        v.add_argument("--kappa", type=float, required=True)
        v.set_defaults(func=func)

    def model_args(p):
        p.add_argument("--arch", default="64,16,10")
        p.add_argument("--activation", default="sigmoid", choices=["sigmoid", "relu"])

    p = sub.add_parser("train", help="simulate DP-SGD rounds and save leaked gradients")
    p.add_argument("--mech", choices=["gaussian", "vmf"], required=True)
    p.add_argument("--sigma", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--clip", type=float, default=1.0)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    model_args(p)
    p.add_argument("--images", help="IDX image file (default: synthetic data)")
    p.add_argument("--labels", help="IDX label file")
    p.add_argument("--downsample", type=int, default=2)
    p.add_argument("--crop", type=int, default=8)
    p.add_argument("--n", type=int, default=100, help="synthetic dataset size")
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--out", default="observations.txt")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="invert one leaked gradient")
    p.add_argument("--obs", required=True)
    p.add_argument("--theta", help="parameters file (default: OBS.theta)")
    p.add_argument("--truth", help="label + features per round (default: OBS.truth)")
    p.add_argument("--round", type=int, default=0)
    model_args(p)
    p.add_argument("--label", type=int)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--tv", type=float, default=0.0)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--match-loss", default="cosine", choices=["cosine", "squared-error"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="reconstruction.pgm")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("sweep", help="run an epsilon sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.func(args)


if __name__ == "__main__":
    main()
