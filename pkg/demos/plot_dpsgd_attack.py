"""
One DP-SGD round and a gradient-inversion attack
=================================================

A client takes a single step on one synthetic 8x8 image. The server sees the
noisy update and tries to rebuild the image from it.
"""

import numpy as np

from bayescap.attack import AttackConfig, invert_gradients
from bayescap.data import synth_dataset
from bayescap.learner import DpSgdParams, MlpArch, dpsgd_round_gaussian, dpsgd_round_vmf, init_params
from bayescap.mechanisms import make_rng

arch = MlpArch((64, 16, 10))
data = synth_dataset(10, 8, make_rng(0))
target = data[3]
theta = init_params(arch, make_rng(1))


def show(x):
    for row in np.asarray(x).reshape(8, 8):
        print("  " + "".join(" .:-=+*#%@"[min(9, int(v * 10))] for v in row))


print("target image, label", target.label)
show(target.features)

for name, step, noise in (("gaussian", dpsgd_round_gaussian, 0.0),
                          ("gaussian", dpsgd_round_gaussian, 0.1),
                          ("gaussian", dpsgd_round_gaussian, 1.0),
                          ("vmf", dpsgd_round_vmf, 173.0)):
    _, obs = step(theta, [target], DpSgdParams(sigma_or_kappa=noise), make_rng(2), arch)
    cfg = AttackConfig(normalize=(name == "vmf"))
    res = invert_gradients(obs, arch, target.label, cfg, make_rng(3), truth=target.features)
    print(f"\n{name} noise={noise}: mse {res.mse:.4f}, match loss {res.final_match_loss:.4f}")
    show(res.reconstruction)
