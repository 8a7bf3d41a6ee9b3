import numpy as np
import pytest

from bayescap.attack import AttackConfig, invert_gradients, match_loss, mse, total_variation
from bayescap.data import synth_dataset
from bayescap.errors import ShapeError
from bayescap.harness import ExperimentConfig, run_sweep
from bayescap.learner import DpSgdParams, LeakObservation, MlpArch, dpsgd_round_gaussian, grad, init_params
from bayescap.mechanisms import make_rng

ARCH = MlpArch()
DATA = synth_dataset(20, 8, make_rng(0))


def leak(sigma, seed=0, example=None):
    x = example or DATA[seed % len(DATA)]
    theta = init_params(ARCH, make_rng(seed))
    _, obs = dpsgd_round_gaussian(theta, [x], DpSgdParams(sigma_or_kappa=sigma), make_rng((seed, 1)), ARCH)
    return obs, x


class TestMse:
    def test_examples(self):
        assert mse([0.2, 0.3], [0.2, 0.3]) == 0.0
        assert mse(np.zeros(5), np.ones(5)) == 1.0
        assert mse([0, 1], [1, 1]) == 0.5

    def test_symmetric_and_shape(self):
        rng = make_rng(0)
        a, b = rng.random(9), rng.random(9)
        assert mse(a, b) == mse(b, a) > 0
        with pytest.raises(ShapeError):
            mse([1, 2], [1, 2, 3])


class TestMatchLoss:
    @pytest.mark.parametrize("kind,normalize", [("cosine", False), ("squared-error", False), ("squared-error", True)])
    def test_gradient_in_G(self, kind, normalize):
        rng = make_rng(1)
        G, T = rng.standard_normal(12), rng.standard_normal(12)
        _, dG = match_loss(G, T, kind, normalize)
        h = 1e-6
        num = np.array([(match_loss(G + h * e, T, kind, normalize)[0] - match_loss(G - h * e, T, kind, normalize)[0])
                        / (2 * h) for e in np.eye(12)])
        assert np.allclose(dG, num, atol=1e-7)

    def test_zero_at_truth(self):
        obs, x = leak(0.0)
        m, _ = match_loss(grad(obs.theta_before, x, ARCH), obs.g_tilde)
        assert abs(m) < 1e-12
        res = invert_gradients(obs, ARCH, x.label, AttackConfig(iterations=1, restarts=1, step_size=1e-12),
                               make_rng(0), init=x.features)
        assert res.final_match_loss < 1e-10

    def test_total_variation_gradient(self):
        x = make_rng(2).random(16)
        _, g = total_variation(x)
        h = 1e-6
        num = np.array([(total_variation(x + h * e)[0] - total_variation(x - h * e)[0]) / (2 * h) for e in np.eye(16)])
        assert np.allclose(g, num, atol=1e-5)
        assert total_variation(np.full(16, 0.3))[0] == pytest.approx(24 * 1e-4)


class TestInvert:
    def test_zero_noise_reconstructs(self):
        obs, x = leak(0.0, seed=3)
        res = invert_gradients(obs, ARCH, x.label, AttackConfig(), make_rng(0), truth=x.features)
        assert res.mse < 1e-3
        assert res.iterations_used == 1000

    def test_determinism_and_bounds(self):
        obs, x = leak(0.5, seed=4)
        cfg = AttackConfig(iterations=60, restarts=2, tv_weight=1e-3)
        a = invert_gradients(obs, ARCH, x.label, cfg, make_rng(5), truth=x.features)
        b = invert_gradients(obs, ARCH, x.label, cfg, make_rng(5), truth=x.features)
        assert np.array_equal(a.reconstruction, b.reconstruction) and a.mse == b.mse
        assert a.reconstruction.min() >= 0 and a.reconstruction.max() <= 1

    def test_shape_mismatch(self):
        obs = LeakObservation(0, np.zeros(5), np.zeros(5))
        with pytest.raises(ShapeError):
            invert_gradients(obs, ARCH, 0, AttackConfig(iterations=1), make_rng(0))

    @pytest.mark.xfail(strict=True, reason="at desk scale the attack on a pure-noise observation drives pixels "
                                           "to the box corners, giving roughly twice the mid-grey baseline")
    def test_large_noise_matches_grey_baseline(self):
        ratios = []
        for seed in range(5):
            obs, x = leak(100.0, seed=seed)
            res = invert_gradients(obs, ARCH, x.label, AttackConfig(), make_rng(seed), truth=x.features)
            baseline = np.mean([mse(np.full(64, 0.5), e.features) for e in DATA])
            ratios.append(res.mse / baseline)
        assert abs(np.mean(ratios) - 1.0) <= 0.10

    @pytest.mark.slow
    def test_monotone_trend_in_sigma(self):
        cfg = ExperimentConfig(mechanisms=("gaussian",), sigmas=(0.05, 0.1, 0.2, 0.5, 1.0))
        records = sorted(run_sweep(cfg, write=False), key=lambda r: r.sigma_or_kappa)
        m = [r.mse_mean for r in records]
        inversions = sum(b < a for a, b in zip(m, m[1:]))
        assert inversions <= 1
