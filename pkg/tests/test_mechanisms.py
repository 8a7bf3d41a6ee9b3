import math

import numpy as np
import pytest
from scipy import integrate, stats

from bayescap.errors import DegenerateInputError, DomainError
from bayescap.mechanisms import (VmfDensityParams, clip, gaussian_perturb, log_vmf_normaliser, make_rng,
                                 scale_to_sphere, vmf_log_density, vmf_sample)
from bayescap.numerics import QuadratureSpec, integrate_sup_density


def vmf_draws(mu, kappa, n, seed):
    rng = make_rng(seed)
    params = VmfDensityParams(np.asarray(mu, float), kappa)
    return np.array([vmf_sample(params, rng) for _ in range(n)])


class TestClip:
    def test_examples(self):
        assert np.allclose(clip([3.0, 4.0], 1.0), [0.6, 0.8])
        assert np.array_equal(clip([0.3, 0.4], 1.0), [0.3, 0.4])
        assert np.array_equal(clip([0.0, 0.0], 1.0), [0.0, 0.0])

    def test_properties(self):
        rng = make_rng(3)
        for _ in range(200):
            v = rng.standard_normal(7) * rng.uniform(0.01, 10)
            c = rng.uniform(0.1, 3)
            out = clip(v, c)
            assert np.linalg.norm(out) <= c * (1 + 1e-12)
            assert np.linalg.norm(out) <= np.linalg.norm(v) * (1 + 1e-12)
            assert np.allclose(clip(out, c), out, rtol=0, atol=1e-15)
            assert out @ v == pytest.approx(np.linalg.norm(out) * np.linalg.norm(v))

    def test_bad_bound(self):
        with pytest.raises(DomainError):
            clip([1.0], 0.0)


class TestGaussianPerturb:
    def test_vanishing_noise(self):
        v = np.array([0.2, -1.0, 3.0])
        assert np.allclose(gaussian_perturb(v, 1e-12, 1.0, 1, make_rng(0)), v, atol=1e-9)
        assert np.array_equal(gaussian_perturb(v, 0.0, 1.0, 1, make_rng(0)), v)

    def test_determinism(self):
        a = gaussian_perturb(np.zeros(5), 1.0, 1.0, 1, make_rng(42))
        b = gaussian_perturb(np.zeros(5), 1.0, 1.0, 1, make_rng(42))
        c = gaussian_perturb(np.zeros(5), 1.0, 1.0, 1, make_rng(43))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_standard_deviation(self):
        draws = np.array([gaussian_perturb(np.zeros(1), 2.0, 1.0, 2, make_rng(s))[0] for s in range(2000)])
        bulk = gaussian_perturb(np.zeros(100_000), 2.0, 1.0, 2, make_rng(0))
        assert np.std(bulk) == pytest.approx(1.0, abs=0.02)
        assert np.std(draws) == pytest.approx(1.0, abs=0.06)


class TestSphere:
    def test_examples(self):
        assert np.allclose(scale_to_sphere([3.0, 4.0]), [0.6, 0.8])
        u = np.array([0.0, 1.0, 0.0])
        assert np.array_equal(scale_to_sphere(u), u)
        with pytest.raises(DegenerateInputError):
            scale_to_sphere([0.0, 0.0])

    def test_unit_norm(self):
        rng = make_rng(1)
        for _ in range(100):
            assert np.linalg.norm(scale_to_sphere(rng.standard_normal(9) * 1e3)) == pytest.approx(1.0, abs=1e-12)


class TestVmfDensity:
    def test_log_density_at_mean(self):
        ln_i0 = math.log(math.fsum(0.25**k / math.factorial(k) ** 2 for k in range(30)))
        params = VmfDensityParams(np.array([1.0, 0.0]), 1.0)
        got = vmf_log_density(params, np.array([1.0, 0.0]))
        assert got == pytest.approx(1.0 - math.log(2 * math.pi) - ln_i0, abs=1e-12)
        assert got == pytest.approx(-1.07379, abs=1e-5)

    def test_orthogonal_point(self):
        params = VmfDensityParams(np.array([0.0, 0.0, 1.0]), 3.7)
        assert vmf_log_density(params, np.array([1.0, 0.0, 0.0])) == pytest.approx(-log_vmf_normaliser(3, 3.7))

    @pytest.mark.parametrize("kappa", [0.1, 1.0, 10.0])
    def test_integrates_to_one_on_circle(self, kappa):
        params = VmfDensityParams(np.array([0.6, 0.8]), kappa)
        f = lambda y: np.exp([vmf_log_density(params, row) for row in y])
        est = integrate_sup_density(f, QuadratureSpec("circle-1d", 64))
        assert est.value == pytest.approx(1.0, abs=1e-6)

    def test_integrates_to_one_on_sphere(self):
        params = VmfDensityParams(np.array([0.0, 0.0, 1.0]), 2.0)
        f = lambda y: np.exp([vmf_log_density(params, row) for row in y])
        assert integrate_sup_density(f, QuadratureSpec("sphere-2d", 32)).value == pytest.approx(1.0, abs=1e-6)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            VmfDensityParams(np.array([1.0, 1.0]), 1.0)
        with pytest.raises(DomainError):
            VmfDensityParams(np.array([1.0, 0.0]), 0.0)
        with pytest.raises(DomainError):
            vmf_log_density(VmfDensityParams(np.array([1.0, 0.0]), 1.0), np.array([2.0, 0.0]))


class TestVmfSample:
    def test_unit_norm_and_determinism(self):
        mu = scale_to_sphere(np.arange(1.0, 11.0))
        a = vmf_draws(mu, 5.0, 50, 7)
        b = vmf_draws(mu, 5.0, 50, 7)
        assert np.array_equal(a, b)
        assert np.allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-9)

    def test_concentration_limit(self):
        mu = scale_to_sphere(np.array([1.0, -2.0, 0.5]))
        for y in vmf_draws(mu, 1e6, 20, 0):
            assert math.acos(min(1.0, y @ mu)) < 0.01

    def test_mean_resultant_length(self):
        mu = np.array([0.0, 0.0, 1.0])
        draws = vmf_draws(mu, 2.0, 100_000, 11)
        expected = 1 / math.tanh(2.0) - 0.5
        assert expected == pytest.approx(0.53731, abs=1e-5)
        assert np.linalg.norm(draws.mean(axis=0)) == pytest.approx(expected, abs=0.01)

    def test_rotational_symmetry(self):
        mu = scale_to_sphere(np.array([1.0, 1.0, 1.0]))
        draws = vmf_draws(mu, 2.0, 20_000, 5)
        e1 = scale_to_sphere(np.array([1.0, -1.0, 0.0]))
        e2 = np.cross(mu, e1)
        for e in (e1, e2):
            comp = draws @ e
            assert abs(comp.mean()) < 3 * comp.std() / math.sqrt(len(comp))

    def test_circle_histogram_goodness_of_fit(self):
        kappa = 1.0
        draws = vmf_draws([1.0, 0.0], kappa, 100_000, 2024)
        theta = np.arctan2(draws[:, 1], draws[:, 0])
        edges = np.linspace(-math.pi, math.pi, 41)
        observed, _ = np.histogram(theta, edges)
        norm = integrate.quad(lambda t: math.exp(kappa * math.cos(t)), -math.pi, math.pi)[0]
        probs = np.array([integrate.quad(lambda t: math.exp(kappa * math.cos(t)), a, b)[0]
                          for a, b in zip(edges[:-1], edges[1:])]) / norm
        assert stats.chisquare(observed, probs * len(theta)).pvalue > 0.01
