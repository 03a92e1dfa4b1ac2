import numpy as np
import pytest

from lassovrft import lti
from lassovrft.lti import TransferFunction
from lassovrft.nonlin import benchmark_phi, identity_map
from lassovrft.plant import (HammersteinPlant, NoiseSpec, builtin_plant, excitation_filter, gen_input,
                             simulate_plant, step_sequence)


class TestBuiltinPlants:
    def test_linear_blocks(self):
        assert builtin_plant(1).linear_block == TransferFunction([0.2], [1, -0.8])
        assert builtin_plant(2).linear_block == TransferFunction([0.04, 0], [1, -1.6, 0.64])

    def test_shared_nonlinearity(self):
        assert builtin_plant(1).input_nonlinearity == builtin_plant(2).input_nonlinearity == benchmark_phi()

    @pytest.mark.parametrize("bad", [0, 3, "1"])
    def test_unknown_id(self, bad):
        with pytest.raises(ValueError):
            builtin_plant(bad)

    def test_requires_strictly_proper_block(self):
        with pytest.raises(ValueError):
            HammersteinPlant(identity_map(), TransferFunction([1, 0], [1, -0.5]))


class TestSimulatePlant:
    def test_zero_input(self):
        np.testing.assert_array_equal(simulate_plant(builtin_plant(1), np.zeros(50)), 0.0)

    def test_dc_levels(self):
        y1 = simulate_plant(builtin_plant(1), np.full(300, 0.5))
        y2 = simulate_plant(builtin_plant(2), np.full(300, 3.0))
        assert y1[-1] == pytest.approx(0.5, abs=1e-12)
        assert y2[-1] == pytest.approx(8.0, abs=1e-12)

    def test_deterministic_without_noise(self, rng):
        u = rng.uniform(-3, 3, 200)
        a = simulate_plant(builtin_plant(2), u)
        b = simulate_plant(builtin_plant(2), u.copy())
        assert a.tobytes() == b.tobytes()

    def test_identity_nonlinearity_reduces_to_filter(self, rng):
        g = builtin_plant(2).linear_block
        u = rng.normal(size=300)
        np.testing.assert_allclose(simulate_plant(HammersteinPlant(identity_map(), g), u),
                                   lti.filter(g, u), atol=1e-12)

    def test_linear_region_of_plant1(self, rng):
        u = rng.uniform(-0.99, 0.99, 300)
        np.testing.assert_array_equal(simulate_plant(builtin_plant(1), u),
                                      lti.filter(builtin_plant(1).linear_block, u))

    def test_noise_statistics(self):
        n, sigma = 100_000, 0.05
        nu = simulate_plant(builtin_plant(1), np.zeros(n), NoiseSpec(sigma, 3))
        assert abs(nu.mean()) <= 4 * sigma / np.sqrt(n)
        assert abs(nu.std() / sigma - 1) <= 0.02

    def test_noise_seeded(self):
        a = NoiseSpec(0.1, 5).sample(10)
        np.testing.assert_array_equal(a, NoiseSpec(0.1, 5).sample(10))
        assert not np.array_equal(a, NoiseSpec(0.1, 6).sample(10))

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            NoiseSpec(-0.1)


class TestExcitation:
    def test_filter_for_benchmark_reference(self, td):
        f, a = excitation_filter(td)
        assert a == pytest.approx(0.05, abs=1e-12)
        expected = TransferFunction(np.array([0.0005, -0.0004]), np.poly([0.9] * 4))
        np.testing.assert_allclose(f.num, expected.num, atol=1e-15)
        np.testing.assert_allclose(f.den, expected.den, atol=1e-14)
        assert abs(lti.dc_gain(f) - 1) <= 1e-12
        assert f.is_stable() and lti.relative_degree(f) == 3

    def test_nonunit_reference_rejected(self):
        with pytest.raises(ValueError, match="unit DC gain"):
            excitation_filter(TransferFunction([0.02], [1, -1.8, 0.81]))

    def test_other_reference_models(self):
        for p in (0.5, 0.7):
            td = TransferFunction([(1 - p) ** 2], np.poly([p, p]))
            f, _ = excitation_filter(td)
            assert abs(lti.dc_gain(f) - 1) <= 1e-12

    def test_input_length_and_determinism(self):
        u = gen_input("random", 1000, 24.0, seed=4)
        assert u.size == 1000
        np.testing.assert_array_equal(u, gen_input("random", 1000, 24.0, seed=4))
        np.testing.assert_array_equal(gen_input("steps", 500, 24.0, seed=1), gen_input("steps", 500, 24.0, seed=1))

    @pytest.mark.parametrize("kind", ["random", "steps"])
    def test_zero_amplitude(self, kind):
        np.testing.assert_array_equal(gen_input(kind, 100, 0.0), 0.0)

    def test_step_sequence(self):
        s = step_sequence([1, -1], 3, 8)
        np.testing.assert_array_equal(s, [1, 1, 1, -1, -1, -1, 1, 1])

    def test_steps_input_is_filtered_train(self, td):
        f, _ = excitation_filter(td)
        raw = 5.0 * step_sequence((0.25, -0.6, 1.0, -0.25, 0.6, -1.0), 100, 700)
        np.testing.assert_allclose(gen_input("steps", 700, 5.0, dwell=100), lti.filter(f, raw), atol=0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            gen_input("chirp", 10)
