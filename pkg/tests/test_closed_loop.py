import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lassovrft import lti
from lassovrft.closed_loop import (DIVERGENCE_LIMIT, Controller, DictionaryController, IdealController,
                                   desired_response, eval_reference, find_sustained_oscillation,
                                   ideal_controller, mr_cost, simulate_closed_loop)
from lassovrft.nonlin import deadzone_dictionary, polynomial_dictionary
from lassovrft.plant import NoiseSpec, builtin_plant
from lassovrft.solvers import ControllerParams


class ConstantGain(Controller):
    """Pure integral action u = k z, for hand-computed loops."""

    def __init__(self, k):
        self.k = k
        self.reset()

    def reset(self):
        self.z = 0.0

    def output(self):
        return self.k * self.z

    def observe(self, e):
        self.z += e


def linear_plant_free_loop(k, r):
    """Plant-1 loop under u = k z written out as an explicit recursion."""
    plant = builtin_plant(1)
    b, a = lti.lfilter_coeffs(plant.linear_block)
    phi = plant.input_nonlinearity
    n = len(r)
    y, u, w = np.zeros(n), np.zeros(n), np.zeros(n)
    z = 0.0
    for t in range(n):
        acc = 0.0
        for i in range(1, len(a)):
            if t - i >= 0:
                acc += b[i] * w[t - i] - a[i] * y[t - i]
        y[t] = acc
        u[t] = k * z
        w[t] = phi(u[t])
        z += r[t] - y[t]
    return y, u


class TestReference:
    def test_default_shape(self):
        r = eval_reference()
        assert r.shape == (600,)
        np.testing.assert_array_equal(r[[0, 149, 150, 300, 599]], [2, 2, 6, -2, -6])

    def test_bad_dwell(self):
        with pytest.raises(ValueError):
            eval_reference(dwell=0)

    def test_desired_response_settles(self, td):
        yd = desired_response(td, np.ones(400))
        assert yd[0] == 0 and yd[1] == 0
        assert yd[-1] == pytest.approx(1.0, abs=1e-8)
        assert lti.settling_time(td) == 57


class TestCost:
    def test_examples(self):
        assert mr_cost([1, 2, 3], [1, 2, 3]) == 0
        assert mr_cost([0, 0], [3, 4]) == 25

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mr_cost([1, 2], [1])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=30), st.floats(-10, 10))
    def test_shift_invariance(self, y, c):
        y = np.array(y)
        assert mr_cost(y + c, y + c + 1) == pytest.approx(mr_cost(y, y + 1))
        assert mr_cost(y, y) == 0


class TestIdealLoop:
    @pytest.mark.parametrize("plant_id", [1, 2])
    def test_tracks_reference_model(self, td, plant_id):
        r = eval_reference()
        res = simulate_closed_loop(builtin_plant(plant_id), ideal_controller(plant_id), r, td)
        assert res.stable
        assert np.max(np.abs(res.y - res.y_d)) <= 1e-9
        assert res.J <= 1e-15

    def test_unknown_plant(self):
        with pytest.raises(ValueError):
            IdealController(3)

    def test_zero_reference_stays_at_rest(self, td):
        res = simulate_closed_loop(builtin_plant(2), ideal_controller(2), np.zeros(100), td)
        assert not res.y.any() and not res.u.any() and res.J == 0

    def test_noise_enters_output(self, td):
        r = eval_reference()
        clean = simulate_closed_loop(builtin_plant(1), ideal_controller(1), r, td)
        noisy = simulate_closed_loop(builtin_plant(1), ideal_controller(1), r, td, NoiseSpec(0.01, 3))
        assert noisy.stable and noisy.J > clean.J

    def test_reusable_controller(self, td):
        ctrl = ideal_controller(1)
        r = eval_reference()
        first = simulate_closed_loop(builtin_plant(1), ctrl, r, td)
        second = simulate_closed_loop(builtin_plant(1), ctrl, r, td)
        np.testing.assert_array_equal(first.y, second.y)


class TestLoopMechanics:
    def test_matches_hand_recursion(self, td):
        r = eval_reference(dwell=60)
        res = simulate_closed_loop(builtin_plant(1), ConstantGain(0.02), r, td, oscillation_tol=None)
        y, u = linear_plant_free_loop(0.02, r)
        np.testing.assert_allclose(res.y, y, atol=1e-12)
        np.testing.assert_allclose(res.u, u, atol=1e-12)

    def test_causality(self, td, rng):
        r = rng.uniform(-3, 3, 200)
        base = simulate_closed_loop(builtin_plant(2), ideal_controller(2), r, td, oscillation_tol=None)
        r2 = r.copy()
        r2[120:] += rng.normal(size=80)
        pert = simulate_closed_loop(builtin_plant(2), ideal_controller(2), r2, td, oscillation_tol=None)
        # u(t) depends on r up to t-1 and y(t) on u up to t-1
        np.testing.assert_array_equal(base.u[:121], pert.u[:121])
        np.testing.assert_array_equal(base.y[:122], pert.y[:122])

    def test_divergence_truncates(self, td):
        res = simulate_closed_loop(builtin_plant(1), ConstantGain(50.0), eval_reference(), td)
        assert not res.stable and res.failure == "diverged"
        assert res.J == float("inf")
        k = res.divergence_index
        assert res.y.size == res.u.size == res.r.size == res.y_d.size == k - 1
        assert np.all(np.abs(res.y) <= DIVERGENCE_LIMIT)

    def test_oscillation_flagged(self, td):
        # integral gain large enough for a limit cycle but not for divergence
        r = eval_reference()
        res = simulate_closed_loop(builtin_plant(1), ConstantGain(0.2), r, td)
        plain = simulate_closed_loop(builtin_plant(1), ConstantGain(0.2), r, td, oscillation_tol=None)
        if plain.failure == "diverged":
            pytest.skip("gain diverges on this plant")
        assert not res.stable and res.failure == "oscillating"
        assert res.y.size == res.divergence_index - 1

    def test_nonfinite_controller_output_is_divergence(self, td):
        rho = np.zeros(20)
        rho[-1] = 1e300
        params = ControllerParams(rho, polynomial_dictionary(20))
        res = simulate_closed_loop(builtin_plant(1), DictionaryController(params), eval_reference(), td)
        assert res.failure == "diverged"

    def test_dictionary_controller_realizes_ideal(self, td):
        rho = np.zeros(20)
        rho[[0, 2, 12]] = [10, -7.2, 1.2]
        ctrl = DictionaryController(ControllerParams(rho, deadzone_dictionary(20)))
        res = simulate_closed_loop(builtin_plant(1), ctrl, eval_reference(), td)
        assert res.stable and np.max(np.abs(res.y - res.y_d)) <= 1e-9

    def test_zero_controller(self, td):
        ctrl = DictionaryController(ControllerParams(np.zeros(5), polynomial_dictionary(5)))
        res = simulate_closed_loop(builtin_plant(1), ctrl, eval_reference(), td, oscillation_tol=None)
        assert not res.u.any() and not res.y.any()


class TestOscillationDetector:
    def test_settled_output(self):
        r = np.repeat([1.0, -1.0], 60)
        assert find_sustained_oscillation(r, r) is None

    def test_alternating_tail(self):
        r = np.repeat([1.0, -1.0], 60)
        y = r.copy()
        y[100:] += 0.2 * (-1) ** np.arange(20)
        assert find_sustained_oscillation(r, y) == 61 + 60 - 20

    def test_short_holds_ignored(self):
        r = np.repeat([1.0, -1.0, 1.0], 20)
        y = np.sin(np.arange(60))
        assert find_sustained_oscillation(r, y) is None


class TestResultIO:
    def test_csv_and_summary(self, tmp_path, td):
        import csv
        import json
        res = simulate_closed_loop(builtin_plant(1), ideal_controller(1), eval_reference(), td)
        res.write_csv(tmp_path / "c.csv")
        rows = list(csv.reader((tmp_path / "c.csv").open()))
        assert rows[0] == ["t", "r", "y", "y_d", "u"] and len(rows) == 601
        res.write_summary(tmp_path / "s.json", extra={"seed": 3})
        doc = json.loads((tmp_path / "s.json").read_text())
        assert doc["stable"] and doc["seed"] == 3 and doc["nonzero_count"] is None
