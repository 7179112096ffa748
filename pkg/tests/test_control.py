import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpcert.control import (
    Containment,
    ControllerGains,
    GPModel,
    Plant,
    SimulationTrace,
    TwoLinkArm,
    bound_radii,
    containment,
    integrate,
    lyapunov_check,
    manipulator_plant,
    policy,
    simulate,
    sinusoid,
    synthetic_drift,
    synthetic_plant,
    tracking_errors,
    tracking_policy,
    ultimate_bound_radius,
)
from gpcert.errors import DivergenceError, DomainError


def zero_plant(n_dof=1):
    return Plant("zero", n_dof, lambda x: np.zeros(n_dof))


class TestGainsAndReference:
    @pytest.mark.parametrize("k_c,lam", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
    def test_gains_positive(self, k_c, lam):
        with pytest.raises(ValueError):
            ControllerGains(k_c, lam)

    def test_sinusoid_derivatives_consistent(self):
        ref = sinusoid([2.0, 0.5], [1.0, 3.0], [0.0, 0.4], [0.0, 1.0])
        assert ref.max_derivative_mismatch(np.linspace(0, 10, 37), step=1e-5) <= 1e-6


class TestPolicy:
    def test_arithmetic(self):
        gains = ControllerGains(2.0, 1.0)
        # x_d = 0, so e = x = (1, 1)
        u = policy(np.array([1.0, 1.0]), lambda x: 0.0, (np.zeros(1), np.zeros(1), np.zeros(1)), gains)
        np.testing.assert_allclose(u, [-5.0])
        _, _, r = tracking_errors(np.array([1.0, 1.0]), 0.0, 0.0, gains)
        assert r == 2.0

    def test_exact_cancellation(self):
        gains = ControllerGains(3.0, 0.5)
        x = np.array([0.7, -0.2])
        ref = (np.array([0.7]), np.array([-0.2]), np.array([1.3]))
        u = policy(x, lambda z: synthetic_drift(z), ref, gains)
        np.testing.assert_allclose(u, 1.3 - synthetic_drift(x), rtol=1e-15)
        # r_dot = f - model - k_c r vanishes
        assert synthetic_drift(x) + u[0] - 1.3 == pytest.approx(0.0, abs=1e-15)

    def test_zero_model_is_pd_tracking(self):
        gains = ControllerGains(2.0, 1.0)
        ref = sinusoid(0.0)
        tr = simulate(zero_plant(), tracking_policy(lambda x: 0.0, ref, gains), ref, (0, 15), 1e-2, [1.0, -0.5], gains)
        # error dynamics have eigenvalues -lambda and -k_c; the slowest mode e^{-t} bounds the decay
        assert tr.total_error_norm()[-1] <= 5 * math.exp(-15.0)
        assert tr.total_error_norm()[-1] > 0


class TestSimulation:
    def test_equilibrium(self):
        gains = ControllerGains(2.0, 1.0)
        ref = sinusoid(1.5)
        x0 = [0.0, 1.5]  # on the reference at t = 0
        tr = simulate(zero_plant(), tracking_policy(lambda x: 0.0, ref, gains), ref, (0, 5), 1e-3, x0, gains)
        assert tr.total_error_norm().max() <= 1e-9

    def test_damped_oscillator(self):
        # x'' = -x - x' from (1, 0): x(t) = e^{-t/2} (cos wt + sin(wt) / (2w)), w = sqrt(3)/2
        w = math.sqrt(3) / 2
        times, states = integrate(lambda t, x: np.array([x[1], -x[0] - x[1]]), (0.0, 1.0), 1e-4, [1.0, 0.0])
        assert times[-1] == pytest.approx(1.0)
        exact = math.exp(-0.5) * (math.cos(w) + math.sin(w) / (2 * w))
        exact_v = -math.exp(-0.5) * math.sin(w) * (0.25 / w + w)
        assert states[-1, 0] == pytest.approx(exact, abs=1e-6)
        assert states[-1, 1] == pytest.approx(exact_v, abs=1e-6)

    def test_divergence_reports_time(self):
        # x2' = x2^2 from x2 = 1 blows up at t = 1
        with pytest.raises(DivergenceError) as info, np.errstate(over="ignore"):
            integrate(lambda t, x: np.array([x[1], x[1] ** 2]), (0.0, 3.0), 1e-3, [0.0, 1.0])
        assert 0.9 < info.value.time < 1.1

    def test_deterministic(self):
        gains = ControllerGains(2.0, 1.0)
        ref = sinusoid(2.0)
        run = lambda: simulate(synthetic_plant(), tracking_policy(lambda x: 0.0, ref, gains), ref, (0, 2), 1e-2, [-1.0, 0.0], gains)
        a, b = run(), run()
        np.testing.assert_array_equal(a.states, b.states)

    def test_trace_invariants(self):
        gains = ControllerGains(2.0, 1.0)
        ref = sinusoid(2.0)
        tr = simulate(synthetic_plant(), tracking_policy(lambda x: 0.0, ref, gains), ref, (0, 2), 1e-2, [-1.0, 0.0], gains)
        n = len(tr.times)
        assert tr.states.shape[0] == tr.controls.shape[0] == tr.tracking_error.shape[0] == tr.bound_radius.shape[0] == n
        np.testing.assert_allclose(tr.tracking_error, tr.states - tr.references, atol=0)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            integrate(lambda t, x: x, (0.0, 1.0), 0.0, [1.0])
        gains = ControllerGains(1.0, 1.0)
        with pytest.raises(ValueError):
            simulate(zero_plant(), lambda t, x: np.zeros(1), sinusoid(1.0), (0, 1), 0.1, [0.0], gains)


class TestSyntheticPlant:
    def test_origin(self):
        assert synthetic_drift(np.array([0.0, 0.0])) == pytest.approx(1.5, rel=1e-15)

    @given(st.floats(-50, 50))
    def test_sine_cancels(self, x2):
        assert synthetic_drift(np.array([math.pi / 2, x2])) == pytest.approx(1.0 / (1.0 + math.exp(-x2)), abs=1e-15)

    @given(st.floats(-1e3, 1e3), st.floats(-30, 30))
    def test_range(self, x1, x2):
        assert 0.0 <= synthetic_drift(np.array([x1, x2])) <= 3.0

    def test_control_affine_form(self):
        p = synthetic_plant()
        x = np.array([0.3, -1.2])
        np.testing.assert_allclose(p.dynamics(x, np.array([0.4])), [x[1], synthetic_drift(x) + 0.4])


class TestTwoLinkArm:
    def test_no_forces_no_motion(self):
        plant = manipulator_plant(gravity=0.0)
        dx = plant.dynamics(np.array([0.4, 0.0, -1.1, 0.0]), np.zeros(2))
        np.testing.assert_allclose(dx, 0.0, atol=1e-15)

    def test_decoupled_double_integrators_without_gravity_at_rest(self):
        arm = TwoLinkArm(gravity=0.0)
        x = np.array([0.4, 0.0, -1.1, 0.0])
        np.testing.assert_allclose(arm.drift(x), 0.0, atol=1e-15)
        np.testing.assert_allclose(arm.dynamics(x, np.array([0.3, -0.7]))[1::2], [0.3, -0.7], rtol=1e-12)

    def test_acceleration_level_input(self):
        arm = TwoLinkArm()
        rng = np.random.default_rng(0)
        for _ in range(20):
            x, u = rng.uniform(-3, 3, 4), rng.normal(size=2)
            np.testing.assert_allclose(arm.dynamics(x, u)[1::2], arm.drift(x) + u, rtol=1e-10, atol=1e-10)

    def test_mass_matrix_positive_definite(self):
        arm = TwoLinkArm()
        rng = np.random.default_rng(1)
        for q in rng.uniform(-np.pi, np.pi, (10_000, 2)):
            M = arm.mass_matrix(q)
            assert M[0, 1] == M[1, 0]
            assert M[0, 0] > 0 and np.linalg.det(M) > 0

    def test_inertia_skew_symmetry(self):
        # d/dt M(q) - 2 C(q, qd) is skew-symmetric for a correctly derived Coriolis matrix
        arm = TwoLinkArm()
        rng = np.random.default_rng(2)
        h = 1e-6
        for _ in range(50):
            q, qd = rng.uniform(-3, 3, 2), rng.uniform(-2, 2, 2)
            Mdot = (arm.mass_matrix(q + h * qd) - arm.mass_matrix(q - h * qd)) / (2 * h)
            N = Mdot - 2 * arm.coriolis(q, qd)
            np.testing.assert_allclose(N + N.T, 0.0, atol=1e-7)

    def test_gravity_is_potential_gradient(self):
        arm = TwoLinkArm()
        rng = np.random.default_rng(3)
        h = 1e-6
        for q in rng.uniform(-3, 3, (20, 2)):
            grad = [(arm.potential(q + h * e) - arm.potential(q - h * e)) / (2 * h) for e in np.eye(2)]
            np.testing.assert_allclose(arm.gravity_vector(q), grad, atol=1e-6)

    def test_passive_energy(self):
        arm = TwoLinkArm()
        _, states = integrate(lambda t, x: arm.dynamics(x, np.zeros(2)), (0.0, 10.0), 1e-3, [math.pi / 4, 0, 0, 0])
        e = np.array([arm.energy(x) for x in states])
        assert np.max(np.abs(e - e[0])) / abs(e[0]) <= 1e-3

    def test_task_space_radius_covers_displacements(self):
        arm = TwoLinkArm()
        rng = np.random.default_rng(4)
        for _ in range(2000):
            q, rho = rng.uniform(-3, 3, 2), rng.uniform(0, 1.5, 2)
            dq = rng.uniform(-1, 1, 2) * rho
            moved = np.linalg.norm(arm.forward_kinematics(q + dq) - arm.forward_kinematics(q))
            assert moved <= arm.task_space_radius(rho) + 1e-12


class TestCertifiedRadius:
    def test_scaling_and_domain(self, synthetic_model):
        cert = synthetic_model[-1]
        x = np.array([1.0, 0.5])
        r2 = ultimate_bound_radius(cert, x, ControllerGains(2.0, 1.0))
        r4 = ultimate_bound_radius(cert, x, ControllerGains(4.0, 1.0))
        assert r4 == pytest.approx(r2 / 2, rel=1e-14)
        small_lam = ultimate_bound_radius(cert, x, ControllerGains(2.0, 1e-8))
        assert small_lam == pytest.approx(cert.eta_at(x) / 2.0, rel=1e-12)
        assert r2 > 0
        with pytest.raises(DomainError):
            ultimate_bound_radius(cert, np.array([5.0, 0.0]), ControllerGains(2.0, 1.0))

    def test_smaller_near_data(self, synthetic_model):
        cert = synthetic_model[-1]
        gains = ControllerGains(2.0, 1.0)
        near = ultimate_bound_radius(cert, np.array([1.5, 0.0]), gains)
        far = ultimate_bound_radius(cert, np.array([-5.5, 3.5]), gains)
        assert near < far
        post = cert.posterior
        assert post.std(np.array([1.5, 0.0]))[0] < post.std(np.array([-5.5, 3.5]))[0]

    def test_radii_outside_domain_are_infinite(self, synthetic_model):
        cert = synthetic_model[-1]
        radii = bound_radii([cert], np.array([[0.0, 0.0], [9.0, 0.0]]), ControllerGains(2.0, 1.0))
        assert np.isfinite(radii[0, 0]) and np.isinf(radii[1, 0])


@pytest.fixture(scope="module")
def short_trace(synthetic_model):
    cert = synthetic_model[-1]
    gains = ControllerGains(2.0, 1.0)
    ref = sinusoid(2.0)
    model = GPModel((cert.posterior,))
    return simulate(synthetic_plant(), tracking_policy(model, ref, gains), ref, (0, 3), 1e-3, [-2.0, 0.0], gains, [cert]), model, gains


class TestClosedLoopIdentities:
    def test_filtered_state_derivative(self, short_trace):
        tr, model, gains = short_trace
        dt = tr.times[1] - tr.times[0]
        r = tr.filtered_state[:, 0]
        r_dot = (r[2:] - r[:-2]) / (2 * dt)
        inner = tr.states[1:-1]
        predicted = synthetic_drift(inner) - model.mean(inner)[:, 0] - gains.k_c * r[1:-1]
        assert np.max(np.abs(r_dot - predicted)) <= 1e-4

    def test_rk4_order(self, synthetic_model):
        cert = synthetic_model[-1]
        gains = ControllerGains(2.0, 1.0)
        ref = sinusoid(2.0)
        ctrl = tracking_policy(GPModel((cert.posterior,)), ref, gains)
        finals = [simulate(synthetic_plant(), ctrl, ref, (0, 2), dt, [-2.0, 0.0], gains).states[-1] for dt in (0.04, 0.02, 0.01)]
        order = math.log2(np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2]))
        assert order >= 3.5


class TestContainmentAndLyapunov:
    def _trace(self, err, radius):
        n = len(err)
        t = np.arange(n, dtype=float)
        errs = np.column_stack([err, np.zeros(n)])
        return SimulationTrace(t, errs, np.zeros((n, 1)), errs, errs[:, :1], np.asarray(radius, float)[:, None], np.zeros((n, 2)))

    def test_entry_and_violation_counting(self):
        tr = self._trace([5, 3, 1, 0.5, 2, 0.1], [2, 2, 2, 2, 1, 1])
        c = containment(tr)
        assert (c.entry_index, c.violations_after_entry, c.samples_after_entry) == (2, 1, 4)
        assert not c.contained
        assert containment(tr, start_index=5).contained

    def test_never_enters(self):
        c = containment(self._trace([5, 5], [1, 1]))
        assert c == Containment(None, None, 0, 0)
        assert not c.contained

    def test_multi_dof_needs_index(self):
        tr = self._trace([1.0], [2.0])
        tr.filtered_state = np.zeros((1, 2))
        with pytest.raises(ValueError):
            containment(tr)

    def test_lyapunov_decrease_outside_ball(self, synthetic_model):
        # states with large filtered error: V_dot = r (f - model - k_c r) must be negative there
        cert = synthetic_model[-1]
        gains = ControllerGains(2.0, 1.0)
        model = GPModel((cert.posterior,))
        rng = np.random.default_rng(0)
        states = cert.domain.sample(400, rng)
        n = len(states)
        eta = cert.eta(states)
        r = np.sign(rng.normal(size=n)) * (eta / gains.k_c) * rng.uniform(1.01, 3.0, n)
        tr = SimulationTrace(np.arange(n, dtype=float), states, np.zeros((n, 1)), np.zeros((n, 2)), r[:, None], np.zeros((n, 1)))
        checked, violations = lyapunov_check(tr, [cert], lambda x: np.atleast_1d(synthetic_drift(x)), model, gains)
        assert checked == n
        assert violations == 0

    def test_lyapunov_detects_wrong_model(self, synthetic_model):
        cert = synthetic_model[-1]
        gains = ControllerGains(2.0, 1.0)
        states = np.array([[0.0, 0.0]])
        r = np.array([[cert.eta(states)[0] / gains.k_c * 1.1]])
        tr = SimulationTrace(np.zeros(1), states, np.zeros((1, 1)), np.zeros((1, 2)), r, np.zeros((1, 1)))
        bad_model = lambda x: np.array([synthetic_drift(x) - 1e6])
        assert lyapunov_check(tr, [cert], lambda x: np.atleast_1d(synthetic_drift(x)), bad_model, gains) == (1, 1)
