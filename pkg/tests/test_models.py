"""Tests for vector-field models, RK4 integration, expm, and the Duhamel solver."""

import numpy as np
import pytest

from gradmatch.errors import BlowupError, EmptyInputError, InvalidMatrixError
from gradmatch.models import (
    MODEL_REGISTRY,
    PartiallyLinearSystem,
    Trajectory,
    damped_linear_field,
    duhamel_solve,
    get_model_spec,
    glv_field,
    integrate,
    matrix_exponential,
    read_trajectory_csv,
    write_trajectory_csv,
)

THETA_CASE1 = np.array([0.0, -1.5, 1.0, 2.0, 0.0, -1.5])


def numeric_jacobian(fun, x, h=1e-6):
    """Central-difference Jacobian oracle."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((fun(x + e) - fun(x - e)) / (2 * h))
    return np.stack(cols, axis=-1)


class TestGLVField:
    def test_hand_value(self):
        model = glv_field()
        got = model.field(0.0, np.array([1.0, 2.0]), THETA_CASE1)
        np.testing.assert_allclose(got, [-2.0, 1.0])

    def test_batched_evaluation(self):
        model = glv_field()
        states = np.array([[1.0, 2.0], [4.0, 2.0], [0.5, 0.5]])
        batched = model.field(np.zeros(3), states, THETA_CASE1)
        rows = np.array([model.field(0.0, s, THETA_CASE1) for s in states])
        np.testing.assert_allclose(batched, rows)

    def test_state_jacobian_matches_differences(self):
        model = glv_field()
        rng = np.random.default_rng(0)
        for _ in range(10):
            x = rng.uniform(0.2, 4.0, 2)
            theta = rng.normal(size=6)
            got = model.jacobian_state(0.0, x, theta)
            want = numeric_jacobian(lambda s: model.field(0.0, s, theta), x)
            np.testing.assert_allclose(got, want, atol=1e-5)

    def test_param_jacobian_matches_differences(self):
        model = glv_field()
        rng = np.random.default_rng(1)
        for _ in range(10):
            x = rng.uniform(0.2, 4.0, 2)
            theta = rng.normal(size=6)
            got = model.jacobian_param(0.0, x, theta)
            want = numeric_jacobian(lambda th: model.field(0.0, x, th), theta)
            np.testing.assert_allclose(got, want, atol=1e-5)

    def test_param_jacobian_rows(self):
        model = glv_field()
        x, y = 1.3, 0.7
        jac = model.jacobian_param(0.0, np.array([x, y]), THETA_CASE1)
        np.testing.assert_allclose(jac[0], [x * x, x * y, x, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(jac[1], [0.0, 0.0, 0.0, x * y, y * y, y])

    def test_linear_decomposition_exact(self):
        # field == basis @ theta_free + offset for any theta matching the mask
        mask = np.array([True, False, False, False, True, False])
        fixed_values = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 0.0])
        model = glv_field(mask, fixed_values)
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = rng.uniform(0.1, 5.0, 2)
            theta = rng.normal(size=6)
            theta[mask] = fixed_values[mask]
            direct = model.field(0.0, x, theta)
            recomposed = model.linear_basis(0.0, x) @ theta[~mask] + model.linear_offset(0.0, x)
            np.testing.assert_allclose(recomposed, direct, atol=1e-12)

    def test_free_indices(self):
        mask = np.array([True, False, False, False, True, False])
        model = glv_field(mask)
        np.testing.assert_array_equal(model.free_indices, [1, 2, 3, 5])
        assert model.n_free == 4

    def test_registry(self):
        spec = get_model_spec("glv")
        model = spec.build({"a1": 0.0, "b2": 1.0})
        assert model.n_free == 4
        with pytest.raises(KeyError):
            get_model_spec("unknown-model")
        with pytest.raises(KeyError):
            spec.build({"nope": 1.0})
        assert set(MODEL_REGISTRY) == {"glv", "classic-lv", "custom-linear-partial"}


class TestDampedLinearField:
    def test_jacobians_match_differences(self):
        model = damped_linear_field()
        rng = np.random.default_rng(3)
        for _ in range(5):
            x = rng.normal(size=2)
            theta = rng.normal(size=2)
            np.testing.assert_allclose(
                model.jacobian_state(0.0, x, theta),
                numeric_jacobian(lambda s: model.field(0.0, s, theta), x),
                atol=1e-6,
            )
            np.testing.assert_allclose(
                model.jacobian_param(0.0, x, theta),
                numeric_jacobian(lambda th: model.field(0.0, x, th), theta),
                atol=1e-6,
            )

    def test_linear_decomposition(self):
        model = damped_linear_field()
        x = np.array([1.5, -0.5])
        theta = np.array([-4.0, -0.3])
        np.testing.assert_allclose(
            model.linear_basis(0.0, x) @ theta + model.linear_offset(0.0, x),
            model.field(0.0, x, theta),
            atol=1e-14,
        )


class TestIntegrate:
    def test_linear_system_exact_solution(self):
        # u' = v, v' = -u: solution (cos t, -sin t) from (1, 0)... sign check:
        # with th1 = -1, th2 = 0: u(t) = cos t, v(t) = -sin t
        model = damped_linear_field()
        ts = np.linspace(0.0, 6.0, 61)
        traj = integrate(model, np.array([-1.0, 0.0]), np.array([1.0, 0.0]), ts, tol=1e-10)
        np.testing.assert_allclose(traj.states[:, 0], np.cos(ts), atol=1e-8)
        np.testing.assert_allclose(traj.states[:, 1], -np.sin(ts), atol=1e-8)

    def test_classic_lv_first_integral_conserved(self):
        # with a1 = b2 = 0 the quantity b1 x + b3 ln x - a2 y - a3 ln y is
        # conserved along trajectories
        model = glv_field()
        a2, a3, b1, b3 = -1.5, 1.0, 2.0, -1.5
        ts = np.linspace(0.0, 20.0, 201)
        traj = integrate(model, THETA_CASE1, np.array([1.0, 2.0]), ts, tol=1e-10)
        x = traj.states[:, 0]
        y = traj.states[:, 1]
        v = b1 * x + b3 * np.log(x) - a2 * y - a3 * np.log(y)
        np.testing.assert_allclose(v, v[0], atol=1e-7)

    def test_tightening_tol_converges(self):
        model = glv_field()
        ts = np.linspace(0.0, 10.0, 101)
        x0 = np.array([1.0, 2.0])
        loose = integrate(model, THETA_CASE1, x0, ts, tol=1e-6)
        tight = integrate(model, THETA_CASE1, x0, ts, tol=1e-11)
        assert np.max(np.abs(loose.states - tight.states)) < 1e-5

    def test_blowup_raises_with_escape_time(self):
        # x' = x^2 from x = 1 blows up at t = 1
        model = glv_field()
        theta = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        with pytest.raises(BlowupError) as err:
            integrate(model, theta, np.array([1.0, 1.0]), np.linspace(0.0, 2.0, 21))
        assert err.value.escape_time is not None
        assert 0.9 < err.value.escape_time < 1.1

    def test_needs_two_grid_points(self):
        model = glv_field()
        with pytest.raises(EmptyInputError):
            integrate(model, THETA_CASE1, np.array([1.0, 2.0]), np.array([0.0]))


class TestMatrixExponential:
    def test_symmetric_against_eigendecomposition(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            m = rng.normal(size=(4, 4))
            sym = 0.5 * (m + m.T)
            w, q = np.linalg.eigh(sym)
            want = q @ np.diag(np.exp(w)) @ q.T
            np.testing.assert_allclose(matrix_exponential(sym), want, atol=1e-11)

    def test_nilpotent_closed_form(self):
        n = np.array([[0.0, 1.0], [0.0, 0.0]])
        np.testing.assert_allclose(matrix_exponential(n), [[1.0, 1.0], [0.0, 1.0]], atol=1e-15)

    def test_time_scaling(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(3, 3))
        np.testing.assert_allclose(
            matrix_exponential(a, 0.7), matrix_exponential(0.7 * a), atol=1e-12
        )

    def test_large_norm_scaled_and_squared(self):
        a = np.diag([3.0, -40.0])
        np.testing.assert_allclose(
            matrix_exponential(a), np.diag(np.exp([3.0, -40.0])), rtol=1e-12, atol=1e-25
        )

    def test_rejects_bad_input(self):
        with pytest.raises(InvalidMatrixError):
            matrix_exponential(np.array([[np.inf, 0.0], [0.0, 1.0]]))
        with pytest.raises(InvalidMatrixError):
            matrix_exponential(np.zeros((2, 3)))


class TestDuhamel:
    def test_zero_matrix_reduces_to_quadrature(self):
        # A = 0: v(t) = v0 + integral of forcing
        ts = np.linspace(0.0, 2.0, 21)
        got = duhamel_solve(np.zeros((1, 1)), lambda t: np.atleast_1d(np.cos(t)), [0.5], ts)
        want = 0.5 + np.sin(ts)
        np.testing.assert_allclose(got[:, 0], want, atol=1e-4)

    def test_homogeneous_matches_expm(self):
        rng = np.random.default_rng(6)
        a = rng.normal(size=(2, 2)) * 0.5
        v0 = rng.normal(size=2)
        ts = np.linspace(0.0, 3.0, 31)
        got = duhamel_solve(a, lambda t: np.zeros(2), v0, ts)
        want = np.array([matrix_exponential(a, t) @ v0 for t in ts])
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_constant_forcing_closed_form(self):
        # v' = a v + c with scalar a: v(t) = (v0 + c/a) e^{a t} - c/a
        a, c, v0 = -0.8, 2.0, 1.0
        ts = np.linspace(0.0, 4.0, 41)
        got = duhamel_solve(np.array([[a]]), lambda t: np.atleast_1d(c), [v0], ts, substeps=32)
        want = (v0 + c / a) * np.exp(a * ts) - c / a
        np.testing.assert_allclose(got[:, 0], want, atol=1e-5)

    def test_matches_rk4_on_oscillator(self):
        # forced oscillator solved both ways
        a = np.array([[0.0, 1.0], [-4.0, -0.4]])
        forcing = lambda t: np.array([0.0, np.sin(3 * t)])
        ts = np.linspace(0.0, 5.0, 201)
        got = duhamel_solve(a, forcing, np.array([1.0, 0.0]), ts, substeps=64)

        class _Lin:
            def field(self, t, x, theta):
                return a @ x + forcing(t)

        ref = integrate(_Lin(), np.zeros(0), np.array([1.0, 0.0]), ts, tol=1e-10)
        np.testing.assert_allclose(got, ref.states, atol=2e-4)

    def test_substep_floor(self):
        # even substeps=1 is promoted to 8
        ts = np.array([0.0, 1.0])
        lo = duhamel_solve(np.zeros((1, 1)), lambda t: np.atleast_1d(t), [0.0], ts, substeps=1)
        assert lo[-1, 0] == pytest.approx(0.5, abs=1e-2)

    def test_blowup_guard(self):
        a = np.array([[50.0]])
        with pytest.raises(BlowupError):
            duhamel_solve(a, lambda t: np.atleast_1d(0.0), [1.0], np.linspace(0.0, 10.0, 11))


class TestTrajectoryIO:
    def test_roundtrip_full_precision(self, tmp_path):
        rng = np.random.default_rng(7)
        traj = Trajectory(
            times=np.sort(rng.uniform(0, 10, 20)),
            states=rng.normal(size=(20, 3)),
        )
        path = tmp_path / "traj.csv"
        write_trajectory_csv(traj, path)
        back = read_trajectory_csv(path)
        np.testing.assert_array_equal(back.times, traj.times)
        np.testing.assert_array_equal(back.states, traj.states)
        header = path.read_text().splitlines()[0]
        assert header == "t,y1,y2,y3"

    def test_trajectory_validation(self):
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0, 0.0, 1.0]), states=np.zeros((3, 1)))
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0, 1.0]), states=np.array([[1.0], [np.nan]]))
        with pytest.raises(EmptyInputError):
            Trajectory(times=np.array([]), states=np.zeros((0, 1)))

    def test_partially_linear_container(self):
        sys = PartiallyLinearSystem(
            d_obs=1,
            d_hidden=1,
            g=lambda u, v, eta: v,
            h=lambda u, eta: eta[0] * u,
            n_eta=1,
        )
        assert sys.d_obs == 1
