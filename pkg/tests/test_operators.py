import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singularpdo.operators import (
    DOF_BUDGET,
    ConvergenceError,
    SizeError,
    TruncationLadder,
    apply_oscillatory,
    apply_pseudo,
    assemble_matrix,
    compose,
    identity_operator,
    multiplier_operator,
    operator_norm,
    oscillatory_matrix,
    oscillatory_operator,
    power_iteration,
    pseudo_operator,
    quantization_matrix,
    singular_derivative,
    singular_weight_operator,
    smooth_cutoff,
)
from singularpdo.sobolev import NormParams
from singularpdo.spectral_core import Field, GridSpec, random_field
from singularpdo.symbols import (
    FunctionAmplitude,
    get_profile,
    get_symbol,
    singular_amplitude,
    singular_symbol,
    symbol_as_amplitude,
)


def _profiles(grid):
    if grid.is_pulse:
        return get_profile("pulse-gauss"), get_profile("pulse-gauss2")
    return get_profile("cos-wave"), get_profile("sin-wave")


class TestQuantizationOracle:
    @pytest.mark.parametrize("name", ["shifted-resolvent", "transport", "rotation", "multiplication"])
    def test_fft_path_matches_dense_kernel(self, small_grid, rng, name):
        V, _ = _profiles(small_grid)
        a = singular_symbol(get_symbol(name), V, small_grid, 0.25, 2.0)
        A = quantization_matrix(a, small_grid)
        op = pseudo_operator(a, small_grid)
        for _ in range(3):
            u = random_field(small_grid, rng, N=a.N)
            np.testing.assert_allclose(op.apply(u).flat(), A @ u.flat(), atol=1e-10)

    def test_multiplier_path_matches_general_path(self, small_grid, rng):
        a = singular_symbol(get_symbol("bracket"), get_profile("constant"), small_grid, 0.125, 1.0)
        u = random_field(small_grid, rng)
        fast = pseudo_operator(a, small_grid).apply(u).flat()
        slow = pseudo_operator(a, small_grid, force_general=True).apply(u).flat()
        np.testing.assert_allclose(fast, slow, atol=1e-10 * np.abs(slow).max())

    def test_identity_symbol(self, small_grid, rng):
        a = singular_symbol(get_symbol("identity"), get_profile("cos-wave"), small_grid, 0.5, 1.0)
        u = random_field(small_grid, rng)
        np.testing.assert_allclose(apply_pseudo(a, u).values, u.values, atol=1e-12)

    def test_multiplication_symbol_is_pointwise(self, torus_grid, rng):
        V = get_profile("cos-wave")
        a = singular_symbol(get_symbol("multiplication"), V, torus_grid, 0.5, 1.0)
        u = random_field(torus_grid, rng)
        expected = np.exp(0.5 * V(torus_grid.points)[:, 0]) * u.flat()
        np.testing.assert_allclose(pseudo_operator(a, torus_grid, force_general=True).apply(u).flat(), expected,
                                   atol=1e-12)

    def test_component_mismatch(self, torus_grid):
        a = singular_symbol(get_symbol("rotation"), get_profile("cos-wave"), torus_grid, 0.5, 1.0)
        with pytest.raises(ValueError):
            apply_pseudo(a, random_field(torus_grid, 0, N=1))


class TestOscillatoryOracle:
    def test_apply_matches_dense(self, small_grid, rng):
        V, W = _profiles(small_grid)
        amp = singular_amplitude(get_symbol("amp-resolvent"), V, W, small_grid, 0.5, 1.0)
        op = oscillatory_operator(amp, small_grid)
        A = oscillatory_matrix(amp, small_grid)
        u = random_field(small_grid, rng)
        np.testing.assert_allclose(op.apply(u).flat(), A @ u.flat(), atol=1e-10)

    def test_symbol_viewed_as_amplitude(self, small_grid, rng):
        V, _ = _profiles(small_grid)
        a = singular_symbol(get_symbol("shifted-resolvent"), V, small_grid, 0.5, 1.0)
        A1 = quantization_matrix(a, small_grid)
        A2 = oscillatory_matrix(symbol_as_amplitude(a), small_grid)
        np.testing.assert_allclose(A1, A2, atol=1e-12)

    def test_y_only_amplitude_is_multiplication_then_identity(self, torus_grid, rng):
        g = lambda Y: 1.0 + 0.5 * np.cos(Y[..., 0])  # noqa: E731
        amp = FunctionAmplitude(lambda X, Y, F: np.broadcast_to(
            g(Y), np.broadcast_shapes(X.shape[:-1], Y.shape[:-1], F.shape[:-1])))
        u = random_field(torus_grid, rng)
        out = oscillatory_operator(amp, torus_grid).apply(u).flat()
        np.testing.assert_allclose(out, g(torus_grid.points) * u.flat(), atol=1e-12)


class TestLadder:
    def test_stabilizes_below_threshold(self, torus_grid, rng):
        amp = singular_amplitude(get_symbol("amp-mixed"), get_profile("cos-wave"), get_profile("sin-wave"),
                                 torus_grid, 0.5, 1.0)
        u = random_field(torus_grid, rng)
        out, rep = apply_oscillatory(amp, u)
        assert rep.exact
        thr = torus_grid.lattice_threshold()
        for dl, diff in zip(rep.deltas, rep.differences):
            if dl <= thr:
                assert diff == 0.0
        ref = oscillatory_operator(amp, torus_grid).apply(u)
        np.testing.assert_allclose(out.flat(), ref.flat(), atol=1e-12)

    def test_scaling_of_cutoffs(self, torus_grid, rng):
        amp = singular_amplitude(get_symbol("amp-resolvent"), get_profile("cos-wave"), get_profile("sin-wave"),
                                 torus_grid, 0.5, 1.0)
        u = random_field(torus_grid, rng)
        base, _ = apply_oscillatory(amp, u, TruncationLadder.default(torus_grid))
        scaled, _ = apply_oscillatory(amp, u, TruncationLadder.default(torus_grid, c1=3.0, c2=0.5))
        np.testing.assert_allclose(scaled.flat(), 1.5 * base.flat(), atol=1e-12)

    def test_rejects_bad_sequence(self):
        with pytest.raises(ValueError):
            TruncationLadder((1.0, 1.0))
        with pytest.raises(ValueError):
            TruncationLadder(())

    @settings(max_examples=40, deadline=None)
    @given(t=st.floats(-5, 5))
    def test_cutoff_profile(self, t):
        c = float(smooth_cutoff(t))
        assert 0.0 <= c <= 1.0
        if abs(t) <= 1:
            assert c == 1.0
        if abs(t) >= 2:
            assert c == 0.0


class TestNorms:
    def test_power_iteration_matches_svd(self, rng):
        A = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
        est = power_iteration(lambda U: A @ U, lambda U: A.conj().T @ U, 40, iters=2000, tol=1e-12)
        assert abs(est - np.linalg.norm(A, 2)) <= 1e-6 * est

    def test_power_iteration_reports_nonconvergence(self, rng):
        A = rng.standard_normal((60, 60))
        with pytest.raises(ConvergenceError):
            power_iteration(lambda U: A @ U, lambda U: A.T @ U, 60, iters=2, tol=1e-15, block=1)

    def test_multiplier_norm_is_max_value(self, torus_grid):
        m = np.linspace(0.5, 3.0, torus_grid.dof)
        op = multiplier_operator(torus_grid, m)
        assert operator_norm(op) == pytest.approx(3.0, abs=1e-14)
        assert operator_norm(op, method="DenseSVD") == pytest.approx(3.0, rel=1e-12)

    def test_size_budget(self):
        big = GridSpec("wavetrain", d=1, Nx=128, Kmax=32)
        assert big.dof > DOF_BUDGET
        a = singular_symbol(get_symbol("smoothing"), get_profile("cos-wave"), big, 0.5, 1.0)
        with pytest.raises(SizeError):
            quantization_matrix(a, big)

    def test_adjoint_of_dense(self, torus_grid, rng):
        a = singular_symbol(get_symbol("transport"), get_profile("cos-wave"), torus_grid, 0.5, 1.0)
        op = pseudo_operator(a, torus_grid)
        u, v = random_field(torus_grid, rng), random_field(torus_grid, rng)
        lhs = np.vdot(v.flat(), op.apply(u).flat())
        rhs = np.vdot(op.adjoint().apply(v).flat(), u.flat())
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


class TestSingularDerivative:
    @pytest.mark.parametrize("eps", [1.0, 2.0**-4, 2.0**-8])
    def test_matches_pseudo_symbol(self, torus_grid, rng, eps):
        a = singular_symbol(get_symbol("ixi1"), get_profile("cos-wave"), torus_grid, eps, 1.0)
        Z = singular_derivative(0, NormParams(epsilon=eps), torus_grid)
        u = random_field(torus_grid, rng)
        ref = pseudo_operator(a, torus_grid, force_general=True).apply(u).flat()
        got = Z.apply(u).flat()
        assert np.max(np.abs(got - ref)) <= 1e-12 * max(1.0, np.abs(ref).max())

    def test_acts_as_directional_derivative(self):
        grid = GridSpec("wavetrain", d=1, Nx=16, Kmax=3)
        P = grid.points
        f = np.exp(1j * (P[:, 0] + 2 * np.pi * P[:, 1]))
        u = Field(grid, f.reshape(grid.shape + (1,)))
        out = singular_derivative(0, NormParams(epsilon=0.5, beta=(1.0,)), grid).apply(u).flat()
        np.testing.assert_allclose(out, 1j * (1 + 2 * np.pi / 0.5) * f, atol=1e-10)

    @pytest.mark.parametrize("m", [1, 2, -1])
    def test_bracket_isometry(self, torus_grid, m):
        p = NormParams(gamma=2.0, epsilon=2.0**-6)
        a = singular_symbol(get_symbol("bracket", m=m), get_profile("constant"), torus_grid, p.epsilon, p.gamma)
        op = compose(pseudo_operator(a, torus_grid), singular_weight_operator(torus_grid, p, -m))
        assert abs(operator_norm(op) - 1.0) <= 1e-10

    def test_compose_with_identity(self, torus_grid, rng):
        a = singular_symbol(get_symbol("shifted-resolvent"), get_profile("cos-wave"), torus_grid, 0.5, 1.0)
        op = pseudo_operator(a, torus_grid)
        both = compose(identity_operator(torus_grid), op)
        np.testing.assert_allclose(assemble_matrix(both), assemble_matrix(op), atol=1e-14)
