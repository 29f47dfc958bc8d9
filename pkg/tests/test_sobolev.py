import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singularpdo.sobolev import (
    GeometryError,
    NormParams,
    ParameterError,
    pulse_singular_norm,
    singular_norm,
    singular_norm_via_derivatives,
    sobolev_norm,
)
from singularpdo.spectral_core import GridSpec, l2_norm, plane_wave, random_field


class TestNormParams:
    def test_gamma_below_one(self):
        with pytest.raises(ParameterError):
            NormParams(gamma=0.5)

    @pytest.mark.parametrize("eps", [0.0, -0.1, 1.5])
    def test_epsilon_range(self, eps):
        with pytest.raises(ParameterError):
            NormParams(epsilon=eps)

    def test_zero_beta(self):
        with pytest.raises(ParameterError):
            NormParams(beta=(0.0,))

    def test_beta_dimension(self):
        grid = GridSpec("wavetrain", d=2, Nx=4, Kmax=1)
        with pytest.raises(ParameterError):
            NormParams(beta=(1.0, 0.0, 1.0)).beta_for(grid)


class TestPlaneWaveOracle:
    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0, -1.0])
    def test_singular_norm_of_plane_wave(self, s):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=3)
        p = NormParams(s=s, gamma=2.0, epsilon=0.25, beta=(1.5,))
        u = plane_wave(grid, 3, 2)
        xi, k = grid.xi_axis[3], grid.k_axis[2]
        zeta = xi + 2 * np.pi * k * 1.5 / 0.25
        weight = (4.0 + zeta**2) ** (s / 2)
        assert math.isclose(singular_norm(u, p), weight * l2_norm(u), rel_tol=1e-12)

    def test_sobolev_norm_of_plane_wave(self):
        grid = GridSpec("pulse", d=1, Nx=8, Theta=2.0, Ntheta=8)
        u = plane_wave(grid, 1, 3)
        xi, k = grid.xi_axis[1], grid.k_axis[3]
        expected = (1.0 + xi**2 + k**2) ** 0.5 * l2_norm(u)
        assert math.isclose(sobolev_norm(u, 1.0, 1.0), expected, rel_tol=1e-12)


class TestNormIdentities:
    def test_zero_index_is_l2(self, small_grid, rng):
        u = random_field(small_grid, rng)
        p = NormParams(s=0.0, gamma=3.0, epsilon=0.1)
        assert math.isclose(singular_norm(u, p), l2_norm(u), rel_tol=1e-13)
        assert math.isclose(sobolev_norm(u, 0.0, 3.0), l2_norm(u), rel_tol=1e-13)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_derivative_route_agrees(self, small_grid, rng, m):
        u = random_field(small_grid, rng, N=2)
        p = NormParams(s=m, gamma=1.5, epsilon=0.5)
        a = singular_norm(u, p)
        b = singular_norm_via_derivatives(u, m, p)
        assert abs(a - b) <= 1e-12 * a

    def test_derivative_route_two_dimensions(self, rng):
        grid = GridSpec("wavetrain", d=2, Nx=4, Kmax=2)
        u = random_field(grid, rng)
        p = NormParams(s=2, gamma=2.0, epsilon=0.125, beta=(1.0, -0.5))
        a = singular_norm(u, p)
        assert abs(a - singular_norm_via_derivatives(u, 2, p)) <= 1e-12 * a

    def test_noninteger_order_rejected(self, torus_grid):
        u = random_field(torus_grid, 0)
        with pytest.raises(ParameterError):
            singular_norm_via_derivatives(u, 1.5, NormParams())

    @settings(max_examples=25, deadline=None)
    @given(s1=st.floats(-2, 2), s2=st.floats(-2, 2), seed=st.integers(0, 10_000))
    def test_monotone_in_index(self, s1, s2, seed):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=2)
        u = random_field(grid, seed)
        lo, hi = sorted((s1, s2))
        a = singular_norm(u, NormParams(s=lo, gamma=1.0, epsilon=0.5))
        b = singular_norm(u, NormParams(s=hi, gamma=1.0, epsilon=0.5))
        assert a <= b * (1 + 1e-12)

    @settings(max_examples=25, deadline=None)
    @given(g1=st.floats(1, 50), g2=st.floats(1, 50))
    def test_monotone_in_gamma(self, g1, g2):
        grid = GridSpec("pulse", d=1, Nx=8, Theta=2.0, Ntheta=8)
        u = random_field(grid, 3)
        lo, hi = sorted((g1, g2))
        a = singular_norm(u, NormParams(s=1, gamma=lo, epsilon=0.5))
        b = singular_norm(u, NormParams(s=1, gamma=hi, epsilon=0.5))
        assert a <= b * (1 + 1e-12)

    def test_gamma_rejected(self, torus_grid):
        with pytest.raises(ParameterError):
            sobolev_norm(random_field(torus_grid, 0), 1.0, 0.0)


class TestPulseNorm:
    def test_refuses_torus(self, torus_grid):
        with pytest.raises(GeometryError):
            pulse_singular_norm(random_field(torus_grid, 0), NormParams())

    def test_matches_generic_norm(self, line_grid):
        u = random_field(line_grid, 4)
        p = NormParams(s=1, gamma=2.0, epsilon=0.25)
        assert pulse_singular_norm(u, p) == singular_norm(u, p)
