import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singularpdo.spectral_core import GridSpec
from singularpdo.symbols import (
    CatalogError,
    DomainError,
    SmoothnessError,
    builtin_profiles,
    builtin_symbols,
    cutoff_extended,
    decay_check,
    evaluate_extended,
    evaluate_singular,
    frequency_cutoff,
    get_profile,
    get_symbol,
    lift_extended,
    mixed_derivative,
    register_symbol,
    singular_amplitude,
    singular_symbol,
    smoothstep,
    symbol_seminorm,
    unregister_symbol,
)


class TestCatalog:
    def test_required_entries(self):
        names = set(builtin_symbols())
        for key in ("identity", "ixi1", "bracket", "shifted-resolvent", "smoothing", "multiplication",
                    "transport", "rotation", "garding-positive", "exp-growth"):
            assert key in names
        assert {"cos-wave", "pulse-gauss", "constant", "rough"} <= set(builtin_profiles())

    def test_unknown_name(self):
        with pytest.raises(CatalogError):
            get_symbol("no-such-symbol")
        with pytest.raises(CatalogError):
            get_profile("no-such-profile")

    def test_unknown_parameter(self):
        with pytest.raises(CatalogError):
            get_symbol("bracket", k=3)

    def test_register_round_trip(self):
        register_symbol("unit-test-sym", lambda: get_symbol("identity"))
        try:
            assert "unit-test-sym" in builtin_symbols()
            with pytest.raises(ValueError):
                register_symbol("unit-test-sym", lambda: None)
        finally:
            unregister_symbol("unit-test-sym")
        assert "unit-test-sym" not in builtin_symbols()

    @pytest.mark.parametrize("name", sorted(builtin_profiles()))
    def test_profile_values_inside_radius(self, name):
        V = get_profile(name)
        grid = GridSpec("pulse", d=1, Nx=8, Theta=6.0, Ntheta=16)
        vals = V(grid.points)
        assert np.all(np.linalg.norm(vals, axis=-1) <= V.value_set_radius + 1e-12)


class TestSingularSymbol:
    def test_shift_rule_torus(self):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=2)
        a = singular_symbol(get_symbol("ixi1"), get_profile("cos-wave"), grid, 0.25, 1.0, beta=(2.0,))
        val = evaluate_singular(a, 0.3, 0.1, 1.5, 2)
        assert np.allclose(val, 1j * (1.5 + 2 * np.pi * 2 * 2.0 / 0.25))

    def test_shift_rule_line(self):
        grid = GridSpec("pulse", d=1, Nx=8, Theta=2.0, Ntheta=8)
        a = singular_symbol(get_symbol("ixi1"), get_profile("pulse-gauss"), grid, 0.5, 1.0)
        assert np.allclose(evaluate_singular(a, 0.0, 0.0, 1.0, 3.0), 1j * (1.0 + 3.0 / 0.5))

    def test_profile_enters_scaled(self):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=2)
        V = get_profile("constant", c=0.5)
        a = singular_symbol(get_symbol("multiplication"), V, grid, 0.25, 1.0)
        assert np.allclose(evaluate_singular(a, 0.0, 0.0, 0.0, 0), math.exp(0.125))

    def test_domain_violation(self):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=2)
        with pytest.raises(DomainError):
            singular_symbol(get_symbol("shifted-resolvent"), get_profile("constant", c=2.0), grid, 1.0, 1.0)

    def test_rotation_is_unitary_at_large_frequency(self):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=2)
        a = singular_symbol(get_symbol("rotation"), get_profile("cos-wave"), grid, 0.5, 1.0)
        M = evaluate_singular(a, 0.2, 0.3, 1e6, 0)
        np.testing.assert_allclose(M.conj().T @ M, np.eye(2), atol=1e-10)

    def test_amplitude_diagonal(self):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=2)
        amp = singular_amplitude(get_symbol("amp-resolvent"), get_profile("cos-wave"), get_profile("sin-wave"),
                                 grid, 0.5, 2.0)
        X = grid.points[:5]
        F = grid.freqs[:5]
        np.testing.assert_allclose(amp.diagonal().values(X, F), amp.values(X, X, F))


class TestCutoff:
    @settings(max_examples=50, deadline=None)
    @given(t=st.floats(-5, 5))
    def test_smoothstep_range(self, t):
        assert 0.0 <= smoothstep(t) <= 1.0

    def test_smoothstep_flat_ends(self):
        h = 1e-4
        for t in (0.0, 1.0):
            d1 = (smoothstep(t + h) - smoothstep(t - h)) / (2 * h)
            d2 = (smoothstep(t + h) - 2 * smoothstep(t) + smoothstep(t - h)) / h**2
            assert abs(d1) < 1e-6 and abs(d2) < 1e-2

    def test_cutoff_regions(self):
        assert frequency_cutoff(0.1, 1.0) == 1.0
        assert frequency_cutoff(0.6, 1.0) == 0.0
        assert frequency_cutoff(0.0, 0.0) == 0.0
        assert 0 < frequency_cutoff(0.375, 1.0) < 1

    def test_extended_lift_matches_plain(self):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=2)
        V = get_profile("cos-wave")
        sig = get_symbol("shifted-resolvent")
        ext = evaluate_extended(lift_extended(sig), V, 0.5, 2.0, 0.1, 0.2, 1.0, 1)
        plain = evaluate_singular(singular_symbol(sig, V, grid, 0.5, 2.0), 0.1, 0.2, 1.0, 1)
        np.testing.assert_allclose(ext, plain)

    def test_extended_cutoff_kills_low_k(self):
        V = get_profile("cos-wave")
        es = cutoff_extended(get_symbol("identity"))
        assert evaluate_extended(es, V, 0.5, 1.0, 0.0, 0.0, 3.0, 0)[0, 0] == 0.0
        assert evaluate_extended(es, V, 0.5, 1.0, 0.0, 0.0, 0.1, 1)[0, 0] == 1.0


class TestDerivatives:
    def test_mixed_derivative_polynomial(self):
        f = lambda X: X[..., 0] ** 2 * X[..., 1] ** 3
        X = np.array([[0.7, -0.4]])
        val = mixed_derivative(f, [X], [(0, 0), (0, 1)], 1e-3)
        assert abs(val[0] - 2 * 0.7 * 3 * 0.16) < 1e-5


class TestSeminorm:
    def test_multiplier_has_no_x_dependence(self):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=2)
        a = singular_symbol(get_symbol("bracket"), get_profile("cos-wave"), grid, 0.5, 1.0)
        sup, details = symbol_seminorm(a, grid, "Pseudo", n_points=4, n_freq=4, return_details=True)
        assert math.isfinite(sup)
        for (alpha, j, _, _, nu, _), value in details.items():
            if any(alpha) or j:
                assert value < 1e-6

    def test_rough_profile_refused(self):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=2)
        rough = get_profile("rough")
        rough = type(rough)(rough.name, rough.func, rough.value_set_radius, n=0)
        a = singular_symbol(get_symbol("multiplication"), rough, grid, 0.5, 1.0)
        with pytest.raises(SmoothnessError):
            symbol_seminorm(a, grid, "Pseudo")

    def test_weighted_mode_needs_line(self):
        grid = GridSpec("wavetrain", d=1, Nx=8, Kmax=2)
        a = singular_symbol(get_symbol("identity"), get_profile("cos-wave"), grid, 0.5, 1.0)
        with pytest.raises(ValueError):
            symbol_seminorm(a, grid, "PulsePseudo")


class TestDecayCheck:
    @pytest.mark.parametrize("name", ["bracket", "smoothing", "shifted-resolvent", "rotation", "transport"])
    def test_catalog_symbols_pass(self, name):
        rep = decay_check(get_symbol(name), 0.5)
        assert rep.verdict == "PASS", rep.summary()

    def test_exponential_growth_fails(self):
        rep = decay_check(get_symbol("exp-growth"), 0.5)
        assert rep.verdict == "FAIL"
