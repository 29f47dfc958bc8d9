import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singularpdo import calculus
from singularpdo.calculus import (
    CSV_COLUMNS,
    DefectReport,
    adjoint_defect,
    amplitude_vs_symbol_defect,
    band_basis,
    boundedness_sweep,
    certify_positivity,
    defect_measure,
    garding_test,
    operator_matrix,
    product_defect,
    read_report_csv,
    remainder_decomposition,
    remainder_identity_error,
    required_smoothness,
    reverse_product_probe,
    set_assembly,
    smoothing_sweep,
)
from singularpdo.spectral_core import GridSpec
from singularpdo.symbols import (
    FunctionAmplitude,
    Profile,
    SmoothnessError,
    get_profile,
    get_symbol,
    singular_amplitude,
    singular_symbol,
)

EPS = (1.0, 0.25)
GAMMAS = (1.0, 4.0)


def _grid():
    return GridSpec("wavetrain", d=1, Nx=8, Kmax=3)


def _line():
    return GridSpec("pulse", d=1, Nx=8, Theta=4.0, Ntheta=8)


class TestDefectReport:
    def test_slope_oracle(self):
        rep = DefectReport("id", power=1.0, expected_slope=-1.0)
        for eps, c in ((1.0, 2.0), (0.5, 3.0)):
            for g in (1.0, 2.0, 4.0, 8.0):
                rep.add(eps, g, c / g)
        rep.finalize()
        assert rep.slope == pytest.approx(-1.0, abs=1e-12)
        assert rep.spread == pytest.approx(1.5)
        assert rep.verdict == "PASS"

    def test_spread_above_threshold_fails(self):
        rep = DefectReport("id")
        rep.add(1.0, 1.0, 1.0)
        rep.add(1.0, 2.0, 9.0)
        assert rep.finalize().verdict == "FAIL"

    def test_slope_off_fails(self):
        rep = DefectReport("id", expected_slope=-1.0)
        for g in (1.0, 2.0, 4.0):
            rep.add(1.0, g, 1.0)
        assert rep.finalize().verdict == "FAIL"

    def test_gamma_min_excludes_rows(self):
        rep = DefectReport("id", gamma_min=2.0)
        rep.add(1.0, 1.0, 100.0)
        rep.add(1.0, 2.0, 1.0)
        rep.add(1.0, 4.0, 2.0)
        assert rep.compute_spread() == pytest.approx(2.0)

    def test_zero_expected(self):
        rep = DefectReport("id", zero_expected=True)
        rep.add(1.0, 1.0, 1e-13)
        assert rep.finalize().verdict == "PASS"
        rep.add(1.0, 2.0, 1e-6)
        assert rep.finalize().verdict == "FAIL"

    def test_upper_bound_only_uses_growth_over_coarsest_epsilon(self):
        rep = DefectReport("id", upper_bound_only=True)
        for eps in (1.0, 0.5):
            rep.add(eps, 1.0, 2.0)
            rep.add(eps, 8.0, 0.01)
        assert rep.compute_spread() == pytest.approx(1.0)
        assert rep.finalize().verdict == "PASS"
        rep.add(0.25, 1.0, 20.0)
        assert rep.finalize().spread == pytest.approx(10.0)
        assert rep.verdict == "FAIL"

    def test_zero_expected_scales_with_reference(self):
        rep = DefectReport("id", zero_expected=True)
        rep.add(1.0, 1.0, 1e-6, scale=1e4)
        assert rep.finalize().verdict == "PASS"

    def test_report_only(self):
        rep = DefectReport("id", report_only=True)
        rep.add(1.0, 1.0, 5.0)
        assert rep.finalize().verdict == "REPORT"

    def test_csv_round_trip(self, tmp_path):
        rep = DefectReport("Prop3:x", power=1.0)
        rep.add(0.5, 2.0, 0.125, tag="t")
        rep.finalize()
        path = tmp_path / "r.csv"
        text = rep.to_csv(path)
        assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
        rows = read_report_csv(path)
        assert rows[0]["estimate_id"] == "Prop3:x"
        assert float(rows[0]["normalized"]) == 0.25

    @settings(max_examples=30, deadline=None)
    @given(c=st.floats(0.1, 10), p=st.floats(-2, 2))
    def test_pure_power_law_slope(self, c, p):
        rep = DefectReport("id")
        for g in (1.0, 2.0, 4.0, 8.0, 16.0):
            rep.add(0.5, g, c * g**p)
        assert rep.fit_slope() == pytest.approx(p, abs=1e-9)


class TestMeasurement:
    def test_band_basis_orthonormal(self):
        Q = band_basis(_grid(), N=2)
        np.testing.assert_allclose(Q.conj().T @ Q, np.eye(Q.shape[1]), atol=1e-12)

    def test_identity_has_unit_norm(self):
        g = _grid()
        assert defect_measure(np.eye(g.dof), g, 1) == pytest.approx(1.0)

    def test_assembly_routes_agree(self):
        g = _grid()
        a = singular_symbol(get_symbol("transport"), get_profile("cos-wave"), g, 0.25, 2.0)
        prev = set_assembly("fft")
        try:
            A_fft = operator_matrix(a, g)
        finally:
            set_assembly(prev)
        A_dense = operator_matrix(a, g)
        np.testing.assert_allclose(A_fft, A_dense, atol=1e-10)

    def test_unknown_route(self):
        with pytest.raises(ValueError):
            set_assembly("gpu")

    def test_smoothness_table(self):
        assert required_smoothness("L2-0", 1) == 4
        assert required_smoothness("H1-0", 1) == 5
        assert required_smoothness("H1-0", 1, pulse=True) == 6
        assert required_smoothness("deg1", 2) == 10


AMPLITUDES = ["amp-resolvent", "amp-mixed", "amp-smoothing", "amp-transport", "amp-wslot"]


class TestRemainder:
    @pytest.mark.parametrize("name", AMPLITUDES)
    @pytest.mark.parametrize("geometry", ["wavetrain", "pulse"])
    def test_lattice_identity(self, name, geometry, rng):
        grid = _grid() if geometry == "wavetrain" else _line()
        V, W = (get_profile("cos-wave"), get_profile("sin-wave")) if geometry == "wavetrain" else (
            get_profile("pulse-gauss"), get_profile("pulse-gauss2"))
        amp = singular_amplitude(get_symbol(name), V, W, grid, 0.25, 2.0)
        probes = rng.standard_normal((grid.dof, 4)) + 1j * rng.standard_normal((grid.dof, 4))
        assert remainder_identity_error(amp, grid, probes) <= 1e-8

    def test_y_independent_gives_zero_remainders(self):
        grid = _grid()
        amp = singular_amplitude(get_symbol("amp-resolvent"), get_profile("cos-wave"), get_profile("constant"),
                                 grid, 0.5, 1.0)
        r1, r2 = remainder_decomposition(amp, grid)
        X, F = grid.points[:, None, :], grid.freqs[None, :6, :]
        Y = grid.points[::7][None, :, None, :]
        assert np.max(np.abs(r1.values(X[:, :, None, :], Y, F[:, None]))) == 0.0
        assert np.max(np.abs(r2.values(X[:, :, None, :], Y, F[:, None]))) == 0.0

    def test_theta_free_amplitude_has_no_theta_part(self):
        grid = _grid()
        amp = FunctionAmplitude(lambda X, Y, F: 1.0 + 0.5 * np.cos(Y[..., 0]) / (1 + F[..., 0] ** 2))
        _, r2 = remainder_decomposition(amp, grid)
        X = grid.points[:, None, :]
        Y = grid.points[None, :, :]
        F = np.broadcast_to(grid.freqs[3], X.shape)
        assert np.max(np.abs(r2.values(X, Y, F))) < 1e-12

    def test_taylor_scheme_converges_to_lattice_form(self):
        errors = []
        for L, Nx in ((np.pi, 16), (4 * np.pi, 64), (16 * np.pi, 256)):
            grid = GridSpec("wavetrain", d=1, Nx=Nx, Kmax=1, L=L)
            amp = singular_amplitude(get_symbol("amp-resolvent"), get_profile("x-wave", r=0.3),
                                     get_profile("x-wave", r=0.3), grid, 1.0, 4.0)
            t1, _ = remainder_decomposition(amp, grid, "taylor")
            l1, _ = remainder_decomposition(amp, grid, "lattice")
            X = np.array([[0.0, 0.0]])
            Y = np.array([[0.3, 0.0]])
            F = np.array([[2 * grid.dxi, 0.0]])
            errors.append(abs(t1.values(X, Y, F) - l1.values(X, Y, F)).max())
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] <= 0.25 * errors[0]

    def test_unknown_scheme(self):
        grid = _grid()
        amp = singular_amplitude(get_symbol("amp-resolvent"), get_profile("cos-wave"), get_profile("sin-wave"),
                                 grid, 0.5, 1.0)
        with pytest.raises(ValueError):
            remainder_decomposition(amp, grid, "spline")


class TestTrivialZeros:
    def test_amplitude_without_incoming_dependence(self):
        grid = _grid()
        amp = singular_amplitude(get_symbol("amp-mixed"), get_profile("cos-wave"), get_profile("constant"),
                                 grid, 0.5, 1.0)
        rep = amplitude_vs_symbol_defect(amp, grid, epsilons=EPS, gammas=GAMMAS)
        assert rep.zero_expected and rep.verdict == "PASS"

    @pytest.mark.parametrize("name,V", [("bracket", "constant"), ("multiplication", "cos-wave")])
    def test_adjoint_exact(self, name, V):
        grid = _grid()
        a = singular_symbol(get_symbol(name), get_profile(V), grid, 0.5, 1.0)
        rep = adjoint_defect(a, grid, epsilons=EPS, gammas=GAMMAS)
        assert rep.zero_expected and rep.max_raw <= 1e-10

    def test_product_with_multiplier_on_right(self):
        grid = _grid()
        a = singular_symbol(get_symbol("shifted-resolvent"), get_profile("cos-wave"), grid, 0.5, 1.0)
        b = singular_symbol(get_symbol("shifted-resolvent"), get_profile("constant"), grid, 0.5, 1.0)
        rep = product_defect(a, b, grid, epsilons=EPS, gammas=GAMMAS)
        assert rep.zero_expected and rep.max_raw <= 1e-10

    def test_product_with_multiplication_on_left(self):
        grid = _grid()
        a = singular_symbol(get_symbol("multiplication"), get_profile("cos-wave"), grid, 0.5, 1.0)
        b = singular_symbol(get_symbol("shifted-resolvent"), get_profile("sin-wave"), grid, 0.5, 1.0)
        rep = product_defect(a, b, grid, epsilons=EPS, gammas=GAMMAS)
        assert rep.zero_expected and rep.max_raw <= 1e-10

    def test_unsupported_degree_pair(self):
        grid = _grid()
        a = singular_symbol(get_symbol("transport"), get_profile("cos-wave"), grid, 0.5, 1.0)
        with pytest.raises(ValueError):
            product_defect(a, a, grid, epsilons=EPS, gammas=GAMMAS)


class TestEstimates:
    def test_defect_decays_with_gamma(self):
        grid = _grid()
        amp = singular_amplitude(get_symbol("amp-resolvent"), get_profile("cos-wave"), get_profile("sin-wave"),
                                 grid, 0.5, 1.0)
        rep = amplitude_vs_symbol_defect(amp, grid, epsilons=(1.0,), gammas=(2.0, 4.0, 8.0, 16.0))
        assert rep.slope < -0.5

    def test_bounded_sweep_normalization(self):
        grid = _grid()
        a = singular_symbol(get_symbol("smoothing"), get_profile("cos-wave"), grid, 1.0, 1.0)
        rep = boundedness_sweep(a, grid, epsilons=EPS, gammas=(1.0, 2.0, 4.0, 8.0))
        assert rep.power == 1.0
        assert rep.verdict == "PASS", rep.summary()

    def test_smoothing_requires_degree_minus_one(self):
        grid = _grid()
        a = singular_symbol(get_symbol("shifted-resolvent"), get_profile("cos-wave"), grid, 1.0, 1.0)
        with pytest.raises(ValueError):
            smoothing_sweep(a, grid)

    def test_rough_profile_refused(self):
        grid = _grid()
        a = singular_symbol(get_symbol("shifted-resolvent"), get_profile("rough"), grid, 1.0, 1.0)
        with pytest.raises(SmoothnessError):
            adjoint_defect(a, grid, epsilons=EPS, gammas=GAMMAS)

    def test_geometry_mismatch(self):
        a = singular_symbol(get_symbol("shifted-resolvent"), get_profile("cos-wave"), _grid(), 1.0, 1.0)
        with pytest.raises(ValueError):
            boundedness_sweep(a, _line())

    def test_reverse_probe_is_report_only(self):
        grid = _grid()
        b = singular_symbol(get_symbol("shifted-resolvent"), get_profile("cos-wave"), grid, 1.0, 1.0)
        rep = reverse_product_probe(b, grid, epsilons=(1.0, 0.25, 2.0**-4), gammas=(1.0, 2.0))
        assert rep.verdict == "REPORT"
        assert any("nondecreasing" in n for n in rep.notes)


class TestGarding:
    def test_identity_lambda_is_one(self):
        grid = _grid()
        a = singular_symbol(get_symbol("identity"), get_profile("cos-wave"), grid, 1.0, 1.0)
        rep = garding_test(a, 1.0, 0.25, grid, epsilons=EPS, gammas=GAMMAS)
        for r in rep.rows:
            assert r.raw_norm == pytest.approx(1.0, abs=1e-12)
        assert rep.extra["gamma0"] == 1.0

    def test_positive_multiplier_lambda_is_min_value(self):
        grid = _grid()
        a = singular_symbol(get_symbol("garding-positive"), get_profile("constant", c=0.0), grid, 1.0, 1.0)
        rep = garding_test(a, 1.0, 0.25, grid, epsilons=(1.0,), gammas=(1.0,))
        assert rep.rows[0].raw_norm == pytest.approx(1.5, abs=1e-12)

    def test_certificate_failure(self):
        grid = _grid()
        a = singular_symbol(get_symbol("garding-positive"), get_profile("cos-wave"), grid, 1.0, 1.0)
        with pytest.raises(ValueError):
            certify_positivity(a, 1.4, grid)

    def test_garding_positive_passes(self):
        grid = _grid()
        a = singular_symbol(get_symbol("garding-positive"), get_profile("cos-wave"), grid, 1.0, 1.0)
        c_k = 1.0
        rep = garding_test(a, c_k, c_k / 4, grid, epsilons=EPS, gammas=GAMMAS)
        assert rep.verdict == "PASS"
