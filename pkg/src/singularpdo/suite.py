"""
Named verification estimates shared by both geometries.

Every estimate key maps to one generic routine from :mod:`singularpdo.calculus`
and a list of catalog cases. The same keys run on wavetrain and pulse grids;
only the default profiles and the estimate tags differ.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from . import calculus as C
from .operators import (
    TruncationLadder,
    apply_multiplier,
    apply_oscillatory,
    operator_norm,
    pseudo_operator,
    singular_weight_operator,
)
from .sobolev import EPSILON_SWEEP, GAMMA_SWEEP, NormParams
from .spectral_core import Geometry, GridSpec, forward_transform, inverse_transform, parseval_defect, random_field
from .symbols import decay_check as sigma_decay_check
from .symbols import get_profile, get_symbol, singular_amplitude, singular_symbol, zero_profile


@dataclasses.dataclass
class SuiteContext:
    """Grid, default profiles and sweep shared by the estimates of one run."""

    grid: GridSpec
    V: object = None
    W: object = None
    epsilons: tuple = EPSILON_SWEEP
    gammas: tuple = GAMMA_SWEEP
    beta: tuple = (1.0,)
    seed: int = 0
    symbol_params: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.V is None:
            self.V = get_profile("pulse-gauss" if self.grid.is_pulse else "cos-wave")
        if self.W is None:
            self.W = get_profile("pulse-gauss2" if self.grid.is_pulse else "sin-wave")

    def _sigma(self, name, params):
        return get_symbol(name, **{**self.symbol_params.get(name, {}), **params})

    def symbol(self, name, V=None, **params):
        return singular_symbol(self._sigma(name, params), self.V if V is None else V, self.grid, 1.0, 1.0, self.beta)

    def amplitude(self, name, V=None, W=None, **params):
        return singular_amplitude(self._sigma(name, params), self.V if V is None else V,
                                  self.W if W is None else W, self.grid, 1.0, 1.0, self.beta)

    @property
    def sweep(self):
        return dict(epsilons=self.epsilons, gammas=self.gammas)


def default_grid(geometry: Geometry | str = Geometry.WAVETRAIN, d: int = 1) -> GridSpec:
    """Desk-scale grid used by the sweeps (dense operators stay small)."""
    geometry = Geometry(geometry)
    if geometry is Geometry.PULSE:
        return GridSpec(Geometry.PULSE, d, math.pi, 8, Theta=8.0, Ntheta=32)
    return GridSpec(Geometry.WAVETRAIN, d, math.pi, 16, Kmax=4)


def _zero():
    return zero_profile(1)


# Each runner returns a list of DefectReport.


def _bounded(ctx):
    names = ["shifted-resolvent", "smoothing", "rotation", "multiplication", "garding-positive"]
    return [C.boundedness_sweep(ctx.symbol(n), ctx.grid, **ctx.sweep) for n in names]


def _bounded_amp(ctx):
    names = ["amp-resolvent", "amp-mixed", "amp-smoothing"]
    if not ctx.grid.is_pulse:
        names.append("amp-rotation")
    return [C.boundedness_sweep(ctx.amplitude(n), ctx.grid, **ctx.sweep) for n in names]


def _positive(ctx):
    return [C.positive_order_sweep(ctx.symbol(n), ctx.grid, **ctx.sweep) for n in ("transport", "ixi1", "bracket")]


def _smoothing(ctx):
    return [C.smoothing_sweep(ctx.symbol("smoothing"), ctx.grid, **ctx.sweep)]


def _smoothing_amp(ctx):
    return [C.smoothing_sweep(ctx.amplitude("amp-smoothing"), ctx.grid, **ctx.sweep)]


def _h1_bounded(ctx):
    return [C.h1_boundedness_sweep(ctx.symbol(n), ctx.grid, **ctx.sweep) for n in ("rotation", "shifted-resolvent")]


def _amp_cases(ctx):
    names = ["amp-resolvent", "amp-mixed"]
    if not ctx.grid.is_pulse:
        names.append("amp-rotation")
    return [ctx.amplitude(n) for n in names]


def _amp_vs_symbol(variant):
    def run(ctx):
        out = [C.amplitude_vs_symbol_defect(a, ctx.grid, variant, **ctx.sweep) for a in _amp_cases(ctx)]
        # an amplitude without (y, omega) dependence is its own symbol
        zero = ctx.amplitude("amp-mixed", W=get_profile("constant"))
        out.append(C.amplitude_vs_symbol_defect(zero, ctx.grid, variant, **ctx.sweep))
        return out

    return run


def _amp_vs_symbol_deg1(ctx):
    return [C.amplitude_vs_symbol_defect(ctx.amplitude("amp-transport"), ctx.grid, **ctx.sweep)]


def _adjoint(variant):
    def run(ctx):
        cases = [ctx.symbol("rotation"), ctx.symbol("shifted-resolvent"),
                 ctx.symbol("shifted-resolvent", V=_zero()), ctx.symbol("multiplication")]
        return [C.adjoint_defect(a, ctx.grid, variant, **ctx.sweep) for a in cases]

    return run


def _adjoint_deg1(ctx):
    return [C.adjoint_defect(ctx.symbol("transport"), ctx.grid, "duality", **ctx.sweep)]


def _product(variant, star=False):
    def run(ctx):
        pairs = [
            (ctx.symbol("rotation"), ctx.symbol("garding-rotation")),
            (ctx.symbol("shifted-resolvent"), ctx.symbol("multiplication")),
            (ctx.symbol("multiplication"), ctx.symbol("multiplication")),
            (ctx.symbol("rotation"), ctx.symbol("garding-rotation", V=_zero())),
        ]
        return [C.product_defect(a, b, ctx.grid, variant, star, **ctx.sweep) for a, b in pairs]

    return run


def _product_mixed(ctx):
    pairs = [
        (ctx.symbol("transport"), ctx.symbol("multiplication")),
        (ctx.symbol("transport"), ctx.symbol("shifted-resolvent")),
        (ctx.symbol("shifted-resolvent"), ctx.symbol("transport")),
        (ctx.symbol("multiplication"), ctx.symbol("transport")),
    ]
    return [C.product_defect(a, b, ctx.grid, **ctx.sweep) for a, b in pairs]


def _product_smoothing(ctx):
    # the singular derivative enters as a Fourier multiplier, a trivial-zero case
    pairs = [(ctx.symbol("smoothing"), ctx.symbol("transport")),
             (ctx.symbol("smoothing"), ctx.symbol("ixi1", V=_zero()))]
    return [C.product_defect(a, b, ctx.grid, **ctx.sweep) for a, b in pairs]


def _garding(ctx):
    out = []
    for name in ("garding-positive", "garding-rotation"):
        a = ctx.symbol(name)
        C_K = C.certify_positivity(a, 0.0, ctx.grid, ctx.gammas)
        out.append(C.garding_test(a, C_K, C_K / 4, ctx.grid, **ctx.sweep))
    return out


def _remainder(ctx, n_probes: int = 10):
    rng = np.random.default_rng(ctx.seed)
    out = []
    names = ["amp-wslot", "amp-resolvent", "amp-mixed", "amp-smoothing", "amp-transport"]
    tag = "Thm9-structure" if ctx.grid.is_pulse else "Prop2"
    for name in names:
        amp = ctx.amplitude(name)
        rep = C.DefectReport(f"{tag}-identity:{C.case_name(amp)}", geometry=ctx.grid.geometry.value,
                             zero_expected=True, zero_tolerance=1e-8)
        P = rng.standard_normal((ctx.grid.dof * amp.N, n_probes)) + 1j * rng.standard_normal(
            (ctx.grid.dof * amp.N, n_probes))
        for eps in (ctx.epsilons[0], ctx.epsilons[-1]):
            for g in (ctx.gammas[0], ctx.gammas[-1]):
                a = dataclasses.replace(amp, epsilon=eps, gamma=g)
                rep.add(eps, g, C.remainder_identity_error(a, ctx.grid, P))
        out.append(rep.finalize())
    return out


def _reverse(ctx):
    return [C.reverse_product_probe(ctx.symbol("smoothing"), ctx.grid, **ctx.sweep)]


def _remark4(ctx):
    return [C.remark4_probe(ctx.grid, ctx.V, **ctx.sweep, beta=ctx.beta)]


@dataclasses.dataclass(frozen=True)
class Estimate:
    key: str
    tags: tuple  # (wavetrain tag, pulse tag)
    runner: Callable
    description: str


ESTIMATES = {
    e.key: e
    for e in [
        Estimate("bounded", ("Prop3", "Prop13"), _bounded, "degree <= 0 symbols bounded on L2, gamma^|m| uniform"),
        Estimate("bounded-amp", ("Prop6", "Prop16"), _bounded_amp, "degree <= 0 amplitudes bounded on L2"),
        Estimate("positive-order", ("Prop4", "Prop14"), _positive, "degree m > 0 bounded from H^{m,eps} to L2"),
        Estimate("smoothing", ("Prop5", "Prop15"), _smoothing, "degree -1 symbols map L2 into H^{1,eps}"),
        Estimate("smoothing-amp", ("Prop7", "Prop17"), _smoothing_amp, "degree -1 amplitudes map L2 into H^{1,eps}"),
        Estimate("h1-bounded", ("Lemma4", "Lemma-H1-pulse"), _h1_bounded, "degree 0 bounded on H^{1,eps}"),
        Estimate("amp-vs-symbol-L2", ("Thm3-L2", "Thm9-L2"), _amp_vs_symbol("L2"),
                 "amplitude minus symbol, O(1/gamma) on L2"),
        Estimate("amp-vs-symbol-H1", ("Thm3-H1eps", "Thm9-H1eps"), _amp_vs_symbol("H1"),
                 "amplitude minus symbol, L2 into H^{1,eps}"),
        Estimate("amp-vs-symbol-deg1", ("Thm4", "Thm10"), _amp_vs_symbol_deg1, "degree 1 amplitude minus symbol"),
        Estimate("adjoint-L2", ("Prop8-L2", "Prop18-L2"), _adjoint("L2"), "adjoint defect, O(1/gamma) on L2"),
        Estimate("adjoint-H1", ("Prop8-H1", "Prop18-H1"), _adjoint("H1"), "adjoint defect, L2 into H^{1,eps}"),
        Estimate("adjoint-deg1", ("Prop9", "Prop19"), _adjoint_deg1, "degree 1 adjoint via the duality pairing"),
        Estimate("product-L2", ("Prop11-L2", "Prop20-L2"), _product("L2"), "product defect (0,0), O(1/gamma)"),
        Estimate("product-H1", ("Prop11-H1", "Prop20-H1"), _product("H1"), "product defect (0,0), L2 into H^{1,eps}"),
        Estimate("product-star-L2", ("Prop10-L2", "Prop20-star-L2"), _product("L2", star=True),
                 "Op(a) Op(b)^* defect (0,0)"),
        Estimate("product-mixed", ("Prop11-mixed", "Prop20-mixed"), _product_mixed, "product defect (1,0) and (0,1)"),
        Estimate("product-smoothing", ("Prop12", "Prop21"), _product_smoothing,
                 "product defect (-1,1) in H^{1,eps}"),
        Estimate("garding", ("Thm5", "Thm11"), _garding, "Garding inequality with delta = C_K/4"),
        Estimate("remainder", ("Prop2", "Thm9-structure"), _remainder, "amplitude remainder operator identity"),
        Estimate("reverse-product", ("reverse-product", "reverse-product"), _reverse,
                 "reverse-order (+1,-1) product, reported only"),
        Estimate("remark4", ("Remark4", "Remark4"), _remark4, "degree -2 smoothing into H^{2,eps}, reported only"),
    ]
}


# ---------------------------------------------------------------------------
# module-level checks
# ---------------------------------------------------------------------------


def check_parseval(ctx, n_fields: int = 100) -> C.DefectReport:
    """Parseval defect and round-trip error of seeded random fields (tolerance 1e-12)."""
    rng = np.random.default_rng(ctx.seed)
    rep = C.DefectReport("parseval", geometry=ctx.grid.geometry.value, zero_expected=True, zero_tolerance=1e-12)
    for i in range(n_fields):
        u = random_field(ctx.grid, rng)
        back = inverse_transform(forward_transform(u))
        rt = float(np.linalg.norm(back.values - u.values) / np.linalg.norm(u.values))
        rep.add(math.nan, math.nan, max(parseval_defect(u), rt), tag=f"field{i}")
    return rep.finalize()


def check_multiplier_identities(ctx, epsilons=(1.0, 2.0**-4, 2.0**-8), n_fields: int = 3) -> C.DefectReport:
    """Relative errors of the three exact quantization identities (tolerance 1e-12).

    ``identity``: Op(1) u = u. ``multiplier``: the general quantization of an
    x-independent symbol equals the diagonal multiplier path. ``singular-ixi1``:
    Op of ``i xi_1`` composed with the singular shift equals the multiplier
    ``i (xi_1 + kappa beta_1 / eps)``.
    """
    grid = ctx.grid
    rng = np.random.default_rng(ctx.seed)
    rep = C.DefectReport("multiplier-identities", geometry=grid.geometry.value, zero_expected=True,
                         zero_tolerance=1e-12)
    zero = zero_profile(1)
    for eps in epsilons:
        ident = singular_symbol(get_symbol("identity"), ctx.V, grid, eps, 1.0, ctx.beta)
        mult = singular_symbol(get_symbol("bracket", m=-1.0), zero, grid, eps, 2.0, ctx.beta)
        ixi = singular_symbol(get_symbol("ixi1"), ctx.V, grid, eps, 1.0, ctx.beta)
        zeta1 = grid.singular_frequency(np.resize(np.asarray(ctx.beta, float), grid.d) * (np.arange(grid.d) == 0)
                                        if len(ctx.beta) == 1 else np.asarray(ctx.beta, float), eps)[:, 0]
        for i in range(n_fields):
            u = random_field(grid, rng)
            nu = np.linalg.norm(u.values)
            e1 = np.linalg.norm(pseudo_operator(ident, grid, force_general=True).apply(u).values - u.values) / nu
            ref = pseudo_operator(mult, grid).apply(u).values
            e2 = np.linalg.norm(pseudo_operator(mult, grid, force_general=True).apply(u).values - ref) / \
                np.linalg.norm(ref)
            want = apply_multiplier(1j * zeta1, u).values
            e3 = np.linalg.norm(pseudo_operator(ixi, grid, force_general=True).apply(u).values - want) / \
                np.linalg.norm(want)
            rep.add(eps, 1.0, e1, tag="identity")
            rep.add(eps, 2.0, e2, tag="multiplier")
            rep.add(eps, 1.0, e3, tag="singular-ixi1")
    return rep.finalize()


def check_isometry(ctx, orders=(1.0, 2.0, -1.0)) -> C.DefectReport:
    """``| ||bracket(m) o Lambda^{-m}|| - 1 |`` over orders and sweep corners (tolerance 1e-10)."""
    grid = ctx.grid
    rep = C.DefectReport("isometry", geometry=grid.geometry.value, zero_expected=True, zero_tolerance=1e-10)
    zero = zero_profile(1)
    for m in orders:
        for eps in (ctx.epsilons[0], ctx.epsilons[-1]):
            for g in (ctx.gammas[0], ctx.gammas[-1]):
                b = singular_symbol(get_symbol("bracket", m=m), zero, grid, eps, g, ctx.beta)
                p = NormParams(0.0, g, eps, ctx.beta)
                op = pseudo_operator(b, grid) @ singular_weight_operator(grid, p, -m)
                norm = operator_norm(op)
                rep.add(eps, g, abs(norm - 1.0), tag=f"m={m:g}")
    return rep.finalize()


def check_ladder(ctx, scale=(2.0, 0.75)) -> C.DefectReport:
    """Truncation ladder: exact stabilization below the lattice threshold and linear scaling in
    ``chi1(0) chi2(0)`` (tolerance 1e-12)."""
    grid = ctx.grid
    rng = np.random.default_rng(ctx.seed)
    rep = C.DefectReport("ladder", geometry=grid.geometry.value, zero_expected=True, zero_tolerance=1e-12)
    amp = singular_amplitude(get_symbol("amp-mixed"), ctx.V, ctx.W, grid, 0.5, 2.0, ctx.beta)
    u = random_field(grid, rng)
    ref, info = apply_oscillatory(amp, u, TruncationLadder.default(grid))
    last = [d for d, dl in zip(info.differences, info.deltas[:-1]) if dl <= info.threshold]
    rep.add(0.5, 2.0, max(last) if last else math.inf, tag="stabilized-difference")
    c = scale[0] * scale[1]
    scaled, _ = apply_oscillatory(amp, u, TruncationLadder.default(grid, *scale))
    err = np.linalg.norm(scaled.values - c * ref.values) / np.linalg.norm(c * ref.values)
    rep.add(0.5, 2.0, float(err), tag=f"scaling-c={c:g}")
    return rep.finalize()


def check_decay(ctx, symbol: str, K_radius: float = 0.5):
    sigma = get_symbol(symbol, **ctx.symbol_params.get(symbol, {}))
    if math.isfinite(sigma.domain_radius):
        K_radius = min(K_radius, 0.9 * sigma.domain_radius)
    return sigma_decay_check(sigma, K_radius, d=ctx.grid.d)


CHECK_RUNNERS = {
    "parseval": check_parseval,
    "multiplier-identities": check_multiplier_identities,
    "isometry": check_isometry,
    "ladder": check_ladder,
}


def run_check(ctx, key: str):
    if key.startswith("decay:"):
        return [check_decay(ctx, key[len("decay:"):])]
    return [CHECK_RUNNERS[key](ctx)]


def estimate_tag(key: str, grid: GridSpec) -> str:
    return ESTIMATES[key].tags[1 if grid.is_pulse else 0]


def run_estimates(ctx: SuiteContext, selection=None, on_report: Optional[Callable] = None) -> list:
    """Run the selected estimate keys (all when ``selection`` is None) and return their reports."""
    keys = list(ESTIMATES) if selection is None else list(selection)
    unknown = [k for k in keys if k not in ESTIMATES and k not in CHECK_RUNNERS and not k.startswith("decay:")]
    if unknown:
        raise KeyError(f"unknown estimate keys: {unknown}")
    out = []
    for key in keys:
        if key not in ESTIMATES:
            for rep in run_check(ctx, key):
                rep.key = key
                out.append(rep)
                if on_report is not None:
                    on_report(rep)
            continue
        tag = estimate_tag(key, ctx.grid)
        for rep in ESTIMATES[key].runner(ctx):
            rep.key = key
            suffix = rep.estimate_id.split(":", 1)[1] if ":" in rep.estimate_id else ""
            rep.estimate_id = f"{tag}:{suffix}" if suffix else tag
            out.append(rep)
            if on_report is not None:
                on_report(rep)
    return out
