"""
Line geometry (pulses): weighted seminorm modes, weighted profile checks and
the defect suite re-run on a pulse grid.
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
import math
from typing import Optional

import numpy as np

from .sobolev import GeometryError, NormParams, pulse_singular_norm  # noqa: F401  (re-exported)
from .spectral_core import Geometry, GridSpec
from .symbols import (
    Profile,
    SeminormMode,
    SingularAmplitude,
    japanese,
    mixed_derivative,
    symbol_seminorm,
)


class SplitError(ValueError):
    """A weighted seminorm is infinite even after removing the Fourier-multiplier part."""


class WeightedSeminormMode(str, enum.Enum):
    """Weighted seminorms of the line geometry.

    ``PulsePseudo``: ``<theta>`` times derivatives of order <= 1 in each of
    ``x, theta, xi``. ``PulseAmpK``: ``<omega>`` weight, amplitude
    derivatives and one extra k-derivative. ``PulseAmpNoK``:
    ``<theta><omega>`` weight and no k-derivative.
    """

    PULSE_PSEUDO = "PulsePseudo"
    PULSE_AMP_K = "PulseAmpK"
    PULSE_AMP_NO_K = "PulseAmpNoK"

    @property
    def seminorm_mode(self) -> SeminormMode:
        return SeminormMode(self.value)

    def derivative_orders(self, d: int) -> list:
        """Multi-indices ``(alpha_x, j_theta, beta_y, l_omega, nu_xi, k)`` controlled by the mode."""
        from .symbols import _mode_orders

        return list(_mode_orders(self.seminorm_mode, d))

    def weight(self, theta, omega=None):
        if self is WeightedSeminormMode.PULSE_PSEUDO:
            return japanese(theta)
        if self is WeightedSeminormMode.PULSE_AMP_K:
            return japanese(omega)
        return japanese(theta) * japanese(omega)


def _require_pulse(grid: GridSpec):
    if not grid.is_pulse:
        raise GeometryError("a pulse grid is required")


def weighted_seminorm(sym, grid: GridSpec, mode=WeightedSeminormMode.PULSE_PSEUDO, split="auto", **kw):
    """Weighted seminorm with the Fourier-multiplier split applied when needed.

    Parameters
    ----------
    split : {"auto", True, False}
        ``auto`` measures ``a`` first and, if the weighted seminorm is
        infinite because ``sigma(0, .)`` does not decay in theta, measures
        ``a - sigma(0, .)`` instead.

    Returns
    -------
    (value, used_split) : (float, bool)

    Raises
    ------
    SplitError
        When the split is needed but unavailable or still infinite.
    """
    _require_pulse(grid)
    mode = WeightedSeminormMode(mode)
    if split is True or split is False:
        return symbol_seminorm(sym, grid, mode.seminorm_mode, split=split, **kw), bool(split)
    value = symbol_seminorm(sym, grid, mode.seminorm_mode, **kw)
    if math.isfinite(value):
        return value, False
    if not hasattr(sym, "V"):
        raise SplitError("weighted seminorm is infinite and the symbol has no profile to split off")
    value = symbol_seminorm(sym, grid, mode.seminorm_mode, split=True, **kw)
    if not math.isfinite(value):
        raise SplitError(
            "weighted seminorm is infinite even after removing sigma(0, .): the profile part does not decay "
            "in theta (use a weighted profile)")
    return value, True


def select_amplitude_mode(amp: SingularAmplitude, grid: GridSpec, shrink: float = 0.5) -> WeightedSeminormMode:
    """Choose between the two weighted amplitude seminorms.

    The k-derivative of the profile-dependent part is measured at ``eps`` and
    at ``eps / 4``; when it shrinks by at least ``shrink`` (it carries a
    factor ``eps``) the ``<omega>``-weighted mode with one k-derivative is
    used, otherwise the two-sided ``<theta><omega>`` mode.
    """
    _require_pulse(grid)
    d = grid.d
    pts = grid.points[:: max(1, grid.dof // 16)]
    F = np.stack(np.meshgrid(grid.xi_axis[:4], grid.k_axis[::4], indexing="ij"), axis=-1).reshape(-1, 2)
    if d > 1:
        F = np.concatenate([np.zeros((len(F), d - 1)), F], axis=-1)
    X = pts[:, None, None, :]
    Y = pts[None, :, None, :]

    def kderiv(eps):
        a = dataclasses.replace(amp, epsilon=eps)
        z = dataclasses.replace(a, V=_zero_like(a.V), W=_zero_like(a.W))

        def f(Ff):
            return a.values(X, Y, Ff) - z.values(X, Y, Ff)

        vals = mixed_derivative(f, [F[None, None]], [(0, d)], 1e-4)
        return float(np.max(np.abs(vals)))

    e = amp.epsilon
    big, small = kderiv(e), kderiv(e / 4)
    if big == 0 or small <= shrink * big:
        return WeightedSeminormMode.PULSE_AMP_K
    return WeightedSeminormMode.PULSE_AMP_NO_K


def _zero_like(V: Profile) -> Profile:
    from .symbols import zero_profile

    return zero_profile(V.q)


@dataclasses.dataclass
class ProfileCheck:
    """Outcome of the weighted profile check.

    ``failed_order`` and ``failed_index`` name the first derivative (total
    order and variable multi-index, variables ordered ``x_1..x_d, theta``)
    whose ``<theta>``-weighted size is not bounded.
    """

    passed: bool
    n: int
    sups: dict
    far_sups: dict
    failed_order: Optional[int] = None
    failed_index: Optional[tuple] = None
    edge_value: float = 0.0

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def summary(self) -> str:
        if self.passed:
            return f"PASS (orders <= {self.n}; edge value {self.edge_value:.3g})"
        return f"FAIL at order {self.failed_order}, derivative {self.failed_index}"


def pulse_profile_check(V: Profile, grid: GridSpec, n: int = 2, growth: float = 1.5) -> ProfileCheck:
    """Check that ``<theta> V`` and its derivatives up to order ``n`` are bounded.

    Sups are taken on the grid and at far probes ``theta = +-2, 8, 32 Theta``
    (x on the grid). A derivative fails when its weighted size at the far
    probes exceeds ``growth`` times its grid sup, i.e. the weighted quantity
    keeps growing outside the box. ``edge_value`` records ``max |V|`` on the
    box edge ``theta = +-Theta`` (periodization error).
    """
    _require_pulse(grid)
    d = grid.d
    P = grid.points
    xs = np.unique(P[:, :d], axis=0)
    far_t = grid.Theta * np.array([-32.0, -8.0, -2.0, 2.0, 8.0, 32.0])
    Pf = np.concatenate([np.repeat(xs, len(far_t), axis=0), np.tile(far_t, len(xs))[:, None]], axis=-1)
    edge = np.concatenate([xs, np.full((len(xs), 1), -grid.Theta)], axis=-1)
    sups, far_sups = {}, {}
    failed = None
    for order in range(n + 1):
        for alpha in itertools.combinations_with_replacement(range(d + 1), order):
            dirs = [(0, i) for i in alpha]
            h = 1e-4 if order <= 2 else None

            def size(Q):
                vals = np.asarray(mixed_derivative(lambda Z: V(Z), [Q], dirs, h))
                return np.linalg.norm(vals.reshape(len(Q), -1), axis=-1) * japanese(Q[:, d])

            s, sf = float(np.max(size(P))), float(np.max(size(Pf)))
            sups[alpha], far_sups[alpha] = s, sf
            if failed is None and (not math.isfinite(sf) or sf > growth * s + 1e-300 and sf > 1e-12):
                failed = (order, alpha)
    edge_value = float(np.max(np.abs(V(edge))))
    if failed is None:
        return ProfileCheck(True, n, sups, far_sups, edge_value=edge_value)
    return ProfileCheck(False, n, sups, far_sups, failed[0], failed[1], edge_value)


def weighted_product_bound(V: Profile, W: Profile, grid: GridSpec, n_t: int = 17, n_pairs: int = 41) -> float:
    """Largest ratio of the interpolated weighted product to ``<omega - theta>^{-1}``.

    Samples ``sup_t <theta + t (omega - theta)>^{-2} |V(x, theta)| |W(x, omega)| <theta><omega>``
    over pairs ``(theta, omega)`` on the box and returns the sup over pairs of
    that quantity times ``<omega - theta>``; a finite value bounded independently
    of the box confirms the ``<omega - theta>^{-1}`` shape.
    """
    _require_pulse(grid)
    d = grid.d
    ts = np.linspace(-grid.Theta, grid.Theta, n_pairs)
    x0 = np.zeros(d)
    T, O = np.meshgrid(ts, ts, indexing="ij")
    Pt = np.concatenate([np.broadcast_to(x0, T.shape + (d,)), T[..., None]], axis=-1)
    Po = np.concatenate([np.broadcast_to(x0, O.shape + (d,)), O[..., None]], axis=-1)
    prod = np.linalg.norm(V(Pt), axis=-1) * np.linalg.norm(W(Po), axis=-1) * japanese(T) * japanese(O)
    tt = np.linspace(0.0, 1.0, n_t)
    mid = japanese(T[..., None] + tt * (O - T)[..., None]) ** -2.0
    worst = np.max(mid, axis=-1)
    return float(np.max(worst * prod * japanese(O - T)))


def pulse_defect_suite(selection=None, grid: Optional[GridSpec] = None, ctx=None, check_seminorms: bool = True):
    """Run the shared estimate suite on a pulse grid.

    Before running, every default symbol is checked against the weighted
    seminorm; when the seminorm of ``a`` is infinite only because of its
    Fourier-multiplier part the split is applied and recorded in the report
    notes. Symbols whose profile part still fails are refused with
    :class:`SplitError`.
    """
    from .suite import SuiteContext, default_grid, run_estimates

    if ctx is None:
        ctx = SuiteContext(grid or default_grid(Geometry.PULSE))
    _require_pulse(ctx.grid)
    split_notes = {}
    if check_seminorms:
        for name in ("shifted-resolvent", "rotation", "smoothing", "multiplication", "transport"):
            _, used = weighted_seminorm(ctx.symbol(name), ctx.grid, n_points=6, n_freq=6)
            split_notes[name] = used
    reports = run_estimates(ctx, selection)
    for rep in reports:
        used = [k for k, v in split_notes.items() if v and k in rep.estimate_id]
        if used:
            rep.notes.append("weighted seminorm measured after splitting off sigma(0, .) for " + ", ".join(used))
    return reports


def wavetrain_defect_suite(selection=None, grid: Optional[GridSpec] = None, ctx=None):
    """The same estimate keys on a wavetrain grid."""
    from .suite import SuiteContext, default_grid, run_estimates

    if ctx is None:
        ctx = SuiteContext(grid or default_grid(Geometry.WAVETRAIN))
    if ctx.grid.is_pulse:
        raise GeometryError("a wavetrain grid is required")
    return run_estimates(ctx, selection)


def refinement_ratio(report_fn, grid: GridSpec) -> float:
    """Largest relative change of a report's raw norms when ``Ntheta`` and ``Theta`` are doubled
    (the theta spacing is kept, the k lattice is refined)."""
    _require_pulse(grid)
    fine = dataclasses.replace(grid, Theta=2 * grid.Theta, Ntheta=2 * grid.Ntheta)
    a = report_fn(grid)
    b = report_fn(fine)
    worst = 0.0
    for ra, rb in zip(a.rows, b.rows):
        if ra.raw_norm > 0:
            worst = max(worst, abs(rb.raw_norm - ra.raw_norm) / ra.raw_norm)
    return worst
