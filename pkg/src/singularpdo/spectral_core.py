"""
Discretized wavetrain / pulse domains and the mixed Fourier transform.

Wavetrain geometry: ``x`` lives in the periodized box ``[-L, L)^d`` and
``theta`` in the unit torus, sampled at ``2*Kmax + 1`` points so that the
harmonics ``k = -Kmax..Kmax`` are represented without a Nyquist ambiguity.
Pulse geometry: ``theta`` lives in the periodized box ``[-Theta, Theta)``.

All frequency arrays are stored in FFT order. The forward transform carries
no ``1/(2 pi)`` factor; the inverse carries ``(2 pi)^{-d}`` (wavetrain) or
``(2 pi)^{-(d+1)}`` (pulse), with uniform lattice quadrature weights.
"""

from __future__ import annotations

import dataclasses
import enum
import functools
from typing import Optional

import numpy as np


class Geometry(str, enum.Enum):
    WAVETRAIN = "wavetrain"
    PULSE = "pulse"


class ShapeError(ValueError):
    """Array shape does not match the grid it is attached to."""


class GridMismatchError(ValueError):
    """Two objects living on different grids were combined."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """Discretization of ``R^d x T`` (wavetrain) or ``R^{d+1}`` (pulse).

    Parameters
    ----------
    geometry : Geometry or str
        ``"wavetrain"`` or ``"pulse"``.
    d : int
        Number of ``x`` dimensions.
    L : float
        Half-width of the spatial box ``[-L, L)``.
    Nx : int
        Points per spatial axis (power of two).
    Kmax : int
        Harmonic cutoff in ``theta`` (wavetrain only).
    Theta : float
        Half-width of the ``theta`` box (pulse only).
    Ntheta : int
        Points in ``theta`` (pulse only, power of two).
    """

    geometry: Geometry = Geometry.WAVETRAIN
    d: int = 1
    L: float = np.pi
    Nx: int = 128
    Kmax: int = 32
    Theta: float = np.pi
    Ntheta: int = 128

    def __post_init__(self):
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "Theta", float(self.Theta))
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if not _is_pow2(self.Nx) or self.Nx < 2:
            raise ValueError(f"Nx must be a power of two >= 2, got {self.Nx}")
        if self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.geometry is Geometry.WAVETRAIN:
            if self.Kmax < 0:
                raise ValueError(f"Kmax must be >= 0, got {self.Kmax}")
        else:
            if not _is_pow2(self.Ntheta) or self.Ntheta < 2:
                raise ValueError(f"Ntheta must be a power of two >= 2, got {self.Ntheta}")
            if self.Theta <= 0:
                raise ValueError(f"Theta must be positive, got {self.Theta}")

    # --- sizes -----------------------------------------------------------
    @property
    def is_pulse(self) -> bool:
        return self.geometry is Geometry.PULSE

    @property
    def n_theta(self) -> int:
        return self.Ntheta if self.is_pulse else 2 * self.Kmax + 1

    @property
    def shape(self) -> tuple:
        return (self.Nx,) * self.d + (self.n_theta,)

    @property
    def dof(self) -> int:
        return int(np.prod(self.shape))

    # --- steps and weights ----------------------------------------------
    @property
    def dx(self) -> float:
        return 2 * self.L / self.Nx

    @property
    def dtheta(self) -> float:
        return 2 * self.Theta / self.Ntheta if self.is_pulse else 1.0 / self.n_theta

    @property
    def dxi(self) -> float:
        return np.pi / self.L

    @property
    def dk(self) -> float:
        """Quadrature weight of one theta-frequency lattice point."""
        return np.pi / self.Theta if self.is_pulse else 1.0

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d * self.dtheta

    @property
    def spectral_weight(self) -> float:
        """Weight of one lattice frequency in inverse transforms and norms."""
        ndim = self.d + 1 if self.is_pulse else self.d
        return self.dxi**self.d * self.dk / (2 * np.pi) ** ndim

    @property
    def periods(self) -> tuple:
        """Period of each grid axis (x axes then theta)."""
        tper = 2 * self.Theta if self.is_pulse else 1.0
        return (2 * self.L,) * self.d + (tper,)

    @property
    def origins(self) -> tuple:
        t0 = -self.Theta if self.is_pulse else 0.0
        return (-self.L,) * self.d + (t0,)

    # --- coordinates ----------------------------------------------------
    @functools.cached_property
    def x_axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.Nx)

    @functools.cached_property
    def theta_axis(self) -> np.ndarray:
        return self.origins[-1] + self.dtheta * np.arange(self.n_theta)

    @functools.cached_property
    def xi_axis(self) -> np.ndarray:
        """Spatial frequencies (pi/L) * {-Nx/2..Nx/2-1}, FFT order."""
        return self.dxi * np.fft.fftfreq(self.Nx, 1.0 / self.Nx)

    @functools.cached_property
    def k_axis(self) -> np.ndarray:
        """Theta frequencies: integer harmonics (wavetrain) or (pi/Theta)-lattice (pulse)."""
        if self.is_pulse:
            return (np.pi / self.Theta) * np.fft.fftfreq(self.Ntheta, 1.0 / self.Ntheta)
        return np.fft.fftfreq(self.n_theta, 1.0 / self.n_theta).round()

    @functools.cached_property
    def kappa_axis(self) -> np.ndarray:
        """Angular theta frequency: 2 pi k (wavetrain) or k (pulse)."""
        return self.k_axis if self.is_pulse else 2 * np.pi * self.k_axis

    def axes(self) -> list:
        return [self.x_axis] * self.d + [self.theta_axis]

    def freq_axes(self) -> list:
        """Angular frequency per grid axis (xi axes then kappa)."""
        return [self.xi_axis] * self.d + [self.kappa_axis]

    @functools.cached_property
    def points(self) -> np.ndarray:
        """Grid points flattened in C order, shape (dof, d+1)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @functools.cached_property
    def freqs(self) -> np.ndarray:
        """Angular frequencies (xi, kappa) flattened in C order, shape (dof, d+1)."""
        mesh = np.meshgrid(*self.freq_axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @functools.cached_property
    def k_flat(self) -> np.ndarray:
        mesh = np.meshgrid(*([self.xi_axis] * self.d + [self.k_axis]), indexing="ij")
        return mesh[-1].ravel()

    def singular_frequency(self, beta, epsilon: float) -> np.ndarray:
        """``xi + kappa*beta/epsilon`` at every lattice frequency, shape (dof, d)."""
        beta = np.broadcast_to(np.asarray(beta, dtype=float), (self.d,))
        f = self.freqs
        return f[:, : self.d] + f[:, self.d :] * beta / epsilon

    def lattice_threshold(self) -> float:
        """Largest delta for which delta*|frequency| <= 1 on the whole lattice."""
        fmax = max(np.abs(self.xi_axis).max(), np.abs(self.k_axis).max())
        return 1.0 / fmax if fmax > 0 else np.inf

    def header(self) -> dict:
        out = {"geometry": self.geometry.value, "d": self.d, "L": self.L, "Nx": self.Nx}
        if self.is_pulse:
            out.update(Theta=self.Theta, Ntheta=self.Ntheta)
        else:
            out.update(Kmax=self.Kmax)
        return out


@dataclasses.dataclass(frozen=True, eq=False)
class Field:
    """Complex ``C^N``-valued samples on a grid, ``values.shape == grid.shape + (N,)``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape == self.grid.shape:
            vals = vals[..., None]
        if vals.ndim != len(self.grid.shape) + 1 or vals.shape[:-1] != self.grid.shape:
            raise ShapeError(f"values shape {vals.shape} incompatible with grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("Field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def component_dim(self) -> int:
        return self.values.shape[-1]

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    @classmethod
    def from_flat(cls, grid: GridSpec, vec: np.ndarray, N: int = 1) -> "Field":
        return cls(grid, np.asarray(vec).reshape(grid.shape + (N,)))

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "Field":
        """Sample ``func(x, theta)`` where ``x`` has shape (dof, d)."""
        pts = grid.points
        vals = np.asarray(func(pts[:, : grid.d], pts[:, grid.d]), dtype=complex)
        return cls(grid, vals.reshape(grid.shape + vals.shape[1:]))

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self.grid, other.grid)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_same_grid(self.grid, other.grid)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c) -> "Field":
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralField:
    """Mixed Fourier coefficients, indexed by (xi lattice, theta frequency, component)."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape == self.grid.shape:
            c = c[..., None]
        if c.ndim != len(self.grid.shape) + 1 or c.shape[:-1] != self.grid.shape:
            raise ShapeError(f"coeffs shape {c.shape} incompatible with grid shape {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def component_dim(self) -> int:
        return self.coeffs.shape[-1]

    def flat(self) -> np.ndarray:
        return self.coeffs.reshape(-1)


def _check_same_grid(a: GridSpec, b: GridSpec):
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


@functools.lru_cache(maxsize=64)
def _phase_factors(grid: GridSpec) -> tuple:
    """Per-axis factors ``exp(-i origin * freq)`` that shift the FFT to the box origin."""
    return tuple(np.exp(-1j * o * f) for o, f in zip(grid.origins, grid.freq_axes()))


def _axis_view(vec: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = -1
    return vec.reshape(shape)


def forward_transform(u: Field) -> SpectralField:
    """Mixed Fourier transform: DFT in ``x`` and Fourier series / DFT in ``theta``."""
    grid = u.grid
    nax = grid.d + 1
    ndim = u.values.ndim
    c = np.fft.fftn(u.values, axes=tuple(range(nax)))
    for ax, ph in enumerate(_phase_factors(grid)):
        c = c * _axis_view(ph, ax, ndim)
    return SpectralField(grid, c * grid.cell_volume)


def inverse_transform(U: SpectralField) -> Field:
    """Exact inverse of :func:`forward_transform` on the lattice."""
    grid = U.grid
    nax = grid.d + 1
    ndim = U.coeffs.ndim
    c = U.coeffs
    for ax, ph in enumerate(_phase_factors(grid)):
        c = c * _axis_view(np.conj(ph), ax, ndim)
    vals = np.fft.ifftn(c, axes=tuple(range(nax))) / grid.cell_volume
    return Field(grid, vals)


def l2_norm(u: Field) -> float:
    return float(np.sqrt(grid_mass(u)))


def grid_mass(u: Field) -> float:
    return float(np.sum(np.abs(u.values) ** 2) * u.grid.cell_volume)


def spectral_mass(U: SpectralField, weights: Optional[np.ndarray] = None) -> float:
    """Weighted squared l2 mass of coefficients; ``weights`` has the grid shape."""
    a = np.abs(U.coeffs) ** 2
    if weights is not None:
        a = a * weights[..., None]
    return float(np.sum(a) * U.grid.spectral_weight)


def parseval_defect(u: Field) -> float:
    m0 = grid_mass(u)
    if m0 == 0.0:
        return 0.0
    return abs(m0 - spectral_mass(forward_transform(u))) / m0


def direct_forward(u: Field) -> SpectralField:
    """O(dof^2) summation of the forward transform; independent oracle."""
    grid = u.grid
    phase = np.exp(-1j * grid.freqs @ grid.points.T)
    c = phase @ u.values.reshape(grid.dof, -1) * grid.cell_volume
    return SpectralField(grid, c.reshape(grid.shape + (-1,)))


def direct_inverse(U: SpectralField) -> Field:
    grid = U.grid
    phase = np.exp(1j * grid.points @ grid.freqs.T)
    v = phase @ U.coeffs.reshape(grid.dof, -1) * grid.spectral_weight
    return Field(grid, v.reshape(grid.shape + (-1,)))


def random_field(grid: GridSpec, rng=None, N: int = 1, envelope: float = 0.5) -> Field:
    """Seeded random field with Gaussian coefficients under a smooth spectral envelope.

    ``envelope`` is the fraction of the lattice radius at which the Gaussian
    envelope has decayed by ``e^{-1}``.
    """
    rng = np.random.default_rng(rng)
    scaled = []
    for f in grid.freq_axes():
        fmax = np.abs(f).max()
        scaled.append(f / fmax if fmax > 0 else f)
    mesh = np.meshgrid(*scaled, indexing="ij")
    r2 = sum(m**2 for m in mesh)
    env = np.exp(-r2 / envelope**2)
    z = rng.standard_normal(grid.shape + (N,)) + 1j * rng.standard_normal(grid.shape + (N,))
    return inverse_transform(SpectralField(grid, z * env[..., None]))


def plane_wave(grid: GridSpec, xi_index, k_index, N: int = 1, component: int = 0) -> Field:
    """Field whose only nonzero coefficient sits at lattice position (xi_index..., k_index)."""
    c = np.zeros(grid.shape + (N,), dtype=complex)
    idx = tuple(np.atleast_1d(xi_index)) + (k_index, component)
    c[idx] = 1.0
    return inverse_transform(SpectralField(grid, c))


# --- field serialization ---------------------------------------------------
#
# CSV layout: first line ``# {json header}``; then one row per grid point in
# C order, holding ``re_0,im_0,re_1,im_1,...`` for the N components.
# Binary layout: magic ``SPDOFLD1``, uint32 little-endian header length, the
# UTF-8 JSON header, then float64 little-endian interleaved (re, im) values.

_MAGIC = b"SPDOFLD1"


def _field_header(u: Field) -> dict:
    h = u.grid.header()
    h["N"] = u.component_dim
    return h


def grid_from_header(h: dict) -> GridSpec:
    keys = {"geometry", "d", "L", "Nx", "Kmax", "Theta", "Ntheta"}
    return GridSpec(**{k: v for k, v in h.items() if k in keys})


def write_field(u: Field, path, fmt: Optional[str] = None) -> None:
    """Write a Field to ``path`` as CSV (default for ``.csv``) or binary."""
    import json

    path = str(path)
    fmt = fmt or ("csv" if path.endswith(".csv") else "bin")
    header = json.dumps(_field_header(u), sort_keys=True)
    flat = u.values.reshape(u.grid.dof, -1)
    inter = np.empty((flat.shape[0], 2 * flat.shape[1]))
    inter[:, 0::2] = flat.real
    inter[:, 1::2] = flat.imag
    if fmt == "csv":
        with open(path, "w", newline="\n") as fh:
            fh.write("# " + header + "\n")
            for row in inter:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    elif fmt == "bin":
        hb = header.encode()
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(np.uint32(len(hb)).astype("<u4").tobytes())
            fh.write(hb)
            fh.write(inter.astype("<f8").tobytes())
    else:
        raise ValueError(f"unknown field format {fmt!r}")


def read_field(path) -> Field:
    """Inverse of :func:`write_field`; the format is detected from the file."""
    import json

    with open(path, "rb") as fh:
        raw = fh.read()
    if raw.startswith(_MAGIC):
        n = int(np.frombuffer(raw[8:12], dtype="<u4")[0])
        header = json.loads(raw[12 : 12 + n].decode())
        data = np.frombuffer(raw[12 + n :], dtype="<f8")
    else:
        text = raw.decode()
        first, _, rest = text.partition("\n")
        if not first.startswith("#"):
            raise ValueError("missing field header line")
        header = json.loads(first[1:].strip())
        data = np.array([float(t) for line in rest.splitlines() if line for t in line.split(",")])
    grid = grid_from_header(header)
    N = int(header["N"])
    if data.size != 2 * grid.dof * N:
        raise ShapeError(f"expected {2 * grid.dof * N} values, found {data.size}")
    inter = data.reshape(grid.dof, 2 * N)
    vals = inter[:, 0::2] + 1j * inter[:, 1::2]
    return Field(grid, vals.reshape(grid.shape + (N,)))
