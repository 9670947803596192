"""Periodic grids, discrete Fourier transforms and frequency multipliers.

The transform pair used throughout maps a uniformly sampled field on the box
[-L, L)^n to coefficients on the frequency lattice xi_k = pi*k/L,
k in {-N/2, ..., N/2-1} per axis.  The normalization is chosen so that the
discrete transform is a Riemann-sum approximation of the unitary continuous
Fourier transform:

    fhat(xi) = (2*pi)^(-n/2) * h^n * sum_j f(x_j) exp(-i xi . x_j)

with h = 2L/N.  Under this scaling the discrete Parseval identity

    sum |f|^2 * h^n  ==  sum |fhat|^2 * (pi/L)^n

holds exactly (up to roundoff), so grid sums of fields and of coefficients
can both be read as approximations of integrals over R^n.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "forward",
    "inverse",
    "inverse_raw",
    "apply_multiplier",
    "plancherel_pairing",
    "plancherel_pairing_spectral",
    "dealias_mask",
    "hermitian_symmetry_error",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the box [-L, L)^n."""

    n: int
    points_per_axis: int
    half_width: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {self.n}")
        N = self.points_per_axis
        if N % 2 != 0 or N < 8:
            raise ValueError(f"points_per_axis must be even and >= 8, got {N}")
        if not (self.half_width > 0):
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.n

    @property
    def freq_spacing(self) -> float:
        return np.pi / self.half_width

    @property
    def freq_cell_volume(self) -> float:
        return self.freq_spacing ** self.n

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.n

    def axis_coords(self) -> np.ndarray:
        """Sample points -L + j*h for one axis."""
        N = self.points_per_axis
        return -self.half_width + self.spacing * np.arange(N)

    def axis_wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers k in FFT storage order (0..N/2-1, -N/2..-1)."""
        N = self.points_per_axis
        return np.fft.fftfreq(N, d=1.0 / N)

    def coord_mesh(self) -> tuple:
        x = self.axis_coords()
        return np.meshgrid(*([x] * self.n), indexing="ij")

    def radius_mesh(self) -> np.ndarray:
        mesh = self.coord_mesh()
        return np.sqrt(sum(c * c for c in mesh))

    def freq_mesh(self) -> tuple:
        xi = self.freq_spacing * self.axis_wavenumbers()
        return np.meshgrid(*([xi] * self.n), indexing="ij")

    def freq_magnitudes(self) -> np.ndarray:
        return _freq_magnitudes_cached(self)


@lru_cache(maxsize=32)
def _freq_magnitudes_cached(grid: Grid) -> np.ndarray:
    mesh = grid.freq_mesh()
    mags = np.sqrt(sum(f * f for f in mesh))
    mags.setflags(write=False)
    return mags


@lru_cache(maxsize=32)
def _alternating_phase(grid: Grid) -> np.ndarray:
    """Per-axis (-1)^k factor relating the FFT phase to samples on [-L, L)."""
    k = grid.axis_wavenumbers().astype(np.int64)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    phase = sign
    for _ in range(grid.n - 1):
        phase = np.multiply.outer(phase, sign)
    phase.setflags(write=False)
    return phase


def _check_field(grid: Grid, values: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.shape != grid.shape:
        raise ValueError(
            f"{what} has shape {arr.shape}, expected {grid.shape} for this grid"
        )
    return arr


@dataclass(frozen=True)
class RealField:
    """Real samples on a Grid, row-major axis order."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = _check_field(self.grid, self.values, "RealField")
        object.__setattr__(self, "values", np.asarray(arr, dtype=np.float64))


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients on the frequency lattice of a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = _check_field(self.grid, self.values, "SpectralField")
        object.__setattr__(self, "values", np.asarray(arr, dtype=np.complex128))


def _transform_forward(grid: Grid, values: np.ndarray) -> np.ndarray:
    # unchecked core, shared with the solver's overflow-tolerant stepping
    scale = (grid.spacing / np.sqrt(2.0 * np.pi)) ** grid.n
    return scale * _alternating_phase(grid) * np.fft.fftn(values)


def _transform_inverse(grid: Grid, values: np.ndarray) -> np.ndarray:
    N = grid.points_per_axis
    scale = (grid.freq_spacing * N / np.sqrt(2.0 * np.pi)) ** grid.n
    return scale * np.fft.ifftn(_alternating_phase(grid) * values)


def forward(f: RealField) -> SpectralField:
    """Forward transform; coefficients approximate the unitary Fourier transform."""
    if not np.all(np.isfinite(f.values)):
        raise ValueError("forward: field contains non-finite samples")
    return SpectralField(f.grid, _transform_forward(f.grid, f.values))


def inverse_raw(F: SpectralField) -> np.ndarray:
    """Inverse transform without discarding the imaginary part."""
    if not np.all(np.isfinite(F.values)):
        raise ValueError("inverse: field contains non-finite coefficients")
    return _transform_inverse(F.grid, F.values)


def inverse(F: SpectralField) -> RealField:
    return RealField(F.grid, inverse_raw(F).real)


def apply_multiplier(F: SpectralField, sym) -> SpectralField:
    """Multiply coefficients by a radial symbol sym(|xi|).

    `sym` must accept an ndarray of frequency magnitudes and return finite
    values on all of them.
    """
    mags = F.grid.freq_magnitudes()
    weights = np.asarray(sym(mags))
    bad = ~np.isfinite(weights)
    if np.any(bad):
        offending = mags[bad].ravel()
        raise ValueError(
            "apply_multiplier: symbol is not finite at |xi| = "
            f"{offending[0]:.6g} (and {offending.size - 1} more grid frequencies)"
        )
    return SpectralField(F.grid, F.values * weights)


def plancherel_pairing(f: RealField, g: RealField) -> float:
    """Physical-space pairing: sum f*g times the cell volume."""
    if f.grid != g.grid:
        raise ValueError("plancherel_pairing: fields live on different grids")
    return float(np.sum(f.values * g.values) * f.grid.cell_volume)


def plancherel_pairing_spectral(F: SpectralField, G: SpectralField) -> float:
    """Frequency-space pairing: sum Fhat*conj(Ghat) times the frequency cell volume.

    For transforms of real fields this agrees with `plancherel_pairing` to
    roundoff, which is the identity the transform normalization is built for.
    """
    if F.grid != G.grid:
        raise ValueError("plancherel_pairing_spectral: fields live on different grids")
    total = np.sum(F.values * np.conj(G.values)) * F.grid.freq_cell_volume
    return float(total.real)


def dealias_mask(grid: Grid, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """Boolean mask keeping wavenumbers |k| <= fraction * N/2 per axis."""
    N = grid.points_per_axis
    cutoff = fraction * (N / 2.0)
    k = np.abs(grid.axis_wavenumbers())
    keep1d = k <= cutoff + 1e-12
    mask = keep1d
    for _ in range(grid.n - 1):
        mask = np.logical_and.outer(mask, keep1d)
    return mask


def hermitian_symmetry_error(F: SpectralField) -> float:
    """Max |Fhat(-k) - conj(Fhat(k))| over the lattice."""
    vals = F.values
    reflected = vals
    for axis in range(F.grid.n):
        reflected = np.roll(np.flip(reflected, axis=axis), 1, axis=axis)
    return float(np.max(np.abs(reflected - np.conj(vals))))
