"""Periodic-box spectral machinery for the KP energy space.

Arrays are stored with shape ``(ny, nx)`` so that the C-order memory layout is
row-major with x running fastest.  Transforms use ``rfft2`` along the x axis,
hence only ``kx >= 0`` columns are stored.

The admissible subspace consists of fields whose ``kx = 0`` column vanishes
(zero x-mean on every row) and whose Nyquist rows/columns vanish.  The Nyquist
modes are removed because the odd symbols ``i kx`` and ``ky / kx`` have no
real-valued realization there.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "SpectralCoeffs",
    "make_grid",
    "to_spectral",
    "from_spectral",
    "project_admissible",
    "is_admissible",
    "d_x",
    "dxinv_dy",
    "x_seminorm_sq",
    "lp_norm_p",
    "inner",
    "x_metric_precondition",
    "x_symbol",
    "resample",
    "evaluate_stretched",
    "boundary_mass_fraction",
]

ADMISSIBLE_RTOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Anisotropic periodic box ``[-Lx/2, Lx/2) x [-Ly/2, Ly/2)``."""

    nx: int
    ny: int
    Lx: float
    Ly: float

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 4 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 4, got {n!r}")
        for name in ("Lx", "Ly"):
            L = getattr(self, name)
            if not np.isfinite(L) or L <= 0:
                raise ValueError(f"{name} must be a positive length, got {L!r}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "Lx", float(self.Lx))
        object.__setattr__(self, "Ly", float(self.Ly))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return self.Lx * self.Ly

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.Lx + self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return -0.5 * self.Ly + self.dy * np.arange(self.ny)

    @cached_property
    def kx(self) -> np.ndarray:
        """Full symmetric x wavenumbers (``fftfreq`` ordering)."""
        return 2 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)

    @cached_property
    def ky(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical coordinates ``(X, Y)`` of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    # Half-spectrum (rfft) lattice, shape (ny, nx//2 + 1).

    @cached_property
    def _kx_half(self) -> np.ndarray:
        k = 2 * np.pi * np.fft.rfftfreq(self.nx, d=self.dx)
        return np.broadcast_to(k[None, :], (self.ny, k.size))

    @cached_property
    def _ky_half(self) -> np.ndarray:
        return np.broadcast_to(self.ky[:, None], (self.ny, self.nx // 2 + 1))

    @cached_property
    def admissible_mask(self) -> np.ndarray:
        m = np.ones((self.ny, self.nx // 2 + 1), dtype=bool)
        m[:, 0] = False
        m[:, -1] = False
        m[self.ny // 2, :] = False
        m.setflags(write=False)
        return m

    @cached_property
    def parseval_weight(self) -> np.ndarray:
        """Weights turning ``sum w |uhat|^2`` into the box integral of ``|u|^2``."""
        w = np.full((self.ny, self.nx // 2 + 1), 2.0)
        w[:, 0] = 1.0
        w[:, -1] = 1.0
        w *= self.cell_area / (self.nx * self.ny)
        w.setflags(write=False)
        return w

    @cached_property
    def dx_symbol(self) -> np.ndarray:
        s = np.where(self.admissible_mask, 1j * self._kx_half, 0.0)
        s.setflags(write=False)
        return s

    @cached_property
    def dxinv_dy_symbol(self) -> np.ndarray:
        kx = self._kx_half
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(self.admissible_mask, self._ky_half / kx, 0.0)
        s.setflags(write=False)
        return s

    @cached_property
    def seminorm_symbol(self) -> np.ndarray:
        """``kx^2 + ky^2/kx^2`` on admissible modes, zero elsewhere."""
        s = np.abs(self.dx_symbol) ** 2 + self.dxinv_dy_symbol**2
        s.setflags(write=False)
        return s

    @cached_property
    def precondition_symbol(self) -> np.ndarray:
        s = np.where(self.admissible_mask, 1.0 / (self.seminorm_symbol + 1.0), 0.0)
        s.setflags(write=False)
        return s


def make_grid(nx: int, ny: int, Lx: float, Ly: float) -> Grid:
    return Grid(nx, ny, Lx, Ly)


@dataclass(frozen=True)
class Field:
    """Real grid function on ``grid``; ``values`` has shape ``(ny, nx)``."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        X, Y = grid.mesh()
        return cls(grid, func(X, Y))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


@dataclass(frozen=True)
class SpectralCoeffs:
    """Half-spectrum (``rfft2``) coefficients of a real field."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)


def _same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def to_spectral(f: Field) -> SpectralCoeffs:
    return SpectralCoeffs(f.grid, np.fft.rfft2(f.values))


def from_spectral(c: SpectralCoeffs) -> Field:
    g = c.grid
    return Field(g, np.fft.irfft2(c.coeffs, s=g.shape))


def _apply_symbol(f: Field, symbol: np.ndarray) -> Field:
    g = f.grid
    return Field(g, np.fft.irfft2(symbol * np.fft.rfft2(f.values), s=g.shape))


def project_admissible(f: Field) -> Field:
    """Remove row means (the ``kx = 0`` column) and Nyquist content."""
    return _apply_symbol(f, f.grid.admissible_mask)


def is_admissible(f: Field, rtol: float = ADMISSIBLE_RTOL) -> bool:
    c = np.fft.rfft2(f.values)
    scale = np.max(np.abs(c), initial=0.0)
    if scale == 0.0:
        return True
    return bool(np.max(np.abs(c[~f.grid.admissible_mask]), initial=0.0) <= rtol * scale)


def d_x(f: Field) -> Field:
    return _apply_symbol(f, f.grid.dx_symbol)


def dxinv_dy(f: Field) -> Field:
    """Apply ``D_x^{-1} d_y``, the real multiplier ``ky / kx``."""
    return _apply_symbol(f, f.grid.dxinv_dy_symbol)


def x_seminorm_sq(f: Field) -> float:
    """``int |f_x|^2 + |D_x^{-1} f_y|^2`` evaluated by Parseval."""
    g = f.grid
    c = np.fft.rfft2(f.values)
    return float(np.sum(g.parseval_weight * g.seminorm_symbol * np.abs(c) ** 2))


def lp_norm_p(f: Field, p: float) -> float:
    """Return ``|f|_p^p`` by the rectangle rule."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    v = np.abs(f.values)
    vp = v * v if p == 2 else v**p
    return float(np.sum(vp) * f.grid.cell_area)


def inner(f: Field, g: Field) -> float:
    """Discrete L^2 pairing."""
    _same_grid(f, g)
    return float(np.sum(f.values * g.values) * f.grid.cell_area)


def spectral_mass(f: Field) -> float:
    g = f.grid
    c = np.fft.rfft2(f.values)
    return float(np.sum(g.parseval_weight * np.abs(c) ** 2))


def x_symbol(f: Field) -> Field:
    """Apply the full X-norm symbol ``kx^2 + ky^2/kx^2 + 1`` on admissible modes."""
    g = f.grid
    return _apply_symbol(f, np.where(g.admissible_mask, g.seminorm_symbol + 1.0, 0.0))


def x_metric_precondition(g: Field) -> Field:
    """Invert the X-norm symbol; the Sobolev-gradient map."""
    return _apply_symbol(g, g.grid.precondition_symbol)


def _spectrum_index_maps(src: int, dst: int) -> tuple[np.ndarray, np.ndarray]:
    """Matching ``fftfreq`` slots between two lengths, excluding Nyquist."""
    m = min(src, dst) // 2
    freqs = np.arange(-m + 1, m)
    return freqs % src, freqs % dst


def resample(f: Field, target: Grid) -> Field:
    """Trigonometric interpolation onto a grid over the same box."""
    src = f.grid
    if target == src:
        return f
    if not (np.isclose(src.Lx, target.Lx) and np.isclose(src.Ly, target.Ly)):
        raise ValueError("resample requires identical box lengths")
    c = np.fft.fft2(f.values)
    iy_s, iy_t = _spectrum_index_maps(src.ny, target.ny)
    ix_s, ix_t = _spectrum_index_maps(src.nx, target.nx)
    kept = np.zeros_like(c, dtype=bool)
    kept[np.ix_(iy_s, ix_s)] = True
    dropped = np.abs(c[~kept])
    if dropped.size and dropped.max() > 1e-12 * max(np.abs(c).max(), 1e-300):
        warnings.warn("resample target truncates the source spectrum", RuntimeWarning, stacklevel=2)
    out = np.zeros(target.shape, dtype=complex)
    out[np.ix_(iy_t, ix_t)] = c[np.ix_(iy_s, ix_s)]
    scale = (target.nx * target.ny) / (src.nx * src.ny)
    return Field(target, np.real(np.fft.ifft2(out)) * scale)


def evaluate_stretched(f: Field, sx: float, sy: float) -> np.ndarray:
    """Values of ``f(sx * x, sy * y)`` on ``f.grid``.

    The trigonometric interpolant of ``f`` is summed exactly at the stretched
    tensor-product points; points leaving the primary cell get zero, so ``f``
    is treated as a compactly supported function rather than a periodic one.
    """
    g = f.grid
    c = np.fft.fft2(f.values) / (g.nx * g.ny)
    # Nyquist coefficients are dropped; they have no symmetric real interpolant.
    c[g.ny // 2, :] = 0.0
    c[:, g.nx // 2] = 0.0
    xs = sx * g.x
    ys = sy * g.y
    ex = np.exp(1j * np.outer(g.kx, xs - g.x[0]))  # (kx, x')
    ey = np.exp(1j * np.outer(ys - g.y[0], g.ky))  # (y', ky)
    vals = np.real(ey @ c @ ex)
    inside_x = np.abs(xs) <= 0.5 * g.Lx
    inside_y = np.abs(ys) <= 0.5 * g.Ly
    return vals * inside_y[:, None] * inside_x[None, :]


def boundary_mass_fraction(f: Field, strip: float = 0.05) -> float:
    """Fraction of ``|f|_2^2`` within ``strip * L`` of the box edges."""
    g = f.grid
    X, Y = g.mesh()
    edge = (np.abs(X) >= (0.5 - strip) * g.Lx) | (np.abs(Y) >= (0.5 - strip) * g.Ly)
    v2 = f.values**2
    total = float(v2.sum())
    if total == 0.0:
        return 0.0
    return float(v2[edge].sum() / total)
