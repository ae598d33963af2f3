"""
Grid, stencils, cumulative quadrature and momentum-space transforms.

Everything here works in atomic units (hbar = 1). Array kernels operate on
the last axis so the propagator can apply them to stacked components of
shape (surfaces, 2, n_points) in one call.
"""

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import fft
from scipy.integrate import trapezoid

from bipolarqtm.errors import GridError

logger = logging.getLogger(__name__)

HBAR = 1.0
MIN_POINTS = 5
EDGE_TOLERANCE = 1e-8

SPECTRUM_CONVENTION = (
    "unitary: a(p) = dx / sqrt(2*pi*hbar) * sum_k f_k exp(-i p x_k / hbar); "
    "momenta ascending, spacing 2*pi*hbar / (n dx)"
)


@dataclass(frozen=True)
class Grid:
    """Uniform 1D mesh with Dirichlet edges."""

    x_left: float
    x_right: float
    n_points: int

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_left + np.arange(self.n_points) * self.dx

    def integrate(self, values: np.ndarray) -> Union[float, np.ndarray]:
        """Trapezoid quadrature along the last axis."""
        result = trapezoid(values, dx=self.dx, axis=-1)
        return float(result) if np.ndim(result) == 0 else result

    def nearest_index(self, position: float) -> int:
        k = int(round((position - self.x_left) / self.dx))
        return min(max(k, 0), self.n_points - 1)


@dataclass
class ComplexField:
    """Complex amplitude sampled on a Grid."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n_points,):
            raise GridError(
                f"field has shape {self.values.shape}, grid expects ({self.grid.n_points},)"
            )

    def norm(self) -> float:
        return self.grid.integrate(np.abs(self.values) ** 2)

    def __add__(self, other: "ComplexField") -> "ComplexField":
        return ComplexField(self.values + other.values, self.grid)


@dataclass(frozen=True)
class MomentumSpectrum:
    momenta: np.ndarray
    amplitudes: np.ndarray
    x_origin: float
    convention: str = SPECTRUM_CONVENTION

    @property
    def dp(self) -> float:
        return float(self.momenta[1] - self.momenta[0])

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def probability(self) -> float:
        return float(np.sum(self.density()) * self.dp)

    def centroid(self) -> float:
        rho = self.density()
        return float(np.sum(self.momenta * rho) / np.sum(rho))

    def probability_below(self, p_min: float) -> float:
        """Sum of |a(p)|^2 dp over p < p_min; a bin sitting exactly on p_min counts half."""
        on_edge = np.isclose(self.momenta, p_min, rtol=0.0, atol=1e-9 * self.dp)
        weights = np.where(self.momenta < p_min, 1.0, 0.0)
        weights[on_edge] = 0.5
        return float(np.sum(weights * self.density()) * self.dp)

    def at_zero(self) -> complex:
        """a(p = 0); the fftshifted momentum grid always holds p = 0 at index n // 2."""
        return complex(self.amplitudes[self.momenta.size // 2])


def make_grid(x_left: float, x_right: float, n_points: int) -> Grid:
    if not (math.isfinite(x_left) and math.isfinite(x_right)):
        raise GridError(f"grid bounds must be finite, got ({x_left}, {x_right})")
    if not x_right > x_left:
        raise GridError(f"x_right ({x_right}) must exceed x_left ({x_left})")
    if int(n_points) != n_points or n_points < MIN_POINTS:
        raise GridError(f"n_points must be an integer >= {MIN_POINTS}, got {n_points}")
    return Grid(float(x_left), float(x_right), int(n_points))


def _pad_dirichlet(values: np.ndarray) -> np.ndarray:
    padded = np.zeros(values.shape[:-1] + (values.shape[-1] + 2,), dtype=values.dtype)
    padded[..., 1:-1] = values
    return padded


def laplacian(values: np.ndarray, dx: float) -> np.ndarray:
    """Second-order centered second difference with zero ghost nodes."""
    padded = _pad_dirichlet(values)
    return (padded[..., 2:] - 2.0 * padded[..., 1:-1] + padded[..., :-2]) / (dx * dx)


def gradient(values: np.ndarray, dx: float) -> np.ndarray:
    """Centered first difference with zero ghost nodes."""
    padded = _pad_dirichlet(values)
    return (padded[..., 2:] - padded[..., :-2]) / (2.0 * dx)


def cumulative_simpson(values: np.ndarray, dx: float) -> np.ndarray:
    """
    Running integral from the left edge along the last axis.

    Node 1 uses the trapezoid rule; node k >= 2 adds a Simpson panel over
    nodes (k-2, k-1, k) to the value at k-2. Reduction order is fixed, so
    the result is bit-reproducible.
    """
    out = np.zeros(values.shape, dtype=np.result_type(values, np.float64))
    out[..., 1] = 0.5 * dx * (values[..., 0] + values[..., 1])
    panels = (dx / 3.0) * (values[..., :-2] + 4.0 * values[..., 1:-1] + values[..., 2:])
    out[..., 2::2] = np.cumsum(panels[..., 0::2], axis=-1)
    # odd nodes chain from the node-1 trapezoid
    out[..., 3::2] = out[..., 1:2] + np.cumsum(panels[..., 1::2], axis=-1)
    return out


def second_derivative(f: ComplexField) -> ComplexField:
    return ComplexField(laplacian(f.values, f.grid.dx), f.grid)


def first_derivative(f: ComplexField) -> ComplexField:
    return ComplexField(gradient(f.values, f.grid.dx), f.grid)


def cumulative_integral(f: ComplexField) -> ComplexField:
    return ComplexField(cumulative_simpson(f.values, f.grid.dx), f.grid)


def momenta(grid: Grid) -> np.ndarray:
    """Ascending momentum samples conjugate to the grid, spanning +-pi*hbar/dx."""
    return 2.0 * np.pi * HBAR * fft.fftshift(fft.fftfreq(grid.n_points, d=grid.dx))


def edge_fraction(values: np.ndarray) -> float:
    """Largest edge-adjacent magnitude relative to the field maximum."""
    peak = np.max(np.abs(values))
    if peak == 0.0:
        return 0.0
    edges = np.abs(np.concatenate([values[:2], values[-2:]]))
    return float(np.max(edges) / peak)


def momentum_spectrum(f: ComplexField) -> MomentumSpectrum:
    ratio = edge_fraction(f.values)
    if ratio >= EDGE_TOLERANCE:
        logger.warning(
            "field is not negligible at the grid edges (edge/peak = %.3g); "
            "spectrum includes wraparound", ratio,
        )
    grid = f.grid
    p = momenta(grid)
    scale = grid.dx / math.sqrt(2.0 * math.pi * HBAR)
    amplitudes = scale * fft.fftshift(fft.fft(f.values)) * np.exp(-1j * p * grid.x_left / HBAR)
    return MomentumSpectrum(momenta=p, amplitudes=amplitudes, x_origin=grid.x_left)


def inverse_momentum_spectrum(spectrum: MomentumSpectrum, grid: Grid) -> ComplexField:
    scale = math.sqrt(2.0 * math.pi * HBAR) / grid.dx
    shifted = spectrum.amplitudes * np.exp(1j * spectrum.momenta * spectrum.x_origin / HBAR)
    return ComplexField(scale * fft.ifft(fft.ifftshift(shifted)), grid)
