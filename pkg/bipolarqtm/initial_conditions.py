"""
Initial wavepackets and their bipolar decompositions.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from bipolarqtm.errors import AdmissibilityError, PacketError
from bipolarqtm.numerics import (
    EDGE_TOLERANCE,
    HBAR,
    ComplexField,
    Grid,
    MomentumSpectrum,
    inverse_momentum_spectrum,
    momentum_spectrum,
)
from bipolarqtm.propagator import BipolarState

logger = logging.getLogger(__name__)

ADMISSIBILITY_TOLERANCE = 1e-6
DISCARD_FACTOR = 100.0
DEFAULT_MAX_WEIGHT = 2.0


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian packet (2 gamma/pi)^1/4 exp(-gamma (x - x0)^2) exp(i p0 x / hbar)."""

    gamma: float
    x0: float
    p0: float
    m: float
    t0: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "x0", "p0", "m", "t0"):
            if not math.isfinite(getattr(self, name)):
                raise PacketError(f"{name} must be finite")
        if self.gamma <= 0:
            raise PacketError(f"gamma must be positive, got {self.gamma}")
        if self.m <= 0:
            raise PacketError(f"mass must be positive, got {self.m}")

    @property
    def peak(self) -> float:
        return (2.0 * self.gamma / math.pi) ** 0.25

    @property
    def kinetic_energy(self) -> float:
        return self.p0 ** 2 / (2.0 * self.m)

    def edge_ratio(self, grid: Grid) -> float:
        """|psi(edge)| / peak at the nearer grid edge."""
        nearest = min(abs(grid.x_left - self.x0), abs(grid.x_right - self.x0))
        return math.exp(-self.gamma * nearest ** 2)


def gaussian_values(spec: PacketSpec, x: np.ndarray) -> np.ndarray:
    envelope = spec.peak * np.exp(-spec.gamma * (x - spec.x0) ** 2)
    return envelope * np.exp(1j * spec.p0 * x / HBAR)


def gaussian_packet(spec: PacketSpec, grid: Grid) -> ComplexField:
    ratio = spec.edge_ratio(grid)
    if ratio >= EDGE_TOLERANCE:
        raise PacketError(
            f"packet at x0 = {spec.x0} overlaps the grid edge (|psi(edge)|/peak = {ratio:.3g})"
        )
    return ComplexField(gaussian_values(spec, grid.x), grid)


def free_gaussian(spec: PacketSpec, x: np.ndarray, t: float) -> np.ndarray:
    """Closed-form free-particle evolution of the Gaussian packet to time t."""
    elapsed = t - spec.t0
    spread = 1.0 + 2j * spec.gamma * HBAR * elapsed / spec.m
    velocity = spec.p0 / spec.m
    exponent = (
        -spec.gamma * (x - spec.x0 - velocity * elapsed) ** 2 / spread
        + 1j * spec.p0 * x / HBAR
        - 1j * spec.p0 ** 2 * elapsed / (2.0 * spec.m * HBAR)
    )
    return spec.peak / np.sqrt(spread) * np.exp(exponent)


def gaussian_spectrum(spec: PacketSpec, p: np.ndarray) -> np.ndarray:
    """Analytic momentum amplitude of the Gaussian packet (same unitary convention)."""
    width = 1.0 / math.sqrt(2.0 * spec.gamma * HBAR)
    shift = p - spec.p0
    return spec.peak * width * np.exp(-shift ** 2 / (4.0 * spec.gamma * HBAR ** 2)) * np.exp(
        -1j * shift * spec.x0 / HBAR
    )


def minimum_momentum(v_left: float, v_right: float, m: float) -> float:
    """Smallest admissible left-asymptote momentum for reactive scattering."""
    if v_right < v_left:
        return 0.0
    return math.sqrt(2.0 * m * (v_right - v_left))


def negative_momentum_probability(f: ComplexField, p_min: float = 0.0) -> float:
    return momentum_spectrum(f).probability_below(p_min)


def decomposition_weights(
    p: np.ndarray,
    v_left: float,
    v_right: float,
    m: float,
    max_weight: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Weights w+- = (1 +- p_L/p_R)/2 on each left momentum bin.

    Returns (w_plus, w_minus, admissible). Bins with p_L <= 0, or with
    E = V_L + p_L^2/2m at or below max(V_L, V_R), are inadmissible and
    carry zero weight in both outputs. With max_weight set, bins just above
    threshold where |w+| exceeds it are treated as inadmissible as well.
    """
    p = np.asarray(p, dtype=np.float64)
    p_right_sq = p * p + 2.0 * m * (v_left - v_right)
    admissible = (p > 0.0) & (p_right_sq > 0.0)
    if v_left == v_right:
        ratio = np.ones_like(p)
    else:
        p_right = np.sqrt(np.where(admissible, p_right_sq, 1.0))
        ratio = np.where(admissible, p / p_right, 0.0)
    if max_weight is not None:
        # |w-| < w+ whenever p_L/p_R > 0, so capping w+ bounds both
        admissible &= 0.5 * (1.0 + ratio) <= max_weight
    w_plus = np.where(admissible, 0.5 * (1.0 + ratio), 0.0)
    w_minus = np.where(admissible, 0.5 * (1.0 - ratio), 0.0)
    return w_plus, w_minus, admissible


def _discarded_split(
    spectrum: MomentumSpectrum,
    v_left: float,
    v_right: float,
    m: float,
    max_weight: Optional[float],
) -> Tuple[float, float]:
    """(probability below p_min, probability in the capped band above it)."""
    density = spectrum.density()
    _, _, above = decomposition_weights(spectrum.momenta, v_left, v_right, m)
    _, _, kept = decomposition_weights(spectrum.momenta, v_left, v_right, m, max_weight)
    below = float(np.sum(density[~above]) * spectrum.dp)
    band = float(np.sum(density[above & ~kept]) * spectrum.dp)
    return below, band


def _weighted_pair(
    f0: ComplexField,
    v_left: float,
    v_right: float,
    m: float,
    tolerance: float,
    max_weight: Optional[float] = DEFAULT_MAX_WEIGHT,
) -> Tuple[ComplexField, ComplexField, float]:
    spectrum = momentum_spectrum(f0)
    w_plus, w_minus, _ = decomposition_weights(spectrum.momenta, v_left, v_right, m, max_weight)
    below, band = _discarded_split(spectrum, v_left, v_right, m, max_weight)
    if below > DISCARD_FACTOR * tolerance:
        raise AdmissibilityError(
            f"{below:.3g} of the initial probability lies below p_min = "
            f"{minimum_momentum(v_left, v_right, m):.6g} (limit {DISCARD_FACTOR * tolerance:.3g})"
        )
    logger.info(
        "right decomposition discards %.3g probability below p_min and %.3g with |w+| > %s",
        below,
        band,
        max_weight,
    )
    plus = inverse_momentum_spectrum(
        MomentumSpectrum(spectrum.momenta, w_plus * spectrum.amplitudes, spectrum.x_origin), f0.grid
    )
    minus = inverse_momentum_spectrum(
        MomentumSpectrum(spectrum.momenta, w_minus * spectrum.amplitudes, spectrum.x_origin), f0.grid
    )
    return plus, minus, below + band


def right_decomposition(
    f0: ComplexField,
    v_left: float,
    v_right: float,
    m: float,
    tolerance: float = ADMISSIBILITY_TOLERANCE,
    max_weight: Optional[float] = DEFAULT_MAX_WEIGHT,
) -> Tuple[ComplexField, ComplexField]:
    """(psi_R+, psi_R-) initial components for the V0 = V_R decomposition."""
    plus, minus, _ = _weighted_pair(f0, v_left, v_right, m, tolerance, max_weight)
    return plus, minus


def admissible_projection(
    f0: ComplexField,
    v_left: float,
    v_right: float,
    m: float,
    tolerance: float = ADMISSIBILITY_TOLERANCE,
    max_weight: Optional[float] = DEFAULT_MAX_WEIGHT,
) -> ComplexField:
    """f0 with every inadmissible momentum bin removed; equals the sum of the right pair."""
    plus, minus, _ = _weighted_pair(f0, v_left, v_right, m, tolerance, max_weight)
    return plus + minus


def discarded_probability(f0: ComplexField, v_left: float, v_right: float, m: float) -> float:
    """Initial probability below p_min."""
    below, _ = _discarded_split(momentum_spectrum(f0), v_left, v_right, m, None)
    return below


def threshold_band_probability(
    f0: ComplexField,
    v_left: float,
    v_right: float,
    m: float,
    max_weight: Optional[float] = DEFAULT_MAX_WEIGHT,
) -> float:
    """Initial probability above p_min dropped because its weight exceeds max_weight."""
    _, band = _discarded_split(momentum_spectrum(f0), v_left, v_right, m, max_weight)
    return band


def multisurface_initial(
    f0: ComplexField,
    n_surfaces: int,
    m: float,
    v_left: float = 0.0,
    v0_eff: Optional[float] = None,
    incident_surface: int = 1,
    t0: float = 0.0,
    tolerance: float = ADMISSIBILITY_TOLERANCE,
    max_weight: Optional[float] = DEFAULT_MAX_WEIGHT,
) -> BipolarState:
    """
    Packet incident on one surface, all other surfaces empty.

    With v0_eff equal to the incident surface's left asymptote (the
    default) the state is exactly (psi0, 0).
    """
    if not 1 <= incident_surface <= n_surfaces:
        raise ValueError(f"incident_surface must be in 1..{n_surfaces}, got {incident_surface}")
    reference = v_left if v0_eff is None else v0_eff
    components = np.zeros((n_surfaces, 2, f0.grid.n_points), dtype=np.complex128)
    if reference == v_left:
        components[incident_surface - 1, 0] = f0.values
    else:
        plus, minus = right_decomposition(f0, v_left, reference, m, tolerance, max_weight)
        components[incident_surface - 1, 0] = plus.values
        components[incident_surface - 1, 1] = minus.values
    return BipolarState(grid=f0.grid, components=components, t=t0, m=m)


def splice_initials(
    f0: ComplexField,
    v_left: float,
    v_right: float,
    m: float,
    t0: float = 0.0,
    tolerance: float = ADMISSIBILITY_TOLERANCE,
    max_weight: Optional[float] = DEFAULT_MAX_WEIGHT,
) -> Tuple[BipolarState, BipolarState]:
    """
    Left (V0 = V_L) and right (V0 = V_R) initial states with identical totals.

    Both start from the admissible projection of f0, so the two runs evolve
    the same total wavefunction.
    """
    plus, minus, _ = _weighted_pair(f0, v_left, v_right, m, tolerance, max_weight)
    projected = plus + minus
    zeros = np.zeros_like(projected.values)
    left = BipolarState(f0.grid, np.array([[projected.values, zeros]]), t0, m)
    right = BipolarState(f0.grid, np.array([[plus.values, minus.values]]), t0, m)
    return left, right
