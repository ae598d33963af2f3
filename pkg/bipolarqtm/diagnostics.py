"""
Observables and verdicts computed from bipolar snapshots.

Everything here is a pure function of its inputs. Arrays follow the
propagator layout: (f, n) per surface, (f, 2, n) per component.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from bipolarqtm.errors import MissingSnapshotError
from bipolarqtm.models.report import (
    Condition1,
    Condition2,
    Condition3,
    ConditionReport,
    ConditionThresholds,
    NodeEvent,
    SummaryReport,
    SurfaceBranches,
)
from bipolarqtm.numerics import HBAR, ComplexField, Grid, cumulative_simpson, gradient, momentum_spectrum
from bipolarqtm.potentials import PotentialModel
from bipolarqtm.propagator import MINUS, PLUS, BipolarState, RhsFields, StepDiagnostics

logger = logging.getLogger(__name__)

PHASE_FLOOR = 1e-8
SIGNS = ("+", "-")


@dataclass
class Densities:
    plus: np.ndarray
    minus: np.ndarray
    total: np.ndarray


@dataclass
class AmplitudePhase:
    """R = |psi| and S = hbar * arg(psi), unwrapped where R is above the floor."""

    amplitude: np.ndarray
    phase: np.ndarray
    floor: float

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.phase)

    def reconstruct(self) -> np.ndarray:
        phase = np.where(self.defined, self.phase, 0.0)
        return np.where(self.defined, self.amplitude * np.exp(1j * phase / HBAR), 0.0)


def densities(state: BipolarState) -> Densities:
    rho = np.abs(state.components) ** 2
    return Densities(plus=rho[:, PLUS], minus=rho[:, MINUS], total=np.abs(state.totals()) ** 2)


def _flux(values: np.ndarray, dx: float, m: float) -> np.ndarray:
    return (HBAR / m) * np.imag(np.conj(values) * gradient(values, dx))


def component_flux(state: BipolarState) -> np.ndarray:
    """Standard flux (hbar/m) Im(psi* dpsi/dx) of every component, shape (f, 2, n)."""
    return _flux(state.components, state.grid.dx, state.m)


def combined_probability(state: BipolarState) -> float:
    return float(np.sum(state.component_norms()))


def total_norm(state: BipolarState) -> float:
    return float(np.sum(state.grid.integrate(np.abs(state.totals()) ** 2)))


def amplitude_phase(field: Union[ComplexField, np.ndarray], floor: float = PHASE_FLOOR) -> AmplitudePhase:
    values = field.values if isinstance(field, ComplexField) else np.asarray(field, dtype=np.complex128)
    amplitude = np.abs(values)
    peak = float(np.max(amplitude)) if amplitude.size else 0.0
    phase = np.full(amplitude.shape, np.nan)
    if peak > 0:
        keep = amplitude > floor * peak
        phase[keep] = HBAR * np.unwrap(np.angle(values[keep]))
    return AmplitudePhase(amplitude=amplitude, phase=phase, floor=floor)


def _density_rates(state: BipolarState, rhs: RhsFields) -> np.ndarray:
    return 2.0 * np.real(np.conj(state.components) * rhs.derivatives)


def density_rate_residual(state: BipolarState, rhs: RhsFields, potential: PotentialModel) -> np.ndarray:
    """
    |d rho+-/dt - source+-| per component, shape (f, 2, n).

    The source is -j+-' plus the off-diagonal transfer
    (2/hbar) sum_{j != i} V_ij Im(psi_i* psi_j) and the bipolar coupling
    +-(1/hbar) Im[psi_i* sum_j V'_ij (Psi_j+ - Psi_j-)].
    """
    grid = state.grid
    psi = state.components
    v = potential.matrix(grid.x)
    dv = potential.derivative_matrix(grid.x)
    integrals = cumulative_simpson(psi, grid.dx)
    spread = integrals[:, PLUS] - integrals[:, MINUS]

    source = -gradient(component_flux(state), grid.dx)
    f = state.n_surfaces
    for i in range(f):
        pull = np.zeros(grid.n_points, dtype=np.complex128)
        for j in range(f):
            pull += dv[i, j] * spread[j]
        for sign, factor in ((PLUS, 1.0), (MINUS, -1.0)):
            source[i, sign] += factor * np.imag(np.conj(psi[i, sign]) * pull) / HBAR
            for j in range(f):
                if j != i:
                    source[i, sign] += 2.0 / HBAR * v[i, j] * np.imag(np.conj(psi[i, sign]) * psi[j, sign])
    return np.abs(_density_rates(state, rhs) - source)


def combined_flux_imbalance(state: BipolarState, rhs: RhsFields) -> np.ndarray:
    """d(rho+ + rho-)/dt + (j+' + j-') per surface, shape (f, n)."""
    rates = _density_rates(state, rhs)
    divergence = gradient(component_flux(state), state.grid.dx)
    return rates[:, PLUS] + rates[:, MINUS] + divergence[:, PLUS] + divergence[:, MINUS]


def _side_integral(grid: Grid, rho: np.ndarray, x_d: float, right: bool) -> np.ndarray:
    mask = grid.x > x_d if right else grid.x <= x_d
    return np.atleast_1d(grid.integrate(np.where(mask, rho, 0.0)))


def branch_split(psi: np.ndarray, grid: Grid, x_d: float = 0.0) -> Tuple[float, float]:
    """Probability of |psi|^2 left of (or on) x_D and right of x_D, summed over surfaces."""
    rho = np.abs(np.atleast_2d(np.asarray(psi))) ** 2
    left = float(np.sum(_side_integral(grid, rho, x_d, right=False)))
    right = float(np.sum(_side_integral(grid, rho, x_d, right=True)))
    return left, right


def _separation(state: BipolarState, x_d: float) -> np.ndarray:
    rho = densities(state)
    stray_minus = _side_integral(state.grid, rho.minus, x_d, right=True)
    stray_plus = _side_integral(state.grid, rho.plus, x_d, right=False)
    return np.maximum(stray_minus, stray_plus)


def _tail_ratio(state: BipolarState, fraction: float, floor: float) -> float:
    n = state.grid.n_points
    start = n - max(1, int(math.ceil(fraction * n)))
    norms = state.component_norms()
    magnitude = np.abs(state.integrals())
    worst = 0.0
    for i in range(state.n_surfaces):
        for sign in (PLUS, MINUS):
            if norms[i, sign] <= floor:
                continue
            peak = float(np.max(magnitude[i, sign]))
            if peak > 0:
                worst = max(worst, float(np.max(magnitude[i, sign, start:])) / peak)
    return worst


def total_tail(psi: np.ndarray, grid: Grid) -> np.ndarray:
    """Psi_total(x_R) per surface: the running integral of the total wavefunction at the right edge."""
    psi = np.atleast_2d(np.asarray(psi))
    return cumulative_simpson(psi, grid.dx)[..., -1]


def zero_momentum_tail(psi: np.ndarray, grid: Grid) -> np.ndarray:
    """sqrt(2 pi hbar) psi~(p = 0) per surface."""
    psi = np.atleast_2d(np.asarray(psi))
    scale = math.sqrt(2.0 * math.pi * HBAR)
    return np.array([scale * momentum_spectrum(ComplexField(row, grid)).at_zero() for row in psi])


def _window_maxima(rho: np.ndarray, width: int) -> Tuple[np.ndarray, np.ndarray]:
    n = rho.size
    pad = np.zeros(width)
    left = sliding_window_view(np.concatenate([pad, rho]), width).max(axis=-1)[:n]
    right = sliding_window_view(np.concatenate([rho, pad]), width).max(axis=-1)[1 : n + 1]
    return left, right


def find_nodes(rho: np.ndarray, dx: float, thresholds: ConditionThresholds) -> List[Tuple[int, float]]:
    """
    Interior local minima of rho below theta3a * max with density above
    theta3b * max on both sides within node_window.
    """
    peak = float(np.max(rho)) if rho.size else 0.0
    if peak <= 0 or rho.size < 3:
        return []
    width = max(1, int(round(thresholds.node_window / dx)))
    left, right = _window_maxima(rho, width)
    inner = slice(1, -1)
    candidate = np.zeros(rho.size, dtype=bool)
    candidate[inner] = (
        (rho[inner] < thresholds.theta3a * peak)
        & (rho[inner] < rho[:-2])
        & (rho[inner] <= rho[2:])
    )
    lifted = thresholds.theta3b * peak
    hits = np.nonzero(candidate & (left > lifted) & (right > lifted))[0]
    return [(int(k), float(rho[k] / peak)) for k in hits]


def node_events(state: BipolarState, thresholds: ConditionThresholds) -> List[NodeEvent]:
    rho = np.abs(state.components) ** 2
    norms = state.component_norms()
    events = []
    for i in range(state.n_surfaces):
        for sign in (PLUS, MINUS):
            if norms[i, sign] <= thresholds.component_floor:
                continue
            for k, depth in find_nodes(rho[i, sign], state.grid.dx, thresholds):
                events.append(
                    NodeEvent(t=state.t, x=float(state.grid.x[k]), surface=i + 1, sign=SIGNS[sign], depth=depth)
                )
    return events


def check_conditions(
    snapshots: Sequence[BipolarState],
    thresholds: Optional[ConditionThresholds] = None,
    *,
    t0: Optional[float] = None,
    tf: Optional[float] = None,
) -> ConditionReport:
    """
    Evaluate the separation, localization and node-free conditions.

    The first snapshot is taken as t0 and the last as tf. Passing t0 or tf
    checks that the schedule actually contains those times.
    """
    thresholds = thresholds or ConditionThresholds()
    if len(snapshots) < 2:
        raise MissingSnapshotError("condition checks need snapshots at both t0 and tf")
    first, last = snapshots[0], snapshots[-1]
    for label, wanted, got in (("t0", t0, first.t), ("tf", tf, last.t)):
        if wanted is not None and not math.isclose(wanted, got, rel_tol=1e-9, abs_tol=1e-9):
            raise MissingSnapshotError(f"no snapshot at {label} = {wanted} (nearest is {got})")

    purity = first.component_norms()[:, MINUS]
    separation = _separation(last, thresholds.x_d)
    condition1 = Condition1(
        t0_purity=float(np.max(purity)),
        tf_separation=float(np.max(separation)),
        per_surface_t0=[float(p) for p in purity],
        per_surface_tf=[float(s) for s in separation],
    )

    tails = [_tail_ratio(s, thresholds.tail_fraction, thresholds.component_floor) for s in snapshots]
    integrals = [total_tail(s.totals(), s.grid) for s in snapshots]
    transforms = [zero_momentum_tail(s.totals(), s.grid) for s in snapshots]
    condition2 = Condition2(
        max_tail_magnitude=tails,
        worst=max(tails),
        initial=tails[0],
        total_tail=[float(np.max(np.abs(v))) for v in integrals],
        zero_momentum_tail=[float(np.max(np.abs(v))) for v in transforms],
        identity_error=max(float(np.max(np.abs(a - b))) for a, b in zip(integrals, transforms)),
    )

    events = [event for s in snapshots for event in node_events(s, thresholds)]
    condition3 = Condition3(node_events=events)

    verdicts = {
        "condition1": condition1.t0_purity < thresholds.theta1 and condition1.tf_separation < thresholds.theta1,
        "condition2": condition2.worst < thresholds.theta2,
        "condition2_initial": condition2.initial < thresholds.theta2,
        "condition3": not events,
    }
    report = ConditionReport(
        condition1=condition1,
        condition2=condition2,
        condition3=condition3,
        thresholds=thresholds,
        verdicts=verdicts,
    )
    logger.info("%s over %d snapshot(s)", report.get_summary(), len(snapshots))
    return report


def reflection_transmission(
    final_state: BipolarState, x_d: float = 0.0, theta1: float = 1e-3
) -> List[Tuple[float, float]]:
    """(R, T) = (integral of rho-, integral of rho+) per surface."""
    separation = _separation(final_state, x_d)
    if np.any(separation >= theta1):
        logger.warning(
            "branches are not separated at t = %g (stray probability %.3g across x_D = %g); "
            "reflection/transmission are not clean branch probabilities",
            final_state.t, float(np.max(separation)), x_d,
        )
    norms = final_state.component_norms()
    return [(float(norms[i, MINUS]), float(norms[i, PLUS])) for i in range(final_state.n_surfaces)]


def _component_index(component: str) -> int:
    if component in ("minus", "-"):
        return MINUS
    if component in ("plus", "+"):
        return PLUS
    raise ValueError(f"component must be 'plus' or 'minus', got '{component}'")


def _centroids(snapshots: Sequence[BipolarState], surface: int, sign: int) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.empty(len(snapshots))
    centers = np.full(len(snapshots), np.nan)
    for k, s in enumerate(snapshots):
        rho = np.abs(s.components[surface - 1, sign]) ** 2
        norms[k] = s.grid.integrate(rho)
        if norms[k] > 0:
            centers[k] = s.grid.integrate(s.grid.x * rho) / norms[k]
    return norms, centers


def stage_transition_time(
    snapshots: Sequence[BipolarState],
    surface: int = 1,
    component: str = "minus",
    *,
    speed_fraction: float = 0.5,
    materialization: float = 0.01,
    final_window: float = 0.25,
) -> Optional[float]:
    """
    Earliest time at which the component's centroid speed exceeds
    speed_fraction of its average over the final window, counting only
    snapshots where the component holds more than materialization.
    """
    if len(snapshots) < 10:
        raise MissingSnapshotError(f"stage detection needs at least 10 snapshots, got {len(snapshots)}")
    sign = _component_index(component)
    norms, centers = _centroids(snapshots, surface, sign)
    eligible = np.nonzero(norms > materialization)[0]
    if eligible.size < 2:
        return None
    times = np.array([snapshots[k].t for k in eligible])
    speed = np.abs(np.gradient(centers[eligible], times))
    tail = max(1, int(math.ceil(final_window * eligible.size)))
    reference = float(np.mean(speed[-tail:]))
    if not reference > 0:
        return None
    above = np.nonzero(speed > speed_fraction * reference)[0]
    return float(times[above[0]]) if above.size else None


def peak_coincidence_time(
    snapshots: Sequence[BipolarState], surface: int = 1, materialization: float = 0.01
) -> Optional[float]:
    """Earliest time the psi+ density peak sits at or right of the psi- peak."""
    for s in snapshots:
        rho = np.abs(s.components[surface - 1]) ** 2
        if s.grid.integrate(rho[MINUS]) <= materialization:
            continue
        if s.grid.x[np.argmax(rho[PLUS])] >= s.grid.x[np.argmax(rho[MINUS])]:
            return float(s.t)
    return None


def summarize(
    snapshots: Sequence[BipolarState],
    thresholds: Optional[ConditionThresholds] = None,
    *,
    diagnostics: Optional[StepDiagnostics] = None,
    n_steps: int = 0,
    speed_fraction: float = 0.5,
    materialization: float = 0.01,
    constituent_reports: Optional[dict] = None,
    oracle_max_deviation: Optional[float] = None,
) -> SummaryReport:
    thresholds = thresholds or ConditionThresholds()
    report = check_conditions(snapshots, thresholds)
    final = snapshots[-1]
    branches = [
        SurfaceBranches(surface=i + 1, reflection=r, transmission=t)
        for i, (r, t) in enumerate(reflection_transmission(final, thresholds.x_d, thresholds.theta1))
    ]

    if diagnostics is not None and diagnostics.times:
        series_t = list(diagnostics.times)
        series_p = list(diagnostics.combined_probability)
    else:
        series_t = [s.t for s in snapshots]
        series_p = [combined_probability(s) for s in snapshots]
    lowest = int(np.argmin(series_p))

    initial_norm = total_norm(snapshots[0])
    final_norm = total_norm(final)

    stage = peak = None
    if len(snapshots) >= 10:
        stage = stage_transition_time(
            snapshots, 1, "minus", speed_fraction=speed_fraction, materialization=materialization
        )
        peak = peak_coincidence_time(snapshots, 1, materialization)

    summary = SummaryReport(
        branches=branches,
        combined_prob_initial=combined_probability(snapshots[0]),
        combined_prob_min=float(series_p[lowest]),
        combined_prob_min_time=float(series_t[lowest]),
        combined_prob_final=combined_probability(final),
        total_norm_initial=initial_norm,
        total_norm_final=final_norm,
        norm_drift=(final_norm - initial_norm) / initial_norm if initial_norm > 0 else 0.0,
        stage_transition_time=stage,
        peak_coincidence_time=peak,
        condition_report=report,
        constituent_reports=constituent_reports or {},
        oracle_max_deviation=oracle_max_deviation,
        n_steps=n_steps,
        snapshot_times=[float(s.t) for s in snapshots],
    )
    logger.info(summary.get_summary())
    return summary
