"""
Bipolar evolution engine.

Each surface i carries a pair (psi_i+, psi_i-). Their time derivatives are

    d psi_i+-/dt = -(i/hbar) [ sum_j H_ij psi_j+-  +-  1/2 sum_j V'_ij (Psi_j+ - Psi_j-) ]

with Psi the running integral from the left edge. Components are stored
stacked as an array of shape (f, 2, n): index 0 on the second axis is the
+ component, index 1 the - component.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from bipolarqtm.errors import InstabilityError, ShapeMismatchError
from bipolarqtm.numerics import HBAR, ComplexField, Grid, cumulative_simpson, laplacian
from bipolarqtm.potentials import PotentialModel

logger = logging.getLogger(__name__)

PLUS, MINUS = 0, 1
NORM_LIMIT = 10.0

ProgressCallback = Callable[[int, int, float], None]


@dataclass
class BipolarState:
    grid: Grid
    components: np.ndarray
    t: float
    m: float

    def __post_init__(self):
        self.components = np.asarray(self.components, dtype=np.complex128)
        if self.components.ndim != 3 or self.components.shape[1:] != (2, self.grid.n_points):
            raise ShapeMismatchError(
                f"components must have shape (f, 2, {self.grid.n_points}), got {self.components.shape}"
            )

    @classmethod
    def from_fields(
        cls,
        pairs: Sequence[Tuple[ComplexField, ComplexField]],
        t: float = 0.0,
        m: float = 1.0,
    ) -> "BipolarState":
        grid = pairs[0][0].grid
        for plus, minus in pairs:
            if plus.grid != grid or minus.grid != grid:
                raise ShapeMismatchError("all components must share one grid")
        components = np.array([[plus.values, minus.values] for plus, minus in pairs])
        return cls(grid=grid, components=components, t=t, m=m)

    @property
    def n_surfaces(self) -> int:
        return self.components.shape[0]

    def totals(self) -> np.ndarray:
        """psi_i = psi_i+ + psi_i- for every surface, shape (f, n)."""
        return self.components[:, PLUS] + self.components[:, MINUS]

    def integrals(self) -> np.ndarray:
        """Psi_i+- running integrals, shape (f, 2, n)."""
        return cumulative_simpson(self.components, self.grid.dx)

    def component_norms(self) -> np.ndarray:
        return self.grid.integrate(np.abs(self.components) ** 2)

    def copy(self) -> "BipolarState":
        return BipolarState(self.grid, self.components.copy(), self.t, self.m)

    def scaled(self, factor: complex) -> "BipolarState":
        return BipolarState(self.grid, factor * self.components, self.t, self.m)


@dataclass
class RhsFields:
    grid: Grid
    derivatives: np.ndarray

    def plus(self, surface: int = 1) -> np.ndarray:
        return self.derivatives[surface - 1, PLUS]

    def minus(self, surface: int = 1) -> np.ndarray:
        return self.derivatives[surface - 1, MINUS]

    def summed(self) -> np.ndarray:
        return self.derivatives[:, PLUS] + self.derivatives[:, MINUS]

    def scaled(self, factor: complex) -> "RhsFields":
        return RhsFields(self.grid, factor * self.derivatives)


class DiscreteSystem:
    """Potential matrices sampled once on a grid, plus the RHS kernels."""

    def __init__(self, grid: Grid, potential: PotentialModel, m: float, energy_shift: float = 0.0):
        self.grid = grid
        self.potential = potential
        self.m = float(m)
        self.energy_shift = float(energy_shift)
        x = grid.x
        self.v = potential.matrix(x)
        self.dv = potential.derivative_matrix(x)
        self.n_surfaces = potential.n_surfaces

    def check(self, state: BipolarState) -> None:
        if state.n_surfaces != self.n_surfaces:
            raise ShapeMismatchError(
                f"state has {state.n_surfaces} surface(s), potential has {self.n_surfaces}"
            )
        if state.grid != self.grid:
            raise ShapeMismatchError("state grid differs from the discretized system grid")

    def hamiltonian(self, fields: np.ndarray) -> np.ndarray:
        """
        Discrete sum_j H_ij f_j for fields of shape (f, ..., n).

        The kinetic part uses the Dirichlet second difference and the
        potential part the node-sampled diabatic matrix.
        """
        out = -(HBAR * HBAR / (2.0 * self.m)) * laplacian(fields, self.grid.dx)
        for i in range(self.n_surfaces):
            for j in range(self.n_surfaces):
                out[i] += self.v[i, j] * fields[j]
        if self.energy_shift:
            out -= self.energy_shift * fields
        return out

    def coupling(self, components: np.ndarray) -> np.ndarray:
        """1/2 sum_j V'_ij (Psi_j+ - Psi_j-), shape (f, n)."""
        integrals = cumulative_simpson(components, self.grid.dx)
        spread = integrals[:, PLUS] - integrals[:, MINUS]
        out = np.zeros(spread.shape, dtype=np.complex128)
        for i in range(self.n_surfaces):
            for j in range(self.n_surfaces):
                out[i] += self.dv[i, j] * spread[j]
        return 0.5 * out

    def derivatives(self, components: np.ndarray) -> np.ndarray:
        h = self.hamiltonian(components)
        c = self.coupling(components)
        h[:, PLUS] += c
        h[:, MINUS] -= c
        return (-1j / HBAR) * h

    def rhs(self, state: BipolarState) -> RhsFields:
        self.check(state)
        return RhsFields(self.grid, self.derivatives(state.components))

    def unipolar(self, totals: np.ndarray) -> np.ndarray:
        return (-1j / HBAR) * self.hamiltonian(totals)


def multisurface_rhs(state: BipolarState, potential: PotentialModel) -> RhsFields:
    return DiscreteSystem(state.grid, potential, state.m).rhs(state)


def bipolar_rhs(state: BipolarState, potential: PotentialModel) -> RhsFields:
    if state.n_surfaces != 1 or potential.n_surfaces != 1:
        raise ShapeMismatchError("bipolar_rhs is the single-surface case; use multisurface_rhs")
    return multisurface_rhs(state, potential)


def unipolar_rhs(totals: np.ndarray, grid: Grid, potential: PotentialModel, m: float) -> np.ndarray:
    """Discrete TDSE right-hand side -(i/hbar) sum_j H_ij psi_j for psi of shape (f, n)."""
    return DiscreteSystem(grid, potential, m).unipolar(np.asarray(totals, dtype=np.complex128))


def _clamp_edges(components: np.ndarray) -> np.ndarray:
    components[..., 0] = 0.0
    components[..., -1] = 0.0
    return components


def euler_step(state: BipolarState, rhs: RhsFields, dt: float) -> BipolarState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    advanced = _clamp_edges(state.components + dt * rhs.derivatives)
    return BipolarState(state.grid, advanced, state.t + dt, state.m)


def rk4_step(state: BipolarState, system: DiscreteSystem, dt: float) -> BipolarState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    y = state.components
    k1 = system.derivatives(y)
    k2 = system.derivatives(_clamp_edges(y + 0.5 * dt * k1))
    k3 = system.derivatives(_clamp_edges(y + 0.5 * dt * k2))
    k4 = system.derivatives(_clamp_edges(y + dt * k3))
    advanced = _clamp_edges(y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    return BipolarState(state.grid, advanced, state.t + dt, state.m)


@dataclass
class StepDiagnostics:
    stride: int
    steps: List[int] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    total_norm: List[float] = field(default_factory=list)
    combined_probability: List[float] = field(default_factory=list)
    component_norms: List[np.ndarray] = field(default_factory=list)

    def record(self, step: int, state: BipolarState) -> None:
        norms = state.component_norms()
        self.steps.append(step)
        self.times.append(state.t)
        self.total_norm.append(float(np.sum(state.grid.integrate(np.abs(state.totals()) ** 2))))
        self.combined_probability.append(float(np.sum(norms)))
        self.component_norms.append(norms)


@dataclass
class Propagation:
    """Snapshots of one bipolar run together with its step diagnostics."""

    snapshots: List[BipolarState]
    requested_times: List[float]
    diagnostics: StepDiagnostics
    dt: float
    n_steps: int
    stepper: str
    energy_shift: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.snapshots[0].grid

    @property
    def times(self) -> List[float]:
        return [s.t for s in self.snapshots]

    @property
    def initial(self) -> BipolarState:
        return self.snapshots[0]

    @property
    def final(self) -> BipolarState:
        return self.snapshots[-1]


def step_count(dt: float, t_max: float) -> int:
    if t_max == 0:
        return 0
    n = int(round(t_max / dt))
    if not math.isclose(n * dt, t_max, rel_tol=1e-9, abs_tol=1e-12):
        n = int(math.ceil(t_max / dt))
        logger.warning("t_max = %g is not a multiple of dt = %g; running %d steps", t_max, dt, n)
    return n


def propagate(
    initial: BipolarState,
    potential: PotentialModel,
    dt: float,
    t_max: float,
    snapshot_times: Optional[Sequence[float]] = None,
    *,
    stepper: str = "euler",
    energy_shift: float = 0.0,
    diagnostics_stride: int = 100,
    norm_limit: float = NORM_LIMIT,
    on_progress: Optional[ProgressCallback] = None,
    progress_stride: int = 1000,
) -> Propagation:
    """
    Fixed-step propagation from initial.t to initial.t + t_max.

    energy_shift subtracts a constant from H during stepping. It only
    rotates the global phase, which is restored exactly on every captured
    snapshot, but it reduces the forward-Euler amplification that grows
    with (dt * E)^2.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_max < 0:
        raise ValueError(f"t_max must be non-negative, got {t_max}")
    if stepper not in ("euler", "rk4"):
        raise ValueError(f"unknown stepper '{stepper}'")
    requested = [0.0] if snapshot_times is None else [float(t) for t in snapshot_times]
    for t in requested:
        if t < 0 or t > t_max + 0.5 * dt:
            raise ValueError(f"snapshot time {t} outside [0, {t_max}]")

    system = DiscreteSystem(initial.grid, potential, initial.m, energy_shift)
    system.check(initial)
    n_steps = step_count(dt, t_max)
    t0 = initial.t

    # requested times snap to the nearest step
    wanted = {}
    for t in requested:
        wanted.setdefault(min(int(round(t / dt)), n_steps), []).append(t)

    def capture(s: BipolarState) -> BipolarState:
        phase = np.exp(-1j * energy_shift * (s.t - t0) / HBAR) if energy_shift else 1.0
        return BipolarState(s.grid, phase * s.components, s.t, s.m)

    diagnostics = StepDiagnostics(stride=max(1, int(diagnostics_stride)))
    state = initial.copy()
    diagnostics.record(0, state)
    snapshots: List[BipolarState] = []
    if 0 in wanted:
        snapshots.extend(capture(state) for _ in wanted[0])

    logger.info(
        "propagating %d step(s) of dt=%g with %s on %d nodes, %d surface(s)",
        n_steps, dt, stepper, initial.grid.n_points, initial.n_surfaces,
    )
    dx = initial.grid.dx
    for step in range(1, n_steps + 1):
        if stepper == "euler":
            state = euler_step(state, RhsFields(state.grid, system.derivatives(state.components)), dt)
        else:
            state = rk4_step(state, system, dt)
        state.t = t0 + step * dt

        norms = np.sum(np.abs(state.components) ** 2, axis=-1) * dx
        worst = float(np.max(norms))
        if not math.isfinite(worst) or worst > norm_limit:
            raise InstabilityError(step, state.t, worst, norm_limit)

        if step % diagnostics.stride == 0 or step == n_steps:
            diagnostics.record(step, state)
        if step in wanted:
            snapshots.extend(capture(state) for _ in wanted[step])
        if on_progress is not None and (step % progress_stride == 0 or step == n_steps):
            on_progress(step, n_steps, worst)

    return Propagation(
        snapshots=snapshots,
        requested_times=requested,
        diagnostics=diagnostics,
        dt=dt,
        n_steps=n_steps,
        stepper=stepper,
        energy_shift=energy_shift,
    )
