"""
Split-step spectral TDSE propagator used as an independent reference for
the bipolar engine. It always evolves the total wavefunction.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import fft

from bipolarqtm.diagnostics import total_tail, zero_momentum_tail
from bipolarqtm.errors import ContaminationError, MissingSnapshotError, ShapeMismatchError
from bipolarqtm.numerics import HBAR, ComplexField, Grid, edge_fraction, momenta
from bipolarqtm.potentials import PotentialModel
from bipolarqtm.propagator import BipolarState, step_count

logger = logging.getLogger(__name__)

CONTAMINATION_LIMIT = 1e-6
GUARD_STRIDE = 100
DISPERSIONS = ("exact", "stencil")


@dataclass
class OracleRun:
    grid: Grid
    dt: float
    times: List[float]
    snapshots: List[np.ndarray]

    def at(self, t: float) -> np.ndarray:
        for time, snap in zip(self.times, self.snapshots):
            if math.isclose(time, t, rel_tol=1e-9, abs_tol=1e-9):
                return snap
        raise MissingSnapshotError(f"oracle has no snapshot at t = {t}")

    def max_tail_deviation(self, bipolar: Sequence[BipolarState]) -> float:
        """Largest |Psi_bipolar(x_R) - sqrt(2 pi hbar) psi~_oracle(0)| over the shared snapshot times."""
        worst = None
        for state in bipolar:
            try:
                reference = self.at(state.t)
            except MissingSnapshotError:
                continue
            gap = np.abs(total_tail(state.totals(), state.grid) - zero_momentum_tail(reference, self.grid))
            worst = float(np.max(gap)) if worst is None else max(worst, float(np.max(gap)))
        if worst is None:
            raise MissingSnapshotError("oracle and bipolar runs share no snapshot times")
        return worst

    def max_deviation(self, bipolar: Sequence[BipolarState]) -> float:
        """Largest node-wise |psi+ + psi- - psi_oracle| over the shared snapshot times."""
        worst = None
        for state in bipolar:
            try:
                reference = self.at(state.t)
            except MissingSnapshotError:
                continue
            if reference.shape != state.totals().shape:
                raise ShapeMismatchError("oracle and bipolar snapshots differ in shape")
            gap = float(np.max(np.abs(state.totals() - reference)))
            worst = gap if worst is None else max(worst, gap)
        if worst is None:
            raise MissingSnapshotError("oracle and bipolar runs share no snapshot times")
        return worst


def kinetic_energies(grid: Grid, m: float, dispersion: str = "exact") -> np.ndarray:
    """
    Kinetic energy per FFT momentum bin (unshifted order).

    "stencil" uses the dispersion of the three-point second difference,
    so the oracle shares the finite-difference engine's phase velocities.
    """
    p = fft.ifftshift(momenta(grid))
    if dispersion == "exact":
        return p * p / (2.0 * m)
    if dispersion == "stencil":
        dx = grid.dx
        return HBAR * HBAR * (1.0 - np.cos(p * dx / HBAR)) / (m * dx * dx)
    raise ValueError(f"dispersion must be one of {DISPERSIONS}, got '{dispersion}'")


def potential_half_step(potential: PotentialModel, x: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i V(x) dt / 2 hbar) per node, shape (n, f, f)."""
    v = np.moveaxis(potential.matrix(x), -1, 0)
    eigs, vecs = np.linalg.eigh(v)
    phases = np.exp(-0.5j * dt * eigs / HBAR)
    return np.einsum("nik,nk,njk->nij", vecs, phases, vecs.conj())


def _apply(propagator: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.einsum("nij,jn->in", propagator, psi)


def _contamination(psi: np.ndarray) -> float:
    return max(edge_fraction(row) for row in psi) ** 2


def unipolar_propagate(
    psi0: Union[ComplexField, np.ndarray, Sequence[ComplexField]],
    potential: PotentialModel,
    m: float,
    dt: float,
    t_max: float,
    snapshot_times: Optional[Sequence[float]] = None,
    *,
    grid: Optional[Grid] = None,
    t0: float = 0.0,
    dispersion: str = "exact",
    contamination_limit: float = CONTAMINATION_LIMIT,
) -> OracleRun:
    """
    Strang splitting: half potential step, kinetic step in momentum space,
    half potential step. psi0 holds one field per surface.
    """
    if isinstance(psi0, ComplexField):
        grid, psi = psi0.grid, psi0.values[np.newaxis, :].copy()
    elif isinstance(psi0, np.ndarray):
        if grid is None:
            raise ValueError("a grid is required when psi0 is a bare array")
        psi = np.atleast_2d(np.asarray(psi0, dtype=np.complex128)).copy()
    else:
        grid = psi0[0].grid
        psi = np.array([f.values for f in psi0], dtype=np.complex128)
    if psi.shape != (potential.n_surfaces, grid.n_points):
        raise ShapeMismatchError(
            f"oracle state has shape {psi.shape}, expected ({potential.n_surfaces}, {grid.n_points})"
        )
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")

    half = potential_half_step(potential, grid.x, dt)
    kinetic = np.exp(-1j * kinetic_energies(grid, m, dispersion) * dt / HBAR)
    n_steps = step_count(dt, t_max)
    requested = [0.0] if snapshot_times is None else [float(t) for t in snapshot_times]
    wanted = {}
    for t in requested:
        wanted.setdefault(min(int(round(t / dt)), n_steps), []).append(t)

    def guard(step: int) -> None:
        ratio = _contamination(psi)
        if ratio > contamination_limit:
            raise ContaminationError(
                f"oracle density at the periodic edge reached {ratio:.3g} of its peak "
                f"at t = {t0 + step * dt:.6g}"
            )

    run = OracleRun(grid=grid, dt=dt, times=[], snapshots=[])

    def capture(step: int) -> None:
        guard(step)
        for _ in wanted[step]:
            run.times.append(t0 + step * dt)
            run.snapshots.append(psi.copy())

    logger.info("oracle: %d split-step(s) of dt=%g, %s dispersion", n_steps, dt, dispersion)
    if 0 in wanted:
        capture(0)
    for step in range(1, n_steps + 1):
        psi = _apply(half, psi)
        psi = fft.ifft(kinetic * fft.fft(psi, axis=-1), axis=-1)
        psi = _apply(half, psi)
        if step in wanted:
            capture(step)
        elif step % GUARD_STRIDE == 0:
            guard(step)
    return run
