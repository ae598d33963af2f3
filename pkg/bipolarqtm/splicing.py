"""
Glue the V0 = V_L and V0 = V_R decompositions of an asymmetric problem
together at a dividing point.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from bipolarqtm.errors import SpliceError
from bipolarqtm.propagator import BipolarState, Propagation

logger = logging.getLogger(__name__)

TOTAL_TOLERANCE = 1e-6


@dataclass
class SplicePlan:
    x_d: float
    left_run: Propagation
    right_run: Propagation

    def __post_init__(self):
        if self.left_run.grid != self.right_run.grid:
            raise SpliceError("left and right runs use different grids")
        if self.left_run.dt != self.right_run.dt:
            raise SpliceError("left and right runs use different time steps")
        if len(self.left_run.snapshots) != len(self.right_run.snapshots) or not np.allclose(
            self.left_run.times, self.right_run.times, rtol=0.0, atol=1e-9
        ):
            raise SpliceError("left and right runs have different snapshot schedules")

    @property
    def n_snapshots(self) -> int:
        return len(self.left_run.snapshots)

    def total_mismatch(self, snapshot_index: int) -> float:
        left = self.left_run.snapshots[snapshot_index].totals()
        right = self.right_run.snapshots[snapshot_index].totals()
        return float(np.max(np.abs(left - right)))

    def left_mask(self) -> np.ndarray:
        """True on nodes taken from the left run; a node sitting on x_D belongs to the left."""
        grid = self.left_run.grid
        return grid.x <= self.x_d + 1e-9 * grid.dx


def splice(plan: SplicePlan, snapshot_index: int) -> BipolarState:
    mismatch = plan.total_mismatch(snapshot_index)
    if mismatch > TOTAL_TOLERANCE:
        raise SpliceError(
            f"left and right totals differ by {mismatch:.3g} at snapshot {snapshot_index}"
        )
    left = plan.left_run.snapshots[snapshot_index]
    right = plan.right_run.snapshots[snapshot_index]
    components = np.where(plan.left_mask(), left.components, right.components)
    return BipolarState(left.grid, components, left.t, left.m)


def splice_all(plan: SplicePlan) -> List[BipolarState]:
    spliced = [splice(plan, k) for k in range(plan.n_snapshots)]
    logger.info(
        "spliced %d snapshot(s) at x_D = %g (worst total mismatch %.3g)",
        len(spliced), plan.x_d,
        max(plan.total_mismatch(k) for k in range(plan.n_snapshots)),
    )
    return spliced
