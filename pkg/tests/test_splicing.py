import numpy as np
import pytest

from bipolarqtm.errors import SpliceError
from bipolarqtm.initial_conditions import PacketSpec, gaussian_packet, splice_initials
from bipolarqtm.potentials import barrier_ramp
from bipolarqtm.propagator import BipolarState, propagate
from bipolarqtm.splicing import SplicePlan, splice, splice_all

M = 2000.0
RAMP = barrier_ramp(0.0020, 2.5, 2.5, 0.0, 0.0008)


@pytest.fixture
def short_runs(grid):
    packet = gaussian_packet(PacketSpec(gamma=0.35, x0=-7.0, p0=4.0, m=M), grid)
    left, right = splice_initials(packet, 0.0, 0.0008, M)
    times = [0.0, 10.0, 20.0]
    return (
        propagate(left, RAMP, 0.1, 20.0, times, energy_shift=0.004),
        propagate(right, RAMP, 0.1, 20.0, times, energy_shift=0.004),
    )


def test_spliced_totals_match_each_run(short_runs):
    left, right = short_runs
    plan = SplicePlan(0.0, left, right)
    spliced = splice_all(plan)
    assert len(spliced) == 3
    for k, state in enumerate(spliced):
        assert np.max(np.abs(state.totals() - left.snapshots[k].totals())) <= 1e-10
        assert np.max(np.abs(state.totals() - right.snapshots[k].totals())) <= 1e-10
        assert state.t == left.snapshots[k].t


def test_splice_takes_left_nodes_left_of_dividing_point(short_runs):
    left, right = short_runs
    plan = SplicePlan(0.0, left, right)
    spliced = splice(plan, 1)
    x = left.grid.x
    assert np.array_equal(spliced.components[..., x < 0], left.snapshots[1].components[..., x < 0])
    assert np.array_equal(spliced.components[..., x > 0], right.snapshots[1].components[..., x > 0])


def test_node_on_dividing_point_belongs_to_left(short_runs):
    left, right = short_runs
    x_d = float(left.grid.x[438])
    mask = SplicePlan(x_d, left, right).left_mask()
    assert mask[438] and not mask[439]


def test_right_run_carries_minus_component_from_the_start(short_runs):
    _, right = short_runs
    assert right.initial.component_norms()[0, 1] > 0.0


def test_mismatched_totals_are_rejected(short_runs):
    left, right = short_runs
    tampered = right.snapshots[1]
    right.snapshots[1] = BipolarState(tampered.grid, tampered.components * 1.01, tampered.t, tampered.m)
    with pytest.raises(SpliceError):
        splice(SplicePlan(0.0, left, right), 1)


def test_mismatched_schedules_are_rejected(grid):
    packet = gaussian_packet(PacketSpec(gamma=0.35, x0=-7.0, p0=4.0, m=M), grid)
    left_init, right_init = splice_initials(packet, 0.0, 0.0008, M)
    left = propagate(left_init, RAMP, 0.1, 1.0, [0.0, 1.0])
    right = propagate(right_init, RAMP, 0.1, 1.0, [0.0, 0.5])
    with pytest.raises(SpliceError):
        SplicePlan(0.0, left, right)
