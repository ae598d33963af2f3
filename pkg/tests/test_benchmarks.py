"""
Full-length preset runs checked against their acceptance sections.

These take minutes each; run them with `pytest --runslow`.
"""
import pytest

from bipolarqtm.commands.run_cmd import execute_run
from bipolarqtm.config import expand_preset
from bipolarqtm.utils.config import Settings

pytestmark = pytest.mark.slow


def _outcome(name):
    config = expand_preset(name)
    return config, execute_run(config, Settings(), quiet=True)


def _run(name):
    config, outcome = _outcome(name)
    return config, outcome.summary


@pytest.mark.parametrize(
    "name",
    [
        "eckart-proton",
        "eckart-proton-fine",
        "eckart-electron",
        "barrier-ramp-spliced",
        "barrier-ramp-left",
        "two-surface",
        "two-surface-decoupled",
        "free-particle",
    ],
)
def test_preset_meets_acceptance(name):
    config, summary = _run(name)
    assert config.acceptance.evaluate(summary, config.oracle.tolerance) == []


def test_proton_reflection_is_small_and_stage_follows_peak():
    _, summary = _run("eckart-proton")
    assert 0.0 < summary.r_prob < 0.5
    assert summary.stage_transition_time > summary.peak_coincidence_time
    assert 0.84 <= summary.combined_prob_min <= 0.88


def test_left_decomposition_leaks_reflection_past_the_barrier():
    _, summary = _run("barrier-ramp-left")
    assert not summary.condition_report.verdicts["condition1"]
    assert summary.extras["stray_minus_right"] > summary.condition_report.thresholds.theta1


def test_spliced_run_keeps_each_constituent_node_free():
    _, summary = _run("barrier-ramp-spliced")
    assert set(summary.constituent_reports) == {"left", "right"}
    for report in summary.constituent_reports.values():
        assert report.verdicts["condition3"]


def test_decoupled_surfaces_leave_second_surface_empty():
    _, summary = _run("two-surface-decoupled")
    second = summary.branches[1]
    assert second.reflection + second.transmission < 1e-12


def test_spliced_right_run_stays_bounded():
    _, outcome = _outcome("barrier-ramp-spliced")
    right = outcome.runs["right"]
    assert right.final.t == pytest.approx(outcome.config.time.t_max)
    assert max(float(s.component_norms().max()) for s in right.snapshots) < 3.0
    assert 0.0 < outcome.summary.extras["threshold_band_probability"] < 1e-3


def test_proton_total_tail_is_physical_and_matches_zero_momentum_amplitude():
    _, summary = _run("eckart-proton")
    tails = summary.condition_report.condition2
    assert not summary.condition_report.verdicts["condition2"]
    assert summary.condition_report.verdicts["condition2_initial"]
    assert max(tails.total_tail) > 0.1
    assert tails.identity_error < 1e-6
    assert "oracle_tail_deviation" in summary.extras


def test_fine_proton_grid_meets_the_oracle_tolerance():
    config, summary = _run("eckart-proton-fine")
    assert summary.oracle_max_deviation < config.oracle.tolerance
    assert summary.extras["oracle_tail_deviation"] < 0.01
