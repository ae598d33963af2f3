import json
import logging
import math

import pytest
from pydantic import ValidationError

from bipolarqtm.config import (
    PRESETS,
    build_run_config,
    expand_preset,
    load_run_config,
    preset_document,
    save_config,
)
from bipolarqtm.models import ConditionThresholds, RunConfig, SummaryReport
from bipolarqtm.models.report import Condition1, Condition2, Condition3, ConditionReport, SurfaceBranches
from bipolarqtm.models.run_config import AcceptanceSection, PacketSection, TimeSection
from bipolarqtm.utils.cli_utils import apply_overrides, parse_override, resolve_output_dir
from bipolarqtm.utils.config import Settings, load_settings


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_expands(name):
    config = expand_preset(name)
    assert config.name == name
    assert config.time.schedule()[0] == 0.0
    assert config.time.schedule()[-1] == pytest.approx(config.time.t_max)


def test_proton_preset_values():
    config = expand_preset("eckart-proton")
    assert config.packet.p0 == math.sqrt(2.0 * 2000.0 * 0.0027)
    assert config.potential.kind == "eckart"
    assert config.energy_shift_value() == pytest.approx(0.0027)
    assert config.asymptotes() == (0.0, 0.0)
    assert config.oracle.enabled and config.oracle.dispersion == "exact"
    assert not config.acceptance.oracle_gate
    assert "condition2_initial" in config.acceptance.conditions
    schedule = config.time.schedule()
    assert len(schedule) == 117
    assert schedule[1] == pytest.approx(100.0)


def test_fine_proton_preset_gates_on_the_oracle():
    config = expand_preset("eckart-proton-fine")
    coarse = expand_preset("eckart-proton")
    assert config.grid.n_points == 5000
    assert config.time.stepper == "rk4"
    assert config.oracle.dispersion == "exact"
    assert config.acceptance.oracle_gate
    assert config.packet == coarse.packet
    assert config.time.schedule() == coarse.time.schedule()


def test_free_particle_preset_targets_analytic_agreement():
    config = expand_preset("free-particle")
    assert config.grid.n_points == 12001
    assert config.time.stepper == "rk4"
    assert config.acceptance.analytic_free_tolerance == 1e-6


def test_spliced_preset_asymptotes():
    config = expand_preset("barrier-ramp-spliced")
    assert config.mode.kind == "splice"
    assert config.asymptotes() == pytest.approx((0.0, 0.0008))


def test_unknown_preset():
    with pytest.raises(KeyError):
        preset_document("eckart-neutron")


def test_preset_documents_are_independent_copies():
    document = preset_document("eckart-proton")
    document["packet"]["x0"] = 0.0
    assert PRESETS["eckart-proton"]["packet"]["x0"] == -7.0


def test_explicit_schedule_gains_endpoints():
    time = TimeSection(dt=0.1, t_max=10.0, snapshot_times=[5.0])
    assert time.schedule() == pytest.approx([0.0, 5.0, 10.0])
    assert time.n_steps == 100


@pytest.mark.parametrize(
    "kwargs",
    [
        {"dt": 0.1, "t_max": 10.0, "snapshot_times": [5.0], "snapshot_count": 3},
        {"dt": 0.1, "t_max": 10.0, "snapshot_times": [12.0]},
        {"dt": 0.0, "t_max": 10.0},
        {"dt": 0.1, "t_max": 10.0, "snapshot_count": 1},
        {"dt": 0.1, "t_max": 10.0, "stepper": "leapfrog"},
        {"dt": math.nan, "t_max": 10.0},
    ],
)
def test_bad_time_sections(kwargs):
    with pytest.raises(ValidationError):
        TimeSection(**kwargs)


def test_packet_momentum_from_kinetic_energy():
    packet = PacketSection(gamma=0.35, x0=-7.0, kinetic_energy=0.0027, m=2000.0)
    assert packet.p0 == pytest.approx(math.sqrt(2.0 * 2000.0 * 0.0027))
    with pytest.raises(ValidationError):
        PacketSection(gamma=0.35, x0=-7.0, p0=1.0, kinetic_energy=0.0027, m=2000.0)
    with pytest.raises(ValidationError):
        PacketSection(gamma=0.35, x0=-7.0, m=2000.0)


@pytest.mark.parametrize(
    "override",
    [
        "mode.kind=splice",
        "mode.incident_surface=2",
        "potential.kind=two_surface",
        "grid.x_left=40",
        "packet.colour=red",
    ],
)
def test_inconsistent_documents_are_rejected(override):
    with pytest.raises(ValidationError):
        build_run_config("eckart-proton", overrides=[override])


def test_two_surface_needs_multisurface_mode():
    with pytest.raises(ValidationError):
        build_run_config("two-surface", overrides=["mode.kind=single"])
    assert build_run_config("two-surface", overrides=["mode.incident_surface=2"]).asymptotes() == (0.0, 0.0)


def test_overrides_reach_nested_sections():
    config = build_run_config(
        "eckart-proton",
        overrides=["time.t_max=100", "mode.x_d=0.5", "name= short ", "time.energy_shift=0.001"],
    )
    assert config.time.t_max == 100.0
    assert config.mode.x_d == 0.5
    assert config.name == "short"
    assert config.energy_shift_value() == 0.001


def test_config_file_wins_over_preset(tmp_path):
    path = tmp_path / "run.json"
    save_config(expand_preset("free-particle"), path)
    config = build_run_config("eckart-proton", path, ["time.t_max=1"])
    assert config.potential.kind == "free"
    assert config.time.t_max == 1.0


def test_build_needs_a_source():
    with pytest.raises(ValueError):
        build_run_config()


def test_dumped_config_reloads_identically(tmp_path):
    original = expand_preset("eckart-proton")
    path = tmp_path / "dump" / "config.json"
    save_config(original, path)
    assert load_run_config(path) == original
    assert json.loads(path.read_text())["packet"]["p0"] == original.packet.p0


def test_parse_override():
    assert parse_override("time.dt=0.05") == ("time.dt", 0.05)
    assert parse_override("oracle.enabled=true") == ("oracle.enabled", True)
    assert parse_override("name=left run") == ("name", "left run")
    assert parse_override("time.snapshot_times=[0, 5]") == ("time.snapshot_times", [0, 5])
    with pytest.raises(ValueError):
        parse_override("time.dt")
    with pytest.raises(ValueError):
        parse_override("=3")


def test_apply_overrides_creates_sections_and_refuses_scalars():
    document = {"time": {"dt": 0.1}}
    apply_overrides(document, ["oracle.enabled=true", "time.t_max=5"])
    assert document == {"time": {"dt": 0.1, "t_max": 5}, "oracle": {"enabled": True}}
    with pytest.raises(ValueError):
        apply_overrides(document, ["time.dt.value=1"])


def test_resolve_output_dir(tmp_path, settings):
    assert resolve_output_dir(str(tmp_path / "a"), str(tmp_path / "b"), settings, "x") == (tmp_path / "a").resolve()
    assert resolve_output_dir(None, str(tmp_path / "b"), settings, "x") == (tmp_path / "b").resolve()
    assert resolve_output_dir(None, None, settings, "x") == (tmp_path / "runs" / "x").resolve()
    assert resolve_output_dir(None, None, settings, None).name == "custom"


def test_settings_file_is_created_with_defaults(tmp_path):
    path = tmp_path / "settings" / "config.json"
    settings = load_settings(path)
    assert path.exists()
    assert settings == Settings()
    assert json.loads(path.read_text())["snapshot_digits"] == 17


def test_unreadable_settings_fall_back_to_defaults(tmp_path, caplog):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    with caplog.at_level(logging.WARNING, logger="bipolarqtm.utils.config"):
        assert load_settings(path) == Settings()
    assert "Could not parse settings file" in caplog.text


# acceptance checks

def _summary(**overrides):
    report = ConditionReport(
        condition1=Condition1(t0_purity=0.0, tf_separation=1e-5),
        condition2=Condition2(max_tail_magnitude=[1e-4], worst=1e-4),
        condition3=Condition3(),
        thresholds=ConditionThresholds(),
        verdicts={"condition1": True, "condition2": True, "condition2_initial": True, "condition3": True},
    )
    values = {
        "branches": [SurfaceBranches(surface=1, reflection=0.4, transmission=0.6)],
        "combined_prob_initial": 1.0,
        "combined_prob_min": 0.86,
        "combined_prob_min_time": 5800.0,
        "combined_prob_final": 1.0,
        "total_norm_initial": 1.0,
        "total_norm_final": 1.0,
        "norm_drift": 0.0,
        "stage_transition_time": 6000.0,
        "peak_coincidence_time": 5000.0,
        "condition_report": report,
        "oracle_max_deviation": 1e-3,
    }
    values.update(overrides)
    return SummaryReport(**values)


@pytest.mark.parametrize("name", ["eckart-proton", "eckart-proton-fine"])
def test_proton_acceptance_passes_on_expected_numbers(name):
    assert expand_preset(name).acceptance.evaluate(_summary()) == []


def test_coarse_proton_acceptance_reports_but_does_not_gate_the_oracle():
    acceptance = expand_preset("eckart-proton").acceptance
    assert acceptance.evaluate(_summary(oracle_max_deviation=0.084)) == []
    assert acceptance.evaluate(_summary(oracle_max_deviation=None)) == []


@pytest.mark.parametrize(
    "overrides, fragment",
    [
        ({"combined_prob_min": 0.9}, "minimum"),
        ({"combined_prob_initial": 0.99}, "initial combined"),
        ({"oracle_max_deviation": 0.1}, "oracle deviation"),
        ({"oracle_max_deviation": None}, "did not run"),
        ({"stage_transition_time": 4000.0}, "stage transition"),
        ({"stage_transition_time": None}, "stage transition"),
        ({"branches": [SurfaceBranches(surface=1, reflection=0.4, transmission=0.5)]}, "R + T"),
    ],
)
def test_proton_acceptance_failures(overrides, fragment):
    failures = expand_preset("eckart-proton-fine").acceptance.evaluate(_summary(**overrides))
    assert len(failures) == 1
    assert fragment in failures[0]


def test_failed_condition_is_reported():
    summary = _summary()
    summary.condition_report.verdicts["condition3"] = False
    assert AcceptanceSection(conditions=["condition3"]).evaluate(summary) == ["condition3 failed"]


def test_constituent_conditions():
    left = _summary().condition_report
    right = left.model_copy(deep=True)
    right.verdicts["condition3"] = False
    summary = _summary(constituent_reports={"left": left, "right": right})
    failures = AcceptanceSection(constituent_conditions=["condition3"]).evaluate(summary)
    assert failures == ["condition3 failed on the right run"]


def test_extras_driven_checks():
    acceptance = AcceptanceSection(
        expect_condition1_violation=True, analytic_free_tolerance=1e-4, minus_norm_max=0.0
    )
    good = _summary(extras={"stray_minus_right": 0.02, "analytic_deviation": 5e-5, "minus_norm_max": 0.0})
    assert acceptance.evaluate(good) == []
    bad = _summary(extras={"stray_minus_right": 0.0, "analytic_deviation": 1e-3, "minus_norm_max": 1e-20})
    assert len(acceptance.evaluate(bad)) == 3


def test_branch_probability_floor():
    acceptance = AcceptanceSection(min_branch_probability=0.02)
    branches = [
        SurfaceBranches(surface=1, reflection=0.3, transmission=0.5),
        SurfaceBranches(surface=2, reflection=0.01, transmission=0.19),
    ]
    failures = acceptance.evaluate(_summary(branches=branches))
    assert failures == ["surface 2 reflected probability 0.0100 is not above 0.02"]


def test_summary_serializes(tmp_path):
    summary = _summary(extras={"minus_norm_max": 0.0})
    assert summary.r_prob == pytest.approx(0.4)
    data = json.loads(summary.to_json())
    assert data["branches"][0]["transmission"] == 0.6
    assert RunConfig.model_validate(expand_preset("two-surface").to_dict()).potential.d0 == 0.00072


def test_proton_gate_checks_the_initial_tail_not_the_mid_collision_tail():
    acceptance = expand_preset("eckart-proton").acceptance
    summary = _summary()
    summary.condition_report.verdicts["condition2"] = False
    assert acceptance.evaluate(summary) == []
    summary.condition_report.verdicts["condition2_initial"] = False
    assert acceptance.evaluate(summary) == ["condition2_initial failed"]


def test_tail_identity_tolerance():
    summary = _summary()
    summary.condition_report.condition2.identity_error = 1e-3
    failures = AcceptanceSection(tail_identity_tolerance=1e-6).evaluate(summary)
    assert len(failures) == 1
    assert "psi~(0)" in failures[0]
    summary.condition_report.condition2.identity_error = 1e-12
    assert AcceptanceSection(tail_identity_tolerance=1e-6).evaluate(summary) == []


def test_max_weight_must_exceed_one():
    with pytest.raises(ValidationError):
        build_run_config("barrier-ramp-spliced", overrides=["mode.max_weight=0.5"])
    assert build_run_config("barrier-ramp-spliced", overrides=["mode.max_weight=3"]).mode.max_weight == 3.0
