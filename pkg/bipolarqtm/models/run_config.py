"""
Run configuration model for bipolarqtm
"""

import math
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from bipolarqtm.models.report import ConditionThresholds, SummaryReport
from bipolarqtm.potentials import PotentialModel, barrier_ramp, eckart, free, two_surface


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


class EckartSection(Section):
    kind: Literal["eckart"] = "eckart"
    v0: float = Field(gt=0)
    alpha: float = Field(gt=0)

    @property
    def n_surfaces(self) -> int:
        return 1

    def build(self) -> PotentialModel:
        return eckart(self.v0, self.alpha)


class BarrierRampSection(Section):
    kind: Literal["barrier_ramp"] = "barrier_ramp"
    v0: float
    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)
    v_left: float = 0.0
    v_right: float

    @property
    def n_surfaces(self) -> int:
        return 1

    def build(self) -> PotentialModel:
        return barrier_ramp(self.v0, self.alpha, self.beta, self.v_left, self.v_right)


class TwoSurfaceSection(Section):
    kind: Literal["two_surface"] = "two_surface"
    v0: float = Field(gt=0)
    d0: float = Field(ge=0)
    alpha: float = Field(gt=0)

    @property
    def n_surfaces(self) -> int:
        return 2

    def build(self) -> PotentialModel:
        return two_surface(self.v0, self.d0, self.alpha)


class FreeSection(Section):
    kind: Literal["free"] = "free"
    n_surfaces: int = Field(default=1, ge=1)

    def build(self) -> PotentialModel:
        return free(self.n_surfaces)


PotentialSection = Annotated[
    Union[EckartSection, BarrierRampSection, TwoSurfaceSection, FreeSection],
    Field(discriminator="kind"),
]


class PacketSection(Section):
    """Gaussian packet; give p0 directly or derive it from kinetic_energy."""
    gamma: float = Field(gt=0)
    x0: float
    p0: Optional[float] = None
    kinetic_energy: Optional[float] = Field(default=None, ge=0)
    m: float = Field(gt=0)
    t0: float = 0.0

    @model_validator(mode="after")
    def resolve_momentum(self) -> "PacketSection":
        if self.kinetic_energy is not None:
            derived = math.sqrt(2.0 * self.m * self.kinetic_energy)
            if self.p0 is None:
                self.p0 = derived
            elif not math.isclose(self.p0, derived, rel_tol=1e-12):
                raise ValueError(
                    f"p0 = {self.p0} disagrees with kinetic_energy = {self.kinetic_energy} "
                    f"(sqrt(2 m E) = {derived}); set only one of them"
                )
        if self.p0 is None:
            raise ValueError("packet needs p0 or kinetic_energy")
        return self


class GridSection(Section):
    x_left: float = -35.0
    x_right: float = 35.0
    n_points: int = Field(default=876, ge=5)

    @model_validator(mode="after")
    def check_order(self) -> "GridSection":
        if not self.x_left < self.x_right:
            raise ValueError(f"grid needs x_left < x_right, got [{self.x_left}, {self.x_right}]")
        return self


class TimeSection(Section):
    dt: float = Field(gt=0)
    t_max: float = Field(ge=0)
    snapshot_times: Optional[List[float]] = None
    snapshot_count: Optional[int] = Field(default=None, ge=2)
    stepper: Literal["euler", "rk4"] = "euler"
    energy_shift: Union[Literal["none", "incident"], float] = "none"
    diagnostics_stride: int = Field(default=100, ge=1)

    @model_validator(mode="after")
    def check_schedule(self) -> "TimeSection":
        if self.snapshot_times is not None and self.snapshot_count is not None:
            raise ValueError("give snapshot_times or snapshot_count, not both")
        for t in self.snapshot_times or []:
            if not 0.0 <= t <= self.t_max:
                raise ValueError(f"snapshot time {t} outside [0, {self.t_max}]")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def schedule(self) -> List[float]:
        """Snapshot times relative to t0, always including 0 and t_max."""
        n = self.n_steps
        if self.snapshot_count is not None:
            steps = {int(round(i * n / (self.snapshot_count - 1))) for i in range(self.snapshot_count)}
            return [k * self.dt for k in sorted(steps)]
        times = set(self.snapshot_times or [])
        times.update((0.0, n * self.dt))
        return sorted(times)


class ModeSection(Section):
    kind: Literal["single", "splice", "multisurface"] = "single"
    x_d: float = 0.0
    v0_eff: Optional[float] = None
    incident_surface: int = Field(default=1, ge=1)
    max_weight: Optional[float] = Field(default=2.0, gt=1.0)


class ThresholdSection(Section):
    theta1: float = Field(default=1e-3, gt=0)
    theta2: float = Field(default=1e-2, gt=0)
    theta3a: float = Field(default=1e-4, gt=0)
    theta3b: float = Field(default=1e-2, gt=0)
    node_window: float = Field(default=2.0, gt=0)
    tail_fraction: float = Field(default=0.1, gt=0, le=1)
    component_floor: float = Field(default=1e-10, ge=0)
    stage_speed_fraction: float = Field(default=0.5, gt=0)
    materialization: float = Field(default=0.01, ge=0)
    admissibility_tolerance: float = Field(default=1e-6, gt=0)

    def conditions(self, x_d: float = 0.0) -> ConditionThresholds:
        return ConditionThresholds(
            theta1=self.theta1,
            theta2=self.theta2,
            theta3a=self.theta3a,
            theta3b=self.theta3b,
            node_window=self.node_window,
            tail_fraction=self.tail_fraction,
            component_floor=self.component_floor,
            x_d=x_d,
        )


class OracleSection(Section):
    enabled: bool = False
    dt_divisor: int = Field(default=10, ge=1)
    dispersion: Literal["exact", "stencil"] = "exact"
    tolerance: float = Field(default=5e-3, gt=0)


class OutputSection(Section):
    directory: Optional[str] = None
    write_snapshots: bool = True


ConditionName = Literal["condition1", "condition2", "condition2_initial", "condition3"]


class AcceptanceSection(Section):
    """Checks evaluated by `run --assert`; unset entries are skipped."""
    combined_prob_initial_tolerance: Optional[float] = None
    combined_prob_min_window: Optional[Tuple[float, float]] = None
    combined_prob_final_tolerance: Optional[float] = None
    total_norm_final_tolerance: Optional[float] = None
    rt_tolerance: Optional[float] = None
    conditions: List[ConditionName] = Field(default_factory=list)
    constituent_conditions: List[ConditionName] = Field(default_factory=list)
    oracle_gate: bool = False
    min_branch_probability: Optional[float] = None
    expect_condition1_violation: bool = False
    stage_after_peak: bool = False
    analytic_free_tolerance: Optional[float] = None
    minus_norm_max: Optional[float] = None
    tail_identity_tolerance: Optional[float] = None

    def evaluate(self, summary: SummaryReport, oracle_tolerance: float = 5e-3) -> List[str]:
        failures = []
        verdicts = summary.condition_report.verdicts

        if self.combined_prob_initial_tolerance is not None:
            if abs(summary.combined_prob_initial - 1.0) > self.combined_prob_initial_tolerance:
                failures.append(f"initial combined probability {summary.combined_prob_initial:.8f} is not 1")
        if self.combined_prob_min_window is not None:
            lo, hi = self.combined_prob_min_window
            if not lo <= summary.combined_prob_min <= hi:
                failures.append(f"combined probability minimum {summary.combined_prob_min:.4f} outside [{lo}, {hi}]")
        if self.combined_prob_final_tolerance is not None:
            if abs(summary.combined_prob_final - 1.0) > self.combined_prob_final_tolerance:
                failures.append(f"final combined probability {summary.combined_prob_final:.4f} is not 1")
        if self.total_norm_final_tolerance is not None:
            if abs(summary.total_norm_final - 1.0) > self.total_norm_final_tolerance:
                failures.append(f"final total norm {summary.total_norm_final:.4f} is not 1")
        if self.rt_tolerance is not None:
            if abs(summary.r_prob + summary.t_prob - 1.0) > self.rt_tolerance:
                failures.append(f"R + T = {summary.r_prob + summary.t_prob:.4f} is not 1")
        for name in self.conditions:
            if not verdicts.get(name, False):
                failures.append(f"{name} failed")
        for run_name, report in summary.constituent_reports.items():
            for name in self.constituent_conditions:
                if not report.verdicts.get(name, False):
                    failures.append(f"{name} failed on the {run_name} run")
        if self.oracle_gate:
            deviation = summary.oracle_max_deviation
            if deviation is None:
                failures.append("oracle gate requested but the oracle did not run")
            elif deviation > oracle_tolerance:
                failures.append(f"oracle deviation {deviation:.3g} exceeds {oracle_tolerance:g}")
        if self.min_branch_probability is not None:
            for branch in summary.branches:
                for label, value in (("reflected", branch.reflection), ("transmitted", branch.transmission)):
                    if value <= self.min_branch_probability:
                        failures.append(
                            f"surface {branch.surface} {label} probability {value:.4f} "
                            f"is not above {self.min_branch_probability}"
                        )
        if self.expect_condition1_violation:
            stray = summary.extras.get("stray_minus_right", 0.0)
            if not stray > 0.0:
                failures.append("expected reflected probability right of x_D, found none")
        if self.stage_after_peak:
            stage, peak = summary.stage_transition_time, summary.peak_coincidence_time
            if stage is None or peak is None or not stage > peak:
                failures.append(f"stage transition ({stage}) does not follow peak coincidence ({peak})")
        if self.analytic_free_tolerance is not None:
            deviation = summary.extras.get("analytic_deviation")
            if deviation is None or deviation > self.analytic_free_tolerance:
                failures.append(f"analytic free-packet deviation {deviation} exceeds {self.analytic_free_tolerance:g}")
        if self.minus_norm_max is not None:
            worst = summary.extras.get("minus_norm_max", 0.0)
            if worst > self.minus_norm_max:
                failures.append(f"minus component norm reached {worst:.3g}")
        if self.tail_identity_tolerance is not None:
            error = summary.condition_report.condition2.identity_error
            if error > self.tail_identity_tolerance:
                failures.append(f"Psi(x_R) differs from sqrt(2 pi hbar) psi~(0) by {error:.3g}")
        return failures


class RunConfig(Section):
    """
    One fully explicit simulation run.
    """
    name: Optional[str] = None
    potential: PotentialSection
    packet: PacketSection
    grid: GridSection = Field(default_factory=GridSection)
    time: TimeSection
    mode: ModeSection = Field(default_factory=ModeSection)
    thresholds: ThresholdSection = Field(default_factory=ThresholdSection)
    oracle: OracleSection = Field(default_factory=OracleSection)
    output: OutputSection = Field(default_factory=OutputSection)
    acceptance: AcceptanceSection = Field(default_factory=AcceptanceSection)

    @model_validator(mode="after")
    def check_mode(self) -> "RunConfig":
        f = self.potential.n_surfaces
        if self.mode.kind in ("single", "splice") and f != 1:
            raise ValueError(f"mode '{self.mode.kind}' needs a single-surface potential, got {f} surfaces")
        if self.mode.kind == "splice" and not isinstance(self.potential, BarrierRampSection):
            raise ValueError("splice mode needs an asymmetric (barrier_ramp) potential")
        if self.mode.incident_surface > f:
            raise ValueError(f"incident_surface {self.mode.incident_surface} exceeds {f} surface(s)")
        return self

    @field_validator("name")
    @classmethod
    def strip_name(cls, value: Optional[str]) -> Optional[str]:
        return value.strip() if value else value

    def asymptotes(self) -> Tuple[float, float]:
        """(V_L, V_R) on the incident surface."""
        model = self.potential.build()
        index = self.mode.incident_surface - 1
        return model.asymptotic_left[index], model.asymptotic_right[index]

    def energy_shift_value(self) -> float:
        shift = self.time.energy_shift
        if shift == "none":
            return 0.0
        if shift == "incident":
            v_left, _ = self.asymptotes()
            return v_left + self.packet.p0 ** 2 / (2.0 * self.packet.m)
        return float(shift)

    def to_dict(self, **kwargs) -> dict:
        return self.model_dump(**kwargs)

    def get_summary(self) -> str:
        return (
            f"{self.name or 'custom'}: {self.potential.kind}, {self.mode.kind} mode, "
            f"p0 = {self.packet.p0:.6g}, dt = {self.time.dt:g}, t_max = {self.time.t_max:g}"
        )
