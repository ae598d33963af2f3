"""
Report models for bipolarqtm
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class ConditionThresholds(BaseModel):
    """Thresholds used by the three well-behavedness checks"""
    theta1: float = 1e-3
    theta2: float = 1e-2
    theta3a: float = 1e-4
    theta3b: float = 1e-2
    node_window: float = 2.0
    tail_fraction: float = 0.1
    component_floor: float = 1e-10
    x_d: float = 0.0


class NodeEvent(BaseModel):
    t: float
    x: float
    surface: int
    sign: str
    depth: float


class Condition1(BaseModel):
    t0_purity: float
    tf_separation: float
    per_surface_t0: List[float] = Field(default_factory=list)
    per_surface_tf: List[float] = Field(default_factory=list)


class Condition2(BaseModel):
    """
    Component tail ratios per snapshot, plus the total-wavefunction tail
    |Psi(x_R)| and its zero-momentum counterpart sqrt(2 pi hbar) |psi~(0)|.
    """
    max_tail_magnitude: List[float] = Field(default_factory=list)
    worst: float = 0.0
    initial: float = 0.0
    total_tail: List[float] = Field(default_factory=list)
    zero_momentum_tail: List[float] = Field(default_factory=list)
    identity_error: float = 0.0


class Condition3(BaseModel):
    node_events: List[NodeEvent] = Field(default_factory=list)


class ConditionReport(BaseModel):
    """Recorded scalars and pass/fail verdicts for the three conditions"""
    condition1: Condition1
    condition2: Condition2
    condition3: Condition3
    thresholds: ConditionThresholds
    verdicts: Dict[str, bool] = Field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(self.verdicts.values())

    def get_summary(self) -> str:
        marks = ", ".join(f"{k}: {'pass' if v else 'FAIL'}" for k, v in sorted(self.verdicts.items()))
        return f"conditions ({marks})"


class SurfaceBranches(BaseModel):
    surface: int
    reflection: float
    transmission: float


class SummaryReport(BaseModel):
    """
    Machine-readable results of one run
    """
    branches: List[SurfaceBranches]
    combined_prob_initial: float
    combined_prob_min: float
    combined_prob_min_time: float
    combined_prob_final: float
    total_norm_initial: float
    total_norm_final: float
    norm_drift: float
    stage_transition_time: Optional[float] = None
    peak_coincidence_time: Optional[float] = None
    condition_report: ConditionReport
    constituent_reports: Dict[str, ConditionReport] = Field(default_factory=dict)
    oracle_max_deviation: Optional[float] = None
    n_steps: int = 0
    snapshot_times: List[float] = Field(default_factory=list)
    extras: Dict[str, float] = Field(default_factory=dict)

    @property
    def r_prob(self) -> float:
        return sum(b.reflection for b in self.branches)

    @property
    def t_prob(self) -> float:
        return sum(b.transmission for b in self.branches)

    def to_dict(self, **kwargs) -> dict:
        return self.model_dump(**kwargs)

    def to_json(self, **kwargs) -> str:
        return self.model_dump_json(**kwargs)

    def get_summary(self) -> str:
        return (
            f"R = {self.r_prob:.6f}, T = {self.t_prob:.6f}, "
            f"min(rho+ + rho-) = {self.combined_prob_min:.4f}, drift = {self.norm_drift:+.2e}"
        )


class Finding(BaseModel):
    """One issue reported by `validate`"""
    kind: str
    message: str
    value: Optional[float] = None
    limit: Optional[float] = None
