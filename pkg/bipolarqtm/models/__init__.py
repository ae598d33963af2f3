from bipolarqtm.models.report import ConditionReport, ConditionThresholds, Finding, SummaryReport
from bipolarqtm.models.run_config import RunConfig

__all__ = ["ConditionReport", "ConditionThresholds", "Finding", "RunConfig", "SummaryReport"]
