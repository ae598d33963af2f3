"""
Exception hierarchy for bipolarqtm.

Library code raises these; the command layer maps them onto exit codes.
"""


class BipolarError(Exception):
    """Base class for every error raised by bipolarqtm."""


class GridError(BipolarError, ValueError):
    """Invalid grid bounds or point count."""


class PacketError(BipolarError, ValueError):
    """Initial packet parameters are invalid or the packet touches a grid edge."""


class AdmissibilityError(BipolarError, ValueError):
    """Too much initial probability sits below the minimum admissible momentum."""


class ShapeMismatchError(BipolarError, ValueError):
    """State and potential disagree on the number of surfaces or grid."""


class InstabilityError(BipolarError, RuntimeError):
    """A propagation blew up (field norm beyond the guard value)."""

    def __init__(self, step: int, t: float, norm: float, limit: float):
        self.step = step
        self.t = t
        self.norm = norm
        self.limit = limit
        super().__init__(
            f"component norm {norm:.6g} exceeded {limit:g} at step {step} (t = {t:.6g})"
        )


class SpliceError(BipolarError, ValueError):
    """Left and right runs cannot be spliced (mismatched grids or totals)."""


class ContaminationError(BipolarError, RuntimeError):
    """Oracle wavefunction reached the periodic boundary."""


class MissingSnapshotError(BipolarError, ValueError):
    """A diagnostic needs snapshots that were not recorded."""


class AcceptanceError(BipolarError):
    """One or more acceptance checks failed."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures) or "acceptance failed")
