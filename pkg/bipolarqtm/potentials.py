"""
Closed-form potential models for the benchmark systems.

Every model returns diabatic matrices of shape (f, f, n) for the value and
its analytic spatial derivative, so single- and multi-surface propagation
share one code path.
"""

from abc import ABC, abstractmethod
from typing import Dict, Tuple

import numpy as np

SECH_CUTOFF = 350.0


def sech(z: np.ndarray) -> np.ndarray:
    """sech via 2/(e^z + e^-z), returning 0 where |z| > 350."""
    z = np.asarray(z, dtype=np.float64)
    out = np.zeros_like(z)
    inside = np.abs(z) <= SECH_CUTOFF
    zi = z[inside]
    out[inside] = 2.0 / (np.exp(zi) + np.exp(-zi))
    return out


def _eckart_profile(x: np.ndarray, height: float, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    s = sech(alpha * x)
    value = height * s * s
    return value, -2.0 * alpha * np.tanh(alpha * x) * value


class PotentialModel(ABC):
    """Diabatic potential matrix V_ij(x) with analytic V'_ij(x)."""

    name: str = "potential"
    n_surfaces: int = 1

    @abstractmethod
    def matrix(self, x: np.ndarray) -> np.ndarray:
        """V_ij(x) with shape (f, f, len(x))."""

    @abstractmethod
    def derivative_matrix(self, x: np.ndarray) -> np.ndarray:
        """V'_ij(x) with shape (f, f, len(x))."""

    @property
    @abstractmethod
    def asymptotic_left(self) -> Tuple[float, ...]:
        """Diagonal asymptotes V_iL."""

    @property
    @abstractmethod
    def asymptotic_right(self) -> Tuple[float, ...]:
        """Diagonal asymptotes V_iR."""

    @abstractmethod
    def parameters(self) -> Dict[str, float]:
        ...

    def value(self, x: np.ndarray, surface: int = 1) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        return self.matrix(x)[surface - 1, surface - 1]

    def derivative(self, x: np.ndarray, surface: int = 1) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        return self.derivative_matrix(x)[surface - 1, surface - 1]

    @property
    def v_left(self) -> float:
        return self.asymptotic_left[0]

    @property
    def v_right(self) -> float:
        return self.asymptotic_right[0]

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.parameters().items())
        return f"{type(self).__name__}({args})"


class FreePotential(PotentialModel):
    name = "free"

    def __init__(self, n_surfaces: int = 1):
        if n_surfaces < 1:
            raise ValueError("n_surfaces must be >= 1")
        self.n_surfaces = n_surfaces

    def matrix(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.zeros((self.n_surfaces, self.n_surfaces, x.size))

    def derivative_matrix(self, x):
        return self.matrix(x)

    @property
    def asymptotic_left(self):
        return (0.0,) * self.n_surfaces

    @property
    def asymptotic_right(self):
        return (0.0,) * self.n_surfaces

    def parameters(self):
        return {"n_surfaces": self.n_surfaces}


class EckartPotential(PotentialModel):
    """V(x) = V0 sech(alpha x)^2."""

    name = "eckart"

    def __init__(self, v0: float, alpha: float):
        if not (v0 > 0 and alpha > 0):
            raise ValueError(f"eckart needs v0 > 0 and alpha > 0, got v0={v0}, alpha={alpha}")
        self.v0 = float(v0)
        self.alpha = float(alpha)

    def matrix(self, x):
        value, _ = _eckart_profile(np.asarray(x, dtype=np.float64), self.v0, self.alpha)
        return value[np.newaxis, np.newaxis, :]

    def derivative_matrix(self, x):
        _, slope = _eckart_profile(np.asarray(x, dtype=np.float64), self.v0, self.alpha)
        return slope[np.newaxis, np.newaxis, :]

    @property
    def asymptotic_left(self):
        return (0.0,)

    @property
    def asymptotic_right(self):
        return (0.0,)

    def parameters(self):
        return {"v0": self.v0, "alpha": self.alpha}


class BarrierRampPotential(PotentialModel):
    """Eckart barrier on a tanh ramp from V_L to V_R."""

    name = "barrier_ramp"

    def __init__(self, v0: float, alpha: float, beta: float, v_left: float, v_right: float):
        if not (alpha > 0 and beta > 0):
            raise ValueError(f"barrier_ramp needs alpha, beta > 0, got alpha={alpha}, beta={beta}")
        self.v0 = float(v0)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.v_left_value = float(v_left)
        self.v_right_value = float(v_right)

    def _parts(self, x):
        x = np.asarray(x, dtype=np.float64)
        barrier, barrier_slope = _eckart_profile(x, self.v0, self.alpha)
        half_step = 0.5 * (self.v_right_value - self.v_left_value)
        ramp = half_step * (np.tanh(self.beta * x) + 1.0) + self.v_left_value
        s = sech(self.beta * x)
        ramp_slope = half_step * self.beta * s * s
        return barrier + ramp, barrier_slope + ramp_slope

    def matrix(self, x):
        return self._parts(x)[0][np.newaxis, np.newaxis, :]

    def derivative_matrix(self, x):
        return self._parts(x)[1][np.newaxis, np.newaxis, :]

    @property
    def asymptotic_left(self):
        return (self.v_left_value,)

    @property
    def asymptotic_right(self):
        return (self.v_right_value,)

    def parameters(self):
        return {
            "v0": self.v0,
            "alpha": self.alpha,
            "beta": self.beta,
            "v_left": self.v_left_value,
            "v_right": self.v_right_value,
        }


class TwoSurfacePotential(PotentialModel):
    """Identical Eckart diagonals coupled by an Eckart-shaped off-diagonal."""

    name = "two_surface"
    n_surfaces = 2

    def __init__(self, v0: float, d0: float, alpha: float):
        if not (v0 > 0 and alpha > 0 and d0 >= 0):
            raise ValueError(
                f"two_surface needs v0, alpha > 0 and d0 >= 0, got v0={v0}, d0={d0}, alpha={alpha}"
            )
        self.v0 = float(v0)
        self.d0 = float(d0)
        self.alpha = float(alpha)

    def _assemble(self, diagonal, coupling):
        out = np.empty((2, 2, diagonal.size))
        out[0, 0] = out[1, 1] = diagonal
        out[0, 1] = out[1, 0] = coupling
        return out

    def matrix(self, x):
        x = np.asarray(x, dtype=np.float64)
        diagonal, _ = _eckart_profile(x, self.v0, self.alpha)
        coupling, _ = _eckart_profile(x, self.d0, self.alpha)
        return self._assemble(diagonal, coupling)

    def derivative_matrix(self, x):
        x = np.asarray(x, dtype=np.float64)
        _, diagonal = _eckart_profile(x, self.v0, self.alpha)
        _, coupling = _eckart_profile(x, self.d0, self.alpha)
        return self._assemble(diagonal, coupling)

    @property
    def asymptotic_left(self):
        return (0.0, 0.0)

    @property
    def asymptotic_right(self):
        return (0.0, 0.0)

    def parameters(self):
        return {"v0": self.v0, "d0": self.d0, "alpha": self.alpha}


def eckart(v0: float, alpha: float) -> EckartPotential:
    return EckartPotential(v0, alpha)


def barrier_ramp(v0: float, alpha: float, beta: float, v_left: float, v_right: float) -> BarrierRampPotential:
    return BarrierRampPotential(v0, alpha, beta, v_left, v_right)


def two_surface(v0: float, d0: float, alpha: float) -> TwoSurfacePotential:
    return TwoSurfacePotential(v0, d0, alpha)


def free(n_surfaces: int = 1) -> FreePotential:
    return FreePotential(n_surfaces)
