"""Sampled initial profiles on symmetric grids, plus the discrete norms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import defaults
from .errors import NonDecayedPotential, ValidationError


def symmetric_grid(half_width: float, spacing: float) -> np.ndarray:
    """Uniform grid on [-half_width, half_width] with an exact mirror image.

    The number of intervals is forced even so that x=0 is a sample and the
    fourth-order marcher can pair cells.
    """
    n_half = int(round(half_width / spacing))
    if n_half < 2:
        raise ValidationError("grid needs at least two cells per side")
    idx = np.arange(-n_half, n_half + 1)
    return idx * spacing


def spectral_derivative(values: np.ndarray, spacing: float, order: int = 1) -> np.ndarray:
    n = values.shape[-1]
    kappa = 2 * np.pi * np.fft.fftfreq(n, d=spacing)
    return np.fft.ifft((1j * kappa) ** order * np.fft.fft(values, axis=-1), axis=-1)


def trapezoid(values: np.ndarray, spacing: float) -> complex:
    # endpoints are decayed, so the plain sum is the trapezoid rule
    return complex(np.sum(values) * spacing - 0.5 * spacing * (values[0] + values[-1]))


@dataclass(frozen=True)
class Potential:
    sigma: int
    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise ValidationError(f"sigma must be +1 or -1, got {self.sigma}")
        x = np.asarray(self.x, dtype=float)
        q = np.asarray(self.values, dtype=complex)
        if x.ndim != 1 or q.shape != x.shape:
            raise ValidationError("x grid and samples must be 1-D of equal length")
        if not np.array_equal(x, -x[::-1]):
            raise ValidationError("x grid is not symmetric about 0")
        if len(x) % 2 == 0:
            raise ValidationError("x grid must contain x=0 (odd sample count)")
        if not np.all(np.isfinite(q)):
            raise ValidationError("non-finite samples")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", q)

    @classmethod
    def from_function(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        sigma: int = 1,
        half_width: float = defaults.L_X,
        spacing: float = defaults.H_X,
    ) -> "Potential":
        x = symmetric_grid(half_width, spacing)
        return cls(sigma, x, np.asarray(func(x), dtype=complex) * np.ones_like(x))

    @property
    def spacing(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def half_width(self) -> float:
        return float(self.x[-1])

    def reflected(self) -> np.ndarray:
        """Samples of q(-x) on the same grid."""
        return self.values[::-1]

    def check_decay(self, tol: float = defaults.DECAY_TOL) -> None:
        edge = max(abs(self.values[0]), abs(self.values[-1]))
        if edge >= tol:
            raise NonDecayedPotential(
                f"|q0| at the grid ends is {edge:.3e}, needs < {tol:.1e}; widen the x range"
            )

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def scaled(self, factor: complex) -> "Potential":
        return Potential(self.sigma, self.x, factor * self.values)

    def l1_norm(self) -> float:
        return trapezoid(np.abs(self.values), self.spacing).real

    def l2_norm(self) -> float:
        return np.sqrt(trapezoid(np.abs(self.values) ** 2, self.spacing).real)

    def h01_norm(self) -> float:
        """sqrt(||q||^2 + ||x q||^2)."""
        w = (1 + self.x**2) * np.abs(self.values) ** 2
        return np.sqrt(trapezoid(w, self.spacing).real)

    def h11_norm(self) -> float:
        return h11_norm(self.values, self.x)


def h11_norm(values: np.ndarray, x: np.ndarray) -> float:
    spacing = float(x[1] - x[0])
    dq = spectral_derivative(values, spacing)
    w = np.abs(values) ** 2 + np.abs(dq) ** 2 + (x * np.abs(values)) ** 2
    return float(np.sqrt(trapezoid(w, spacing).real))
