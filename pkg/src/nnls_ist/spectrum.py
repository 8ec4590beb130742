"""Discrete spectrum: zeros of a1 (upper half-plane) and a2 (lower half-plane).

Zeros come in two families. Purely imaginary ones i*rho are paired
stage-by-stage (i*rho1[s], i*rho2[s]) and carry unimodular constants gamma.
Off-axis ones come as mirror pairs (zeta, -conj(zeta)); the mirror's
constant is sigma/conj(eta).

The flattened lists returned by ``upper_zeros`` / ``lower_zeros`` are the
stage ordering used by the projector chain and the determinant formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError, ZeroNotSimple


def _cplx(values) -> np.ndarray:
    return np.atleast_1d(np.asarray(values, dtype=complex))


@dataclass(frozen=True)
class DiscreteSpectrum:
    sigma: int = 1
    rho1: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rho2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gamma1: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    gamma2: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    zeta1: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    zeta2: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    eta1: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    eta2: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    # derivatives of a1 / a2 at the flattened zero lists; None means pure solitons
    adot1: np.ndarray | None = None
    adot2: np.ndarray | None = None

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise ValidationError("sigma must be +1 or -1")
        rho1 = np.atleast_1d(np.asarray(self.rho1, dtype=float))
        rho2 = np.atleast_1d(np.asarray(self.rho2, dtype=float))
        for name, val in (("rho1", rho1), ("rho2", rho2)):
            object.__setattr__(self, name, val)
        for name in ("gamma1", "gamma2", "zeta1", "zeta2", "eta1", "eta2"):
            object.__setattr__(self, name, _cplx(getattr(self, name)))
        m = len(rho1)
        if not (len(rho2) == len(self.gamma1) == len(self.gamma2) == m):
            raise ValidationError("imaginary-zero lists must have equal lengths")
        n = len(self.zeta1)
        if not (len(self.zeta2) == len(self.eta1) == len(self.eta2) == n):
            raise ValidationError("off-axis zero lists must have equal lengths")
        if self.sigma == -1 and m > 0:
            raise ValidationError("sigma = -1 admits no purely imaginary zeros")
        if np.any(rho1 <= 0) or np.any(rho2 >= 0):
            raise ValidationError("need rho1 > 0 and rho2 < 0")
        if np.any(self.zeta1.imag <= 0) or np.any(self.zeta2.imag >= 0):
            raise ValidationError("zeta1 must lie in the upper and zeta2 in the lower half-plane")
        if np.any(self.zeta1.real >= 0) or np.any(self.zeta2.real >= 0):
            raise ValidationError("off-axis zeros are labelled by the member with Re < 0")
        for g in (self.gamma1, self.gamma2):
            if np.any(np.abs(np.abs(g) - 1) > 1e-8):
                raise ValidationError("gamma constants must be unimodular")
        if np.any(self.eta1 == 0) or np.any(self.eta2 == 0):
            raise ValidationError("eta constants must be nonzero")
        up, lo = self.upper_zeros(), self.lower_zeros()
        if len(set(np.round(up, 12))) < len(up) or len(set(np.round(lo, 12))) < len(lo):
            raise ValidationError("zeros must be simple")
        for name, expected in (("adot1", len(up)), ("adot2", len(lo))):
            val = getattr(self, name)
            if val is not None:
                val = _cplx(val)
                if len(val) != expected:
                    raise ValidationError(f"{name} needs {expected} entries")
                if np.any(np.abs(val) < 1e-8):
                    raise ZeroNotSimple(f"{name} has a vanishing entry")
                object.__setattr__(self, name, val)

    @property
    def M_count(self) -> int:
        return len(self.rho1)

    @property
    def N_count(self) -> int:
        return len(self.zeta1)

    @property
    def size(self) -> int:
        return self.M_count + 2 * self.N_count

    def is_empty(self) -> bool:
        return self.size == 0

    @property
    def pure(self) -> bool:
        return self.adot1 is None

    def upper_zeros(self) -> np.ndarray:
        return np.concatenate([1j * self.rho1, self.zeta1, -np.conj(self.zeta1)])

    def lower_zeros(self) -> np.ndarray:
        return np.concatenate([1j * self.rho2, self.zeta2, -np.conj(self.zeta2)])

    def upper_norming(self) -> np.ndarray:
        return np.concatenate([self.gamma1, self.eta1, self.sigma / np.conj(self.eta1)])

    def lower_norming(self) -> np.ndarray:
        return np.concatenate([self.gamma2, self.eta2, self.sigma / np.conj(self.eta2)])

    def derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        """(a1' at upper zeros, a2' at lower zeros); Blaschke values if pure."""
        if self.adot1 is not None and self.adot2 is not None:
            return self.adot1, self.adot2
        return blaschke_derivatives(self.upper_zeros(), self.lower_zeros())

    def with_derivatives(self, adot1, adot2) -> "DiscreteSpectrum":
        return replace(self, adot1=_cplx(adot1), adot2=_cplx(adot2))

    def permuted(self, order_imag=None, order_pairs=None) -> "DiscreteSpectrum":
        """Same spectrum with the stage order of each family permuted."""
        oi = np.arange(self.M_count) if order_imag is None else np.asarray(order_imag)
        op = np.arange(self.N_count) if order_pairs is None else np.asarray(order_pairs)
        adot1 = adot2 = None
        if not self.pure:
            flat = np.concatenate([oi, self.M_count + op, self.M_count + self.N_count + op])
            adot1, adot2 = self.adot1[flat], self.adot2[flat]
        return DiscreteSpectrum(
            self.sigma, self.rho1[oi], self.rho2[oi], self.gamma1[oi], self.gamma2[oi],
            self.zeta1[op], self.zeta2[op], self.eta1[op], self.eta2[op], adot1, adot2,
        )

    def to_json(self) -> dict:
        def pairs(z):
            return [[float(v.real), float(v.imag)] for v in np.asarray(z, dtype=complex)]

        adot1, adot2 = self.derivatives()
        return {
            "sigma": self.sigma,
            "zeros_upper": pairs(self.upper_zeros()),
            "zeros_lower": pairs(self.lower_zeros()),
            "gamma": {"upper": pairs(self.gamma1), "lower": pairs(self.gamma2)},
            "eta": {"upper": pairs(self.eta1), "lower": pairs(self.eta2)},
            "adot": {"upper": pairs(adot1), "lower": pairs(adot2)},
        }


EMPTY = DiscreteSpectrum()


def blaschke_derivatives(upper: np.ndarray, lower: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of alpha1 at its zeros and of alpha2 = 1/alpha1 at its zeros."""
    d1 = np.empty(len(upper), dtype=complex)
    d2 = np.empty(len(lower), dtype=complex)
    for m in range(len(upper)):
        others = np.arange(len(upper)) != m
        d1[m] = np.prod((upper[m] - upper[others]) / (upper[m] - lower[others])) / (upper[m] - lower[m])
        d2[m] = np.prod((lower[m] - lower[others]) / (lower[m] - upper[others])) / (lower[m] - upper[m])
    return d1, d2
