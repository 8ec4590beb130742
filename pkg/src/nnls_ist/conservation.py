"""Conserved quantities and the small-norm / near-soliton sufficient conditions.

With p = psi1'/psi1 for the first left Jost column and s(x) = sigma conj(q(-x)),
the Riccati equation q (p/q)' + p^2 - 2ik p + q s = 0 gives, for
p = sum p_n / (2ik)^n,

    p1 = q s,   p2 = q s',   p3 = q s'' + q^2 s^2,

and ln a1(k) = sum I_n / (2ik)^n with I_n = int p_n dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .potential import Potential, spectral_derivative, trapezoid
from .solitons import alpha_products, multi_soliton
from .spectrum import DiscreteSpectrum


@dataclass(frozen=True)
class ConservedQuantities:
    I1: complex
    I2: complex
    I3: complex
    method: str
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.I1, self.I2, self.I3])


# ---------------------------------------------------------------- densities


def riccati_densities(sampler, x: float, h: float, sigma: int = 1):
    """(p1, p2, p3) at x with central differences of step h for s = sigma conj(q(-x))."""
    pts = np.array([x, -x, -(x - h), -(x + h)])
    vals = np.asarray(sampler(pts), dtype=complex)
    q, s0, s_minus, s_plus = vals[0], *(sigma * np.conj(vals[1:]))
    ds = (s_plus - s_minus) / (2 * h)
    dds = (s_plus - 2 * s0 + s_minus) / h**2
    return q * s0, q * ds, q * dds + q**2 * s0**2


def density_samples(field_: Potential) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """p1, p2, p3 on the grid of a symmetric-grid field, spectral derivatives."""
    q = field_.values
    s = field_.sigma * np.conj(field_.reflected())
    ds = spectral_derivative(s, field_.spacing, 1)
    dds = spectral_derivative(s, field_.spacing, 2)
    return q * s, q * ds, q * dds + q**2 * s**2


def conserved_by_quadrature(field_: Potential, n: int) -> complex:
    if n not in (1, 2, 3):
        raise ValueError("n must be 1, 2 or 3")
    return complex(trapezoid(density_samples(field_)[n - 1], field_.spacing))


def conserved_all(field_: Potential, t: float = 0.0) -> ConservedQuantities:
    p = density_samples(field_)
    vals = [complex(trapezoid(pn, field_.spacing)) for pn in p]
    return ConservedQuantities(*vals, method="quadrature", t=t)


def energy(field_: Potential) -> complex:
    """int (q_x d/dx conj q(-x) - sigma q^2 conj q(-x)^2) dx, equal to -sigma I3."""
    q = field_.values
    qr = np.conj(field_.reflected())
    integrand = (spectral_derivative(q, field_.spacing, 1) * spectral_derivative(qr, field_.spacing, 1)
                 - field_.sigma * q**2 * qr**2)
    return complex(trapezoid(integrand, field_.spacing))


def mass(field_: Potential) -> complex:
    return complex(trapezoid(field_.values * np.conj(field_.reflected()), field_.spacing))


# ---------------------------------------------------------------- from a1


def log_a1_moments(sd, ds: DiscreteSpectrum | None, n_max: int = 3, t: float = 0.0) -> ConservedQuantities:
    """I_n from the large-k expansion of the trace formula.

    ln a1 = ln alpha1 - C[ln(1 + sigma r1 r2)] expands into
    I_n = (2i)^n [ (1/2 pi i) int z^{n-1} ln(1 + sigma r1 r2) dz
                   + sum_s (k2s^n - k1s^n) / n ].
    """
    from .rh import ReflectionPair, _checked_log

    k = sd.k
    logs = _checked_log(ReflectionPair.of(sd))
    dk = k[1] - k[0]
    out = []
    for n in range(1, n_max + 1):
        term = np.sum(k ** (n - 1) * logs) * dk / (2j * np.pi)
        if ds is not None and not ds.is_empty():
            term += np.sum(ds.lower_zeros() ** n - ds.upper_zeros() ** n) / n
        out.append(complex((2j) ** n * term))
    while len(out) < 3:
        out.append(0j)
    return ConservedQuantities(*out[:3], method="log_a1_moments", t=t)


def log_a1_fit(sd, ds: DiscreteSpectrum | None, n_max: int = 3, n_terms: int = 8,
               t: float = 0.0) -> ConservedQuantities:
    """Least-squares fit of ln a1 on K/2 <= |k| <= K against (2ik)^{-n}, n = 1..n_terms.

    ln a1 on the real axis comes from the trace formula, so the pole factors
    of a nonempty spectrum are included; extra terms beyond n_max absorb the
    truncation of the series.
    """
    from .rh import ReflectionPair, _checked_log, cauchy_grid

    k = sd.k
    sel = np.abs(k) >= 0.5 * sd.K
    logs = _checked_log(ReflectionPair.of(sd))
    # ln a1 on the axis = ln alpha1 - C_+[ln(1 + sigma r1 r2)]
    values = -cauchy_grid(k).plus(logs)[sel]
    if ds is not None and not ds.is_empty():
        alpha1, _ = alpha_products(ds, k[sel])
        values = values + np.log(alpha1)
    basis = (2j * k[sel])[:, None] ** -np.arange(1, n_terms + 1)[None, :]
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    vals = list(coef[:n_max]) + [0j] * max(0, 3 - n_max)
    return ConservedQuantities(*[complex(v) for v in vals[:3]], method="log_a1_fit", t=t)


# ---------------------------------------------------------------- conditions


def bessel_i0(x: float) -> float:
    """Modified Bessel function I0 for x >= 0."""
    if x < 0:
        raise ValueError("bessel_i0 needs x >= 0")
    if x <= 15:
        total, term, k = 1.0, 1.0, 0
        quarter = x * x / 4
        while True:
            k += 1
            term *= quarter / (k * k)
            total += term
            if term < 1e-16 * total:
                return total
    # e^x / sqrt(2 pi x) * sum ((2k-1)!!)^2 / (k! (8x)^k)
    total, term = 1.0, 1.0
    for k in range(1, 30):
        term *= (2 * k - 1) ** 2 / (k * 8 * x)
        if term < 1e-16 * total:
            break
        total += term
    return math.exp(x) / math.sqrt(2 * math.pi * x) * total


@dataclass(frozen=True)
class ConditionReport:
    which: str
    lhs: float
    threshold: float
    satisfied: bool
    ingredients: dict = field(default_factory=dict)


def _report(which: str, lhs: float, threshold: float, **ingredients) -> ConditionReport:
    return ConditionReport(which, float(lhs), float(threshold), bool(lhs < threshold), ingredients)


def _norm_of(q0, attr: str) -> float:
    if isinstance(q0, Potential):
        return getattr(q0, attr)()
    return float(q0)


def small_l1_lhs(l1: float) -> float:
    return 0.5 * (l1 + 1) * bessel_i0(2 * l1)


def small_h11_lhs(h11: float) -> float:
    return 0.5 * (2 * h11 + 1) * bessel_i0(4 * h11)


def check_small_L1(q0) -> ConditionReport:
    """Accepts a Potential or the L1 norm itself."""
    l1 = _norm_of(q0, "l1_norm")
    return _report("L1_small", small_l1_lhs(l1), 1.0, l1=l1)


def check_small_H11(q0) -> ConditionReport:
    """Accepts a Potential or the H^{1,1} norm itself."""
    h11 = _norm_of(q0, "h11_norm")
    return _report("H11_small", small_h11_lhs(h11), 1.0, h11=h11)


def _converged_sum(block, tol: float = 1e-12, max_n: int = 500) -> float:
    total = 0.0
    for n in range(1, max_n + 1):
        inc = block(n)
        total += inc
        if abs(inc) < tol * max(1.0, abs(total)):
            return total
    return total


def series_constants(l1_q0: float, l1_sol: float) -> tuple[float, float]:
    """The two factorial-squared double series (C1, C2) of the near-soliton condition."""
    Q, S = l1_q0, l1_sol
    f = math.factorial

    def c1_block(n):
        return sum(Q ** (2 * m) / f(m) ** 2 * S ** (2 * (n - m - 1)) / f(n - m - 1) ** 2
                   for m in range(n))

    def c2_block(n):
        inner = sum(Q ** (2 * m) / f(m) ** 2 * S ** (2 * (n - m)) / f(n - m) ** 2
                    + Q ** (2 * m + 1) / f(m) ** 2 * S ** (2 * (n - m) - 1) / f(n - m - 1) ** 2
                    for m in range(n))
        return inner + Q ** (2 * n) / f(n) ** 2

    return _converged_sum(c1_block), 1.0 + _converged_sum(c2_block)


def _critical_points(upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
    """Roots of the numerator of alpha'/alpha = sum (k1 - k2) / ((k - k1)(k - k2))."""
    P = np.polynomial.Polynomial
    num = P([0j])
    for s in range(len(upper)):
        term = P([upper[s] - lower[s]])
        for r in range(len(upper)):
            if r != s:
                term = term * P.fromroots([upper[r], lower[r]])
        num = num + term
    num = num.trim(tol=1e-14)
    if num.degree() < 1:
        return np.zeros(0, complex)
    return num.roots()


def alpha_floor(ds: DiscreteSpectrum, j: int, n_samples: int = 4001) -> float:
    """d_j: infimum of |alpha_j| over the real axis and the critical points in its half-plane."""
    up, lo = ds.upper_zeros(), ds.lower_zeros()
    scale = 1 + np.max(np.abs(np.concatenate([up, lo])))

    def mod(k):
        a1, a2 = alpha_products(ds, k)
        return np.abs(a1 if j == 1 else a2)

    u = np.linspace(-0.999, 0.999, n_samples)
    k_real = scale * np.tan(0.5 * np.pi * u)
    vals = mod(k_real)
    i = int(np.argmin(vals))
    lo_k, hi_k = k_real[max(i - 1, 0)], k_real[min(i + 1, len(k_real) - 1)]
    best = min(float(vals[i]), 1.0)  # |alpha_j| -> 1 at infinity
    if hi_k > lo_k:
        res = minimize_scalar(lambda kk: float(mod(np.array([kk]))[0]), bounds=(lo_k, hi_k),
                              method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    crit = _critical_points(up, lo)
    crit = crit[crit.imag > 0] if j == 1 else crit[crit.imag < 0]
    if len(crit):
        best = min(best, float(np.min(mod(crit))))
    return best


def check_near_soliton(q0: Potential, ds: DiscreteSpectrum) -> ConditionReport:
    sol = Potential(q0.sigma, q0.x, multi_soliton(ds, q0.x, 0.0)[0]) if not ds.is_empty() \
        else Potential(q0.sigma, q0.x, np.zeros_like(q0.values))
    diff = Potential(q0.sigma, q0.x, q0.values - sol.values).l1_norm()
    l1_q0, l1_sol = q0.l1_norm(), sol.l1_norm()
    c1, c2 = series_constants(l1_q0, l1_sol)
    if ds.is_empty():
        d1 = d2 = 1.0
    else:
        d1, d2 = alpha_floor(ds, 1), alpha_floor(ds, 2)
    d = min(d1, d2)
    lhs = diff * (c1 * (l1_q0 + l1_sol) + c2 * bessel_i0(2 * l1_sol))
    return _report("near_soliton", lhs, d, perturbation_l1=diff, l1_q0=l1_q0, l1_sol=l1_sol,
                   C1=c1, C2=c2, d1=d1, d2=d2)


def near_soliton_lhs_degenerate(l1: float) -> float:
    """The empty-spectrum form l1 (1 + l1) I0(2 l1) of the near-soliton inequality."""
    c1, c2 = series_constants(l1, 0.0)
    return l1 * (c1 * l1 + c2)


def bisect_threshold(lhs, lo: float, hi: float, level: float = 1.0, tol: float = 1e-6) -> float:
    """Largest argument in [lo, hi] with lhs(arg) < level, for increasing lhs."""
    if not (lhs(lo) < level <= lhs(hi)):
        raise ValueError("threshold not bracketed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lhs(mid) < level:
            lo = mid
        else:
            hi = mid
    return lo
