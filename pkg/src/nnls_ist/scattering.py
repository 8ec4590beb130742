"""Direct scattering: Jost limits, spectral functions, zeros and norming constants.

Columns of the normalized Jost matrices Psi = Phi e^{ikx sigma3} satisfy

    v' = (diag(d1, d2) + [[0, q(x)], [r(x), 0]]) v,   r(x) = -sigma conj(q(-x)),

with (d1, d2) = (0, 2ik) for first columns and (-2ik, 0) for second columns.
Marching from -L gives a1 and b (first column) or a2 (second column).
Marching from +L back to 0 gives the right Jost columns used for the
norming constants. Each column is integrated only in the half-plane where it
stays bounded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import defaults
from ._magnus import march
from .errors import (
    BoundaryZero,
    CountMismatch,
    NewtonDivergence,
    RatioInconsistent,
    SpectralSingularity,
    ValidationError,
    ZeroNotSimple,
)
from .potential import Potential
from .spectrum import DiscreteSpectrum

log = logging.getLogger(__name__)

PLUS13 = "plus13"
PLUS24 = "plus24"


def _coefficients(q0: Potential):
    return q0.values, -q0.sigma * np.conj(q0.reflected())


def _diag(k, column: int):
    k = np.asarray(k, dtype=complex)
    zero = np.zeros_like(k)
    return (zero, 2j * k) if column == 0 else (-2j * k, zero)


def _left_column(q0: Potential, k, column: int, stop: int | None = None):
    q, r = _coefficients(q0)
    d1, d2 = _diag(k, column)
    one, zero = np.ones_like(d1), np.zeros_like(d1)
    v0 = (one, zero) if column == 0 else (zero, one)
    stop = len(q0.x) - 1 if stop is None else stop
    return march(q, r, q0.spacing, d1, d2, *v0, 0, stop, defaults.OVERFLOW)


def _right_column(q0: Potential, k, column: int, stop: int):
    q, r = _coefficients(q0)
    d1, d2 = _diag(k, column)
    one, zero = np.ones_like(d1), np.zeros_like(d1)
    v0 = (one, zero) if column == 0 else (zero, one)
    return march(q, r, q0.spacing, d1, d2, *v0, len(q0.x) - 1, stop, defaults.OVERFLOW)


def jost_limits(q0: Potential, k, branch: str = PLUS13):
    """Large-x limits of a left Jost column.

    plus13 (Im k >= 0): (a1(k), e^{-2ikL} psi3(L)), the second entry being b(k)
    on the real axis. plus24 (Im k <= 0): (e^{2ikL} psi2(L), a2(k)), the first
    entry being -sigma conj(b(-k)) on the real axis.
    """
    q0.check_decay()
    k = np.asarray(k, dtype=complex)
    L = q0.half_width
    if branch == PLUS13:
        if np.any(k.imag < -1e-12):
            raise ValidationError("plus13 needs Im k >= 0")
        psi1, psi3 = _left_column(q0, k, 0)
        with np.errstate(over="ignore", invalid="ignore"):
            return psi1, np.exp(-2j * k * L) * psi3
    if branch == PLUS24:
        if np.any(k.imag > 1e-12):
            raise ValidationError("plus24 needs Im k <= 0")
        psi2, psi4 = _left_column(q0, k, 1)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(2j * k * L) * psi2, psi4
    raise ValidationError(f"unknown branch {branch!r}")


def a1_values(q0: Potential, k):
    return jost_limits(q0, k, PLUS13)[0]


def a2_values(q0: Potential, k):
    return jost_limits(q0, k, PLUS24)[1]


def k_grid(K: float = defaults.K_MAX, n_k: int = defaults.N_K) -> np.ndarray:
    """Uniform periodic grid on [-K, K) with spacing 2K/n_k."""
    return -K + (2 * K / n_k) * np.arange(n_k)


def winding_number(values: np.ndarray) -> int:
    phase = np.angle(values)
    steps = np.diff(np.concatenate([phase, phase[:1]]))
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    return int(round(steps.sum() / (2 * np.pi)))


@dataclass(frozen=True)
class SpectralData:
    sigma: int
    k: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    b: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    winding: int

    @property
    def K(self) -> float:
        return float(-self.k[0])

    def mirror(self, values: np.ndarray) -> np.ndarray:
        """Samples of f(-k) on the same grid (the grid has -K but not +K)."""
        out = np.empty_like(values)
        out[0] = values[0]
        out[1:] = values[:0:-1]
        return out

    def determinant_residual(self) -> float:
        res = self.a1 * self.a2 + self.sigma * self.b * np.conj(self.mirror(self.b)) - 1
        return float(np.max(np.abs(res[1:])))

    def symmetry_residual(self) -> float:
        return float(max(
            np.max(np.abs(np.conj(self.mirror(self.a1)) - self.a1)[1:]),
            np.max(np.abs(np.conj(self.mirror(self.a2)) - self.a2)[1:]),
        ))

    @classmethod
    def reflectionless(cls, sigma: int = 1, K: float = defaults.K_MAX, n_k: int = defaults.N_K):
        k = k_grid(K, n_k)
        one, zero = np.ones_like(k, complex), np.zeros_like(k, complex)
        return cls(sigma, k, one, one.copy(), zero, zero.copy(), zero.copy(), 0)

    def to_json(self) -> dict:
        out = {"k": self.k.tolist()}
        for name in ("a1", "a2", "b", "r1", "r2"):
            val = getattr(self, name)
            out[f"{name}_re"] = val.real.tolist()
            out[f"{name}_im"] = val.imag.tolist()
        out["winding"] = self.winding
        return out


def scattering_table(q0: Potential, K: float = defaults.K_MAX, n_k: int = defaults.N_K,
                     sing_floor: float = defaults.SING_FLOOR) -> SpectralData:
    if K <= 0 or n_k < 64:
        raise ValidationError("need K > 0 and n_k >= 64")
    k = k_grid(K, n_k)
    a1, b = jost_limits(q0, k, PLUS13)
    _, a2 = jost_limits(q0, k, PLUS24)
    floor = min(np.min(np.abs(a1)), np.min(np.abs(a2)))
    if floor < sing_floor:
        raise SpectralSingularity(f"min |a_j| on the real axis is {floor:.2e}")
    b_mirror = np.empty_like(b)
    b_mirror[0] = b[0]
    b_mirror[1:] = b[:0:-1]
    r1 = b / a1
    r2 = np.conj(b_mirror) / a2
    return SpectralData(q0.sigma, k, a1, a2, b, r1, r2, winding_number(a1 * a2))


# ---------------------------------------------------------------- zeros


def _boundary_points(rect, n_side: int) -> np.ndarray:
    x0, x1, y0, y1 = rect
    s = np.linspace(0, 1, n_side, endpoint=False)
    return np.concatenate([
        x0 + (x1 - x0) * s + 1j * y0,
        x1 + 1j * (y0 + (y1 - y0) * s),
        x1 - (x1 - x0) * s + 1j * y1,
        x0 + 1j * (y1 - (y1 - y0) * s),
    ])


def _a_function(q0: Potential, half: str):
    if half == "upper":
        return lambda k: a1_values(q0, k)
    if half == "lower":
        return lambda k: a2_values(q0, k)
    raise ValidationError(f"half must be 'upper' or 'lower', got {half!r}")


def count_zeros(q0: Potential, rect, half: str = "upper",
                sing_floor: float = defaults.SING_FLOOR, n_side: int = 32,
                max_side: int = 4096) -> int:
    """Argument-principle count of zeros of a1 (upper) or a2 (lower) in rect.

    ``rect`` is (re_min, re_max, im_min, im_max). Sampling starts at eight points
    per unit length and doubles until every phase increment is below pi/4, the
    total is near a multiple of 2 pi, and one further doubling gives the same count.
    Fast phase rotation near the real axis aliases on coarse samples, hence the
    confirmation pass.
    """
    f = _a_function(q0, half)
    x0, x1, y0, y1 = rect
    if half == "upper" and y0 < 0 or half == "lower" and y1 > 0:
        raise ValidationError("rectangle leaves the half-plane of analyticity")
    n_side = max(n_side, int(np.ceil(8 * max(x1 - x0, y1 - y0))))
    previous = None
    while True:
        vals = f(_boundary_points(rect, n_side))
        if np.min(np.abs(vals)) < sing_floor:
            raise BoundaryZero("a zero lies on the counting contour")
        steps = np.diff(np.angle(np.concatenate([vals, vals[:1]])))
        steps = (steps + np.pi) % (2 * np.pi) - np.pi
        total = steps.sum() / (2 * np.pi)
        settled = np.max(np.abs(steps)) < np.pi / 4 and abs(total - round(total)) < 0.1 / (2 * np.pi)
        count = int(round(total)) if settled else None
        if count is not None and count == previous:
            return count
        previous = count
        if n_side >= max_side:
            raise BoundaryZero("argument principle did not settle; contour too close to a zero")
        n_side *= 2


def search_rect(K: float, half: str, floor: float = defaults.AXIS_REJECT):
    if half == "upper":
        return (-K / 2, K / 2, floor, K / 2)
    return (-K / 2, K / 2, -K / 2, -floor)


def _newton(f, z0: complex, tol: float = 1e-10, step: float = 1e-5, maxiter: int = 100) -> complex:
    z = complex(z0)
    for _ in range(maxiter):
        vals = f(np.array([z, z + step, z - step]))
        if abs(vals[0]) < tol:
            return z
        deriv = (vals[1] - vals[2]) / (2 * step)
        if deriv == 0 or not np.isfinite(deriv):
            break
        dz = vals[0] / deriv
        # keep the iterate in its half-plane
        z_new = z - dz
        if (z.imag > 0) != (z_new.imag > 0):
            z_new = complex(z_new.real, z.imag / 2)
        z = z_new
    raise NewtonDivergence(f"Newton did not converge from {z0}")


def locate_zeros(q0: Potential, count: int, half: str = "upper", K: float = defaults.K_MAX,
                 dedup: float = 1e-6, snap: float = 1e-6) -> list[complex]:
    """Zeros of a1 (upper) or a2 (lower), found by quadtree boxes plus Newton."""
    if count == 0:
        return []
    f = _a_function(q0, half)
    found: list[complex] = []

    def inside(z, rect, pad=0.0):
        return rect[0] - pad <= z.real <= rect[1] + pad and rect[2] - pad <= z.imag <= rect[3] + pad

    def visit(rect, n, depth):
        if n == 0:
            return
        width = max(rect[1] - rect[0], rect[3] - rect[2])
        if n == 1 and width < 4:
            cx = 0.5 * (rect[0] + rect[1]) + 0.5j * (rect[2] + rect[3])
            try:
                z = _newton(f, cx)
                if inside(z, rect, 1e-6):
                    found.append(z)
                    return
            except NewtonDivergence:
                if depth > 30:
                    raise
        if depth > 40:
            raise NewtonDivergence("quadtree refinement exhausted")
        xm = 0.5 * (rect[0] + rect[1]) + 1e-3 * width * 0.123
        ym = 0.5 * (rect[2] + rect[3]) + 1e-3 * width * 0.071
        kids = [
            (rect[0], xm, rect[2], ym), (xm, rect[1], rect[2], ym),
            (rect[0], xm, ym, rect[3]), (xm, rect[1], ym, rect[3]),
        ]
        counts = [count_zeros(q0, kid, half) for kid in kids]
        if sum(counts) != n:
            raise CountMismatch(f"sub-box counts {counts} do not add up to {n}")
        for kid, c in zip(kids, counts):
            visit(kid, c, depth + 1)

    visit(search_rect(K, half), count, 0)
    zeros: list[complex] = []
    for z in found:
        if all(abs(z - w) > dedup for w in zeros):
            zeros.append(z)
    zeros = _pair_mirrors(zeros, snap)
    if len(zeros) != count:
        raise CountMismatch(f"found {len(zeros)} zeros, expected {count}")
    return zeros


def _pair_mirrors(zeros: list[complex], snap: float) -> list[complex]:
    """Snap near-axis zeros to iR and symmetrize mirror pairs (z, -conj z)."""
    out: list[complex] = []
    used = [False] * len(zeros)
    for i, z in enumerate(zeros):
        if used[i]:
            continue
        used[i] = True
        if abs(z.real) < snap:
            out.append(complex(0.0, z.imag))
            continue
        j = min((j for j in range(len(zeros)) if not used[j]),
                key=lambda j: abs(zeros[j] + np.conj(z)), default=None)
        if j is not None and abs(zeros[j] + np.conj(z)) < 1e-6 * max(1, abs(z)):
            used[j] = True
            left = z if z.real < 0 else -np.conj(z)
            partner = -np.conj(zeros[j]) if zeros[j].real > 0 else zeros[j]
            avg = 0.5 * (left + partner)
            out.extend([avg, -np.conj(avg)])
        else:
            out.append(z)
    return out


# ---------------------------------------------------------------- norming data


def _ratio(num: tuple, den: tuple, tol: float = 1e-6) -> complex:
    v = np.array([complex(num[0]), complex(num[1])])
    w = np.array([complex(den[0]), complex(den[1])])
    c = np.vdot(w, v) / np.vdot(w, w)
    if np.linalg.norm(v - c * w) > tol * max(np.linalg.norm(v), 1e-300):
        raise RatioInconsistent("left and right Jost columns are not proportional")
    return complex(c)


def _adot(f, z: complex, radius: float = defaults.ADOT_RADIUS) -> complex:
    roots = np.array([1, 1j, -1, -1j])
    vals = f(z + radius * roots)
    return complex(np.sum(vals / roots) / (4 * radius))


def _norming_upper(q0: Potential, z: complex) -> complex:
    mid = len(q0.x) // 2
    left = _left_column(q0, np.array([z]), 0, stop=mid)
    right = _right_column(q0, np.array([z]), 1, stop=mid)
    return _ratio((left[0][0], left[1][0]), (right[0][0], right[1][0]))


def _norming_lower(q0: Potential, z: complex) -> complex:
    # Stored as the factor in Phi1^[2] = nu Phi2^[1]: the constant that enters
    # the residue condition of the second column in the lower half-plane.
    mid = len(q0.x) // 2
    right = _right_column(q0, np.array([z]), 0, stop=mid)
    left = _left_column(q0, np.array([z]), 1, stop=mid)
    return _ratio((left[0][0], left[1][0]), (right[0][0], right[1][0]))


def _split(zeros: list[complex]):
    imag = sorted((z.imag for z in zeros if z.real == 0), key=abs)
    pairs = sorted((z for z in zeros if z.real < 0), key=lambda z: (abs(z), z.real))
    return np.array(imag), np.array(pairs, dtype=complex)


def norming_data(q0: Potential, zeros_upper: list[complex], zeros_lower: list[complex],
                 adot_floor: float = 1e-8) -> DiscreteSpectrum:
    """Norming constants and a_j derivatives at the located zeros.

    Zeros are paired into stages by sorting each family by modulus.
    """
    rho1, zeta1 = _split(zeros_upper)
    rho2, zeta2 = _split(zeros_lower)
    if len(rho1) != len(rho2) or len(zeta1) != len(zeta2):
        raise CountMismatch("upper and lower zero families have different sizes")
    f1, f2 = _a_function(q0, "upper"), _a_function(q0, "lower")
    up = np.concatenate([1j * rho1, zeta1, -np.conj(zeta1)])
    lo = np.concatenate([1j * rho2, zeta2, -np.conj(zeta2)])
    adot1 = np.array([_adot(f1, z) for z in up], dtype=complex)
    adot2 = np.array([_adot(f2, z) for z in lo], dtype=complex)
    if np.any(np.abs(adot1) < adot_floor) or np.any(np.abs(adot2) < adot_floor):
        raise ZeroNotSimple("a located zero has vanishing derivative")
    gamma1 = np.array([_norming_upper(q0, 1j * r) for r in rho1], dtype=complex)
    gamma2 = np.array([_norming_lower(q0, 1j * r) for r in rho2], dtype=complex)
    eta1 = np.array([_norming_upper(q0, z) for z in zeta1], dtype=complex)
    eta2 = np.array([_norming_lower(q0, z) for z in zeta2], dtype=complex)
    if len(rho1):
        modulus = np.abs(np.concatenate([gamma1, gamma2]))
        if np.any(np.abs(modulus - 1) > 1e-6):
            raise RatioInconsistent(f"norming constants are not unimodular: {modulus}")
        gamma1, gamma2 = gamma1 / np.abs(gamma1), gamma2 / np.abs(gamma2)
    return DiscreteSpectrum(q0.sigma, rho1, rho2, gamma1, gamma2, zeta1, zeta2, eta1, eta2,
                            adot1, adot2)


def discrete_spectrum(q0: Potential, K: float = defaults.K_MAX) -> DiscreteSpectrum:
    """Count, locate and normalize all zeros in the standard search region."""
    n_up = count_zeros(q0, search_rect(K, "upper"), "upper")
    n_lo = count_zeros(q0, search_rect(K, "lower"), "lower")
    if n_up != n_lo:
        raise CountMismatch(f"{n_up} zeros of a1 but {n_lo} zeros of a2")
    if n_up == 0:
        return DiscreteSpectrum(q0.sigma)
    up = locate_zeros(q0, n_up, "upper", K)
    lo = locate_zeros(q0, n_lo, "lower", K)
    return norming_data(q0, up, lo)


# ---------------------------------------------------------------- trace formula


def trace_formula_a1(sd: SpectralData, ds: DiscreteSpectrum, k) -> np.ndarray:
    """a1(k) in the upper half-plane rebuilt from |reflection| and the zeros."""
    from .solitons import alpha_products

    k = np.atleast_1d(np.asarray(k, dtype=complex))
    logs = np.log(1 + sd.sigma * sd.r1 * sd.r2)
    dk = sd.k[1] - sd.k[0]
    integral = np.sum(logs[None, :] / (sd.k[None, :] - k[:, None]), axis=1) * dk
    alpha1, _ = alpha_products(ds, k)
    return alpha1 * np.exp(-integral / (2j * np.pi))


def trace_formula_residual(sd: SpectralData, ds: DiscreteSpectrum, q0: Potential,
                           n_probe: int = 16) -> float:
    angles = np.pi * (np.arange(n_probe) + 0.5) / n_probe
    probes = 0.5 * sd.K * np.exp(1j * angles)
    rebuilt = trace_formula_a1(sd, ds, probes)
    direct = a1_values(q0, probes)
    return float(np.max(np.abs(rebuilt - direct) / np.abs(direct)))
