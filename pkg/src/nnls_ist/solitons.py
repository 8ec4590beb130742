"""Closed-form soliton solutions: the reflectionless oracle for the pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import defaults
from .errors import DegenerateAmplitudes, SingularAssembly, StencilHitsPole
from .spectrum import DiscreteSpectrum


def one_soliton(rho11: float, rho21: float, gamma11: complex, gamma21: complex, x, t,
                det_floor: float = defaults.DET_FLOOR):
    """Two-parameter-phase one-soliton family; returns (q, pole_flag).

    Works elementwise on broadcastable x, t.
    """
    x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
    left = np.exp(-2 * rho21 * x - 4j * rho21**2 * t) / gamma21
    right = gamma11 * np.exp(-2 * rho11 * x - 4j * rho11**2 * t)
    den = left - right
    scale = np.maximum(np.abs(left), np.abs(right))
    pole = np.abs(den) < det_floor * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(pole, np.nan + 0j, 2 * (rho11 - rho21) / np.where(pole, 1, den))
    return q, pole


def blowup_times(rho11: float, rho21: float, gamma11: complex, gamma21: complex,
                 n_min: int = 0, n_max: int = 0) -> list[float]:
    gap = rho11**2 - rho21**2
    if abs(gap) < 1e-14:
        raise DegenerateAmplitudes("rho11 = -rho21: the denominator never vanishes on x=0")
    phase = np.angle(gamma11 * gamma21)
    if phase <= -np.pi:
        phase += 2 * np.pi
    return [float((phase + 2 * np.pi * n) / (4 * gap)) for n in range(n_min, n_max + 1)]


def alpha_products(ds: DiscreteSpectrum, k) -> tuple[np.ndarray, np.ndarray]:
    """Blaschke products alpha1(k) = prod (k-k1)/(k-k2) and alpha2 = 1/alpha1."""
    k = np.asarray(k, dtype=complex)
    a1 = np.ones_like(k)
    for z1, z2 in zip(ds.upper_zeros(), ds.lower_zeros()):
        a1 = a1 * (k - z1) / (k - z2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return a1, 1 / a1


def _phase_coefficients(ds: DiscreteSpectrum):
    """x,t-independent prefactors of the first components of xi_m and eta_m."""
    up, lo = ds.upper_zeros(), ds.lower_zeros()
    nu1, nu2 = ds.upper_norming(), ds.lower_norming()
    adot1, adot2 = ds.derivatives()
    size = len(up)
    c_xi = np.empty(size, complex)
    c_eta = np.empty(size, complex)
    for m in range(size):
        others = np.arange(size) != m
        p1 = np.prod((up[m] - up[others]) / (up[m] - lo[others]))
        p2 = np.prod((lo[m] - lo[others]) / (lo[m] - up[others]))
        c_xi[m] = nu1[m] * p1 / ((up[m] - lo[m]) * adot1[m])
        c_eta[m] = -nu2[m] * p2 / ((lo[m] - up[m]) * adot2[m])
    return c_xi, c_eta


def multi_soliton(ds: DiscreteSpectrum, x, t, det_floor: float = defaults.DET_FLOOR):
    """Reflectionless solution from the bordered-determinant construction.

    The linear system sum_s M[m, s] z_s = -eta_m gives q = 2i sum_s z_{s,1}.
    For the bordered matrix B = [[M, eta], [1, 0]] the bordered-determinant
    identity gives det B = det M * sum_s z_{s,1}, hence q = 2i det B / det M.

    Returns (q, pole_flag), elementwise over broadcastable x, t.
    """
    x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
    if ds.is_empty():
        return np.zeros(x.shape, complex), np.zeros(x.shape, bool)
    up, lo = ds.upper_zeros(), ds.lower_zeros()
    denom = lo[:, None] - up[None, :]
    if np.any(np.abs(denom) < 1e-14):
        raise SingularAssembly("a lower zero coincides with an upper zero")
    c_xi, c_eta = _phase_coefficients(ds)
    xe, te = x[..., None], t[..., None]
    log_xi = np.log(c_xi) + 2j * up * xe + 4j * up**2 * te
    log_eta = np.log(c_eta) - 2j * lo * xe - 4j * lo**2 * te
    # Row m is divided by max(1, |eta_m|) and column s by max(1, |xi_s|); the
    # ratio of determinants is unchanged and no entry overflows.
    row_scale = np.minimum(0.0, -log_eta.real)
    col_scale = np.minimum(0.0, -log_xi.real)
    xi = np.exp(log_xi + col_scale)
    eta = np.exp(log_eta + row_scale)
    size = len(up)
    # M[m, s] = (xi_s eta_m + 1) / (k2m - k1s), rescaled
    mat = (eta[..., :, None] * xi[..., None, :]
           + np.exp(row_scale[..., :, None] + col_scale[..., None, :])) / denom
    border = np.zeros(x.shape + (size + 1, size + 1), complex)
    border[..., :size, :size] = mat
    border[..., :size, size] = eta
    border[..., size, :size] = np.exp(col_scale)
    det_m = np.linalg.det(mat)
    det_b = np.linalg.det(border)
    # bound each entry before the cancellation in xi eta + 1, so a vanishing
    # determinant is seen relative to the size of its ingredients
    bound = (np.abs(eta[..., :, None] * xi[..., None, :])
             + np.exp(row_scale[..., :, None] + col_scale[..., None, :])) / np.abs(denom)
    hadamard = np.prod(np.linalg.norm(bound, axis=-1), axis=-1)
    pole = ~(np.abs(det_m) >= det_floor * hadamard)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(pole, np.nan + 0j, 2j * det_b / np.where(pole, 1, det_m))
    return q, pole


@dataclass(frozen=True)
class SolitonField:
    params: DiscreteSpectrum
    det_floor: float = defaults.DET_FLOOR

    def __call__(self, x, t):
        return multi_soliton(self.params, x, t, self.det_floor)

    def pt_image(self) -> Callable:
        """Sampler of conj(q(-x,-t)), again a solution of the same equation."""

        def sampler(x, t):
            q, pole = self(-np.asarray(x, float), -np.asarray(t, float))
            return np.conj(q), pole

        return sampler


def _sample(sampler, x, t):
    out = sampler(x, t)
    if isinstance(out, tuple):
        q, flag = out
    else:
        q, flag = out, np.zeros(np.shape(out), bool)
    return np.asarray(q, complex), np.asarray(flag, bool)


def pde_residual(sampler, x: float, t: float, h: float, sigma: int = 1) -> float:
    """|i q_t + q_xx + 2 sigma q^2 conj(q(-x))| by central differences of step h."""
    xs = np.array([x, x - h, x + h, x, x, -x])
    ts = np.array([t, t, t, t - h, t + h, t])
    q, flag = _sample(sampler, xs, ts)
    if np.any(flag) or not np.all(np.isfinite(q)):
        raise StencilHitsPole(f"stencil around ({x}, {t}) touches a pole")
    q_t = (q[4] - q[3]) / (2 * h)
    q_xx = (q[2] - 2 * q[0] + q[1]) / h**2
    return float(abs(1j * q_t + q_xx + 2 * sigma * q[0] ** 2 * np.conj(q[5])))
