"""Cauchy boundary projectors on a uniform periodic k-grid.

C f(k) = (1/2 pi i) int f(z) / (z - k) dz.  Writing f as a sum of modes
e^{ikz}, the modes with z > 0 extend boundedly into the upper half-plane, so
C_+ keeps them and C_- keeps minus the rest; C_+ - C_- = I exactly.

Truncating the line to a period turns the Cauchy kernel into a cotangent
kernel. We zero-pad to twice the length, which keeps every pair of grid
points well inside one period, and the remaining difference from the true
kernel is a smooth series that only sees the low moments of f. So before
masking we subtract a combination of the Gaussian-Hermite functions
(k/s)^j exp(-(k/s)^2), j = 0..7, matching the first eight discrete moments;
their transforms are known in closed form through the Faddeeva function.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gamma, wofz

from . import defaults
from .errors import NonDecayingInput, ValidationError

N_MOMENTS = 8
# int u^j exp(-u^2) du
_GAUSS_MOMENTS = tuple(gamma((j + 1) / 2) if j % 2 == 0 else 0.0 for j in range(N_MOMENTS))


def edge_window(k: np.ndarray, fraction: float = defaults.WINDOW_FRACTION) -> np.ndarray:
    """Raised cosine that is 1 inside and falls to 0 over the outer fraction of the grid."""
    K = max(-k[0], k[-1])
    inner = (1 - fraction) * K
    s = np.clip((np.abs(k) - inner) / (K - inner), 0.0, 1.0)
    return 0.5 * (1 + np.cos(np.pi * s))


def gaussian_transforms(w, side: int = 0) -> np.ndarray:
    """Cauchy transforms of u^j exp(-u^2), j = 0..7, at w (trailing axis j).

    side = +1 / -1 selects the boundary value from above / below for real w;
    side = 0 uses the half-plane of w itself.
    """
    w = np.asarray(w, dtype=complex)
    upper = w.imag > 0 if side == 0 else np.full(w.shape, side > 0)
    g0 = np.where(upper, 0.5 * wofz(np.where(upper, w, 1j)),
                  -0.5 * wofz(np.where(upper, 1j, -w)))
    out = np.empty(w.shape + (N_MOMENTS,), complex)
    out[..., 0] = g0
    for j in range(1, N_MOMENTS):
        out[..., j] = _GAUSS_MOMENTS[j - 1] / (2j * np.pi) + w * out[..., j - 1]
    return out


class CauchyGrid:
    """Projectors C_+, C_- and off-axis Cauchy integrals for samples on k."""

    def __init__(self, k: np.ndarray, width: float = 3.0, corrected: bool = True):
        k = np.asarray(k, dtype=float)
        n = len(k)
        if n < 16 or n % 2:
            raise ValidationError("need an even number (>= 16) of grid points")
        dk = k[1] - k[0]
        if not np.allclose(np.diff(k), dk, rtol=1e-9, atol=0):
            raise ValidationError("k-grid must be uniform")
        self.k, self.n, self.dk, self.width = k, n, dk, width
        self.corrected = corrected
        self.size = 2 * n
        freq = np.fft.fftfreq(self.size)
        self.mask_plus = np.where(freq > 0, 1.0, 0.0)
        self.mask_plus[0] = 0.5
        self.mask_plus[n] = 0.5
        self.z = 2 * np.pi * freq / dk
        u = k / width
        self.basis = u[:, None] ** np.arange(N_MOMENTS) * np.exp(-u**2)[:, None]
        self.weights = (u[:, None] ** np.arange(N_MOMENTS)) * dk
        gram = self.weights.T @ self.basis
        self._gram_inv = np.linalg.inv(gram)
        self._basis_plus = gaussian_transforms(u, +1)
        self._basis_minus = gaussian_transforms(u, -1)

    # -- moment correction

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Gaussian coefficients c with f - basis @ c having zero low moments."""
        return (f @ self.weights) @ self._gram_inv.T

    def check_decay(self, f: np.ndarray, tol: float = 1e-8) -> None:
        edge = np.concatenate([np.abs(f[..., :2]), np.abs(f[..., -2:])], axis=-1)
        if np.max(edge, initial=0.0) > tol:
            raise NonDecayingInput(f"samples reach {np.max(edge):.2e} at the grid ends")

    def _masked(self, f: np.ndarray, plus: bool) -> np.ndarray:
        spec = np.fft.fft(f, n=self.size, axis=-1)
        mask = self.mask_plus if plus else self.mask_plus - 1
        return np.fft.ifft(spec * mask, axis=-1)[..., :self.n]

    def apply(self, f: np.ndarray, sign: str = "plus", check: bool = True) -> np.ndarray:
        f = np.asarray(f, dtype=complex)
        if sign not in ("plus", "minus"):
            raise ValidationError("sign must be 'plus' or 'minus'")
        if check:
            self.check_decay(f)
        plus = sign == "plus"
        if not self.corrected:
            return self._masked(f, plus)
        c = self.coefficients(f)
        resid = f - c @ self.basis.T
        smooth = c @ (self._basis_plus if plus else self._basis_minus).T
        return self._masked(resid, plus) + smooth

    def plus(self, f, check: bool = False):
        return self.apply(f, "plus", check)

    def minus(self, f, check: bool = False):
        return self.apply(f, "minus", check)

    def matrix(self, sign: str, rows: np.ndarray | None = None,
               cols: np.ndarray | None = None) -> np.ndarray:
        """Dense matrix of C_sign restricted to rows x cols of the grid."""
        idx = np.arange(self.n)
        rows = idx if rows is None else np.asarray(rows)
        cols = idx if cols is None else np.asarray(cols)
        e0 = np.zeros(self.size, complex)
        e0[0] = 1.0
        mask = self.mask_plus if sign == "plus" else self.mask_plus - 1
        col0 = np.fft.ifft(np.fft.fft(e0) * mask)
        mat = col0[(rows[:, None] - cols[None, :]) % self.size]
        if self.corrected:
            boundary = self._basis_plus if sign == "plus" else self._basis_minus
            fft_basis = self._masked(self.basis.T, sign == "plus").T
            low_rank = (boundary[rows] - fft_basis[rows]) @ self._gram_inv
            mat = mat + low_rank @ self.weights[cols].T
        return mat

    # -- off-axis values

    def transform(self, f: np.ndarray, k0, strip: float = 0.25) -> np.ndarray:
        """Cauchy integral of samples f at off-axis points k0 (trailing axis of f is k)."""
        f = np.asarray(f, dtype=complex)
        k0 = np.atleast_1d(np.asarray(k0, dtype=complex))
        if np.any(k0.imag == 0):
            raise ValidationError("off-axis evaluation needs Im k0 != 0")
        K = max(-self.k[0], self.k[-1] + self.dk)
        near = (np.abs(k0.imag) < strip) & (np.abs(k0.real) < K)
        out = np.empty(f.shape[:-1] + k0.shape, complex)
        if np.any(~near):
            kf = k0[~near]
            kernel = self.dk / (self.k[:, None] - kf[None, :]) / (2j * np.pi)
            out[..., ~near] = f @ kernel
        if np.any(near):
            out[..., near] = self._continued(f, k0[near])
        return out

    def _continued(self, f: np.ndarray, k0: np.ndarray) -> np.ndarray:
        c = self.coefficients(f)
        resid = f - c @ self.basis.T
        coef = np.fft.fft(resid, n=self.size, axis=-1) / self.size
        upper = k0.imag > 0
        # mode weight: 1 on the kept side, 1/2 at zero and Nyquist
        weight = np.where(upper[None, :], self.mask_plus[:, None], self.mask_plus[:, None] - 1)
        z = self.z.copy()
        z[self.n] = np.pi / self.dk
        zz = np.where(upper[None, :] | (np.arange(self.size) != self.n)[:, None],
                      z[:, None], -z[:, None])
        phase = np.exp(1j * zz * (k0[None, :] - self.k[0]))
        out = coef @ (weight * phase)
        return out + c @ gaussian_transforms(k0 / self.width).T
