"""Direct time integration of i q_t + q_xx + 2 sigma q^2 conj(q(-x)) = 0.

Strang splitting: half a nonlinear step, a full linear step done with the
Fourier multiplier exp(-i kappa^2 dt), another half nonlinear step. The
nonlinear flow q_t = 2i sigma q^2 conj(q(-x)) only couples the samples at x
and -x, so on a symmetric grid it is a set of independent two-component ODEs
(x = 0 pairs with itself); one RK4 step integrates all of them at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import defaults
from .errors import BlowupGuard, ValidationError
from .potential import Potential, spectral_derivative, trapezoid


@dataclass(frozen=True)
class Trajectory:
    sigma: int
    x: np.ndarray
    t_samples: np.ndarray
    fields: np.ndarray  # (len(t_samples), len(x))
    max_amp: np.ndarray  # after every step, starting with t = 0
    dt: float
    aborted_at: float | None = None

    def at(self, t: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.t_samples - t)))
        if abs(self.t_samples[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"t = {t} was not stored")
        return self.fields[idx]

    def potential(self, t: float) -> Potential:
        return Potential(self.sigma, self.x, self.at(t))


def _nonlinear(q: np.ndarray, sigma: int, tau: float) -> np.ndarray:
    def rhs(u):
        return 2j * sigma * u * u * np.conj(u[::-1])

    # past blow-up the guard catches the overflow, so keep numpy quiet
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = rhs(q)
        k2 = rhs(q + 0.5 * tau * k1)
        k3 = rhs(q + 0.5 * tau * k2)
        k4 = rhs(q + tau * k3)
        return q + tau / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _fast_odd_length(n: int) -> int:
    """Smallest odd m >= n whose prime factors are all in {3, 5, 7, 11}."""
    m = n if n % 2 else n + 1
    while True:
        r = m
        for p in (3, 5, 7, 11):
            while r % p == 0:
                r //= p
        if r == 1:
            return m
        m += 2


def split_step(q0: Potential, dt: float = 1e-3, T: float = 1.0, t_out=None,
               guard: float = defaults.GUARD, on_guard: str = "raise") -> Trajectory:
    """Evolve q0 to time T (negative T runs backwards) with steps of size about dt.

    dt is shrunk so that an integer number of steps reaches T. Fields are kept
    at the times in t_out (default: 0 and T), each rounded to the step lattice.
    When max |q| reaches guard the run stops: on_guard="raise" raises
    BlowupGuard, "record" returns the partial trajectory with aborted_at set.
    """
    if not np.isfinite(T):
        raise ValidationError("T must be finite")
    if dt <= 0:
        raise ValidationError("dt must be positive")
    if on_guard not in ("raise", "record"):
        raise ValidationError("on_guard must be 'raise' or 'record'")
    n_steps = max(1, int(np.ceil(abs(T) / dt - 1e-9))) if T != 0 else 0
    step = T / n_steps if n_steps else 0.0
    t_out = [0.0, T] if t_out is None else list(t_out)
    wanted: dict[int, float] = {}
    for t in t_out:
        idx = int(round(t / step)) if step else 0
        if idx < 0 or idx > n_steps or abs(idx * step - t) > 1e-9 * max(1.0, abs(t)):
            raise ValidationError(f"output time {t} is not on the step lattice")
        wanted[idx] = t

    sigma = q0.sigma
    n = len(q0.x)
    # symmetric zero padding to an FFT-friendly odd length keeps x <-> -x pairing
    pad = (_fast_odd_length(n) - n) // 2
    size = n + 2 * pad
    inner = slice(pad, pad + n)
    kappa = 2 * np.pi * np.fft.fftfreq(size, d=q0.spacing)
    linear = np.exp(-1j * kappa**2 * step)

    q = np.zeros(size, complex)
    q[inner] = q0.values
    stored_t, stored = [], []
    amps = [float(np.max(np.abs(q), initial=0.0))]
    aborted = None
    if 0 in wanted:
        stored_t.append(0.0)
        stored.append(q[inner].copy())
    for i in range(1, n_steps + 1):
        q = _nonlinear(q, sigma, 0.5 * step)
        with np.errstate(over="ignore", invalid="ignore"):
            q = np.fft.ifft(linear * np.fft.fft(q))
        q = _nonlinear(q, sigma, 0.5 * step)
        amp = float(np.max(np.abs(q))) if np.all(np.isfinite(q)) else np.inf
        amps.append(amp)
        if amp >= guard:
            aborted = i * step
            if on_guard == "raise":
                raise BlowupGuard(f"max |q| reached {amp:.3e} at t = {aborted:.6g}", aborted)
            break
        if i in wanted:
            stored_t.append(wanted[i])
            stored.append(q[inner].copy())
    fields = np.array(stored) if stored else np.zeros((0, n), complex)
    return Trajectory(sigma, q0.x, np.array(stored_t), fields, np.array(amps), step, aborted)


def _excision_mask(x: np.ndarray, blowup_x, eps: float) -> np.ndarray:
    keep = np.ones(x.shape, bool)
    for xb in np.atleast_1d(np.asarray(blowup_x, float)):
        keep &= np.abs(x - xb) >= eps
    return keep


def compare_fields(a, b, x, blowup_x=(), eps: float = defaults.EXCISION) -> tuple[float, float, float]:
    """(L-inf, L2, H^{1,1}) norms of a - b on a uniform grid x, away from blow-up x-locations.

    Samples closer than eps to any entry of blowup_x are dropped. Without
    excision the derivative is spectral; with it, central differences are
    used and only stencils lying entirely in the kept set contribute.
    """
    x = np.asarray(x, float)
    d = np.asarray(a, complex) - np.asarray(b, complex)
    if d.shape != x.shape:
        raise ValidationError("fields and grid must have the same shape")
    h = float(x[1] - x[0])
    keep = _excision_mask(x, blowup_x, eps)
    if not np.all(np.isfinite(d[keep])):
        raise ValidationError("non-finite samples outside the excised set")
    d = np.where(keep, d, 0)
    linf = float(np.max(np.abs(d[keep]), initial=0.0))
    l2 = float(np.sqrt(trapezoid(np.abs(d) ** 2, h).real))
    if keep.all():
        dd = spectral_derivative(d, h)
        inner = keep
    else:
        dd = np.zeros_like(d)
        dd[1:-1] = (d[2:] - d[:-2]) / (2 * h)
        inner = np.zeros_like(keep)
        inner[1:-1] = keep[2:] & keep[1:-1] & keep[:-2]
    w = np.abs(d) ** 2 + (x * np.abs(d)) ** 2 + np.where(inner, np.abs(dd) ** 2, 0)
    return linf, l2, float(np.sqrt(trapezoid(w, h).real))
