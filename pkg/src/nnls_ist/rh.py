"""Regular Riemann-Hilbert problem on the real line.

Jump M_+ = M_- J with J = [[1 + s r1 r2, s r2 e^{-th}], [r1 e^{th}, 1]],
th = 2ikx + 4ik^2 t and s = sigma, factorized as (I - w-)^{-1}(I + w+) with
w+_21 = r1 e^{th} and w-_12 = s r2 e^{-th}. The singular equation
mu = I + C_+(mu w-) + C_-(mu w+) splits into two scalar equations for

    v_i = mu_i1 w-_12,   u_i = mu_i2 w+_21,

namely v1 = a (1 + C_-(b C_+ v1)) with (a, b) = (w-_12, w+_21), and
u2 = b (1 + C_+(a C_- u2)). Then q = -(1/pi) int v1 and
M(k) = I + C[[u1, v1], [u2, v2]](k) off the axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from . import defaults
from .cauchy import CauchyGrid, edge_window
from .errors import IllConditioned, NoContraction, ValidationError

SUPPORT_FLOOR = 1e-16

_GRIDS: dict = {}


def cauchy_grid(k: np.ndarray) -> CauchyGrid:
    """Shared projector object per k-grid (construction costs a few FFTs)."""
    key = (len(k), float(k[0]), float(k[1] - k[0]))
    if key not in _GRIDS:
        _GRIDS[key] = CauchyGrid(k)
    return _GRIDS[key]


def cauchy_apply(f: np.ndarray, k: np.ndarray, sign: str = "plus", check: bool = True) -> np.ndarray:
    return cauchy_grid(k).apply(f, sign, check)


@dataclass(frozen=True)
class ReflectionPair:
    sigma: int
    k: np.ndarray
    r1: np.ndarray
    r2: np.ndarray

    @classmethod
    def of(cls, data) -> "ReflectionPair":
        if isinstance(data, ReflectionPair):
            return data
        return cls(data.sigma, data.k, data.r1, data.r2)

    @property
    def sup(self) -> tuple[float, float]:
        return float(np.max(np.abs(self.r1))), float(np.max(np.abs(self.r2)))

    def is_zero(self) -> bool:
        return not (np.any(self.r1) or np.any(self.r2))


@dataclass(frozen=True)
class JumpData:
    sigma: int
    k: np.ndarray
    x: float
    t: float
    phase: np.ndarray
    w12: np.ndarray  # the single entry of w-
    w21: np.ndarray  # the single entry of w+

    @property
    def wplus(self) -> np.ndarray:
        out = np.zeros(self.k.shape + (2, 2), complex)
        out[:, 1, 0] = self.w21
        return out

    @property
    def wminus(self) -> np.ndarray:
        out = np.zeros(self.k.shape + (2, 2), complex)
        out[:, 0, 1] = self.w12
        return out

    def jump(self) -> np.ndarray:
        out = np.ones(self.k.shape + (2, 2), complex)
        out[:, 0, 0] = 1 + self.w12 * self.w21
        out[:, 0, 1] = self.w12
        out[:, 1, 0] = self.w21
        return out


def phase_factor(k: np.ndarray, x: float, t: float) -> np.ndarray:
    return np.exp(2j * k * x + 4j * k**2 * t)


def build_jump(data, x: float, t: float, window: bool = True) -> JumpData:
    pair = ReflectionPair.of(data)
    k = np.asarray(pair.k, dtype=float)
    r1, r2 = np.asarray(pair.r1, complex), np.asarray(pair.r2, complex)
    if r1.shape != k.shape or r2.shape != k.shape:
        raise ValidationError("reflection samples must live on the k-grid")
    if window:
        win = edge_window(k)
        r1, r2 = r1 * win, r2 * win
    phase = phase_factor(k, x, t)
    return JumpData(pair.sigma, k, float(x), float(t), phase,
                    pair.sigma * r2 / phase, r1 * phase)


# ---------------------------------------------------------------- solvers


def _proj(cg: CauchyGrid, sign: str, f: np.ndarray) -> np.ndarray:
    return cg.plus(f) if sign == "plus" else cg.minus(f)


def _neumann(cg, a, b, outer, inner, tol, maxiter):
    """Iterate v = a (1 + C_outer(b C_inner v)); a, b may carry leading batch axes."""
    v = a.copy()
    for it in range(1, maxiter + 1):
        new = a + a * _proj(cg, outer, b * _proj(cg, inner, v))
        step = np.max(np.abs(new - v))
        v = new
        if step < tol:
            return v, it
    raise NoContraction(f"no convergence after {maxiter} iterations (last update {step:.2e})")


def _direct(cg, a, b, outer, inner, cond_max, floor=SUPPORT_FLOOR):
    """Dense LU solve of the same equation restricted to the supports of a and b."""
    v = np.zeros_like(a)
    sa = np.flatnonzero(np.abs(a) > floor)
    sb = np.flatnonzero(np.abs(b) > floor)
    if len(sa) == 0:
        return v, 1.0
    if len(sb) == 0:
        v[sa] = a[sa]
        return v, 1.0
    left = cg.matrix(outer, sa, sb) * b[sb][None, :]
    mat = np.eye(len(sa)) - a[sa][:, None] * (left @ cg.matrix(inner, sb, sa))
    anorm = np.max(np.sum(np.abs(mat), axis=0))
    lu, piv = lu_factor(mat, check_finite=False)
    rcond, _ = lapack.zgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1 / rcond
    if cond > cond_max:
        raise IllConditioned(f"condition estimate {cond:.2e} exceeds {cond_max:.0e}")
    v[sa] = lu_solve((lu, piv), a[sa], check_finite=False)
    return v, cond


def _equation_residual(cg, v, a, b, outer, inner) -> float:
    return float(np.max(np.abs(v - a - a * _proj(cg, outer, b * _proj(cg, inner, v))), initial=0.0))


@dataclass(frozen=True)
class MuSolution:
    k: np.ndarray
    mu: np.ndarray  # (n, 2, 2)
    method: str
    residual: float
    # weighted columns mu w: row i of [[u_i, v_i]]
    weighted: np.ndarray = field(repr=False)
    iterations: int = 0
    condition: float = 1.0


def solve_mu(jd: JumpData, mode: str = "direct", tol: float = defaults.NEUMANN_TOL,
             maxiter: int = defaults.NEUMANN_MAXITER, cond_max: float = defaults.COND_MAX) -> MuSolution:
    cg = cauchy_grid(jd.k)
    a, b = jd.w12, jd.w21
    iterations, cond = 0, 1.0
    if mode == "auto":
        sup = max(np.max(np.abs(a)), np.max(np.abs(b)))
        mode = "neumann" if sup < 1 else "direct"
    if mode == "neumann":
        if max(np.max(np.abs(a)), np.max(np.abs(b))) >= 1:
            raise NoContraction("Neumann iteration needs sup|r| < 1")
        v1, it1 = _neumann(cg, a, b, "minus", "plus", tol, maxiter)
        u2, it2 = _neumann(cg, b, a, "plus", "minus", tol, maxiter)
        iterations = max(it1, it2)
    elif mode == "direct":
        v1, c1 = _direct(cg, a, b, "minus", "plus", cond_max)
        u2, c2 = _direct(cg, b, a, "plus", "minus", cond_max)
        cond = max(c1, c2)
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    residual = max(_equation_residual(cg, v1, a, b, "minus", "plus"),
                   _equation_residual(cg, u2, b, a, "plus", "minus"))
    mu12 = cg.plus(v1)
    mu21 = cg.minus(u2)
    u1 = mu12 * b
    v2 = mu21 * a
    mu = np.empty(jd.k.shape + (2, 2), complex)
    mu[:, 0, 0] = 1 + cg.minus(u1)
    mu[:, 0, 1] = mu12
    mu[:, 1, 0] = mu21
    mu[:, 1, 1] = 1 + cg.plus(v2)
    weighted = np.stack([np.stack([u1, v1], -1), np.stack([u2, v2], -1)], -2)
    return MuSolution(jd.k, mu, mode, residual, weighted, iterations, cond)


def _integral(values: np.ndarray, k: np.ndarray) -> np.ndarray:
    return np.sum(values, axis=-1) * (k[1] - k[0])


def reconstruct_q(ms: MuSolution, jd: JumpData | None = None) -> complex:
    """q = -(1/pi) int (mu (w+ + w-))_12 dk."""
    return complex(-_integral(ms.weighted[:, 0, 1], ms.k) / np.pi)


def reconstruct_q_mirror(ms_reflected: MuSolution, sigma: int) -> complex:
    """q(x) from the 21-entry of the solution at -x: -(sigma/pi) conj(int u2)."""
    return complex(-sigma * np.conj(_integral(ms_reflected.weighted[:, 1, 0], ms_reflected.k)) / np.pi)


def eval_M(ms: MuSolution, jd: JumpData | None, k0) -> np.ndarray:
    """M(k0) = I + C[mu (w+ + w-)](k0) at off-axis points; shape (..., 2, 2)."""
    k0 = np.asarray(k0, dtype=complex)
    if np.any(k0.imag == 0):
        raise ValidationError("eval_M needs points off the real axis")
    cg = cauchy_grid(ms.k)
    flat = k0.reshape(-1)
    cols = ms.weighted.reshape(len(ms.k), 4).T
    vals = cg.transform(cols, flat)
    out = vals.T.reshape(flat.shape + (2, 2)) + np.eye(2)
    return out.reshape(k0.shape + (2, 2))


def q_at(data, x: float, t: float, mode: str = "auto", window: bool = True) -> complex:
    jd = build_jump(data, x, t, window)
    return reconstruct_q(solve_mu(jd, mode), jd)


def q_batch(data, x, t: float, tol: float = defaults.NEUMANN_TOL,
            maxiter: int = defaults.NEUMANN_MAXITER, window: bool = True,
            chunk: int = 128) -> np.ndarray:
    """q at many x for one t by batched Neumann iteration (small-norm data)."""
    pair = ReflectionPair.of(data)
    if max(pair.sup) >= 1:
        raise NoContraction("batched Neumann path needs sup|r| < 1")
    k = np.asarray(pair.k, float)
    cg = cauchy_grid(k)
    win = edge_window(k) if window else 1.0
    r1, r2 = pair.r1 * win, pair.r2 * win
    x = np.atleast_1d(np.asarray(x, float))
    out = np.empty(x.shape, complex)
    for start in range(0, len(x), chunk):
        xs = x[start:start + chunk]
        phase = np.exp(2j * k[None, :] * xs[:, None] + 4j * k[None, :] ** 2 * t)
        a = pair.sigma * r2[None, :] / phase
        b = r1[None, :] * phase
        v1, _ = _neumann(cg, a, b, "minus", "plus", tol, maxiter)
        out[start:start + chunk] = -_integral(v1, k) / np.pi
    return out


# ---------------------------------------------------------------- delta function


def log_jump(data) -> np.ndarray:
    """ln(1 + sigma r1 r2) on the grid with a continuous branch."""
    pair = ReflectionPair.of(data)
    val = 1 + pair.sigma * pair.r1 * pair.r2
    return np.log(np.abs(val)) + 1j * np.unwrap(np.angle(val))


def _checked_log(pair: ReflectionPair) -> np.ndarray:
    logs = log_jump(pair)
    if abs(logs[-1].imag - logs[0].imag) > np.pi:
        raise ValidationError("1 + sigma r1 r2 winds around the origin")
    return logs - 1j * 2 * np.pi * np.round(logs[0].imag / (2 * np.pi))


def delta_function(data, k) -> np.ndarray:
    """delta(k) = exp(C[ln(1 + sigma r1 r2)](k)) off the axis."""
    pair = ReflectionPair.of(data)
    logs = _checked_log(pair)
    return np.exp(cauchy_grid(pair.k).transform(logs, k))


def delta_boundary(data) -> tuple[np.ndarray, np.ndarray]:
    pair = ReflectionPair.of(data)
    logs = _checked_log(pair)
    cg = cauchy_grid(pair.k)
    return np.exp(cg.plus(logs)), np.exp(cg.minus(logs))


def q_lower_upper(data, x: float, t: float, mode: str = "auto",
                  tol: float = defaults.NEUMANN_TOL, window: bool = True) -> complex:
    """q from the second factorization, conjugated by delta^{sigma3}.

    With ell = r1 delta_-^{-2} e^{th} / (1 + s r1 r2) below the diagonal and
    up = s r2 delta_+^2 e^{-th} / (1 + s r1 r2) above it, the first row gives
    v = up (1 + C_+(ell C_- v)) and q = -(1/pi) int v.
    """
    pair = ReflectionPair.of(data)
    k = np.asarray(pair.k, float)
    cg = cauchy_grid(k)
    win = edge_window(k) if window else 1.0
    r1, r2 = pair.r1 * win, pair.r2 * win
    wpair = ReflectionPair(pair.sigma, k, r1, r2)
    dplus, dminus = delta_boundary(wpair)
    phase = phase_factor(k, x, t)
    denom = 1 + pair.sigma * r1 * r2
    ell = r1 * phase / (dminus**2 * denom)
    up = pair.sigma * r2 * dplus**2 / (phase * denom)
    if mode == "auto":
        mode = "neumann" if max(np.max(np.abs(ell)), np.max(np.abs(up))) < 1 else "direct"
    if mode == "neumann":
        v, _ = _neumann(cg, up, ell, "plus", "minus", tol, defaults.NEUMANN_MAXITER)
    else:
        v, _ = _direct(cg, up, ell, "plus", "minus", defaults.COND_MAX)
    return complex(-_integral(v, k) / np.pi)


# ---------------------------------------------------------------- fields


@dataclass(frozen=True)
class SolutionField:
    x: np.ndarray
    t: np.ndarray
    q: np.ndarray  # (len(t), len(x))
    blowup: np.ndarray  # bool, same shape

    def at(self, i_t: int) -> np.ndarray:
        return self.q[i_t]


def solve_field(data, ds, x_grid, t_list, mode: str = "auto") -> SolutionField:
    """q on an (x, t) grid; with a discrete spectrum the pole regularizer is used."""
    x = np.atleast_1d(np.asarray(x_grid, float))
    ts = np.atleast_1d(np.asarray(t_list, float))
    pair = ReflectionPair.of(data)
    q = np.zeros((len(ts), len(x)), complex)
    flag = np.zeros(q.shape, bool)
    if ds is not None and not ds.is_empty():
        from .regularizer import reconstruct_full

        for i, t in enumerate(ts):
            for j, xv in enumerate(x):
                q[i, j], flag[i, j] = reconstruct_full(pair, ds, xv, t, mode=mode)
        return SolutionField(x, ts, q, flag)
    if pair.is_zero():
        return SolutionField(x, ts, q, flag)
    small = max(pair.sup) < 1
    for i, t in enumerate(ts):
        if small and mode in ("auto", "neumann"):
            q[i] = q_batch(pair, x, t)
        else:
            q[i] = [q_at(pair, xv, t, mode) for xv in x]
    return SolutionField(x, ts, q, flag)


def boundary_values(ms: MuSolution, k_real, side: int, eps: float = 1e-4) -> np.ndarray:
    """M_+ (side=+1) or M_- (side=-1) at real k from probes k + i side j eps, j = 1..3.

    Three-point extrapolation in eps removes the O(eps) and O(eps^2) terms.
    """
    k_real = np.asarray(k_real, dtype=float)
    probes = [eval_M(ms, None, k_real + 1j * side * j * eps) for j in (1, 2, 3)]
    return 3 * probes[0] - 3 * probes[1] + probes[2]


def jump_residual(ms: MuSolution, jd: JumpData, idx, eps: float = 1e-4) -> float:
    """max |M_+ - M_- J| at grid indices idx."""
    idx = np.asarray(idx)
    kk = jd.k[idx]
    plus = boundary_values(ms, kk, +1, eps)
    minus = boundary_values(ms, kk, -1, eps)
    return float(np.max(np.abs(plus - minus @ jd.jump()[idx])))
