"""Removal of the discrete spectrum by Blaschke-Potapov factors.

M^reg = B_1 ... B_S M D_S ... D_1 with B_m = I + (k2m - k1m)/(k - k2m) P^(m)
and D_m = diag(1, (k - k2m)/(k - k1m)) solves a pole-free problem whose
reflection coefficients are r1 alpha1 and r2 / alpha1. The projectors are
built stage by stage from M^reg at the zeros:

    g = (k1m - k2m) M_{m-1}^[1](k1m) - c1 M_{m-1}^[2](k1m)
    h = (k1m - k2m) M_{m-1}^[2](k2m) + c2 M_{m-1}^[1](k2m)

with M_{m-1} = B_{m-1}^{-1} ... B_1^{-1} M^reg prod_{s<m} diag(1, (k-k1s)/(k-k2s)),
ker P = span g and im P = span h, so P = h (-g2, g1) / (g1 h2 - g2 h1).
Then q = sum_m 2i (k1m - k2m) P_12^(m) + q^reg.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from . import defaults
from .errors import ValidationError
from .rh import ReflectionPair, build_jump, eval_M, reconstruct_q, solve_mu
from .solitons import alpha_products
from .spectrum import DiscreteSpectrum

log = logging.getLogger(__name__)

# a cell is screened when its smallest indicator value is below this multiple
# of the median over the surrounding 6x6 block; the sign-change test does the
# actual discrimination
DIP_FACTOR = 10.0


def regularize_reflection(data, ds: DiscreteSpectrum) -> tuple[ReflectionPair, tuple[float, float]]:
    """(r1 alpha1, r2 / alpha1) and their sup norms; warns when a norm reaches 1."""
    pair = ReflectionPair.of(data)
    zeros = np.concatenate([ds.upper_zeros(), ds.lower_zeros()])
    if len(zeros) and np.min(np.abs(zeros.imag)) < defaults.AXIS_REJECT:
        raise ValidationError("zeros must stay at least 1e-3 away from the real axis")
    alpha1, alpha2 = alpha_products(ds, pair.k)
    reg = ReflectionPair(pair.sigma, pair.k, pair.r1 * alpha1, pair.r2 * alpha2)
    sup = reg.sup
    if max(sup) >= 1:
        log.warning("regularized reflection reaches sup %.3f; small-norm condition fails", max(sup))
    return reg, sup


@dataclass(frozen=True)
class Stage:
    k1: complex
    k2: complex
    g: np.ndarray
    h: np.ndarray
    P: np.ndarray | None
    disc: complex  # g1 h2 - g2 h1 with g, h rescaled to unit norm

    @property
    def relative_disc(self) -> float:
        return float(abs(self.disc))


@dataclass(frozen=True)
class ProjectorChain:
    stages: list[Stage] = field(default_factory=list)
    blowup: bool = False
    blowup_stage: int | None = None

    def __len__(self) -> int:
        return len(self.stages)

    def min_disc(self) -> float:
        return min((s.relative_disc for s in self.stages), default=np.inf)


def identity_M(k0) -> np.ndarray:
    k0 = np.asarray(k0, dtype=complex)
    return np.broadcast_to(np.eye(2, dtype=complex), k0.shape + (2, 2)).copy()


def _binv(k, stage: Stage) -> np.ndarray:
    """B^{-1}(k) = I + (k1 - k2)/(k - k1) P."""
    return np.eye(2) + (stage.k1 - stage.k2) / (k - stage.k1) * stage.P


def _previous(m_reg: np.ndarray, k: complex, stages: list[Stage]) -> np.ndarray:
    out = m_reg.copy()
    scale = 1.0 + 0j
    for st in stages:
        out = _binv(k, st) @ out
        scale *= (k - st.k1) / (k - st.k2)
    out[:, 1] *= scale
    return out


def _unit(log_c: complex, base: np.ndarray, other: np.ndarray, sign: float):
    """base * (k1-k2) + sign * e^{log_c} other, rescaled to unit norm without overflow."""
    shift = max(0.0, log_c.real)
    vec = base * np.exp(-shift) + sign * np.exp(log_c - shift) * other
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def chain_build(regular_M: Callable, ds: DiscreteSpectrum, x: float, t: float,
                disc_floor: float = defaults.DISC_FLOOR) -> ProjectorChain:
    """Projector chain at (x, t); regular_M(k) returns M^reg at an array of points."""
    if ds.is_empty():
        return ProjectorChain()
    up, lo = ds.upper_zeros(), ds.lower_zeros()
    nu1, nu2 = ds.upper_norming(), ds.lower_norming()
    ad1, ad2 = ds.derivatives()
    size = len(up)
    m_up = regular_M(up)
    m_lo = regular_M(lo)
    stages: list[Stage] = []
    for m in range(size):
        k1, k2 = up[m], lo[m]
        later = np.arange(m + 1, size)
        p1 = np.prod((k1 - up[later]) / (k1 - lo[later]))
        p2 = np.prod((k2 - lo[later]) / (k2 - up[later]))
        log_c1 = np.log(nu1[m] * p1 / ad1[m]) + 2j * k1 * x + 4j * k1**2 * t
        log_c2 = np.log(nu2[m] * p2 / ad2[m]) - 2j * k2 * x - 4j * k2**2 * t
        a = _previous(m_up[m], k1, stages)
        b = _previous(m_lo[m], k2, stages)
        g = _unit(log_c1, (k1 - k2) * a[:, 0], a[:, 1], -1.0)
        h = _unit(log_c2, (k1 - k2) * b[:, 1], b[:, 0], +1.0)
        disc = g[0] * h[1] - g[1] * h[0]
        if abs(disc) < disc_floor:
            stages.append(Stage(k1, k2, g, h, None, disc))
            return ProjectorChain(stages, True, m)
        P = np.outer(h, [-g[1], g[0]]) / disc
        stages.append(Stage(k1, k2, g, h, P, disc))
    return ProjectorChain(stages)


def soliton_part(chain: ProjectorChain) -> complex:
    if chain.blowup:
        raise ValidationError("chain has a blow-up flag")
    return complex(sum(2j * (s.k1 - s.k2) * s.P[0, 1] for s in chain.stages))


def regular_solution(data, ds: DiscreteSpectrum, x: float, t: float, mode: str = "auto"):
    """(M^reg evaluator, q^reg) for the regularized jump at (x, t)."""
    reg, _ = regularize_reflection(data, ds)
    if reg.is_zero():
        return identity_M, 0j
    jd = build_jump(reg, x, t)
    ms = solve_mu(jd, mode)
    return (lambda k0: eval_M(ms, jd, k0)), reconstruct_q(ms, jd)


def reconstruct_full(data, ds: DiscreteSpectrum, x: float, t: float,
                     mode: str = "auto", disc_floor: float = defaults.DISC_FLOOR):
    """(q, blowup_flag) at one point; q is nan when flagged."""
    regular_M, q_reg = regular_solution(data, ds, x, t, mode)
    chain = chain_build(regular_M, ds, x, t, disc_floor)
    if chain.blowup:
        return complex(np.nan, np.nan), True
    return soliton_part(chain) + q_reg, False


def discriminants(data, ds: DiscreteSpectrum, x: float, t: float, mode: str = "auto") -> np.ndarray:
    """Normalized g1 h2 - g2 h1 for every stage (no floor applied)."""
    regular_M, _ = regular_solution(data, ds, x, t, mode)
    chain = chain_build(regular_M, ds, x, t, disc_floor=0.0)
    return np.array([s.disc for s in chain.stages])


# ---------------------------------------------------------------- blow-up set


@dataclass(frozen=True)
class BlowupPoint:
    x: float
    t: float
    stage: int
    residual: float
    jacobian: float


@dataclass(frozen=True)
class BlowupSet:
    x: np.ndarray
    t: np.ndarray
    indicator: np.ndarray  # (len(t), len(x)) of min_m |D_m|
    points: list[BlowupPoint]

    @property
    def band_radius(self) -> float:
        return max((abs(p.x) for p in self.points), default=0.0)


def _disc_jacobian(fn, x: float, t: float, h: float = 1e-5) -> float:
    dx = (fn(x + h, t) - fn(x - h, t)) / (2 * h)
    dt = (fn(x, t + h) - fn(x, t - h)) / (2 * h)
    return float(dx.real * dt.imag - dx.imag * dt.real)


def _sign_change(values: np.ndarray) -> bool:
    return bool(values.real.min() < 0 < values.real.max() and values.imag.min() < 0 < values.imag.max())


def blowup_map(data, ds: DiscreteSpectrum, x_range, t_range, resolution=(64, 64),
               accept: float = 1e-8, mode: str = "auto") -> BlowupSet:
    """Indicator min_m |D_m| on a grid plus refined zeros of the discriminants."""
    nx, nt = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nx < 32 or nt < 32:
        raise ValidationError("resolution must be at least 32 per axis")
    xs = np.linspace(*x_range, nx)
    ts = np.linspace(*t_range, nt)
    size = ds.size
    if size == 0:
        return BlowupSet(xs, ts, np.full((nt, nx), np.inf), [])
    disc = np.empty((nt, nx, size), complex)
    for i, t in enumerate(ts):
        for j, x in enumerate(xs):
            disc[i, j] = discriminants(data, ds, x, t, mode)
    indicator = np.min(np.abs(disc), axis=-1)
    padded = np.pad(indicator, 2, mode="edge")
    points: list[BlowupPoint] = []
    for i in range(nt - 1):
        for j in range(nx - 1):
            hood = padded[i:i + 6, j:j + 6]
            if indicator[i:i + 2, j:j + 2].min() >= DIP_FACTOR * np.median(hood):
                continue
            for m in range(size):
                if not _sign_change(disc[i:i + 2, j:j + 2, m]):
                    continue

                def fn(xv, tv, m=m):
                    return discriminants(data, ds, xv, tv, mode)[m]

                start = np.array([xs[j:j + 2].mean(), ts[i:i + 2].mean()])
                res = minimize(lambda p: abs(fn(*p)), start, method="Nelder-Mead",
                               options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 2000})
                val = abs(fn(*res.x))
                if val >= accept:
                    continue
                if any(abs(p.x - res.x[0]) < 1e-6 and abs(p.t - res.x[1]) < 1e-6 for p in points):
                    continue
                points.append(BlowupPoint(float(res.x[0]), float(res.x[1]), m, float(val),
                                          _disc_jacobian(fn, *res.x)))
    points.sort(key=lambda p: (p.t, p.x))
    return BlowupSet(xs, ts, indicator, points)
