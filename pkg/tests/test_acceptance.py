"""The ten acceptance criteria, each at its stated tolerance.

Every test appends one PASS/FAIL line that is echoed in the terminal summary.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, SOLITON_T0
from nnls_ist import (DiscreteSpectrum, Potential, SpectralData, blowup_map, blowup_times,
                      build_jump, check_small_H11, check_small_L1, discrete_spectrum, eval_M,
                      multi_soliton, reconstruct_full, reconstruct_q, scattering_table, solve_field,
                      solve_mu, split_step, symmetric_grid)
from nnls_ist.cauchy import CauchyGrid
from nnls_ist.conservation import (bisect_threshold, conserved_all, near_soliton_lhs_degenerate,
                                   small_h11_lhs, small_l1_lhs)
from nnls_ist.errors import BlowupGuard, BoundaryZero
from nnls_ist.rh import jump_residual, q_batch, q_lower_upper
from nnls_ist.scattering import a1_values, count_zeros, k_grid, search_rect


def record(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number:2d}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def gaussian_mix(rng, x, n_terms=None):
    n_terms = n_terms or rng.integers(1, 4)
    q = np.zeros_like(x, complex)
    for _ in range(n_terms):
        amp = rng.normal() + 1j * rng.normal()
        centre = rng.uniform(-3, 3)
        width = rng.uniform(0.6, 2.0)
        q += amp * np.exp(-((x - centre) / width) ** 2 + 1j * rng.uniform(-1, 1) * x)
    return q


# ---------------------------------------------------------------- 1


def test_threshold_reproduction():
    start = time.perf_counter()
    x = symmetric_grid(30, 2**-7)
    shape = Potential(1, x, np.exp(-x**2))
    checks = {
        "L1 0.532": check_small_L1(shape.scaled(0.532 / shape.l1_norm())).satisfied,
        "L1 0.533": not check_small_L1(shape.scaled(0.533 / shape.l1_norm())).satisfied,
        "H11 0.266": check_small_H11(0.266).satisfied,
        "H11 0.267": not check_small_H11(0.267).satisfied,
        "degenerate": near_soliton_lhs_degenerate(0.532) > 1.062,
    }
    l1_star = bisect_threshold(small_l1_lhs, 0.0, 1.0)
    h11_star = bisect_threshold(small_h11_lhs, 0.0, 1.0)
    checks["bisect L1"] = np.floor(l1_star * 1000) / 1000 == 0.532
    checks["bisect H11"] = np.floor(h11_star * 1000) / 1000 == 0.266
    elapsed = time.perf_counter() - start
    checks["runtime"] = elapsed < 1.0
    passed = all(checks.values())
    record(1, "threshold reproduction", passed,
           f"L1* = {l1_star:.6f}, H11* = {h11_star:.6f}, degenerate lhs = "
           f"{near_soliton_lhs_degenerate(0.532):.4f}, {elapsed:.2f} s; failed: "
           f"{[k for k, v in checks.items() if not v] or 'none'}")
    assert passed


# ---------------------------------------------------------------- 2


@pytest.mark.slow
def test_one_soliton_blowup_lattice(one_sol):
    start = time.perf_counter()
    lattice = blowup_times(0.5, -0.25, 1j, np.exp(1j * np.pi / 6), 0, 2)
    expected = [SOLITON_T0 + 8 * np.pi / 3 * n for n in range(3)]
    assert np.allclose(lattice, expected, atol=1e-12)
    bs = blowup_map(SpectralData.reflectionless(), one_sol, (-2.0, 2.0), (0.0, 20.0), (64, 256))
    found = []
    for tn in expected:
        near = [p for p in bs.points if abs(p.x) < 1e-5 and abs(p.t - tn) < 1e-5]
        found.append(bool(near))
    # the oracle needs h = 2^-8 to resolve the collapsing peak; see the decisions ledger
    x = symmetric_grid(30, 2**-8)
    q0 = Potential(1, x, multi_soliton(one_sol, x, 0.0)[0])
    try:
        split_step(q0, 1e-4, 2.9, t_out=[0.0])
        aborted = None
    except BlowupGuard as exc:
        aborted = exc.aborted_at
    pde_ok = aborted is not None and abs(aborted - SOLITON_T0) < 0.05
    elapsed = time.perf_counter() - start
    passed = all(found) and len(bs.points) == 3 and pde_ok and elapsed < 120
    record(2, "one-soliton blow-up lattice", passed,
           f"points {[(round(p.x, 8), round(p.t, 8)) for p in bs.points]}, "
           f"PDE aborted at {aborted} (t0 = {SOLITON_T0:.6f}), {elapsed:.0f} s")
    assert passed


# ---------------------------------------------------------------- 3


@pytest.mark.slow
def test_round_trip():
    start = time.perf_counter()
    rng = np.random.default_rng(20240603)
    x = symmetric_grid(30, 2**-7)
    errors = []
    for _ in range(10):
        sigma = int(rng.choice([1, -1]))
        raw = Potential(sigma, x, gaussian_mix(rng, x))
        q0 = raw.scaled(rng.uniform(0.05, 0.5) / raw.l1_norm())
        sd = scattering_table(q0)
        ds = discrete_spectrum(q0)
        xs = x[::4]
        if ds.is_empty() and max(np.abs(sd.r1).max(), np.abs(sd.r2).max()) < 1:
            rec = q_batch(sd, xs, 0.0)
        else:
            rec = solve_field(sd, ds, xs, [0.0]).q[0]
        errors.append(float(np.max(np.abs(rec - q0.values[::4]))))
    elapsed = time.perf_counter() - start
    passed = max(errors) < 1e-6 and elapsed < 300
    record(3, "round trip", passed,
           f"max L-inf error {max(errors):.2e} over 10 profiles (every 4th grid point), {elapsed:.0f} s")
    assert passed


# ---------------------------------------------------------------- 4


@pytest.mark.slow
def test_determinant_relation_and_symmetries(one_sol, pair_minus):
    rng = np.random.default_rng(7)
    x = symmetric_grid(50, 2**-7)
    profiles = []
    for _ in range(8):
        sigma = int(rng.choice([1, -1]))
        profiles.append(Potential(sigma, x, rng.uniform(0.1, 2.0) * gaussian_mix(rng, x)))
    profiles.append(Potential(1, x, multi_soliton(one_sol, x, 0.0)[0]))
    profiles.append(Potential(-1, x, multi_soliton(pair_minus, x, 0.0)[0]))
    profiles.append(Potential(1, x, np.zeros_like(x, complex)))
    worst_det = worst_sym = 0.0
    for q0 in profiles:
        sd = scattering_table(q0)
        worst_det = max(worst_det, sd.determinant_residual())
        worst_sym = max(worst_sym, sd.symmetry_residual())
    passed = worst_det < 1e-8 and worst_sym < 1e-8
    record(4, "determinant relation and symmetries", passed,
           f"max residuals {worst_det:.2e} (a1 a2 + sigma b conj b(-k) - 1), {worst_sym:.2e} "
           f"(conjugate symmetry) over {len(profiles)} tables")
    assert passed


# ---------------------------------------------------------------- 5


@pytest.mark.slow
def test_oracle_agreement():
    start = time.perf_counter()
    x = symmetric_grid(30, 2**-7)
    q0 = Potential(1, x, 0.2 * np.exp(-x**2) * np.exp(0.3j * x))
    assert check_small_L1(q0).satisfied
    sd = scattering_table(q0)
    assert discrete_spectrum(q0).is_empty()
    times = [0.0, 0.125, 0.25, 0.375, 0.5]
    traj = split_step(q0, 1e-3, 0.5, t_out=times)
    window = np.abs(x) <= 10
    xs = x[window][::2]
    worst = 0.0
    for t in times:
        ist = q_batch(sd, xs, t)
        worst = max(worst, float(np.max(np.abs(ist - traj.at(t)[window][::2]))))
    elapsed = time.perf_counter() - start
    passed = worst < 1e-4 and elapsed < 300
    record(5, "oracle agreement", passed,
           f"max L-inf difference {worst:.2e} on t in [0, 0.5] for |x| <= 10, {elapsed:.0f} s")
    assert passed


# ---------------------------------------------------------------- 6


@pytest.mark.slow
def test_soliton_equivalence(one_sol, two_imag, pair_plus, reflectionless):
    rng = np.random.default_rng(11)
    cases = {"(1,0)": one_sol, "(2,0)": two_imag, "(0,1)": pair_plus}
    worst = {}
    for name, ds in cases.items():
        err, used = 0.0, 0
        while used < 200:
            x, t = rng.uniform(-5, 5), rng.uniform(0, 5)
            q_ist, flag = reconstruct_full(reflectionless, ds, x, t)
            q_cf, pole = multi_soliton(ds, x, t)
            if flag or pole:
                continue
            err = max(err, abs(q_ist - complex(q_cf)))
            used += 1
        worst[name] = err
    passed = max(worst.values()) < 1e-8
    record(6, "soliton equivalence", passed,
           ", ".join(f"{k}: {v:.1e}" for k, v in worst.items()) + " max |IST - closed form| at 200 points")
    assert passed


# ---------------------------------------------------------------- 7


@pytest.mark.slow
def test_conservation_beyond_blowup(one_sol, reflectionless):
    x = symmetric_grid(50, 2**-7)
    field = solve_field(reflectionless, one_sol, x, [0.0, 2.0, 3.5])
    assert not field.blowup.any()
    vals = [conserved_all(Potential(1, x, field.q[i])) for i in range(3)]
    d1 = max(abs(v.I1 - vals[0].I1) for v in vals[1:])
    d3 = max(abs(v.I3 - vals[0].I3) for v in vals[1:])
    passed = d1 < 1e-6 and d3 < 1e-6
    record(7, "conservation beyond blow-up", passed,
           f"I1(0) = {vals[0].I1.real:.12f}, I3(0) = {vals[0].I3.real:.12f}; "
           f"max drift at t = 2, 3.5: I1 {d1:.1e}, I3 {d3:.1e}")
    assert passed


# ---------------------------------------------------------------- 8


@pytest.mark.slow
def test_rh_self_consistency():
    x = symmetric_grid(30, 2**-7)
    q0 = Potential(1, x, 0.3 * np.exp(-x**2) * np.exp(0.5j * x))
    sd = scattering_table(q0)
    X, T = 0.5, 0.3
    k0 = np.array([0.7 + 0.4j, -0.3 - 0.8j, 1.2 + 0.2j, -2.0 + 0.05j])

    def solve(xv):
        jd = build_jump(sd, xv, T)
        ms = solve_mu(jd, "direct")
        return jd, ms

    jd, ms = solve(X)
    m0 = eval_M(ms, jd, k0)
    det_err = float(np.max(np.abs(np.linalg.det(m0) - 1)))
    jump_err = jump_residual(ms, jd, np.arange(1024, 3073, 128))

    cg = CauchyGrid(sd.k)
    rng = np.random.default_rng(3)
    f = gaussian_mix(rng, sd.k)
    plemelj = float(np.max(np.abs(cg.plus(f) - cg.minus(f) - f)))

    q = reconstruct_q(ms, jd)
    fact = abs(q_lower_upper(sd, X, T) - q)

    _, ms_m = solve(-X)
    qm = reconstruct_q(ms_m)
    Q = np.array([[0, q], [-np.conj(qm), 0]])
    s3 = np.diag([1.0, -1.0])
    lax = []
    for h in (0.1, 0.05):
        mp = eval_M(solve(X + h)[1], None, k0)
        mm = eval_M(solve(X - h)[1], None, k0)
        rhs = -1j * k0[:, None, None] * (s3 @ m0 - m0 @ s3) + Q @ m0
        lax.append(float(np.max(np.abs((mp - mm) / (2 * h) - rhs))))
    order = np.log2(lax[0] / lax[1])
    passed = (det_err < 1e-6 and jump_err < 1e-7 and plemelj < 1e-9 and fact < 1e-7
              and abs(order - 2) < 0.3)
    record(8, "RH self-consistency", passed,
           f"|det M - 1| {det_err:.1e}, jump {jump_err:.1e}, Plemelj {plemelj:.1e}, "
           f"factorizations {fact:.1e}, Lax residual order {order:.2f}")
    assert passed


# ---------------------------------------------------------------- 9


@pytest.mark.slow
def test_winding_and_counts():
    # Equal counts are an admissibility condition, not a theorem: large profiles can
    # wind. Every draw must satisfy winding = N1 - N2; draws that wind are set aside
    # until 20 admissible inputs have been checked.
    rng = np.random.default_rng(99)
    x = symmetric_grid(40, 2**-7)
    bad_identity, bad_count, near_axis, inadmissible = [], [], [], []
    n_zeros = n_admissible = i = 0
    while n_admissible < 20:
        if i % 2 == 0:
            q = rng.uniform(0.3, 3.0) * gaussian_mix(rng, x, 1)
        else:
            z1 = complex(-rng.uniform(0.3, 0.7), rng.uniform(0.5, 0.9))
            z2 = complex(-rng.uniform(0.2, 0.5), -rng.uniform(0.3, 0.6))
            base = DiscreteSpectrum(sigma=-1, zeta1=[z1], zeta2=[z2], eta1=[0.5], eta2=[1j])
            eps = rng.uniform(0, 0.05) * np.exp(2j * np.pi * rng.uniform())
            q = multi_soliton(base, x, 0.0)[0] + eps * np.exp(-x**2)
        q0 = Potential(-1, x, q)
        sd = scattering_table(q0)
        try:
            n_up = count_zeros(q0, search_rect(24, "upper"), "upper")
            n_lo = count_zeros(q0, search_rect(24, "lower"), "lower")
        except BoundaryZero:
            # a zero too close to the real axis to count; only acceptable if inadmissible
            n_up = n_lo = None
        if sd.winding != 0:
            inadmissible.append(i)
            if n_up is not None and sd.winding != n_up - n_lo:
                bad_identity.append(i)
            i += 1
            continue
        if n_up is None or sd.winding != n_up - n_lo:
            bad_identity.append(i)
        n_admissible += 1
        ds = discrete_spectrum(q0)
        n_zeros += ds.size
        if len(ds.upper_zeros()) != len(ds.lower_zeros()) or n_up != n_lo:
            bad_count.append(i)
        zeros = np.concatenate([ds.upper_zeros(), ds.lower_zeros()])
        if np.any(np.abs(zeros.real) < 1e-3):
            near_axis.append(i)
        i += 1
    passed = not (bad_identity or bad_count or near_axis)
    record(9, "winding and zero counts", passed,
           f"20 admissible sigma = -1 inputs ({n_zeros} zeros per half-plane in total); "
           f"winding != N1 - N2 at {bad_identity}, unequal counts {bad_count}, near-imaginary "
           f"zeros {near_axis}; set aside with nonzero winding: {inadmissible}")
    assert passed


# ---------------------------------------------------------------- 10


@pytest.mark.slow
def test_convergence_orders():
    k = np.array([0.3 + 0.2j, 1.0 + 0.0j, -0.7 + 0.5j])

    def profile(x):
        return 0.8 * np.exp(-x**2) * (1 + 0.5j * x)

    vals = [a1_values(Potential(1, symmetric_grid(20, 2.0**-e), profile(symmetric_grid(20, 2.0**-e))), k)
            for e in (3, 4, 5)]
    slope_scat = float(np.log2(np.max(np.abs(vals[0] - vals[1])) / np.max(np.abs(vals[1] - vals[2]))))

    x = symmetric_grid(30, 2**-6)
    g = Potential(1, x, 0.3 * np.exp(-x**2) * (1 + 0.5j * x))
    ref = split_step(g, 0.02 / 16, 1.0).at(1.0)
    errs = [np.sqrt(np.sum(np.abs(split_step(g, dt, 1.0).at(1.0) - ref) ** 2) * g.spacing)
            for dt in (0.04, 0.02)]
    slope_pde = float(np.log2(errs[0] / errs[1]))
    passed = abs(slope_scat - 4) <= 0.3 and abs(slope_pde - 2) <= 0.3
    record(10, "convergence orders", passed,
           f"direct scattering slope {slope_scat:.2f} (nominal 4), split-step slope {slope_pde:.2f} "
           f"(nominal 2, error ratio {errs[0] / errs[1]:.2f})")
    assert passed
