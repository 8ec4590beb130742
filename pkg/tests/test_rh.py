import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import wofz

from nnls_ist import (Potential, build_jump, cauchy_apply, delta_function, eval_M, reconstruct_q,
                      scattering_table, solve_field, solve_mu, symmetric_grid)
from nnls_ist.cauchy import CauchyGrid
from nnls_ist.errors import NonDecayingInput, NoContraction, ValidationError
from nnls_ist.rh import (ReflectionPair, delta_boundary, jump_residual, q_at, q_batch,
                         q_lower_upper, reconstruct_q_mirror)
from nnls_ist.scattering import k_grid

K = k_grid()


def gaussian_cauchy(k, side):
    """Boundary values of the Cauchy transform of e^{-k^2} from above (+1) or below (-1)."""
    return 0.5 * wofz(k) if side > 0 else -0.5 * wofz(-k)


def test_gaussian_boundary_values():
    f = np.exp(-K**2)
    cg = CauchyGrid(K)
    assert np.max(np.abs(cg.plus(f) - gaussian_cauchy(K, 1))) < 1e-11
    assert np.max(np.abs(cg.minus(f) - gaussian_cauchy(K, -1))) < 1e-11


@pytest.mark.parametrize("pole", [1j, -1j])
def test_rational_function(pole):
    # (k - pole)^{-8} is analytic on the side away from its pole:
    # pole above gives C_+ f = 0, C_- f = -f; pole below gives C_+ f = f, C_- f = 0
    f = (K - pole) ** -8.0
    f[np.abs(K) > 20] = 0  # tail below 1e-10, removed so the decay check passes
    plus, minus = cauchy_apply(f, K, "plus"), cauchy_apply(f, K, "minus")
    if pole.imag > 0:
        assert np.max(np.abs(plus)) < 1e-9 and np.max(np.abs(minus + f)) < 1e-9
    else:
        assert np.max(np.abs(plus - f)) < 1e-9 and np.max(np.abs(minus)) < 1e-9


@given(st.floats(-3, 3), st.floats(0.5, 2.0), st.floats(-2, 2))
def test_plemelj_identity(centre, width, freq):
    f = np.exp(-((K - centre) / width) ** 2 + 1j * freq * K)
    cg = CauchyGrid(K)
    assert np.max(np.abs(cg.plus(f) - cg.minus(f) - f)) < 1e-12


def test_projector_matrix_matches_apply():
    k = k_grid(8.0, 128)
    cg = CauchyGrid(k)
    f = np.exp(-k**2) * (1 + 1j * k)
    assert np.allclose(cg.matrix("plus") @ f, cg.plus(f), atol=1e-13)
    assert np.allclose(cg.matrix("minus") @ f, cg.minus(f), atol=1e-13)


def test_off_axis_transform():
    cg = CauchyGrid(K)
    f = np.exp(-K**2)
    z = np.array([0.3 + 0.1j, -1.0 - 0.05j, 2.0 + 3.0j, 5.0 - 1.0j])
    exact = np.where(z.imag > 0, 0.5 * wofz(z), -0.5 * wofz(-z))
    assert np.max(np.abs(cg.transform(f, z) - exact)) < 1e-11


def test_non_decaying_input_refused():
    with pytest.raises(NonDecayingInput):
        cauchy_apply(np.ones_like(K, complex), K)


def test_off_axis_needs_nonreal_points():
    with pytest.raises(ValidationError):
        CauchyGrid(K).transform(np.exp(-K**2), np.array([0.5]))


@pytest.fixture(scope="module")
def gauss_data():
    x = symmetric_grid(30, 2**-7)
    q0 = Potential(1, x, 0.3 * np.exp(-x**2) * np.exp(0.5j * x))
    return q0, scattering_table(q0)


def test_round_trip_on_grid(gauss_data):
    q0, sd = gauss_data
    idx = np.arange(len(q0.x))[::64]
    rec = q_batch(sd, q0.x[idx], 0.0)
    assert np.max(np.abs(rec - q0.values[idx])) < 1e-8


def test_direct_and_neumann_agree(gauss_data):
    _, sd = gauss_data
    jd = build_jump(sd, 0.4, 0.2)
    qd = reconstruct_q(solve_mu(jd, "direct"), jd)
    qn = reconstruct_q(solve_mu(jd, "neumann"), jd)
    assert abs(qd - qn) < 1e-10


def test_mirror_and_second_factorization(gauss_data):
    q0, sd = gauss_data
    x, t = 0.6, 0.25
    q = q_at(sd, x, t)
    ms_ref = solve_mu(build_jump(sd, -x, t), "direct")
    assert abs(reconstruct_q_mirror(ms_ref, sd.sigma) - q) < 1e-8
    assert abs(q_lower_upper(sd, x, t) - q) < 1e-8


def test_determinant_and_jump(gauss_data):
    _, sd = gauss_data
    jd = build_jump(sd, -0.3, 0.1)
    ms = solve_mu(jd, "direct")
    k0 = np.array([0.5 + 0.5j, -1 - 0.3j, 3 + 0.01j])
    assert np.max(np.abs(np.linalg.det(eval_M(ms, jd, k0)) - 1)) < 1e-10
    assert jump_residual(ms, jd, np.arange(1500, 2600, 100)) < 1e-9
    assert ms.residual < 1e-10


def test_delta_function_factorizes_the_jump(gauss_data):
    _, sd = gauss_data
    dplus, dminus = delta_boundary(sd)
    jump = 1 + sd.sigma * sd.r1 * sd.r2
    assert np.max(np.abs(dplus / dminus - jump)) < 1e-10
    # delta -> 1 at infinity and is analytic off the axis
    assert abs(delta_function(sd, np.array([1e4j]))[0] - 1) < 1e-4


def test_neumann_refuses_large_reflection():
    pair = ReflectionPair(1, K, 1.5 * np.exp(-K**2), 1.5 * np.exp(-K**2))
    with pytest.raises(NoContraction):
        solve_mu(build_jump(pair, 0, 0), "neumann")


def test_zero_reflection_gives_zero_field():
    pair = ReflectionPair(1, K, np.zeros_like(K, complex), np.zeros_like(K, complex))
    field = solve_field(pair, None, np.linspace(-1, 1, 5), [0.0, 1.0])
    assert not np.any(field.q)
