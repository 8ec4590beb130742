import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nnls_ist import (DiscreteSpectrum, alpha_products, blowup_times, multi_soliton, one_soliton,
                      pde_residual)
from nnls_ist.errors import DegenerateAmplitudes, StencilHitsPole, ValidationError
from nnls_ist.solitons import SolitonField


def test_one_soliton_matches_bordered_determinant(one_sol):
    x = np.linspace(-6, 6, 41)
    t = np.linspace(0, 2.5, 41)
    q1, _ = one_soliton(0.5, -0.25, 1j, np.exp(1j * np.pi / 6), x, t)
    q2, _ = multi_soliton(one_sol, x, t)
    assert np.max(np.abs(q1 - q2)) < 1e-13


def test_blowup_times_lattice():
    times = blowup_times(0.5, -0.25, 1j, np.exp(1j * np.pi / 6), 0, 3)
    assert np.allclose(times, 8 * np.pi / 9 + 8 * np.pi / 3 * np.arange(4))


def test_blowup_time_is_a_pole(one_sol):
    t0 = 8 * np.pi / 9
    _, pole = one_soliton(0.5, -0.25, 1j, np.exp(1j * np.pi / 6), 0.0, t0)
    assert pole
    _, flag = multi_soliton(one_sol, 0.0, t0)
    assert flag


def test_equal_heights_have_no_lattice():
    with pytest.raises(DegenerateAmplitudes):
        blowup_times(0.5, -0.5, 1j, 1j)


@pytest.mark.parametrize("name", ["one_sol", "two_imag", "pair_plus", "pair_minus"])
def test_pde_residual_is_second_order(name, request):
    ds = request.getfixturevalue(name)
    field = SolitonField(ds)
    res = [pde_residual(field, 0.37, 0.41, h, ds.sigma) for h in (2e-2, 1e-2)]
    assert res[1] < 1e-2
    assert 3.5 < res[0] / res[1] < 4.5


def test_stencil_near_pole_is_reported(one_sol):
    with pytest.raises(StencilHitsPole):
        pde_residual(SolitonField(one_sol), 0.0, 8 * np.pi / 9, 1e-3)


def test_pt_image_is_a_solution(two_imag):
    image = SolitonField(two_imag).pt_image()
    assert pde_residual(image, 0.3, -0.2, 5e-3) < 1e-3


def test_large_x_stays_finite(two_imag, pair_plus):
    x = np.array([-300.0, -60.0, -30.0, 30.0, 60.0, 300.0])
    for ds in (two_imag, pair_plus):
        q, pole = multi_soliton(ds, x, 1.0)
        assert np.all(np.isfinite(q)) and not pole.any()
        assert np.max(np.abs(q[[0, 1, 4, 5]])) < 1e-8


def test_alpha_products_are_reciprocal(pair_plus):
    k = np.array([0.3, -1.0 + 0.2j, 2j])
    a1, a2 = alpha_products(pair_plus, k)
    assert np.allclose(a1 * a2, 1)
    assert np.allclose(alpha_products(pair_plus, pair_plus.upper_zeros())[0], 0)


@given(st.permutations([0, 1]))
def test_stage_order_does_not_matter(order):
    ds = DiscreteSpectrum(sigma=1, rho1=[0.5, 0.9], rho2=[-0.25, -0.7],
                          gamma1=[1j, np.exp(0.3j)], gamma2=[np.exp(1j * np.pi / 6), -1])
    x = np.linspace(-3, 3, 7)
    q1, _ = multi_soliton(ds, x, 0.7)
    q2, _ = multi_soliton(ds.permuted(order_imag=list(order)), x, 0.7)
    assert np.max(np.abs(q1 - q2)) < 1e-12


def test_spectrum_validation():
    with pytest.raises(ValidationError):
        DiscreteSpectrum(sigma=-1, rho1=[0.5], rho2=[-0.25], gamma1=[1], gamma2=[1])
    with pytest.raises(ValidationError):
        DiscreteSpectrum(sigma=1, rho1=[0.5], rho2=[-0.25], gamma1=[2], gamma2=[1])
    with pytest.raises(ValidationError):
        DiscreteSpectrum(sigma=1, zeta1=[0.5 + 0.5j], zeta2=[-0.5 - 0.5j], eta1=[1], eta2=[1])
