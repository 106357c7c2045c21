"""Kernel coupling: interaction field, pairing identity, local limit."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlpf.errors import ConfigError
from nlpf.geometry import build_grid
from nlpf.longrange import (ConstantKernel, EvenPolynomialG, GaussianKernel,
                            QuadraticG, ScaledTopHat, build_coupling,
                            local_limit_error, local_limit_nu)


def two_cell_coupling():
    grid = build_grid(1, [1.0], [2])
    return build_coupling(grid, ConstantKernel(1.0), QuadraticG(), 1.0)


def test_two_cell_oracle():
    # cells of weight 1/2, chi = (0, 1): b_i = 2 sum_j w_j (chi_i - chi_j)
    # gives (-1, +1); B_i = sum_j w_j G(chi_i - chi_j) = 1/2 * 1/2 = 1/4
    cp = two_cell_coupling()
    chi = np.array([[0.0], [1.0]])
    assert np.allclose(cp.b_field(chi), [[-1.0], [1.0]], atol=1e-15)
    assert np.allclose(cp.B_field(chi), [0.25, 0.25], atol=1e-15)
    assert cp.total_B(chi) == pytest.approx(0.25, abs=1e-15)


def test_pairing_identity_oracle():
    # with chi-dot = (1, 0) both sides of the chain rule equal -1/2
    cp = two_cell_coupling()
    chi = np.array([[0.0], [1.0]])
    chid = np.array([[1.0], [0.0]])
    lhs, rhs, residual = cp.pairing_residual(chi, chid)
    assert lhs == pytest.approx(-0.5, abs=1e-15)
    assert rhs == pytest.approx(-0.5, abs=1e-15)
    assert abs(residual) <= 1e-15


def test_kernel_matrix_is_symmetric():
    grid = build_grid(1, [1.0], [16])
    cp = build_coupling(grid, GaussianKernel(0.3, 0.2), QuadraticG(), 1.0)
    assert np.array_equal(cp.K, cp.K.T)


def test_negative_kernel_rejected():
    grid = build_grid(1, [1.0], [4])
    with pytest.raises(ConfigError):
        build_coupling(grid, ConstantKernel(-0.5), QuadraticG(), 1.0)


@given(st.integers(0, 2 ** 31 - 1))
def test_field_bound(seed):
    """sup |b| stays below 2 sup(K) sup(G') |Omega| for admissible chi."""
    grid = build_grid(1, [1.0], [12])
    kernel = GaussianKernel(0.4, 0.3)
    g = QuadraticG()
    cp = build_coupling(grid, kernel, g, 1.0)
    rng = np.random.default_rng(seed)
    chi = rng.random((12, 1))
    c_b = 2.0 * kernel.sup() * g.sup_grad_norm(1.0) * grid.domain_volume
    assert cp.c_b == c_b
    norms = np.linalg.norm(cp.b_field(chi), axis=1)
    assert np.max(norms) <= c_b + 1e-12


@given(st.integers(0, 2 ** 31 - 1))
def test_pairing_residual_is_tiny(seed):
    grid = build_grid(1, [1.0], [10])
    cp = build_coupling(grid, GaussianKernel(0.2, 0.25),
                        EvenPolynomialG([0.5, 0.25]), 1.0)
    rng = np.random.default_rng(seed)
    chi = rng.random((10, 1))
    chid = rng.normal(size=(10, 1))
    _, _, residual = cp.pairing_residual(chi, chid)
    assert abs(residual) <= 1e-13


def test_even_polynomial_grad_consistent():
    g = EvenPolynomialG([0.5, 0.25])
    z = np.array([[0.3, -0.4]])
    eps = 1e-6
    num = np.zeros(2)
    for k in range(2):
        zp, zm = z.copy(), z.copy()
        zp[0, k] += eps
        zm[0, k] -= eps
        num[k] = (g.value(zp)[0] - g.value(zm)[0]) / (2 * eps)
    assert np.allclose(g.grad(z)[0], num, atol=1e-8)


def test_nu_oracles():
    # top-hat in 1d: nu = integral of z^2 kappa over [-1, 1] / something
    # fixed by the limit normalisation; the frozen values are 2/3 and pi/4
    assert local_limit_nu(lambda r: 1.0, 1) == pytest.approx(2.0 / 3.0,
                                                             rel=1e-9)
    assert local_limit_nu(lambda r: 1.0, 2) == pytest.approx(np.pi / 4.0,
                                                             rel=1e-9)


def test_scaled_tophat_support():
    k = ScaledTopHat(4, 1)
    x = np.array([[0.5]])
    near = np.array([[0.5 + 0.2]])
    far = np.array([[0.5 + 0.3]])
    assert k(x, near)[0] > 0.0
    assert k(x, far)[0] == 0.0
    assert k.sup() == pytest.approx(k(x, x)[0])


def test_local_limit_error_decays():
    grid = build_grid(1, [1.0], [64])
    L = 1.0

    def chi_fn(x):
        return 0.5 + 0.25 * np.sin(2 * np.pi * x / L)

    def grad_fn(x):
        return 0.25 * (2 * np.pi / L) * np.cos(2 * np.pi * x / L)

    r4 = local_limit_error(grid, 4, chi_fn, grad_fn)
    r8 = local_limit_error(grid, 8, chi_fn, grad_fn)
    assert r8.sup_error < r4.sup_error
    assert r4.nu == pytest.approx(2.0 / 3.0, rel=1e-9)
    assert not r8.resolution_warning


def test_local_limit_resolution_warning():
    # 8 cells cannot resolve the n = 16 interaction range
    grid = build_grid(1, [1.0], [8])
    rep = local_limit_error(grid, 16, lambda x: 0.5 * x, lambda x: 0.5 + 0 * x)
    assert rep.resolution_warning
