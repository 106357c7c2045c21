"""Long-range interaction fields and their local-limit study.

The pair energy density is B(x) = integral of kappa(x,y) G(chi(x)-chi(y)) dy
and its variational partner b(x) = 2 integral of kappa(x,y) G'(chi(x)-chi(y)) dy,
discretized by midpoint quadrature on the grid with a dense symmetric kernel
matrix.  Symmetry of kappa and evenness of G give the exact pairing identity
sum_i w_i b_i . chid_i = d/dt sum_i w_i B_i, which is what makes the coupled
scheme conserve energy on insulated runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ConfigError
from .geometry import Grid

_BLOCK = 256


# ---------------------------------------------------------------------------
# pair interaction G


class QuadraticG:
    """G(z) = |z|^2 / 2, the classical Ginzburg-Landau pair term."""

    def value(self, z: np.ndarray) -> np.ndarray:
        return 0.5 * np.sum(np.square(z), axis=-1)

    def grad(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float)

    def sup_grad_norm(self, radius: float) -> float:
        return float(radius)

    def sup_hess_norm(self, radius: float) -> float:
        return 1.0


class EvenPolynomialG:
    """G(z) = sum_k c_k |z|^(2k), k >= 1; even and smooth by construction."""

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ConfigError("polynomial coefficients must be a nonempty vector")
        self.coeffs = c  # c[k-1] multiplies |z|^(2k)

    def value(self, z: np.ndarray) -> np.ndarray:
        s = np.sum(np.square(z), axis=-1)
        out = np.zeros_like(s)
        for k, c in enumerate(self.coeffs, start=1):
            out = out + c * s ** k
        return out

    def grad(self, z: np.ndarray) -> np.ndarray:
        s = np.sum(np.square(z), axis=-1)
        fac = np.zeros_like(s)
        for k, c in enumerate(self.coeffs, start=1):
            fac = fac + 2.0 * k * c * s ** (k - 1)
        return fac[..., None] * z

    def sup_grad_norm(self, radius: float) -> float:
        s = radius * radius
        return float(sum(2.0 * k * abs(c) * s ** (k - 1) for k, c in
                         enumerate(self.coeffs, start=1)) * radius)

    def sup_hess_norm(self, radius: float) -> float:
        s = radius * radius
        tot = 0.0
        for k, c in enumerate(self.coeffs, start=1):
            tot += abs(c) * (2.0 * k * s ** (k - 1) +
                             4.0 * k * (k - 1) * s ** (k - 1))
        return float(tot)


# ---------------------------------------------------------------------------
# kernels


class ConstantKernel:
    def __init__(self, value: float):
        if value < 0:
            raise ConfigError("kernel must be nonnegative")
        self.value = float(value)
        self.lipschitz = 0.0

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.full(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]), self.value)

    def sup(self) -> float:
        return self.value


class GaussianKernel:
    """kappa(x,y) = amplitude * exp(-|x-y|^2 / width^2)."""

    def __init__(self, amplitude: float, width: float):
        if amplitude < 0 or width <= 0:
            raise ConfigError("gaussian kernel needs amplitude >= 0, width > 0")
        self.amplitude = float(amplitude)
        self.width = float(width)
        # max |d kappa / dr| at r = width / sqrt(2)
        self.lipschitz = amplitude * math.sqrt(2.0) * math.exp(-0.5) / width

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d2 = np.sum(np.square(x - y), axis=-1)
        return self.amplitude * np.exp(-d2 / self.width ** 2)

    def sup(self) -> float:
        return self.amplitude


class ScaledTopHat:
    """kappa_n(x,y) = n^(N+2) * amplitude on |n (x-y)|^2 <= 1, else 0.

    The localizing family behind the local limit; the support boundary is
    included.  Discontinuous, so no finite Lipschitz bound is reported.
    """

    def __init__(self, n: int, dim: int, amplitude: float = 1.0):
        if n < 1:
            raise ConfigError("scaling index must be >= 1")
        self.n = int(n)
        self.dim = int(dim)
        self.amplitude = float(amplitude)
        self.lipschitz = math.inf

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d2 = np.sum(np.square(x - y), axis=-1)
        inside = (self.n ** 2) * d2 <= 1.0
        return self.amplitude * float(self.n) ** (self.dim + 2) * inside

    def sup(self) -> float:
        return self.amplitude * float(self.n) ** (self.dim + 2)


# ---------------------------------------------------------------------------
# assembled coupling


@dataclass
class NonlocalCoupling:
    """Dense symmetric kernel matrix with quadrature weights and pair term G.

    ``c_b`` is the a priori bound 2 sup|kappa| sup|G'| |Omega| valid for any
    field with values in the declared range.
    """

    grid: Grid
    K: np.ndarray            # (M, M) symmetric by construction
    w: np.ndarray            # (M,) quadrature weights (cell volumes)
    G: object
    range_radius: float
    c_b: float

    def b_field(self, chi: np.ndarray) -> np.ndarray:
        """b_i = 2 sum_j w_j K_ij G'(chi_i - chi_j); shape (M, d)."""
        chi = np.atleast_2d(chi)
        m = chi.shape[0]
        out = np.empty_like(chi)
        wk = self.K * self.w[None, :]
        for s in range(0, m, _BLOCK):
            e = min(s + _BLOCK, m)
            diff = chi[s:e, None, :] - chi[None, :, :]
            gp = self.G.grad(diff)
            out[s:e] = 2.0 * np.einsum("mj,mjd->md", wk[s:e], gp, optimize=False)
        return out

    def B_field(self, chi: np.ndarray) -> np.ndarray:
        """B_i = sum_j w_j K_ij G(chi_i - chi_j); shape (M,)."""
        chi = np.atleast_2d(chi)
        m = chi.shape[0]
        out = np.empty(m)
        wk = self.K * self.w[None, :]
        for s in range(0, m, _BLOCK):
            e = min(s + _BLOCK, m)
            diff = chi[s:e, None, :] - chi[None, :, :]
            gv = self.G.value(diff)
            out[s:e] = np.einsum("mj,mj->m", wk[s:e], gv, optimize=False)
        return out

    def total_B(self, chi: np.ndarray) -> float:
        return float(np.dot(self.w, self.B_field(chi)))

    def pairing_residual(self, chi: np.ndarray, chid: np.ndarray):
        """(lhs, rhs, residual) of the pairing identity for rate field chid.

        lhs = sum_i w_i b_i . chid_i; rhs is the chain-rule derivative of the
        total pair energy.  They agree identically when K is symmetric and G
        is even, so the residual is a machine-precision check of the
        assembled operator.
        """
        chi = np.atleast_2d(chi)
        chid = np.atleast_2d(chid)
        lhs = float(np.sum(self.w[:, None] * self.b_field(chi) * chid))
        m = chi.shape[0]
        rhs = 0.0
        wk = self.K * self.w[None, :]
        for s in range(0, m, _BLOCK):
            e = min(s + _BLOCK, m)
            diff = chi[s:e, None, :] - chi[None, :, :]
            gp = self.G.grad(diff)
            dd = chid[s:e, None, :] - chid[None, :, :]
            rhs += float(np.einsum("mj,mjd,mjd->", wk[s:e] * self.w[s:e, None], gp, dd,
                                   optimize=False))
        return lhs, rhs, lhs - rhs


def build_coupling(grid: Grid, kernel, G, range_radius: float) -> NonlocalCoupling:
    """Evaluate the kernel on cell-center pairs, mirrored to exact symmetry.

    ``range_radius`` bounds |chi(x) - chi(y)| (the potential domain diameter)
    and feeds the bound c_b used by the forcing estimate.
    """
    x = grid.centers
    m = grid.n_cells
    K = np.empty((m, m))
    for s in range(0, m, _BLOCK):
        e = min(s + _BLOCK, m)
        K[s:e] = kernel(x[s:e, None, :], x[None, :, :])
    # mirror the strict upper triangle so symmetry is exact by construction
    iu = np.triu_indices(m, k=1)
    K[(iu[1], iu[0])] = K[iu]
    if np.any(K < 0):
        raise ConfigError("kernel must be nonnegative")
    c_b = 2.0 * kernel.sup() * G.sup_grad_norm(range_radius) * grid.domain_volume
    return NonlocalCoupling(grid=grid, K=K, w=grid.volumes.copy(), G=G,
                            range_radius=range_radius, c_b=c_b)


# ---------------------------------------------------------------------------
# local limit


def local_limit_nu(kappa_tilde: Callable[[float], float], dim: int,
                   support: float = 1.0) -> float:
    """nu = (1/N) integral over R^N of kappa_tilde(|z|^2) |z|^2 dz.

    ``kappa_tilde`` is the radial profile as a function of s = |z|^2 with
    support in [0, support].  Adaptive quadrature; exact reference values:
    top-hat gives 2/3 in 1D and pi/4 in 2D.
    """
    rmax = math.sqrt(support)
    if dim == 1:
        val, _ = integrate.quad(lambda z: kappa_tilde(z * z) * z * z,
                                -rmax, rmax, limit=200)
        return float(val)
    if dim == 2:
        val, _ = integrate.quad(lambda r: kappa_tilde(r * r) * r ** 3,
                                0.0, rmax, limit=200)
        return float(math.pi * val)
    raise ConfigError("local limit supported for dim 1 and 2")


@dataclass
class LocalLimitReport:
    sup_error: float
    n_interior: int
    nu: float
    resolution_warning: bool


def local_limit_error(grid: Grid, n: int, chi_fn, grad_fn,
                      kappa_tilde: Callable[[float], float] | None = None,
                      amplitude: float = 1.0) -> LocalLimitReport:
    """Sup over interior cells of |sum_j w_j kappa_n(x_i,x_j)|chi_i-chi_j|^2
    - nu |grad chi(x_i)|^2| for the scaled top-hat family.

    Interior means distance at least 1/n from the boundary, so the kernel
    support never leaves the domain.  A resolution warning is raised when the
    support radius falls under one cell.
    """
    if kappa_tilde is None:
        kappa_tilde = lambda s: amplitude if s <= 1.0 else 0.0
    nu = local_limit_nu(kappa_tilde, grid.dim)
    kernel = ScaledTopHat(n, grid.dim, amplitude)
    x = grid.centers
    chi = np.asarray([chi_fn(p) for p in x], dtype=float)
    if chi.ndim == 1:
        chi = chi[:, None]
    support = 1.0 / n
    res_warn = support < min(grid.h)

    margin_ok = np.ones(grid.n_cells, dtype=bool)
    for a in range(grid.dim):
        margin_ok &= (x[:, a] >= support) & (x[:, a] <= grid.lengths[a] - support)
    idx = np.flatnonzero(margin_ok)

    sup_err = 0.0
    w = grid.volumes
    for i in idx:
        kv = kernel(x[i][None, :], x)
        diff2 = np.sum(np.square(chi[i] - chi), axis=-1)
        val = float(np.sum(w * kv * diff2))
        target = nu * float(np.sum(np.square(np.asarray(grad_fn(x[i]), dtype=float))))
        sup_err = max(sup_err, abs(val - target))
    return LocalLimitReport(sup_error=sup_err, n_interior=idx.size, nu=nu,
                            resolution_warning=res_warn)
