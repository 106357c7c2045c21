"""Uniform box grids and two-point flux assembly of the heat operator.

Cells are axis-aligned boxes of identical size, ordered lexicographically by
integer index (last axis fastest).  The diffusion operator discretizes
``-div(k grad theta)`` with a two-point flux per interior face and a Robin
exchange term ``gamma * (theta - theta_Gamma)`` on boundary faces; all rows
are scaled by cell volume so the operator maps a temperature field to a
rate density.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ModelContractError


@dataclass(frozen=True)
class Grid:
    dim: int
    lengths: tuple[float, ...]
    cells: tuple[int, ...]
    h: tuple[float, ...]
    centers: np.ndarray          # (M, dim)
    volumes: np.ndarray          # (M,)
    iface_owner: np.ndarray      # (F,) cell index on the low side
    iface_neigh: np.ndarray      # (F,) cell index on the high side
    iface_area: np.ndarray       # (F,)
    iface_dist: np.ndarray       # (F,) center-to-center distance
    bface_owner: np.ndarray      # (Fb,)
    bface_normal: np.ndarray     # (Fb, dim) outward unit normal
    bface_area: np.ndarray       # (Fb,)

    @property
    def n_cells(self) -> int:
        return self.centers.shape[0]

    @property
    def n_ifaces(self) -> int:
        return self.iface_owner.shape[0]

    @property
    def n_bfaces(self) -> int:
        return self.bface_owner.shape[0]

    @property
    def domain_volume(self) -> float:
        return float(np.prod(self.lengths))


def build_grid(dim: int, lengths: Sequence[float], cells: Sequence[int]) -> Grid:
    """Build a uniform cell-centered grid on the box ``prod [0, L_a]``."""
    if dim not in (1, 2):
        raise ConfigError(f"grid dimension must be 1 or 2, got {dim}")
    lengths = tuple(float(L) for L in lengths)
    cells = tuple(int(c) for c in cells)
    if len(lengths) != dim or len(cells) != dim:
        raise ConfigError("lengths/cells must have one entry per axis")
    if any(L <= 0 for L in lengths):
        raise ConfigError("axis lengths must be positive")
    if any(c < 1 for c in cells):
        raise ConfigError("cell counts must be at least 1")

    h = tuple(L / c for L, c in zip(lengths, cells))
    axes = [((np.arange(c) + 0.5) * hh) for c, hh in zip(cells, h)]
    if dim == 1:
        centers = axes[0][:, None]
    else:
        # lexicographic by (ix, iy): cell id = ix * ny + iy
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        centers = np.column_stack([gx.ravel(), gy.ravel()])
    m = int(np.prod(cells))
    vol = float(np.prod(h))
    volumes = np.full(m, vol)

    own, nbr, area, dist = [], [], [], []
    if dim == 1:
        nx = cells[0]
        for i in range(nx - 1):
            own.append(i)
            nbr.append(i + 1)
            area.append(1.0)
            dist.append(h[0])
    else:
        nx, ny = cells
        # all x-direction faces first, then y-direction, each lexicographic
        for ix in range(nx - 1):
            for iy in range(ny):
                own.append(ix * ny + iy)
                nbr.append((ix + 1) * ny + iy)
                area.append(h[1])
                dist.append(h[0])
        for ix in range(nx):
            for iy in range(ny - 1):
                own.append(ix * ny + iy)
                nbr.append(ix * ny + iy + 1)
                area.append(h[0])
                dist.append(h[1])

    bown, bnorm, barea = [], [], []
    if dim == 1:
        nx = cells[0]
        for cell, sgn in ((0, -1.0), (nx - 1, 1.0)):
            bown.append(cell)
            bnorm.append([sgn])
            barea.append(1.0)
    else:
        nx, ny = cells
        # sides ordered: x-low, x-high, y-low, y-high; owners lexicographic
        for iy in range(ny):
            bown.append(0 * ny + iy)
            bnorm.append([-1.0, 0.0])
            barea.append(h[1])
        for iy in range(ny):
            bown.append((nx - 1) * ny + iy)
            bnorm.append([1.0, 0.0])
            barea.append(h[1])
        for ix in range(nx):
            bown.append(ix * ny + 0)
            bnorm.append([0.0, -1.0])
            barea.append(h[0])
        for ix in range(nx):
            bown.append(ix * ny + ny - 1)
            bnorm.append([0.0, 1.0])
            barea.append(h[0])

    grid = Grid(
        dim=dim,
        lengths=lengths,
        cells=cells,
        h=h,
        centers=centers,
        volumes=volumes,
        iface_owner=np.asarray(own, dtype=np.int64),
        iface_neigh=np.asarray(nbr, dtype=np.int64),
        iface_area=np.asarray(area, dtype=float),
        iface_dist=np.asarray(dist, dtype=float),
        bface_owner=np.asarray(bown, dtype=np.int64),
        bface_normal=np.asarray(bnorm, dtype=float).reshape(-1, dim),
        bface_area=np.asarray(barea, dtype=float),
    )
    assert abs(float(np.sum(grid.volumes)) - grid.domain_volume) <= 1e-12 * grid.domain_volume
    return grid


ThetaGammaLike = Union[float, np.ndarray, Callable[[float], Union[float, np.ndarray]]]


@dataclass
class BoundaryData:
    """Robin exchange data: coefficient and exterior temperature per boundary face.

    ``gamma`` is a scalar or an array over boundary faces, all entries >= 0.
    ``theta_gamma`` is a positive scalar, an array over boundary faces, or a
    callable of time returning either.
    """

    grid: Grid
    gamma: Union[float, np.ndarray] = 0.0
    theta_gamma: ThetaGammaLike = 1.0

    def __post_init__(self):
        g = np.broadcast_to(np.asarray(self.gamma, dtype=float), (self.grid.n_bfaces,)).copy()
        if np.any(g < 0):
            raise ConfigError("boundary gamma must be nonnegative")
        object.__setattr__(self, "_gamma_arr", g)
        if not callable(self.theta_gamma):
            tg = np.broadcast_to(np.asarray(self.theta_gamma, dtype=float),
                                 (self.grid.n_bfaces,)).copy()
            if np.any(tg <= 0):
                raise ConfigError("exterior temperature must be positive")

    @property
    def gamma_arr(self) -> np.ndarray:
        return self._gamma_arr

    def theta_gamma_at(self, t: float) -> np.ndarray:
        tg = self.theta_gamma(t) if callable(self.theta_gamma) else self.theta_gamma
        arr = np.broadcast_to(np.asarray(tg, dtype=float), (self.grid.n_bfaces,)).copy()
        if np.any(arr <= 0):
            raise ConfigError("exterior temperature must be positive")
        return arr

    @property
    def is_insulated(self) -> bool:
        return bool(np.all(self._gamma_arr == 0.0))


def harmonic_face_conductivity(grid: Grid, k_cell: np.ndarray) -> np.ndarray:
    """Harmonic mean of the owner/neighbour cell conductivities per interior face."""
    k_cell = np.asarray(k_cell, dtype=float)
    a = k_cell[grid.iface_owner]
    b = k_cell[grid.iface_neigh]
    return 2.0 * a * b / (a + b)


@dataclass
class DiffusionOperator:
    """Volume-scaled two-point flux operator with Robin boundary exchange.

    ``apply(theta)`` returns the cellwise rate ``-div(k grad theta)`` plus the
    homogeneous part of the Robin term; ``robin_load(t)`` is the affine part,
    so the full residual of the stationary operator is
    ``apply(theta) - robin_load(t)``.
    """

    grid: Grid
    boundary: BoundaryData
    trans: np.ndarray            # (F,) k_f * A_f / dist_f
    matrix: sp.csr_matrix        # (M, M) volume-scaled, Robin diagonal included

    def apply(self, theta: np.ndarray) -> np.ndarray:
        return self.matrix @ theta

    def robin_load(self, t: float) -> np.ndarray:
        g = self.grid
        out = np.zeros(g.n_cells)
        coeff = self.boundary.gamma_arr * g.bface_area * self.boundary.theta_gamma_at(t)
        np.add.at(out, g.bface_owner, coeff)
        return out / g.volumes

    def residual(self, theta: np.ndarray, t: float) -> np.ndarray:
        return self.apply(theta) - self.robin_load(t)

    def face_fluxes(self, theta: np.ndarray) -> np.ndarray:
        """Signed heat flux through each interior face, from owner to neighbour."""
        g = self.grid
        return self.trans * (theta[g.iface_owner] - theta[g.iface_neigh])

    def boundary_outflow(self, theta: np.ndarray, t: float) -> float:
        """Total heat leaving the domain through Robin faces."""
        g = self.grid
        q = self.boundary.gamma_arr * g.bface_area * (
            theta[g.bface_owner] - self.boundary.theta_gamma_at(t))
        return float(np.sum(q))

    def volume_weighted_divergence(self, theta: np.ndarray) -> float:
        """Exact face-cancelled value of sum_i V_i * (A theta)_i with gamma = 0 rows.

        Computed from face fluxes so interior contributions cancel pairwise;
        the Robin part is added from boundary faces.
        """
        g = self.grid
        q = self.boundary.gamma_arr * g.bface_area * theta[g.bface_owner]
        return float(np.sum(q))


def assemble_diffusion(
    grid: Grid,
    face_conductivity: np.ndarray,
    boundary: BoundaryData,
    k_bounds: tuple[float, float] | None = None,
) -> DiffusionOperator:
    """Assemble the heat operator from per-face conductivities.

    ``face_conductivity`` is given on interior faces.  When ``k_bounds`` is
    supplied, any face value outside ``[k0, k1]`` is reported as a model
    contract violation rather than clamped.
    """
    k_f = np.asarray(face_conductivity, dtype=float)
    if k_f.shape != (grid.n_ifaces,):
        raise ConfigError(
            f"face conductivity must have shape ({grid.n_ifaces},), got {k_f.shape}")
    if k_bounds is not None:
        k0, k1 = k_bounds
        tol = 1e-12 * max(1.0, abs(k1))
        if np.any(k_f < k0 - tol) or np.any(k_f > k1 + tol):
            bad = float(k_f[np.argmax(np.abs(k_f - np.clip(k_f, k0, k1)))])
            raise ModelContractError(
                "k-bounds", f"face conductivity {bad} outside [{k0}, {k1}]")
    if np.any(k_f <= 0):
        raise ModelContractError("k-bounds", "face conductivity must be positive")

    trans = k_f * grid.iface_area / grid.iface_dist
    m = grid.n_cells
    rows, cols, vals = [], [], []
    inv_v = 1.0 / grid.volumes

    o, n = grid.iface_owner, grid.iface_neigh
    rows.append(o); cols.append(o); vals.append(trans * inv_v[o])
    rows.append(o); cols.append(n); vals.append(-trans * inv_v[o])
    rows.append(n); cols.append(n); vals.append(trans * inv_v[n])
    rows.append(n); cols.append(o); vals.append(-trans * inv_v[n])

    bo = grid.bface_owner
    robin = boundary.gamma_arr * grid.bface_area
    rows.append(bo); cols.append(bo); vals.append(robin * inv_v[bo])

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(m, m))
    mat.sum_duplicates()
    return DiffusionOperator(grid=grid, boundary=boundary, trans=trans, matrix=mat)
