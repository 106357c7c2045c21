"""Coupled time stepper: per-cell proximal step for the order parameter,
then a backward-Euler quasilinear energy step for the temperature.

Each step freezes the conductivity at lagged fields (previous step, or the
previous macro-interval average), advances chi by one implicit proximal step
of the inclusion

    alpha chi_t + dphi(chi) ni g,   alpha = mu_trunc/(beta+theta),

and then solves the nonlinear energy balance

    [eps th' + e(th',chi') - eps th - e(th,chi)]/dt - div(k grad th') + Robin
        = -(lam'(chi') + b[chi]) . (chi'-chi)/dt - beta (phi(chi')-phi(chi))/dt

by damped Newton on the monotone map th' -> eps th' + e(th', chi').  With
gamma = 0 the volume-weighted row sums of the diffusion map vanish, so the
scheme conserves the discrete total energy up to the Taylor remainders of the
lam and pair-interaction difference quotients, which are O(dt) overall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.sparse import diags
from scipy.sparse.linalg import spsolve

from .errors import ConfigError, ModeError, NumericalError
from .geometry import assemble_diffusion, harmonic_face_conductivity
from .thermo import truncated_entropy_gradient, truncated_mobility

RECORD_COLUMNS = ("t", "total_energy", "total_entropy", "min_theta",
                  "max_theta", "entropy_residual_min", "pairing_residual",
                  "selection_margin")

_RECORD_DTYPE = np.dtype([(c, "f8") for c in RECORD_COLUMNS])


@dataclass
class State:
    theta: np.ndarray          # (M,)
    chi: np.ndarray            # (M, d)
    xi: np.ndarray             # (M, d)
    t: float

    def copy(self):
        return State(self.theta.copy(), self.chi.copy(), self.xi.copy(), self.t)


@dataclass
class SolverConfig:
    dt: float
    horizon: float
    n_reg: int = 0                       # regularizing eps = 1/n_reg; 0 disables
    rho: float = math.e ** 8             # truncation cap (resolved by the caller)
    lag_mode: str = "previous_step"      # or "interval_average"
    lag_window: int = 1
    newton_tol: float = 1e-14
    newton_cap: int = 60
    prox_tol: float = 1e-9
    cadence: int = 1
    max_halvings: int = 5

    def __post_init__(self):
        if self.dt <= 0 or self.horizon <= 0:
            raise ConfigError("dt and horizon must be positive")
        if self.rho < 1:
            raise ConfigError("truncation parameter must be >= 1")
        if self.n_reg < 0:
            raise ConfigError("regularization index must be >= 0")
        if self.lag_mode not in ("previous_step", "interval_average"):
            raise ConfigError(f"unknown lag mode '{self.lag_mode}'")
        if self.lag_window < 1:
            raise ConfigError("lag window must be >= 1")
        if self.cadence < 1:
            raise ConfigError("output cadence must be >= 1")

    @property
    def eps_reg(self) -> float:
        return 1.0 / self.n_reg if self.n_reg > 0 else 0.0


@dataclass
class Trajectory:
    times: np.ndarray          # (S,)
    thetas: np.ndarray         # (S, M)
    chis: np.ndarray           # (S, M, d)
    xis: np.ndarray            # (S, M, d) recomputable, kept for convenience
    records: np.ndarray        # structured, one row per completed step
    cadence: int
    rejections: int = 0

    def __post_init__(self):
        if self.times.size and self.times.size > 1:
            if np.any(np.diff(self.times) <= 0):
                raise ConfigError("snapshot times must increase strictly")


class LagTracker:
    """Lagged coefficient fields for the conductivity.

    previous_step: bar fields are the last accepted state.  interval_average:
    time is split into windows of J steps; inside window m the temperature is
    the mean over window m-1 and the phase field is its last node, with the
    initial data serving for the first window.
    """

    def __init__(self, mode, window, theta0, chi0):
        self.mode = mode
        self.window = int(window)
        self._bar_theta = np.asarray(theta0, dtype=float).copy()
        self._bar_chi = np.asarray(chi0, dtype=float).copy()
        self._buffer = []

    def bar(self):
        return self._bar_theta, self._bar_chi

    def push(self, theta, chi):
        if self.mode == "previous_step":
            self._bar_theta = theta.copy()
            self._bar_chi = chi.copy()
            return
        self._buffer.append(theta.copy())
        if len(self._buffer) == self.window:
            self._bar_theta = np.mean(self._buffer, axis=0)
            self._bar_chi = chi.copy()
            self._buffer = []


def initial_selection_bound(potential, chi0) -> float:
    """Smallest C such that every cell of chi0 admits a subgradient <= C."""
    chi0 = np.atleast_2d(chi0)
    worst = 0.0
    for row in chi0:
        info = potential.subdiff(row)
        worst = max(worst, float(np.linalg.norm(info.min_norm_element)))
    return worst


def bound_C_ell(model, c_b: float, rho: float) -> float:
    """Forcing bound for the inclusion right-hand side at truncation rho."""
    if rho < 1:
        raise ConfigError("truncation parameter must be >= 1")
    return (model.C_sigma + (model.C_lambda + c_b) / model.beta
            + model.c1 * model.c_bar + model.c1 ** 2
            + model.c1 * model.c_bar * math.log(rho))


def rhs_ell(model, theta, chi, b_val, rho):
    """Coefficient alpha and forcing g of the cellwise inclusion.

    alpha = mu_trunc(theta)/(beta+theta); g collects the phase couplings
    -(theta sig' + lam' + b + e_chi - theta s_chi^rho)/(beta+theta).
    """
    theta = np.asarray(theta, dtype=float)
    denom = model.beta + theta
    alpha = truncated_mobility(model, theta, rho) / denom
    s_chi_r = truncated_entropy_gradient(model, theta, chi, rho)
    ell = (theta[:, None] * model.sig_p(chi) + model.lam_p(chi) + b_val
           + model.e_chi(theta, chi) - theta[:, None] * s_chi_r)
    g = -ell / denom[:, None]
    return alpha, g


def step_chi(potential, chi, alpha, g, dt):
    """One implicit proximal step; returns (chi', xi') with xi' the selection."""
    z = chi + (dt / alpha)[:, None] * g
    chi_new = potential.prox(z, alpha / dt)
    xi_new = g - alpha[:, None] * (chi_new - chi) / dt
    return chi_new, xi_new


def _phi_cellwise(potential, chi):
    vals = potential.phi(chi)
    if np.any(~np.isfinite(vals)):
        raise NumericalError("phase field left the potential domain")
    return vals


def step_theta(grid, boundary, model, state, chi_new, b_old, phi_old, phi_new,
               bar_theta, bar_chi, dt, config):
    """Backward-Euler energy step; returns (theta', diffusion operator).

    Raises NumericalError when the damped Newton stalls; the caller decides
    whether to halve the step.  A converged solve with nonpositive
    temperature is also reported as an error: the scheme is supposed to
    preserve positivity on its own, so a violation at finite dt is a
    diagnostic, not a repair site.
    """
    k_cell = model.k(bar_theta, bar_chi)
    face_k = harmonic_face_conductivity(grid, k_cell)
    op = assemble_diffusion(grid, face_k, boundary,
                            k_bounds=(model.k0, model.k1))
    t_new = state.t + dt
    load = op.robin_load(t_new)
    eps = config.eps_reg

    dchi = chi_new - state.chi
    source = (-np.einsum("md,md->m", model.lam_p(chi_new) + b_old, dchi) / dt
              - model.beta * (phi_new - phi_old) / dt)
    base = eps * state.theta + model.e(state.theta, state.chi) \
        + dt * (source + load)

    theta = state.theta.copy()

    def residual(th):
        return eps * th + model.e_ext(th, chi_new) + dt * op.apply(th) - base

    f = residual(theta)
    scale = max(1.0, float(np.max(np.abs(f))))
    tol = config.newton_tol * scale
    for _ in range(config.newton_cap):
        norm = float(np.max(np.abs(f)))
        if norm <= tol:
            break
        jac = diags(eps + model.cv_ext(theta, chi_new)) + dt * op.matrix
        delta = spsolve(jac.tocsr(), -f)
        step_size = 1.0
        f2 = None
        while step_size >= 2.0 ** -30:
            cand = theta + step_size * delta
            f2 = residual(cand)
            if float(np.max(np.abs(f2))) <= (1.0 - 1e-4 * step_size) * norm:
                break
            step_size *= 0.5
        else:
            raise NumericalError(
                f"temperature step stalled at t={state.t:.6g}: residual "
                f"{norm:.3e} not reducible along the Newton direction")
        theta = theta + step_size * delta
        f = f2
    else:
        raise NumericalError(
            f"temperature step exceeded {config.newton_cap} Newton "
            f"iterations at t={state.t:.6g}; residual {float(np.max(np.abs(f))):.3e}")
    if np.any(theta <= 0.0):
        raise NumericalError(
            f"temperature positivity violated at t={state.t + dt:.6g}: "
            f"min theta' = {float(np.min(theta)):.3e}")
    return theta, op


def kirchhoff(model, theta):
    """Primitive of the chi-independent conductivity, K(th) = int_0^th k_bar.

    Strictly increasing with k0 th <= K(th) <= k1 th.  Uses the model's
    closed-form primitive when available, quadrature otherwise.
    """
    if not getattr(model, "k_independent_of_chi", False):
        raise ModeError("Kirchhoff transform needs a conductivity depending "
                        "on temperature only (uniqueness mode)")
    th = np.asarray(theta, dtype=float)
    prim = getattr(model, "k_bar_primitive", None)
    if prim is not None:
        out = prim(th)
    else:
        kbar = model.k_bar
        flat = th.ravel()
        out = np.empty_like(flat)
        for i, t in enumerate(flat):
            val, _ = integrate.quad(lambda s: float(kbar(np.asarray(s))),
                                    0.0, t, epsabs=1e-12, epsrel=1e-12,
                                    limit=200)
            out[i] = val
        out = out.reshape(th.shape)
    return out


@dataclass
class RunComponents:
    """Everything run() needs, bundled so studies can clone and perturb."""

    grid: object
    model: object
    potential: object
    coupling: object
    boundary: object
    theta0: np.ndarray
    chi0: np.ndarray
    config: SolverConfig


def run(components: RunComponents):
    """March the coupled scheme over ceil(T/dt) steps.

    Returns a Trajectory with snapshots at the configured cadence and one
    record row per nominal step.  A failed step is retried as two half steps,
    recursively up to config.max_halvings, then reported as a hard error.
    """
    grid = components.grid
    model = components.model
    potential = components.potential
    coupling = components.coupling
    boundary = components.boundary
    config = components.config

    theta0 = np.asarray(components.theta0, dtype=float).copy()
    chi0 = np.atleast_2d(np.asarray(components.chi0, dtype=float)).copy()
    if theta0.shape != (grid.n_cells,) or chi0.shape != (grid.n_cells, model.d):
        raise ConfigError("initial fields must match the grid and model shapes")
    if np.any(theta0 <= 0):
        raise ConfigError("initial temperature must be positive everywhere")
    if not np.all(potential.contains(chi0)):
        raise ConfigError("initial phase field must lie in the potential domain")

    c0 = initial_selection_bound(potential, chi0)
    c_ell = bound_C_ell(model, coupling.c_b, config.rho)
    c_bound = max(c_ell, c0)
    d_bound = potential.d_bound()

    n_steps = int(math.ceil(config.horizon / config.dt - 1e-12))
    lag = LagTracker(config.lag_mode, config.lag_window, theta0, chi0)
    state = State(theta0, chi0, np.zeros_like(chi0), 0.0)

    snap_t, snap_th, snap_chi, snap_xi = [0.0], [theta0.copy()], [chi0.copy()], \
        [np.zeros_like(chi0)]
    records = np.zeros(n_steps, dtype=_RECORD_DTYPE)
    rejections = 0

    def advance(st, dt, bar_theta, bar_chi, depth):
        """One (chi, theta) step from st over dt; splits in half on failure."""
        nonlocal rejections
        b_old = coupling.b_field(st.chi)
        if np.any(np.linalg.norm(b_old, axis=-1) > coupling.c_b * (1 + 1e-9)):
            raise NumericalError("pair-interaction bound exceeded; kernel "
                                 "assembly inconsistent with its declared sup")
        alpha, g = rhs_ell(model, st.theta, st.chi, b_old, config.rho)
        phi_old = _phi_cellwise(potential, st.chi)
        try:
            chi_new, xi_new = step_chi(potential, st.chi, alpha, g, dt)
            phi_new = _phi_cellwise(potential, chi_new)
            theta_new, op = step_theta(grid, boundary, model, st, chi_new,
                                       b_old, phi_old, phi_new,
                                       bar_theta, bar_chi, dt, config)
        except NumericalError:
            if depth >= config.max_halvings:
                raise
            rejections += 1
            mid, _ = advance(st, 0.5 * dt, bar_theta, bar_chi, depth + 1)
            return advance(mid, 0.5 * dt, bar_theta, bar_chi, depth + 1)
        new = State(theta_new, chi_new, xi_new, st.t + dt)
        return new, (b_old, op)

    for step in range(n_steps):
        dt = min(config.dt, config.horizon - state.t)
        bar_theta, bar_chi = lag.bar()
        prev = state
        state, (b_old, op) = advance(state, dt, bar_theta, bar_chi, 0)
        lag.push(state.theta, state.chi)

        # per-step scalar record
        phi_new = _phi_cellwise(potential, state.chi)
        B_new = coupling.B_field(state.chi)
        e_new = model.e(state.theta, state.chi)
        s_new = model.s(state.theta, state.chi)
        E_cell = e_new + model.lam(state.chi) + model.beta * phi_new + B_new
        S_cell = s_new - model.sig(state.chi) - phi_new
        total_E = float(np.dot(grid.volumes, E_cell)) \
            + config.eps_reg * float(np.dot(grid.volumes, state.theta))
        total_S = float(np.dot(grid.volumes, S_cell))

        phi_prev = _phi_cellwise(potential, prev.chi)
        S_prev = model.s(prev.theta, prev.chi) - model.sig(prev.chi) - phi_prev
        divq = op.apply(state.theta) - op.robin_load(state.t)
        ent_res = state.theta * (S_cell - S_prev) / dt + divq
        lhs, rhs, pair_res = coupling.pairing_residual(
            prev.chi, (state.chi - prev.chi) / dt)
        sel_margin = d_bound * c_bound * (1 + 1e-6) \
            - float(np.max(np.linalg.norm(state.xi, axis=-1)))
        records[step] = (state.t, total_E, total_S,
                         float(np.min(state.theta)), float(np.max(state.theta)),
                         float(np.min(ent_res)), pair_res, sel_margin)

        if (step + 1) % config.cadence == 0 or step == n_steps - 1:
            snap_t.append(state.t)
            snap_th.append(state.theta.copy())
            snap_chi.append(state.chi.copy())
            snap_xi.append(state.xi.copy())

    return Trajectory(times=np.asarray(snap_t),
                      thetas=np.asarray(snap_th),
                      chis=np.asarray(snap_chi),
                      xis=np.asarray(snap_xi),
                      records=records,
                      cadence=config.cadence,
                      rejections=rejections)
