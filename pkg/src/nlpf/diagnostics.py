"""Post-hoc verification of the discrete structure.

Everything here is a pure function of a stored trajectory plus the objects
that produced it, so a run can be checked long after the fact (or by a
different process) and must reproduce the stepper's own bookkeeping exactly.
Covered: the energy budget, entropy monotonicity and its local residual, the
two-sided temperature envelopes, truncation inactivity, continuous
dependence on the data, the algebraic identities of the dissipative
operator, and a Kirchhoff-transform regularity functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ModeError
from .geometry import assemble_diffusion, harmonic_face_conductivity
from .stepper import LagTracker, RunComponents, run
from .thermo import generic_coefficients, truncated_entropy_gradient


# ---------------------------------------------------------------------------
# small helpers

def _dense(traj, what):
    if traj.cadence != 1:
        raise ConfigError(
            f"{what} needs every step stored (cadence 1), got cadence "
            f"{traj.cadence}")


def _total_energy(grid, model, potential, coupling, theta, chi, eps):
    phi = potential.phi(chi)
    cell = model.e(theta, chi) + model.lam(chi) + model.beta * phi \
        + coupling.B_field(chi)
    return float(np.dot(grid.volumes, cell)) \
        + eps * float(np.dot(grid.volumes, theta))


def _total_entropy(grid, model, potential, theta, chi):
    cell = model.s(theta, chi) - model.sig(chi) - potential.phi(chi)
    return float(np.dot(grid.volumes, cell))


def _replay_ops(traj, grid, model, boundary):
    """Diffusion operators per step, reconstructing the coefficient lag."""
    # cadence 1 gives back exactly the lag sequence of the run; callers that
    # tolerate coarser snapshots replay the lag at snapshot resolution.
    lag = LagTracker("previous_step", 1, traj.thetas[0], traj.chis[0])
    for n in range(len(traj.times) - 1):
        bar_th, bar_chi = lag.bar()
        k_cell = model.k(bar_th, bar_chi)
        op = assemble_diffusion(grid, harmonic_face_conductivity(grid, k_cell),
                                boundary, k_bounds=(model.k0, model.k1))
        yield n, op
        lag.push(traj.thetas[n + 1], traj.chis[n + 1])


# ---------------------------------------------------------------------------
# energy budget

@dataclass
class EnergyBudgetReport:
    step_residuals: np.ndarray   # Delta E + dt * boundary outflow, per step
    drift: float                 # max |E(t) - E(0)| over snapshots
    scale: float                 # max(1, |E(0)|)
    coarse: bool                 # snapshots are coarser than the step size

    @property
    def relative_drift(self) -> float:
        return self.drift / self.scale


def energy_budget(traj, grid, model, potential, coupling, boundary, config):
    """Per-step closure of the total energy balance.

    With insulated boundaries every residual is a pure Taylor remainder of
    the phase couplings, O(dt^2) per step; with Robin exchange the boundary
    outflow is added back so the same identity applies.  Snapshots coarser
    than the step (cadence > 1) still close the budget between stored states
    but smear the per-step attribution; the report flags that.
    """
    eps = config.eps_reg
    times = traj.times
    totals = np.array([
        _total_energy(grid, model, potential, coupling,
                      traj.thetas[n], traj.chis[n], eps)
        for n in range(len(times))])
    res = np.empty(len(times) - 1)
    for n in range(len(times) - 1):
        dt = times[n + 1] - times[n]
        out = boundary.gamma_arr * grid.bface_area * (
            traj.thetas[n + 1][grid.bface_owner]
            - boundary.theta_gamma_at(times[n + 1]))
        res[n] = totals[n + 1] - totals[n] + dt * float(np.sum(out))
    drift = float(np.max(np.abs(totals - totals[0])))
    return EnergyBudgetReport(step_residuals=res, drift=drift,
                              scale=max(1.0, abs(totals[0])),
                              coarse=traj.cadence != 1)


# ---------------------------------------------------------------------------
# entropy production

@dataclass
class EntropyReport:
    cell_residual_min: float    # min over steps/cells of theta' dS/dt + div q
    global_defect_min: float    # min over steps of Delta(sum w S)
    face_pairing_max: float     # max over steps/faces of <q, grad theta>
    tolerance: float
    monotone: bool              # global total nondecreasing up to tolerance

    @property
    def local_ok(self) -> bool:
        return self.cell_residual_min >= -self.tolerance


def entropy_production(traj, grid, model, potential, coupling, boundary,
                       config):
    """Local and global entropy checks along the trajectory.

    The flux pairing <q, grad theta> is nonpositive face by face because the
    flux is minus a positive transmissibility times the same difference it is
    paired with; that part is exact.  The cellwise residual
    theta' (S' - S)/dt + (A theta' - load) equals the dissipation
    mu * |chi_t|^2 plus O(dt) remainders, so it is required to clear a small
    negative tolerance rather than zero.  The global total must not decrease
    when the boundary is insulated.
    """
    _dense(traj, "entropy production")
    times = traj.times
    totals = np.array([
        _total_entropy(grid, model, potential, traj.thetas[n], traj.chis[n])
        for n in range(len(times))])
    tol = 1e-8 * max(1.0, float(np.max(np.abs(totals))))

    cell_min = math.inf
    face_max = -math.inf
    for n, op in _replay_ops(traj, grid, model, boundary):
        dt = times[n + 1] - times[n]
        th_new, ch_new = traj.thetas[n + 1], traj.chis[n + 1]
        th_old, ch_old = traj.thetas[n], traj.chis[n]
        s_new = model.s(th_new, ch_new) - model.sig(ch_new) \
            - potential.phi(ch_new)
        s_old = model.s(th_old, ch_old) - model.sig(ch_old) \
            - potential.phi(ch_old)
        divq = op.apply(th_new) - op.robin_load(times[n + 1])
        resid = th_new * (s_new - s_old) / dt + divq
        cell_min = min(cell_min, float(np.min(resid)))
        flux = op.face_fluxes(th_new)
        dth = th_new[grid.iface_owner] - th_new[grid.iface_neigh]
        face_max = max(face_max, float(np.max(-flux * dth, initial=-math.inf)))

    defects = np.diff(totals)
    global_min = float(np.min(defects)) if defects.size else 0.0
    monotone = bool(np.all(defects >= -tol)) if boundary.is_insulated else True
    return EntropyReport(cell_residual_min=cell_min,
                         global_defect_min=global_min,
                         face_pairing_max=face_max,
                         tolerance=tol, monotone=monotone)


# ---------------------------------------------------------------------------
# lower temperature envelope

@dataclass
class LowerBoundReport:
    envelope: np.ndarray        # w(t_n) at record times
    min_margin: float           # min of min_theta - (1 - 1e-6) w
    measured_R: float
    w0: float
    closed_form_max_diff: float | None   # RK4 vs exact solution if available

    @property
    def holds(self) -> bool:
        return self.min_margin >= 0.0


def measured_forcing_bound(traj, model, rho) -> float:
    """Largest |sigma' - s_chi^rho + xi| seen along the trajectory."""
    worst = 0.0
    for n in range(len(traj.times)):
        th, ch, xi = traj.thetas[n], traj.chis[n], traj.xis[n]
        vec = model.sig_p(ch) - truncated_entropy_gradient(model, th, ch, rho) \
            + xi
        worst = max(worst, float(np.max(np.linalg.norm(vec, axis=-1))))
    return worst


def _ode_rhs(model, rho, R):
    from .thermo import truncated_mobility

    def f(w):
        ct = model.c_tilde(np.asarray(w))
        mu = truncated_mobility(model, np.asarray(w), rho)
        return -(R * R) * w * w / (4.0 * mu * ct)

    return f


def lower_bound_ode(traj, model, config, forcing_bound=None, substep=None):
    """Integrate the comparison ODE c~(w) w' = -R^2 w^2 / (4 mu_rho(w)).

    The solution started at the initial minimum temperature must stay below
    the computed minimum at every record time, up to relative slack 1e-6.
    R defaults to the bound measured along the trajectory.  RK4 with substep
    at most a quarter of the step keeps the integrator error far below the
    slack; when the model knows a closed-form solution the report carries the
    comparison.
    """
    if not hasattr(model, "c_tilde"):
        raise ModeError("lower envelope needs the model's monotone heat "
                        "capacity minorant c_tilde")
    R = measured_forcing_bound(traj, model, config.rho) \
        if forcing_bound is None else float(forcing_bound)
    w0 = float(np.min(traj.thetas[0]))
    h_cap = (config.dt / 4.0) if substep is None else float(substep)
    f = _ode_rhs(model, config.rho, R)

    rec_t = traj.records["t"]
    env = np.empty(rec_t.size)
    w, t = w0, 0.0
    for i, tn in enumerate(rec_t):
        span = tn - t
        m = max(1, int(math.ceil(span / h_cap - 1e-12)))
        h = span / m
        for _ in range(m):
            k1 = f(w)
            k2 = f(w + 0.5 * h * k1)
            k3 = f(w + 0.5 * h * k2)
            k4 = f(w + h * k3)
            w = w + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = tn
        env[i] = w

    margins = traj.records["min_theta"] - (1.0 - 1e-6) * env
    closed = None
    exact = getattr(model, "lower_bound_closed_form", None)
    if exact is not None:
        ref = exact(w0, R, rec_t, config.rho)
        if ref is not None:
            closed = float(np.max(np.abs(env - ref)))
    return LowerBoundReport(envelope=env,
                            min_margin=float(np.min(margins)),
                            measured_R=R, w0=w0,
                            closed_form_max_diff=closed)


# ---------------------------------------------------------------------------
# upper temperature envelope (regularized scheme only)

@dataclass
class UpperEnvelopeReport:
    envelope: np.ndarray
    min_margin: float
    measured_M: float
    v0: float

    @property
    def holds(self) -> bool:
        return self.min_margin >= 0.0


def upper_envelope(traj, grid, model, potential, coupling, boundary, config):
    """Affine barrier v(t) = v0 + n M t for the regularized scheme.

    The (1/n) theta_t term alone caps the growth rate by n times the largest
    phase source magnitude M, so the computed maximum must stay below the
    barrier.  Meaningless without regularization (n_reg = 0 raises).
    """
    if config.n_reg == 0:
        raise ModeError("upper envelope requires the regularized scheme "
                        "(n_reg >= 1)")
    _dense(traj, "upper envelope")
    times = traj.times
    M = 0.0
    for n in range(len(times) - 1):
        dt = times[n + 1] - times[n]
        ch_old, ch_new = traj.chis[n], traj.chis[n + 1]
        dchi = (ch_new - ch_old) / dt
        b_old = coupling.b_field(ch_old)
        src = np.einsum("md,md->m", model.lam_p(ch_new) + b_old, dchi) \
            + model.beta * (potential.phi(ch_new) - potential.phi(ch_old)) / dt
        M = max(M, float(np.max(np.abs(src))))
    v0 = float(np.max(traj.thetas[0]))
    if not boundary.is_insulated:
        v0 = max(v0, float(max(np.max(boundary.theta_gamma_at(t))
                               for t in times)))
    env = v0 + config.n_reg * M * traj.records["t"]
    margins = (1.0 + 1e-6) * env - traj.records["max_theta"]
    return UpperEnvelopeReport(envelope=env,
                               min_margin=float(np.min(margins)),
                               measured_M=M, v0=v0)


# ---------------------------------------------------------------------------
# truncation calibration

@dataclass
class CalibrationResult:
    rho_star: float
    c_star: float
    dim: int
    evaluations: int

    @property
    def exponent(self) -> int:
        return 4 + 2 * self.dim


def moser_exponent(dim: int) -> int:
    return 4 + 2 * dim


def fit_moser_constant(traj, config, dim: int) -> float:
    """Smallest C* making sup theta <= C* (1 + log rho)^(4+2N) along the run."""
    sup = float(np.max(traj.records["max_theta"]))
    sup = max(sup, float(np.max(traj.thetas[0])))
    return sup / (1.0 + math.log(config.rho)) ** moser_exponent(dim)


def calibrate_rho(c_star: float, dim: int, grow: float = 1.005,
                  rel_width: float = 1e-3):
    """Smallest rho >= 1 with C* (1 + log rho)^(4+2N) <= rho / 2.

    Geometric scan to bracket the crossing, then geometric bisection to three
    significant digits.  The left side grows polylogarithmically and the
    right side linearly, so past the crossing the inequality holds for every
    larger rho; self-consistency of a truncation level is therefore a single
    substitution.
    """
    if c_star <= 0:
        raise ConfigError("Moser constant must be positive")
    p = moser_exponent(dim)

    def ok(rho):
        return c_star * (1.0 + math.log(rho)) ** p <= rho / 2.0

    evals = 0
    if ok(1.0):
        return CalibrationResult(1.0, c_star, dim, 1)
    lo, hi = 1.0, 1.0
    while True:
        hi *= grow
        evals += 1
        if ok(hi):
            break
        lo = hi
        if hi > 1e305:
            raise ConfigError("no self-consistent truncation level below "
                              "overflow; the fitted constant is implausible")
    while hi / lo > 1.0 + rel_width:
        mid = math.sqrt(lo * hi)
        evals += 1
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return CalibrationResult(hi, c_star, dim, evals)


@dataclass
class TruncationReport:
    max_theta_diff: float
    max_chi_diff: float
    first_divergent_step: int | None

    @property
    def inactive(self) -> bool:
        return self.first_divergent_step is None


def truncation_inactivity(components: RunComponents, traj, factor: float = 2.0,
                          tol: float = 1e-12):
    """Rerun with the truncation level scaled up and compare trajectories.

    When the computed temperatures never reach the level, the truncation
    never engages and both runs traverse identical arithmetic; any excess of
    the difference over tol localizes the first step where the level bit.
    """
    comp2 = replace(components, config=replace(components.config,
                                               rho=components.config.rho * factor))
    other = run(comp2)
    if other.thetas.shape != traj.thetas.shape:
        raise ConfigError("comparison run produced a different snapshot "
                          "layout; store both at cadence 1")
    dth = np.abs(other.thetas - traj.thetas)
    dch = np.abs(other.chis - traj.chis)
    step_max = np.maximum(dth.max(axis=1), dch.max(axis=(1, 2)))
    bad = np.nonzero(step_max > tol)[0]
    return TruncationReport(max_theta_diff=float(dth.max()),
                            max_chi_diff=float(dch.max()),
                            first_divergent_step=int(bad[0]) if bad.size else None)


# ---------------------------------------------------------------------------
# continuous dependence on the data

@dataclass
class DependenceReport:
    lhs: float       # integral of ||theta diff||^2 + sup ||chi diff||^2
    rhs: float       # same functional of the initial perturbation
    delta: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else math.inf
        return self.lhs / self.rhs


def perturbation_profiles(grid, d):
    """Fixed unit-amplitude profiles used by the dependence studies."""
    x = grid.centers[:, 0] / grid.lengths[0]
    eta_theta = np.cos(math.pi * x)
    eta_chi = np.tile((x - 0.5)[:, None], (1, d))
    return eta_theta, eta_chi


def continuous_dependence(components: RunComponents, delta: float,
                          base_traj=None):
    """Stability functional of two runs differing only in the initial data.

    Requires the uniqueness setting: conductivity depending on temperature
    alone and an insulated boundary.  Returns the discrete counterpart of
    (time-integrated temperature gap squared + largest phase gap squared)
    against the same measure of the initial perturbation.
    """
    model = components.model
    if not getattr(model, "k_independent_of_chi", False):
        raise ModeError("continuous dependence needs a conductivity "
                        "depending on temperature only")
    if not components.boundary.is_insulated:
        raise ModeError("continuous dependence needs an insulated boundary")
    if components.config.cadence != 1:
        raise ConfigError("dependence run must store every step")

    traj1 = run(components) if base_traj is None else base_traj
    eta_th, eta_ch = perturbation_profiles(components.grid, model.d)
    th0 = components.theta0 + delta * eta_th
    if np.any(th0 <= 0):
        raise ConfigError("perturbation too large: initial temperature "
                          "would lose positivity")
    ch0 = components.potential.prox(components.chi0 + delta * eta_ch,
                                    np.ones(components.grid.n_cells))
    comp2 = replace(components, theta0=th0, chi0=ch0)
    traj2 = run(comp2)

    w = components.grid.volumes
    dth0 = th0 - components.theta0
    dch0 = ch0 - components.chi0
    rhs = float(np.dot(w, dth0 ** 2)) \
        + float(np.dot(w, np.sum(dch0 ** 2, axis=-1)))

    times = traj1.times
    th_sq = np.array([float(np.dot(w, (traj1.thetas[n] - traj2.thetas[n]) ** 2))
                      for n in range(len(times))])
    ch_sq = np.array([float(np.dot(w, np.sum((traj1.chis[n] - traj2.chis[n]) ** 2,
                                             axis=-1)))
                      for n in range(len(times))])
    dts = np.diff(times)
    lhs = float(np.dot(dts, th_sq[:-1])) + float(np.max(ch_sq))
    return DependenceReport(lhs=lhs, rhs=rhs, delta=delta)


# ---------------------------------------------------------------------------
# dissipative-operator identities

@dataclass
class GenericReport:
    identity_max: float      # relative defect of m12^2 = m11 m22
    degeneracy_max: float    # |M . (c_V, D_chi E)| over samples, relative
    conduction_null: float   # |A 1| and weighted column sums, gamma = 0
    n_samples: int

    def ok(self, tol=1e-13) -> bool:
        return (self.identity_max <= tol and self.degeneracy_max <= tol
                and self.conduction_null <= tol)


def generic_check(model, grid, boundary, coupling=None, n_samples=100,
                  seed=20260819):
    """Algebraic structure of the dissipative operator on random states.

    The 2x2 phase-conduction block must be rank one and positive
    semidefinite (m12^2 = m11 m22 exactly) and must annihilate the energy
    gradient (c_V, D_chi E).  The conduction part must annihilate constants
    and conserve the volume-weighted total when the boundary is insulated.
    Scalar order parameter only; Robin exchange breaks the conservation row,
    so gamma > 0 is refused rather than fudged.
    """
    if model.d != 1:
        raise ModeError("operator identities are formulated for a scalar "
                        "order parameter")
    if not boundary.is_insulated:
        raise ModeError("operator identities need an insulated boundary")

    rng = np.random.default_rng(seed)
    dom = model.chi_domain_sample(64)
    ident = 0.0
    degen = 0.0
    b_cap = coupling.c_b if coupling is not None else 1.0
    for _ in range(n_samples):
        th = float(rng.uniform(0.05, 8.0))
        ch = dom[rng.integers(len(dom))]
        mu = float(model.mu(np.array(th)))
        cv = float(model.cv(np.array([th]), ch[None, :])[0])
        b = float(rng.uniform(-b_cap, b_cap))
        dE = float(model.e_chi(np.array([th]), ch[None, :])[0, 0]
                   + model.lam_p(ch[None, :])[0, 0] + b)
        m11, m12, m22 = generic_coefficients(th, mu, cv, dE)
        scale = max(m11 * m22, m12 * m12, 1e-300)
        ident = max(ident, abs(m12 * m12 - m11 * m22) / scale)
        gscale = max(abs(m11 * cv), abs(m12 * dE), abs(m22 * dE), 1e-300)
        degen = max(degen,
                    abs(m11 * cv + m12 * dE) / gscale,
                    abs(m12 * cv + m22 * dE) / gscale)

    # conduction block: constants are annihilated, and the volume-weighted
    # total is conserved.  Both are checked in the face-flux representation,
    # where interior contributions cancel pairwise by construction; the
    # assembled matrix reproduces the same operator up to per-row scaling.
    th_field = rng.uniform(0.5, 2.0, grid.n_cells)
    ch_field = np.tile(dom[0], (grid.n_cells, 1))
    k_cell = model.k(th_field, ch_field)
    op = assemble_diffusion(grid, harmonic_face_conductivity(grid, k_cell),
                            boundary, k_bounds=(model.k0, model.k1))
    ones = np.ones(grid.n_cells)
    null_flux = float(np.max(np.abs(op.face_fluxes(ones)), initial=0.0))
    diag = float(np.max(np.abs(op.matrix.diagonal())))
    rowsum = float(np.max(np.abs(op.matrix @ ones))) / max(diag, 1e-300)
    colsum = abs(op.volume_weighted_divergence(th_field))
    cond = max(null_flux, rowsum, colsum)
    return GenericReport(identity_max=ident, degeneracy_max=degen,
                         conduction_null=cond, n_samples=n_samples)


# ---------------------------------------------------------------------------
# Kirchhoff-transform regularity functional

@dataclass
class RegularityReport:
    rate_l2_sq: float          # discrete L2 norm squared of theta_t
    kirchhoff_h1_max: float    # largest gradient energy of K(theta)


def regularity_indicator(traj, grid, model, config):
    """Quantities whose boundedness the refined estimates assert.

    Sum over steps of dt ||(theta' - theta)/dt||^2 plus the largest discrete
    gradient energy of the Kirchhoff transform K(theta).  Uniqueness setting
    only, since K needs a chi-free conductivity.
    """
    from .stepper import kirchhoff

    _dense(traj, "regularity indicator")
    w = grid.volumes
    times = traj.times
    rate = 0.0
    h1 = 0.0
    geom = grid.iface_area / grid.iface_dist
    for n in range(len(times) - 1):
        dt = times[n + 1] - times[n]
        dth = (traj.thetas[n + 1] - traj.thetas[n]) / dt
        rate += dt * float(np.dot(w, dth ** 2))
        kv = kirchhoff(model, traj.thetas[n + 1])
        dk = kv[grid.iface_owner] - kv[grid.iface_neigh]
        h1 = max(h1, float(np.sum(geom * dk ** 2)))
    return RegularityReport(rate_l2_sq=rate, kirchhoff_h1_max=h1)


# ---------------------------------------------------------------------------
# check orchestration for the command line

@dataclass
class CheckOutcome:
    name: str
    passed: bool
    detail: str


DEFAULT_CHECKS = ("energy", "entropy", "selection", "pairing", "lower")
OPTIONAL_CHECKS = ("truncation", "generic", "envelope", "regularity")
KNOWN_CHECKS = DEFAULT_CHECKS + OPTIONAL_CHECKS


def run_checks(components: RunComponents, traj, names=DEFAULT_CHECKS):
    """Evaluate named invariants against a finished run."""
    grid, model = components.grid, components.model
    potential, coupling = components.potential, components.coupling
    boundary, config = components.boundary, components.config
    out = []
    for name in names:
        if name == "energy":
            rep = energy_budget(traj, grid, model, potential, coupling,
                                boundary, config)
            if boundary.is_insulated:
                ok = rep.relative_drift <= 1e-6
                detail = f"relative drift {rep.relative_drift:.3e}"
            else:
                worst = float(np.max(np.abs(rep.step_residuals)))
                ok = worst <= 1e-6 * rep.scale
                detail = f"max step residual {worst:.3e}"
            if rep.coarse:
                detail += " (coarse snapshots)"
        elif name == "entropy":
            rep = entropy_production(traj, grid, model, potential, coupling,
                                     boundary, config)
            ok = rep.monotone and rep.local_ok \
                and rep.face_pairing_max <= 0.0
            detail = (f"global defect min {rep.global_defect_min:.3e}, "
                      f"cell residual min {rep.cell_residual_min:.3e}, "
                      f"face pairing max {rep.face_pairing_max:.3e}")
        elif name == "selection":
            worst = float(np.min(traj.records["selection_margin"]))
            ok = worst >= 0.0
            detail = f"min margin {worst:.3e}"
        elif name == "pairing":
            worst = float(np.max(np.abs(traj.records["pairing_residual"])))
            ok = worst <= 1e-11
            detail = f"max residual {worst:.3e}"
        elif name == "lower":
            rep = lower_bound_ode(traj, model, config)
            ok = rep.holds
            detail = (f"min margin {rep.min_margin:.3e} at measured "
                      f"R {rep.measured_R:.4f}")
        elif name == "truncation":
            rep = truncation_inactivity(components, traj)
            ok = rep.inactive
            detail = (f"max diffs {rep.max_theta_diff:.3e}/"
                      f"{rep.max_chi_diff:.3e}")
        elif name == "generic":
            rep = generic_check(model, grid, boundary, coupling)
            ok = rep.ok()
            detail = (f"identity {rep.identity_max:.3e}, degeneracy "
                      f"{rep.degeneracy_max:.3e}, conduction "
                      f"{rep.conduction_null:.3e}")
        elif name == "envelope":
            rep = upper_envelope(traj, grid, model, potential, coupling,
                                 boundary, config)
            ok = rep.holds
            detail = f"min margin {rep.min_margin:.3e}"
        elif name == "regularity":
            rep = regularity_indicator(traj, grid, model, config)
            ok = math.isfinite(rep.rate_l2_sq) \
                and math.isfinite(rep.kirchhoff_h1_max)
            detail = (f"rate L2^2 {rep.rate_l2_sq:.3e}, K gradient max "
                      f"{rep.kirchhoff_h1_max:.3e}")
        else:
            raise ConfigError(f"unknown check '{name}'; known: "
                              f"{', '.join(KNOWN_CHECKS)}")
        out.append(CheckOutcome(name=name, passed=bool(ok), detail=detail))
    return out
