"""Post-hoc verification: budgets, envelopes, calibration, invariants."""

import dataclasses
import math

import numpy as np
import pytest

from nlpf.diagnostics import (DEFAULT_CHECKS, calibrate_rho,
                              continuous_dependence, energy_budget,
                              entropy_production, fit_moser_constant,
                              generic_check, lower_bound_ode,
                              measured_forcing_bound, moser_exponent,
                              regularity_indicator, run_checks,
                              truncation_inactivity, upper_envelope)
from nlpf.errors import ConfigError, ModeError
from nlpf.geometry import BoundaryData, build_grid
from nlpf.longrange import ConstantKernel, QuadraticG, build_coupling
from nlpf.stepper import RunComponents, SolverConfig, Trajectory, run
from nlpf.thermo import build_model

from conftest import two_phase_components


def unpack(comp):
    return (comp.grid, comp.model, comp.potential, comp.coupling,
            comp.boundary, comp.config)


def equilibrium_components():
    """Uniform state matched to the reservoir: nothing should move."""
    grid = build_grid(1, [1.0], [8])
    model = build_model("decoupled_power")
    from nlpf.convex import IndicatorBox

    potential = IndicatorBox(np.zeros(1), np.ones(1))
    coupling = build_coupling(grid, ConstantKernel(0.0), QuadraticG(), 1.0)
    boundary = BoundaryData(grid, 1.0, 1.0)
    theta0 = np.ones(8)
    chi0 = np.full((8, 1), 0.5)
    config = SolverConfig(dt=0.01, horizon=0.1, rho=100.0)
    return RunComponents(grid, model, potential, coupling, boundary,
                         theta0, chi0, config)


def test_energy_budget_insulated(short_run):
    comp, traj = short_run
    g, m, p, c, b, cfg = unpack(comp)
    rep = energy_budget(traj, g, m, p, c, b, cfg)
    assert rep.relative_drift <= 1e-6
    assert not rep.coarse


def test_energy_budget_robin_equilibrium():
    comp = equilibrium_components()
    traj = run(comp)
    rep = energy_budget(traj, *unpack(comp))
    # nothing moves, so each step budget closes to machine precision
    assert np.max(np.abs(rep.step_residuals)) <= 1e-12


def test_entropy_production(short_run):
    comp, traj = short_run
    rep = entropy_production(traj, *unpack(comp))
    assert rep.monotone
    assert rep.local_ok
    assert rep.face_pairing_max <= 0.0


def test_entropy_equilibrium_is_exact():
    comp = equilibrium_components()
    traj = run(comp)
    rep = entropy_production(traj, *unpack(comp))
    assert rep.global_defect_min >= -1e-14
    assert rep.cell_residual_min >= -1e-14


def test_lower_bound_holds(short_run):
    comp, traj = short_run
    rep = lower_bound_ode(traj, comp.model, comp.config)
    assert rep.holds
    assert rep.min_margin >= 0.0
    assert rep.measured_R > 0.0
    assert rep.closed_form_max_diff <= 1e-8


def test_lower_bound_synthetic_decay():
    """Forcing bound R = 2, mu0 = 1, w0 = 1: the envelope at t = 1 must hit
    exp(-1) whatever path the integrator takes."""
    comp = two_phase_components(cells=4, horizon=1.0, dt=0.05)
    traj = run(comp)
    rep = lower_bound_ode(traj, comp.model, comp.config, forcing_bound=2.0)
    assert rep.w0 == pytest.approx(float(np.min(traj.thetas[0])))
    idx = np.argmin(np.abs(traj.records["t"] - 1.0))
    assert traj.records["t"][idx] == pytest.approx(1.0, abs=1e-12)
    expected = rep.w0 * math.exp(-1.0)
    assert rep.envelope[idx] == pytest.approx(expected, rel=1e-8)


def test_measured_forcing_bound_positive(short_run):
    comp, traj = short_run
    R = measured_forcing_bound(traj, comp.model, comp.config.rho)
    assert 0.0 < R < 10.0


def test_upper_envelope_needs_regularisation(short_run):
    comp, traj = short_run
    with pytest.raises(ModeError):
        upper_envelope(traj, *unpack(comp))


def test_upper_envelope_regularised():
    comp = two_phase_components(cells=8, horizon=0.2, dt=0.01, n_reg=4)
    traj = run(comp)
    rep = upper_envelope(traj, *unpack(comp))
    assert rep.holds
    assert rep.v0 >= float(np.max(traj.thetas[0]))
    assert rep.measured_M >= 0.0


def test_moser_exponent():
    assert moser_exponent(1) == 6
    assert moser_exponent(2) == 8


def test_calibration_oracle():
    res = calibrate_rho(1.0, 1)
    assert 1e6 <= res.rho_star <= 1e9
    assert res.rho_star == pytest.approx(1.107854e8, rel=1e-3)

    def ok(rho):
        return 1.0 * (1.0 + math.log(rho)) ** 6 <= rho / 2.0

    assert ok(res.rho_star)
    assert not ok(res.rho_star / 1.01)


def test_calibration_monotone_in_constant():
    r1 = calibrate_rho(1.0, 1).rho_star
    r2 = calibrate_rho(2.0, 1).rho_star
    assert r2 > r1
    with pytest.raises(ConfigError):
        calibrate_rho(-1.0, 1)


def test_fit_moser_constant(short_run):
    comp, traj = short_run
    c = fit_moser_constant(traj, comp.config, comp.grid.dim)
    sup = max(float(np.max(traj.records["max_theta"])),
              float(np.max(traj.thetas[0])))
    assert c == pytest.approx(
        sup / (1.0 + math.log(comp.config.rho)) ** 6)


def test_truncation_inactive(short_run):
    comp, traj = short_run
    rep = truncation_inactivity(comp, traj)
    assert rep.inactive
    assert rep.max_theta_diff == 0.0
    assert rep.first_divergent_step is None


def test_truncation_detects_active_cap():
    comp = two_phase_components(cells=8, horizon=0.1, dt=0.01, rho=1.1)
    traj = run(comp)
    rep = truncation_inactivity(comp, traj)
    assert not rep.inactive
    assert rep.first_divergent_step is not None


def test_continuous_dependence_requires_uniqueness(short_run):
    comp, traj = short_run
    with pytest.raises(ModeError):
        continuous_dependence(comp, 1e-3, traj)


def test_continuous_dependence_ratio():
    comp = two_phase_components(cells=8, horizon=0.1, dt=0.01,
                                uniqueness=True)
    base = run(comp)
    rep = continuous_dependence(comp, 1e-3, base)
    assert rep.lhs > 0.0 and rep.rhs > 0.0
    rep2 = continuous_dependence(comp, 5e-4, base)
    assert rep.ratio == pytest.approx(rep2.ratio, rel=0.5)


def test_generic_identities():
    grid = build_grid(1, [1.0], [8])
    model = build_model("two_phase_power", alpha=1)
    boundary = BoundaryData(grid, 0.0, 1.0)
    rep = generic_check(model, grid, boundary)
    assert rep.ok()
    assert rep.identity_max <= 1e-13
    assert rep.degeneracy_max <= 1e-13
    assert rep.conduction_null <= 1e-13


def test_generic_check_demands_insulation():
    grid = build_grid(1, [1.0], [8])
    model = build_model("two_phase_power", alpha=1)
    with pytest.raises(ModeError):
        generic_check(model, grid, BoundaryData(grid, 1.0, 1.0))
    model2 = build_model("multi_phase_power", d=2)
    with pytest.raises(ModeError):
        generic_check(model2, grid, BoundaryData(grid, 0.0, 1.0))


def test_regularity_indicator_modes(short_run):
    comp, traj = short_run
    with pytest.raises(ModeError):
        regularity_indicator(traj, comp.grid, comp.model, comp.config)
    comp_u = two_phase_components(cells=8, horizon=0.1, dt=0.01,
                                  uniqueness=True)
    traj_u = run(comp_u)
    rep = regularity_indicator(traj_u, comp_u.grid, comp_u.model,
                               comp_u.config)
    assert math.isfinite(rep.rate_l2_sq)
    assert math.isfinite(rep.kirchhoff_h1_max)
    assert rep.rate_l2_sq >= 0.0


def test_run_checks_default_pass(short_run):
    comp, traj = short_run
    outcomes = run_checks(comp, traj)
    assert [o.name for o in outcomes] == list(DEFAULT_CHECKS)
    assert all(o.passed for o in outcomes)


def test_run_checks_unknown_name(short_run):
    comp, traj = short_run
    with pytest.raises(ConfigError):
        run_checks(comp, traj, ["energy", "nope"])
