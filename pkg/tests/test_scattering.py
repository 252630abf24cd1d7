"""Tests for closest approach, collision timing, apse line and soft scattering."""

import numpy as np
import pytest


@pytest.fixture
def oblique_run(oblique, hardened):
    """Oblique datum at ε = 1e-3 with its integrated trajectory and window."""
    from soft2hard.soft_dynamics import SoftProblem, detect_contact_window, integrate

    pot = hardened(1e-3)
    tr = integrate(SoftProblem(pot, oblique))
    return pot, tr, detect_contact_window(tr)


@pytest.mark.unit
def test_rho_star_head_on_closed_form(head_on, hardened, standard_potential):
    from soft2hard.geometry import collision_invariants
    from soft2hard.scattering import rho_star

    pot = hardened(1e-3)
    rho = rho_star(collision_invariants(head_on), pot)
    assert standard_potential.eval(rho) == pytest.approx(0.5 * 1e-3 / 2.0, rel=1e-10)


@pytest.mark.unit
def test_rho_star_is_turning_point(oblique, hardened):
    from soft2hard.geometry import collision_invariants
    from soft2hard.scattering import rho_star

    pot = hardened(1e-3)
    inv = collision_invariants(oblique)
    rho = rho_star(inv, pot)
    g = 2 * inv.E0 - inv.A0 / rho ** 2 - 4 * pot.eval(rho)
    assert 0.5 < rho < 1.0
    assert abs(g) <= 1e-10


@pytest.mark.unit
def test_rho_star_needs_motion(hardened):
    from soft2hard.exceptions import BracketError
    from soft2hard.models import CollisionInvariants
    from soft2hard.scattering import rho_star

    with pytest.raises(BracketError):
        rho_star(CollisionInvariants(0.0, 0.0), hardened(1e-2))


@pytest.mark.unit
def test_tau_star_matches_integrated_window(oblique, oblique_run):
    from soft2hard.geometry import collision_invariants
    from soft2hard.scattering import tau_star

    pot, _, window = oblique_run
    tau = tau_star(collision_invariants(oblique), pot)
    assert window.tau_minus == 0.0
    assert 0.5 * window.duration == pytest.approx(tau, rel=1e-5)


@pytest.mark.unit
@pytest.mark.parametrize("k", range(8, 21))
def test_tau_star_matches_half_window_across_sweep(oblique, hardened, k):
    from soft2hard.geometry import collision_invariants
    from soft2hard.scattering import tau_star
    from soft2hard.soft_dynamics import SoftProblem, detect_contact_window, integrate

    pot = hardened(2.0 ** -k)
    window = detect_contact_window(integrate(SoftProblem(pot, oblique)))
    tau = tau_star(collision_invariants(oblique), pot)
    assert 0.5 * window.duration == pytest.approx(tau, rel=1e-8)


@pytest.mark.unit
def test_soft_scatter_matches_integrated_exit(oblique, oblique_run):
    from soft2hard.scattering import soft_scatter

    pot, tr, window = oblique_run
    result = soft_scatter(oblique, pot)
    v_exit = tr.velocities(np.array([window.tau_plus]))[0]
    np.testing.assert_allclose(result.post.V, v_exit, atol=1e-5)
    assert result.exit_time == pytest.approx(window.duration, rel=1e-5)
    x_exit = tr(np.array([window.tau_plus]))[0, :6]
    np.testing.assert_allclose(result.post.X, x_exit, atol=1e-5)


@pytest.mark.unit
def test_apse_line_matches_closest_approach(oblique, oblique_run):
    from soft2hard.scattering import collision_analysis

    pot, tr, window = oblique_run
    analysis = collision_analysis(oblique, pot)
    assert analysis.branch == "generic"
    y_mid = tr.relative_position(0.5 * (window.tau_minus + window.tau_plus))
    np.testing.assert_allclose(y_mid / np.linalg.norm(y_mid), analysis.apse, atol=1e-6)
    assert np.linalg.norm(y_mid) == pytest.approx(analysis.rho_star, rel=1e-8)


@pytest.mark.unit
@pytest.mark.parametrize("eps", [1e-3, 1e-5])
def test_apse_symmetry(oblique, hardened, eps):
    from soft2hard.scattering import apse_symmetry_residual, collision_analysis
    from soft2hard.soft_dynamics import SoftProblem, integrate

    pot = hardened(eps)
    tr = integrate(SoftProblem(pot, oblique))
    analysis = collision_analysis(oblique, pot)
    assert apse_symmetry_residual(tr, analysis.apse) < 1e-7


@pytest.mark.unit
def test_head_on_branch(head_on, hardened):
    from soft2hard.scattering import collision_analysis, deflection_angle, soft_scatter

    pot = hardened(1e-2)
    analysis = collision_analysis(head_on, pot)
    assert analysis.branch == "head_on"
    np.testing.assert_allclose(analysis.apse, [-1.0, 0.0, 0.0])
    result = soft_scatter(head_on, pot, analysis=analysis)
    np.testing.assert_allclose(result.post.V, [0, 0, 0, 1, 0, 0], atol=1e-15)
    with pytest.raises(ValueError):
        deflection_angle(head_on, pot)


@pytest.mark.unit
def test_grazing_branch(grazing, hardened):
    from soft2hard.scattering import collision_analysis, soft_scatter

    pot = hardened(1e-2)
    analysis = collision_analysis(grazing, pot)
    assert analysis.branch == "grazing"
    assert analysis.tau_star == 0.0
    result = soft_scatter(grazing, pot, analysis=analysis)
    np.testing.assert_allclose(result.post.V, grazing.V, atol=1e-15)
    assert result.exit_time == 0.0


@pytest.mark.unit
def test_post_collisional_datum_rejected(hardened):
    from soft2hard.models import PhasePoint
    from soft2hard.scattering import collision_analysis

    receding = PhasePoint([0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        collision_analysis(receding, hardened(1e-2))


@pytest.mark.unit
def test_polar_frame(oblique):
    from soft2hard.scattering import polar_frame

    y0 = oblique.x - oblique.xbar
    w0 = oblique.v - oblique.vbar
    frame = polar_frame(y0, w0)
    np.testing.assert_allclose(frame.R0 @ frame.R0.T, np.eye(3), atol=1e-14)
    assert np.linalg.det(frame.R0) == pytest.approx(1.0)
    L = np.cross(y0, w0)
    np.testing.assert_allclose(frame.R0[:, 2], L / np.linalg.norm(L), atol=1e-14)
    np.testing.assert_allclose(frame.embed(frame.theta0), y0, atol=1e-14)


@pytest.mark.unit
def test_polar_frame_generic_rotation():
    from soft2hard.scattering import polar_frame

    y0 = np.array([0.2, -0.6, 0.3])
    w0 = np.array([0.5, 0.4, -0.1])
    frame = polar_frame(y0, w0)
    L = np.cross(y0, w0)
    np.testing.assert_allclose(frame.R0[:, 2], L / np.linalg.norm(L), atol=1e-14)
    np.testing.assert_allclose(frame.embed(frame.theta0), y0 / np.linalg.norm(y0), atol=1e-14)


@pytest.mark.unit
def test_closest_approach_envelope(oblique, hardened, standard_potential):
    from soft2hard.geometry import collision_invariants
    from soft2hard.potentials import validate_hypotheses
    from soft2hard.scattering import closest_approach_envelope, rho_star

    constants = validate_hypotheses(standard_potential).constants
    inv = collision_invariants(oblique)
    for eps in (1e-2, 1e-4, 1e-6):
        pot = hardened(eps)
        lower, upper = closest_approach_envelope(inv, pot, constants)
        assert lower <= rho_star(inv, pot) <= upper


@pytest.mark.unit
def test_sweep_rows_in_grid_order(oblique, standard_potential):
    from soft2hard.scattering import hardening_sweep

    eps = [2.0 ** -k for k in range(6, 10)]
    table = hardening_sweep(oblique, standard_potential, eps)
    assert [row.eps for row in table.rows] == eps
    assert all(row.ok for row in table.rows)
    assert np.all(np.diff(table.column("tau_star")) < 0)
    assert np.all(np.diff(table.column("scatter_err")) < 0)
    assert np.isfinite(table.slope)


@pytest.mark.unit
def test_sweep_is_thread_independent(oblique, standard_potential):
    from soft2hard.scattering import hardening_sweep

    eps = [2.0 ** -k for k in range(6, 12)]
    serial = hardening_sweep(oblique, standard_potential, eps, threads=1)
    parallel = hardening_sweep(oblique, standard_potential, eps, threads=4)
    for name in ("rho_star", "tau_star", "theta_star", "scatter_err", "apse_err"):
        assert np.array_equal(serial.column(name), parallel.column(name))
    assert serial.slope == parallel.slope


@pytest.mark.unit
def test_sweep_rejects_unordered_grid(oblique, standard_potential):
    from soft2hard.exceptions import ConfigError
    from soft2hard.scattering import hardening_sweep

    with pytest.raises(ConfigError):
        hardening_sweep(oblique, standard_potential, [1e-3, 1e-2])
    with pytest.raises(ConfigError):
        hardening_sweep(oblique, standard_potential, [1.5, 1e-2])


@pytest.mark.unit
def test_sweep_annotates_failed_rows(standard_potential):
    from soft2hard.models import PhasePoint
    from soft2hard.scattering import hardening_sweep

    receding = PhasePoint([0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 0, 0])
    table = hardening_sweep(receding, standard_potential, [1e-2, 1e-3])
    assert all(not row.ok for row in table.rows)
    assert "ValueError" in table.rows[0].error
    assert table.summary()["failed_rows"] == 2


@pytest.mark.slow
@pytest.mark.parametrize("beta", [3.0, 4.0])
def test_collision_duration_scaling(oblique, beta):
    """τ* ~ ε^{1/β} along ε = 2^{-k}, k = 8..20."""
    from soft2hard.potentials import standard_family
    from soft2hard.scattering import hardening_sweep

    table = hardening_sweep(oblique, standard_family(1.0, beta), [2.0 ** -k for k in range(8, 21)])
    assert table.slope == pytest.approx(1.0 / beta, rel=0.10)


@pytest.mark.slow
def test_scattering_converges_to_hard_limit(oblique, standard_potential):
    from soft2hard.bv_analysis import fit_loglog
    from soft2hard.scattering import hardening_sweep

    eps = [2.0 ** -k for k in range(8, 21)]
    table = hardening_sweep(oblique, standard_potential, eps)
    err = table.column("scatter_err")
    assert np.all(np.diff(err) < 0)
    assert err[-1] < 2e-2
    assert fit_loglog(eps[2:], err[2:]).slope == pytest.approx(1.0 / 3.0, rel=0.25)
