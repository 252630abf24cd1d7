"""Tests for the soft two-body integrator and contact-window detection."""

import numpy as np
import pytest


@pytest.mark.unit
@pytest.mark.parametrize("eps", [1e-1, 1e-3, 1e-6])
@pytest.mark.parametrize("preset", ["head_on", "oblique"])
def test_energy_and_momentum_conserved(presets, hardened, eps, preset):
    from soft2hard.soft_dynamics import SoftProblem, integrate

    z0 = presets[preset]
    tr = integrate(SoftProblem(hardened(eps), z0))
    assert tr.energy_drift <= 1e-8

    momentum = tr.states[:, 6:9] + tr.states[:, 9:12]
    np.testing.assert_allclose(momentum, np.tile(z0.v + z0.vbar, (len(tr.times), 1)), atol=1e-11)

    y = tr.states[:, 0:3] - tr.states[:, 3:6]
    w = tr.states[:, 6:9] - tr.states[:, 9:12]
    L = np.cross(y, w)
    L0 = np.cross(z0.x - z0.xbar, z0.v - z0.vbar)
    assert np.max(np.linalg.norm(L - L0, axis=1)) <= 1e-10


@pytest.mark.unit
def test_head_on_soft_collision_exchanges_velocities(head_on, hardened):
    from soft2hard.soft_dynamics import SoftProblem, detect_contact_window, integrate

    tr = integrate(SoftProblem(hardened(0.5), head_on))
    window = detect_contact_window(tr)
    assert window.tau_minus == 0.0
    assert window.tau_plus > 0.0
    np.testing.assert_allclose(tr.states[-1, 6:12], [0, 0, 0, 1, 0, 0], atol=1e-8)


@pytest.mark.unit
@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3, 1e-4, 1e-6])
def test_reduced_run_matches_full_run(oblique, hardened, eps):
    from soft2hard.soft_dynamics import SoftProblem, reduced_consistency_residual

    assert reduced_consistency_residual(SoftProblem(hardened(eps), oblique)) < 1e-9


@pytest.mark.unit
@pytest.mark.parametrize("eps", [1e-1, 1e-3, 1e-6])
def test_reduced_run_conserves_invariants(oblique, hardened, eps):
    from soft2hard.soft_dynamics import SoftProblem, integrate_reduced

    pot = hardened(eps)
    reduced = integrate_reduced(SoftProblem(pot, oblique))
    y, w = reduced.states[:, 0:3], reduced.states[:, 3:6]
    L0 = np.cross(oblique.x - oblique.xbar, oblique.v - oblique.vbar)
    assert np.max(np.linalg.norm(np.cross(y, w) - L0, axis=1)) <= 1e-10
    assert np.max(np.abs(y @ L0)) <= 1e-10
    with pytest.raises(ValueError):
        reduced.velocities(reduced.times)


@pytest.mark.unit
@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3, 1e-4, 1e-6])
def test_time_reversal(oblique, hardened, eps):
    from soft2hard.soft_dynamics import SoftProblem, time_reversal_residual

    assert time_reversal_residual(SoftProblem(hardened(eps), oblique)) <= 1e-8


@pytest.mark.unit
def test_out_of_support_is_free_flight(hardened):
    from soft2hard.models import PhasePoint
    from soft2hard.soft_dynamics import SoftProblem, detect_contact_window, integrate

    z0 = PhasePoint([0, 0, 0], [3, 0, 0], [-1, 0, 0], [0, 0, 0])
    tr = integrate(SoftProblem(hardened(1e-2), z0, (0.0, 2.0)))
    np.testing.assert_allclose(tr.final_state().x, [-2.0, 0.0, 0.0], atol=1e-10)
    np.testing.assert_array_equal(tr.states[:, 6:], np.tile(z0.V, (len(tr.times), 1)))
    assert detect_contact_window(tr).none_flag


@pytest.mark.unit
def test_window_too_short_raises(head_on, hardened):
    from soft2hard.exceptions import NumericalError
    from soft2hard.soft_dynamics import SoftProblem, detect_contact_window, integrate

    pot = hardened(0.5)
    tr = integrate(SoftProblem(pot, head_on, (0.0, 1e-3)))
    with pytest.raises(NumericalError, match="too short"):
        detect_contact_window(tr)


@pytest.mark.unit
def test_problem_validation(head_on, hardened):
    from soft2hard.exceptions import ConfigError
    from soft2hard.models import PhasePoint
    from soft2hard.soft_dynamics import SoftProblem, integrate

    pot = hardened(1e-2)
    with pytest.raises(ConfigError):
        SoftProblem(pot, head_on, (1.0, 0.0))
    with pytest.raises(ConfigError):
        SoftProblem(pot, head_on, rel_tol=1e-2)
    coincident = PhasePoint([0, 0, 0], [0, 0, 0], [1, 0, 0], [0, 0, 0])
    with pytest.raises(ConfigError):
        integrate(SoftProblem(pot, coincident, (0.0, 1.0)))


@pytest.mark.unit
def test_energy_drift_limit_enforced(head_on, hardened):
    from soft2hard.exceptions import EnergyDriftError
    from soft2hard.soft_dynamics import SoftProblem, integrate

    with pytest.raises(EnergyDriftError) as info:
        integrate(SoftProblem(hardened(1e-3), head_on, max_energy_drift=1e-300))
    assert info.value.drift > 1e-300


@pytest.mark.unit
def test_max_step_resolves_collision(hardened, head_on):
    from soft2hard.soft_dynamics import SoftProblem

    p = SoftProblem(hardened(1e-3), head_on)
    assert p.max_step == pytest.approx(0.01)
    assert p.t_span[0] == 0.0 and p.t_span[1] > 2.0


@pytest.mark.unit
def test_problem_on_interval_flies_back(oblique, hardened):
    from soft2hard.soft_dynamics import problem_on_interval

    p = problem_on_interval(hardened(1e-2), oblique, (-1.0, 1.0))
    assert p.t_span[0] == -1.0
    np.testing.assert_allclose(p.z0.x, -oblique.v)
    np.testing.assert_array_equal(p.z0.V, oblique.V)


@pytest.mark.unit
def test_soft_velocity_path_holds_end_values(head_on, hardened):
    from soft2hard.soft_dynamics import SoftProblem, integrate, soft_velocity_path

    tr = integrate(SoftProblem(hardened(0.1), head_on))
    path = soft_velocity_path(tr)
    np.testing.assert_array_equal(path(-5.0), tr.states[0, 6:12])
    np.testing.assert_array_equal(path(tr.t_span[1] + 5.0), tr.states[-1, 6:12])
    assert path(np.linspace(-1, 1, 7)).shape == (7, 6)


@pytest.mark.unit
def test_trajectory_table_columns(head_on, hardened):
    from soft2hard.soft_dynamics import SoftProblem, integrate, trajectory_table

    pot = hardened(0.5)
    tr = integrate(SoftProblem(pot, head_on))
    table = trajectory_table(tr, pot, np.linspace(*tr.t_span, 201))
    assert table.shape == (201, 15)
    H = table[:, 13]
    assert np.max(np.abs(H - H[0])) <= 1e-8 * H[0]
    assert table[:, 14].min() < 1.0


def _radial_trajectory(contact):
    """Reduced trajectory on [0, 4] with |y(t)|² − 1 = contact(t) along e₁."""
    from soft2hard.models import SampledTrajectory

    def dense(t):
        t = np.atleast_1d(t)
        out = np.zeros((6, t.size))
        out[0] = np.sqrt(contact(t) + 1.0)
        out[3] = 1.0
        return out

    times = np.arange(5.0)
    return SampledTrajectory(times, dense(times).T, dense, 0.0, 0.1, reduced=True)


@pytest.mark.unit
def test_entrance_sample_in_roundoff_band_is_detected():
    from soft2hard.soft_dynamics import detect_contact_window

    delta = 1e-12
    tr = _radial_trajectory(lambda t: 0.25 * (t - (1.0 - delta)) * (t - 3.0))
    assert -1e-12 <= float(np.sum(tr.relative_position(1.0) ** 2)) - 1.0 < 0.0

    window = detect_contact_window(tr)
    assert not window.none_flag
    assert window.tau_minus == pytest.approx(1.0, abs=1e-9)
    assert window.tau_plus == pytest.approx(3.0, abs=1e-12)


@pytest.mark.unit
def test_exit_sample_in_roundoff_band_is_detected():
    from soft2hard.soft_dynamics import detect_contact_window

    delta = 1e-12
    tr = _radial_trajectory(lambda t: 0.25 * (t - 1.0) * (t - (3.0 - delta)))
    assert 0.0 < float(np.sum(tr.relative_position(3.0) ** 2)) - 1.0 <= 1e-12

    window = detect_contact_window(tr)
    assert window.tau_minus == pytest.approx(1.0, abs=1e-12)
    assert window.tau_plus == pytest.approx(3.0, abs=1e-9)


@pytest.mark.unit
@pytest.mark.parametrize("eps", [1e-2, 2.0 ** -20])
def test_grazing_time_span_is_bounded(grazing, hardened, eps):
    from soft2hard.soft_dynamics import SoftProblem

    p = SoftProblem(hardened(eps), grazing)
    assert 2.0 <= p.t_span[1] <= 2.0 * (1.0 + 2.0 * np.pi) + 1e-12
