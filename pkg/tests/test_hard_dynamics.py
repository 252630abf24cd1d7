"""Tests for the Boltzmann scattering matrix and trajectory surgery."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

component = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)
units = (
    st.lists(component, min_size=3, max_size=3)
    .map(np.array)
    .filter(lambda v: np.linalg.norm(v) > 0.1)
    .map(lambda v: v / np.linalg.norm(v))
)
velocities = st.lists(st.floats(min_value=-5.0, max_value=5.0, allow_nan=False), min_size=6, max_size=6).map(np.array)


@pytest.mark.unit
@settings(max_examples=200, deadline=None)
@given(units, velocities)
def test_scattering_conserves_and_reflects(n, V):
    """σ_n conserves momentum, contact-midpoint angular momentum and energy."""
    from soft2hard.hard_dynamics import boltzmann_matrix, conservation_system

    sigma = boltzmann_matrix(n)
    W = sigma.apply(V)
    E = conservation_system(n)
    scale = 1.0 + np.abs(V).max()

    np.testing.assert_allclose(W[:3] + W[3:], V[:3] + V[3:], atol=1e-13 * scale)
    np.testing.assert_allclose(E @ W, E @ V, atol=1e-12 * scale)
    assert abs(W @ W - V @ V) <= 1e-12 * max(V @ V, 1.0)
    # restitution: the normal relative speed flips sign
    assert (W[:3] - W[3:]) @ n == pytest.approx(-((V[:3] - V[3:]) @ n), abs=1e-13 * scale)


@pytest.mark.unit
@settings(max_examples=200, deadline=None)
@given(units)
def test_scattering_matrix_algebra(n):
    from soft2hard.hard_dynamics import boltzmann_matrix

    S = boltzmann_matrix(n).matrix
    np.testing.assert_allclose(S @ S, np.eye(6), atol=1e-14)
    np.testing.assert_allclose(S, S.T, atol=0.0)
    assert np.linalg.det(S) == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.unit
@settings(max_examples=100, deadline=None)
@given(units)
def test_conservation_system_rank_five(n):
    from soft2hard.hard_dynamics import conservation_system

    E = conservation_system(n)
    singular = np.linalg.svd(E, compute_uv=False)
    assert abs(np.linalg.det(E)) <= 1e-10
    assert singular[4] > 1e-3


@pytest.mark.unit
def test_boltzmann_matrix_needs_unit_normal():
    from soft2hard.hard_dynamics import boltzmann_matrix

    with pytest.raises(ValueError):
        boltzmann_matrix([1.0, 1.0, 0.0])


@pytest.mark.unit
def test_collision_time_separated():
    from soft2hard.hard_dynamics import collision_time
    from soft2hard.models import PhasePoint

    approaching = PhasePoint([0, 0, 0], [3, 0, 0], [1, 0, 0], [0, 0, 0])
    receding = PhasePoint([0, 0, 0], [3, 0, 0], [-1, 0, 0], [0, 0, 0])
    missing = PhasePoint([0, 0, 0], [3, 0, 0], [0, 1, 0], [0, 0, 0])
    assert collision_time(approaching) == pytest.approx(2.0, abs=1e-15)
    assert collision_time(receding) is None
    assert collision_time(missing) is None


@pytest.mark.unit
def test_collision_time_rejects_overlap():
    from soft2hard.exceptions import OverlapError
    from soft2hard.hard_dynamics import collision_time

    from soft2hard.models import PhasePoint

    with pytest.raises(OverlapError):
        collision_time(PhasePoint([0, 0, 0], [0.5, 0, 0], [1, 0, 0], [0, 0, 0]))


@pytest.mark.unit
def test_surgery_head_on_exchanges_velocities(head_on):
    from soft2hard.hard_dynamics import surgery_solve

    tr = surgery_solve(head_on)
    assert tr.collision_time == 0.0
    assert not tr.grazing
    np.testing.assert_allclose(tr.normal, [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(tr.pre_velocities, head_on.V)
    np.testing.assert_allclose(tr.post_velocities, [0, 0, 0, 1, 0, 0], atol=1e-15)
    assert tr.velocity_jump == pytest.approx(np.sqrt(2.0))


@pytest.mark.unit
def test_surgery_separated_oblique_is_physical():
    """Non-penetration and conservation along a sampled hard trajectory."""
    from soft2hard.geometry import angular_momentum, kinetic_energy, linear_momentum
    from soft2hard.hard_dynamics import sample_hard, surgery_solve
    from soft2hard.models import PhasePoint

    z0 = PhasePoint([0, 0, 0], [3, 0.4, 0.1], [1, 0.2, 0], [-0.5, 0, 0.1])
    tr = surgery_solve(z0)
    assert tr.collides

    states = sample_hard(tr, np.linspace(0.0, 6.0, 10_000))
    sep = np.linalg.norm(states[:, :3] - states[:, 3:6], axis=1)
    assert sep.min() >= 1.0 - 1e-12

    a = np.array([0.3, -0.2, 0.5])
    for row in states[::97]:
        z = PhasePoint.from_array(row)
        np.testing.assert_allclose(linear_momentum(z), linear_momentum(z0), atol=1e-12)
        np.testing.assert_allclose(angular_momentum(z, a), angular_momentum(z0, a), atol=1e-12)
        assert kinetic_energy(z) == pytest.approx(kinetic_energy(z0), rel=1e-12)


@pytest.mark.unit
def test_surgery_grazing_is_bit_identical(grazing):
    from soft2hard.hard_dynamics import sample_hard, surgery_solve

    tr = surgery_solve(grazing)
    assert tr.grazing
    assert not tr.collides
    states = sample_hard(tr, np.linspace(-1.0, 1.0, 101))
    assert np.array_equal(states[:, 6:], np.tile(grazing.V, (101, 1)))


@pytest.mark.unit
def test_surgery_contact_left_from_inside():
    """A post-collisional contact datum carries σ_nV₀ before the contact."""
    from soft2hard.hard_dynamics import boltzmann_matrix, surgery_solve
    from soft2hard.models import PhasePoint

    z0 = PhasePoint([0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 0, 0])
    tr = surgery_solve(z0)
    assert tr.collision_time == 0.0
    np.testing.assert_array_equal(tr.post_velocities, z0.V)
    np.testing.assert_allclose(tr.pre_velocities, boltzmann_matrix([1, 0, 0]).apply(z0.V))


@pytest.mark.unit
def test_surgery_permanent_contact():
    from soft2hard.hard_dynamics import surgery_solve
    from soft2hard.models import PhasePoint

    z0 = PhasePoint([0, 0, 0], [1, 0, 0], [0.3, 0, 0], [0.3, 0, 0])
    tr = surgery_solve(z0)
    assert tr.grazing
    assert tr.collision_time is None


@pytest.mark.unit
def test_surgery_without_collision_is_free_flight():
    from soft2hard.hard_dynamics import eval_hard, surgery_solve
    from soft2hard.models import PhasePoint

    z0 = PhasePoint([0, 0, 0], [3, 0, 0], [-1, 0, 0], [0, 0, 0])
    tr = surgery_solve(z0)
    assert tr.collision_time is None
    z = eval_hard(tr, 2.0)
    np.testing.assert_allclose(z.x, [-2.0, 0.0, 0.0])
    np.testing.assert_array_equal(z.V, z0.V)


@pytest.mark.unit
def test_hard_velocity_path_is_left_continuous(head_on):
    from soft2hard.hard_dynamics import hard_velocity_path, surgery_solve

    tr = surgery_solve(head_on)
    path = hard_velocity_path(tr)
    np.testing.assert_array_equal(path(0.0), tr.pre_velocities)
    np.testing.assert_array_equal(path(1e-9), tr.post_velocities)
    assert path(np.array([-0.5, 0.5])).shape == (2, 6)


@pytest.mark.unit
def test_quasi_reflection_random_inertia():
    from soft2hard.hard_dynamics import mass_inertia, quasi_reflection

    rng = np.random.default_rng(20240611)
    for _ in range(100):
        A = rng.normal(size=(3, 3))
        J = A @ A.T + 0.1 * np.eye(3)
        nu = rng.normal(size=12)
        nu /= np.linalg.norm(nu)
        mi = mass_inertia(rng.uniform(0.5, 2.0), J)
        S = quasi_reflection(mi, nu)
        np.testing.assert_allclose(S @ S, np.eye(12), atol=1e-12 * np.linalg.cond(mi.M))
        V = rng.normal(size=12)
        MV = mi.M @ V
        assert np.linalg.norm(mi.M @ S @ V) ** 2 == pytest.approx(MV @ MV, rel=1e-10)


@pytest.mark.unit
def test_mass_inertia_validation():
    from soft2hard.hard_dynamics import mass_inertia

    with pytest.raises(ValueError):
        mass_inertia(0.0, np.eye(3))
    with pytest.raises(ValueError):
        mass_inertia(1.0, -np.eye(3))
    with pytest.raises(ValueError):
        mass_inertia(1.0, [[1, 2, 0], [0, 1, 0], [0, 0, 1]])
