"""Exact hard-sphere two-body dynamics by trajectory surgery."""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np

from .exceptions import NumericalError, OverlapError
from .geometry import TOL_GEOM
from .models import HardTrajectory, MassInertia, PhasePoint, ScatteringMatrix

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12
# |b² − 4ac| below this is a tangential touch.
GRAZING_DISCRIMINANT = 1e-14
# |y|² − 1 below this counts as being on the contact sphere.
CONTACT_TOL = 1e-12


def _unit(n, tol: float = UNIT_TOL) -> np.ndarray:
    n = np.asarray(n, dtype=float).reshape(-1)
    if abs(np.linalg.norm(n) - 1.0) > tol:
        raise ValueError(f"Expected a unit vector, got |n| = {np.linalg.norm(n)!r}")
    return n


def boltzmann_matrix(n) -> ScatteringMatrix:
    """
    Build the Boltzmann scattering matrix for a collision normal.

    Args:
        n: Unit collision normal in R³

    Returns:
        ScatteringMatrix with σ_n = I − 2ν̂_n⊗ν̂_n and ν̂_n = (n, −n)/√2

    Raises:
        ValueError: If n is not a unit vector to 1e-12
    """
    n = _unit(n)
    nu_hat = np.concatenate([n, -n]) / np.sqrt(2.0)
    matrix = np.eye(6) - 2.0 * np.outer(nu_hat, nu_hat)
    return ScatteringMatrix(matrix=matrix, normal=n, nu_hat=nu_hat)


def conservation_system(n) -> np.ndarray:
    """
    Matrix E_n of the linear momentum and angular momentum laws.

    Rows 1–3 encode COLM, rows 4–6 encode COAM measured at the contact
    midpoint a = n/2 with x(τ) = 0. E_n has rank at most five.
    """
    n1, n2, n3 = _unit(n)
    return np.array([
        [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        [0.0, -n3, n2, 0.0, n3, -n2],
        [n3, 0.0, -n1, -n3, 0.0, n1],
        [-n2, n1, 0.0, n2, -n1, 0.0],
    ])


def _contact_quadratic(y: np.ndarray, w: np.ndarray) -> Tuple[float, float, float]:
    a = float(w @ w)
    b = 2.0 * float(y @ w)
    c = float(y @ y) - 1.0
    if abs(c) <= CONTACT_TOL:
        c = 0.0
    return a, b, c


def _roots(a: float, b: float, c: float) -> Tuple[List[float], bool]:
    """Real roots of a t² + b t + c and whether the contact is tangential."""
    if a == 0.0:
        return [], False
    disc = b * b - 4.0 * a * c
    if abs(disc) <= GRAZING_DISCRIMINANT:
        return [-b / (2.0 * a)], True
    if disc < 0:
        return [], False
    sq = np.sqrt(disc)
    q = -0.5 * (b + np.copysign(sq, b))
    if q == 0.0:
        return [0.0], False
    return sorted([q / a, c / q]), False


def collision_time(z0: PhasePoint) -> Optional[float]:
    """
    Least t ≥ 0 at which the free flights of the two spheres touch.

    Solves |w₀|²t² + 2(y₀·w₀)t + |y₀|² − 1 = 0 with the cancellation-free
    quadratic formula.

    Args:
        z0: Initial datum

    Returns:
        Collision time relative to the datum, or None when no nonnegative root exists

    Raises:
        OverlapError: If |x₀ − x̄₀| < 1 − tol
    """
    if z0.separation < 1.0 - TOL_GEOM:
        raise OverlapError(f"Overlapping initial data: |x0 - xbar0| = {z0.separation:.17g}")
    roots, _ = _roots(*_contact_quadratic(z0.x - z0.xbar, z0.v - z0.vbar))
    future = [t for t in roots if t >= 0.0]
    return float(future[0]) if future else None


def surgery_solve(z0: PhasePoint, t0: float = 0.0) -> HardTrajectory:
    """
    Construct the hard-sphere solution through ``z0`` by trajectory surgery.

    Free flight is followed up to the first contact τ. A transversal
    approach (distance above one just before τ) switches the velocities to
    σ_nV₀ after τ; a contact left from inside (distance below one before τ)
    carries σ_nV₀ before τ and V₀ after; a tangential touch leaves the
    velocities unchanged. Permanent contact (w₀ = 0 on the contact sphere)
    is reported as grazing with no collision time.

    Args:
        z0: Admissible initial datum
        t0: Absolute time at which ``z0`` holds

    Returns:
        HardTrajectory with absolute collision time
    """
    tau_rel = collision_time(z0)
    V0 = z0.V
    y0 = z0.x - z0.xbar
    w0 = z0.v - z0.vbar

    if tau_rel is None:
        a, _, c = _contact_quadratic(y0, w0)
        permanent = a == 0.0 and c == 0.0
        return HardTrajectory(z0, t0, None, V0, V0.copy(), grazing=permanent)

    _, tangential = _roots(*_contact_quadratic(y0, w0))
    tau = t0 + tau_rel
    y_tau = y0 + tau_rel * w0
    n = -y_tau / np.linalg.norm(y_tau)  # x̄(τ) − x(τ)
    approach = float(y_tau @ w0)

    if tangential or abs(approach) <= GRAZING_DISCRIMINANT:
        return HardTrajectory(z0, t0, tau, V0, V0.copy(), grazing=True, normal=n)

    sigma = boltzmann_matrix(n)
    if approach < 0:
        pre, post = V0, sigma.apply(V0)
    else:
        pre, post = sigma.apply(V0), V0
    # Separating relative velocity after τ means no second contact.
    w_after = post[:3] - post[3:]
    if float(y_tau @ w_after) < -GRAZING_DISCRIMINANT:
        raise NumericalError("Post-collisional velocities re-enter the contact sphere")

    logger.debug("Surgery at tau=%.17g with normal %s", tau, n)
    return HardTrajectory(z0, t0, tau, pre, post, grazing=False, normal=n)


def sample_hard(tr: HardTrajectory, times) -> np.ndarray:
    """
    Evaluate a hard trajectory on an array of times.

    Returns:
        Array of shape (len(times), 12) with rows [x, x̄, v, v̄]
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    X0 = tr.initial.X
    out = np.empty((t.size, 12))
    if not tr.collides:
        out[:, :6] = X0 + np.outer(t - tr.t0, tr.pre_velocities)
        out[:, 6:] = tr.pre_velocities
        return out

    tau = tr.collision_time
    # The datum flies with its own velocities up to τ in both surgery branches.
    X_tau = X0 + (tau - tr.t0) * tr.initial.V
    before = t <= tau
    V = np.where(before[:, None], tr.pre_velocities, tr.post_velocities)
    out[:, :6] = X_tau + (t - tau)[:, None] * V
    out[:, 6:] = V
    return out


def eval_hard(tr: HardTrajectory, t: float) -> PhasePoint:
    """
    State of a hard trajectory at time ``t``.

    Positions are continuous and piecewise linear; velocities are piecewise
    constant and take the pre-collisional value at t = τ.
    """
    return PhasePoint.from_array(sample_hard(tr, [t])[0])


def hard_velocity_path(tr: HardTrajectory) -> Callable[[np.ndarray], np.ndarray]:
    """Left-continuous velocity map t ↦ V(t) as a vectorised callable."""
    def path(t):
        t_arr = np.asarray(t, dtype=float)
        V = sample_hard(tr, t_arr)[:, 6:]
        return V[0] if t_arr.ndim == 0 else V
    return path


def mass_inertia(m: float, J) -> MassInertia:
    """
    Assemble the block mass-inertia matrix M = diag(√m I, √m I, √J, √J).

    Raises:
        ValueError: If m ≤ 0 or J is not symmetric positive definite
    """
    J = np.asarray(J, dtype=float).reshape(3, 3)
    if not m > 0:
        raise ValueError(f"Mass must be positive, got {m}")
    if not np.allclose(J, J.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(J).max())):
        raise ValueError("Inertia tensor must be symmetric")
    evals, evecs = np.linalg.eigh(0.5 * (J + J.T))
    if np.any(evals <= 0):
        raise ValueError(f"Inertia tensor must be positive definite, eigenvalues {evals}")
    sqrt_J = (evecs * np.sqrt(evals)) @ evecs.T

    M = np.zeros((12, 12))
    M[0:3, 0:3] = np.sqrt(m) * np.eye(3)
    M[3:6, 3:6] = np.sqrt(m) * np.eye(3)
    M[6:9, 6:9] = sqrt_J
    M[9:12, 9:12] = sqrt_J
    return MassInertia(m=float(m), J=J, M=M)


def quasi_reflection(mi: MassInertia, nu) -> np.ndarray:
    """
    Mass-inertia weighted reflection σ_β = M⁻¹(I − 2ν̂_β⊗ν̂_β)M.

    Args:
        mi: Mass and inertia data
        nu: Unit collision normal in the 12-dimensional velocity space

    Returns:
        12×12 matrix with σ_β² = I and |Mσ_βV| = |MV|
    """
    nu = _unit(nu)
    if nu.size != 12:
        raise ValueError(f"Expected a 12-vector, got size {nu.size}")
    M_inv = np.linalg.inv(mi.M)
    direction = M_inv @ nu
    nu_hat = direction / np.linalg.norm(direction)
    return M_inv @ (np.eye(12) - 2.0 * np.outer(nu_hat, nu_hat)) @ mi.M
