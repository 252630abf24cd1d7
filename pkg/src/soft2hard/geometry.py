"""Phase-space transforms, conservation functionals and contact classification."""

import numpy as np

from .models import MASS, CollisionInvariants, ConfigClass, PhasePoint, ReducedState

# Admissibility slack for hard-sphere data and default classification tolerance.
TOL_GEOM = 1e-9
TOL_CLASSIFY = 1e-12


def to_reduced(z: PhasePoint) -> ReducedState:
    """
    Change to centre-of-mass variables.

    Args:
        z: Two-body phase point

    Returns:
        ReducedState with y = x − x̄, w = v − v̄, ȳ = ½(x + x̄), w̄ = ½(v + v̄)
    """
    return ReducedState(
        y=z.x - z.xbar,
        w=z.v - z.vbar,
        ybar=0.5 * (z.x + z.xbar),
        wbar=0.5 * (z.v + z.vbar),
    )


def from_reduced(r: ReducedState) -> PhasePoint:
    """Inverse of :func:`to_reduced`."""
    return PhasePoint(
        x=r.ybar + 0.5 * r.y,
        xbar=r.ybar - 0.5 * r.y,
        v=r.wbar + 0.5 * r.w,
        vbar=r.wbar - 0.5 * r.w,
    )


def linear_momentum(z: PhasePoint, m: float = MASS) -> np.ndarray:
    """Total linear momentum m·v + m·v̄."""
    return m * z.v + m * z.vbar


def angular_momentum(z: PhasePoint, a, m: float = MASS) -> np.ndarray:
    """
    Total angular momentum about the point of measurement ``a``.

    Args:
        z: Two-body phase point
        a: Point of measurement (3-vector)
        m: Body mass

    Returns:
        −m(a − x)∧v − m(a − x̄)∧v̄
    """
    a = np.asarray(a, dtype=float)
    return -m * np.cross(a - z.x, z.v) - m * np.cross(a - z.xbar, z.vbar)


def kinetic_energy(z: PhasePoint, m: float = MASS) -> float:
    """Kinetic energy functional m|v|² + m|v̄|² (no ½ factor)."""
    return float(m * z.v @ z.v + m * z.vbar @ z.vbar)


def hamiltonian(z: PhasePoint, potential) -> float:
    """Soft two-body energy H₂^ε = ½|v|² + ½|v̄|² + Φ^ε(x − x̄)."""
    return float(0.5 * (z.v @ z.v + z.vbar @ z.vbar) + potential.eval(z.separation))


def reduced_hamiltonian(y, w, potential) -> float:
    """Reduced energy H₀^ε = ½|w|² + 2Φ^ε(y)."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    return float(0.5 * w @ w + 2.0 * potential.eval(np.linalg.norm(y)))


def collision_invariants(z: PhasePoint) -> CollisionInvariants:
    """E₀ = ½|w₀|² and A₀ = |y₀∧w₀|² of a phase point."""
    y = z.x - z.xbar
    w = z.v - z.vbar
    L = np.cross(y, w)
    return CollisionInvariants(E0=float(0.5 * w @ w), A0=float(L @ L))


def free_flight(z: PhasePoint, t: float) -> PhasePoint:
    """Rectilinear motion x + t v, x̄ + t v̄ with unchanged velocities."""
    return PhasePoint(z.x + t * z.v, z.xbar + t * z.vbar, z.v, z.vbar)


def classify(z: PhasePoint, tol: float = TOL_CLASSIFY) -> ConfigClass:
    """
    Classify a phase point relative to the contact sphere |x − x̄| = 1.

    Args:
        z: Two-body phase point
        tol: Tolerance on both the contact distance and the normal speed

    Returns:
        GRAZING, PRE_COLLISIONAL or POST_COLLISIONAL on contact, else NON_CONTACT
    """
    y = z.x - z.xbar
    if abs(np.linalg.norm(y) - 1.0) > tol:
        return ConfigClass.NON_CONTACT
    approach = float(y @ (z.v - z.vbar))
    if abs(approach) <= tol:
        return ConfigClass.GRAZING
    if approach < 0:
        return ConfigClass.PRE_COLLISIONAL
    return ConfigClass.POST_COLLISIONAL


def is_admissible(z: PhasePoint, tol: float = TOL_GEOM) -> bool:
    """Hard-sphere admissibility |x − x̄| ≥ 1 − tol."""
    return z.separation >= 1.0 - tol
