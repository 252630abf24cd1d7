"""Collision analysis in the centre-of-mass frame.

Closest approach ρ* solves A₀/ρ² + 4ε⁻¹Φ₀(ρ) = 2E₀. The time of closest
approach and the deflection are radial integrals whose integrands blow up
like (r − ρ*)^{-1/2}; the substitution r = ρ* + (1 − ρ*)u² removes the
singularity before adaptive Gauss–Kronrod quadrature.

Polar angles follow e(ϑ) = (sin ϑ, cos ϑ) with R₀e₃ along y₀∧w₀. In that
gauge the angle of y(t) decreases at rate √A₀/ρ², so the deflection
integral is subtracted from ϑ₀.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .bv_analysis import fit_loglog
from .exceptions import BracketError, ConfigError, QuadratureError, Soft2HardError
from .geometry import classify, collision_invariants
from .hard_dynamics import boltzmann_matrix
from .models import (
    CertifiedConstants,
    CollisionAnalysis,
    CollisionInvariants,
    ConfigClass,
    PhasePoint,
    PolarFrame,
    SampledTrajectory,
    SoftScatteringResult,
    SweepRow,
    SweepTable,
)
from .potentials import HardenedPotential, ReferencePotential, inverse_on_support
from .soft_dynamics import SoftProblem, detect_contact_window, integrate_reduced

logger = logging.getLogger(__name__)

QUAD_TOL = 1e-10
ROOT_XTOL = 1e-15
NEAR_GRAZING_SLOPE = 1e-12
# Below this u the radicand is replaced by its linearisation at ρ*.
LINEAR_ZONE = 1e-5
# A₀ ≤ HEAD_ON_RATIO · 2E₀ selects the head-on branch.
HEAD_ON_RATIO = 1e-20
CONTACT_TOL = 1e-9


def _radicand(inv: CollisionInvariants, pot: HardenedPotential) -> Callable[[float], float]:
    def g(r):
        return 2.0 * inv.E0 - inv.A0 / (r * r) - 4.0 * pot.base.eval(r) / pot.epsilon
    return g


def _radicand_slope(inv: CollisionInvariants, pot: HardenedPotential, rho: float) -> float:
    """g′(ρ) = 2A₀/ρ³ − 4ε⁻¹Φ₀′(ρ)."""
    return 2.0 * inv.A0 / rho ** 3 - 4.0 * pot.base.deriv(rho) / pot.epsilon


def _is_head_on(inv: CollisionInvariants) -> bool:
    return inv.A0 <= HEAD_ON_RATIO * 2.0 * inv.E0


def _is_grazing(inv: CollisionInvariants) -> bool:
    return inv.radial_speed_squared <= 1e-24 * max(2.0 * inv.E0, 1.0)


def canonical_datum(inv: CollisionInvariants) -> PhasePoint:
    """Pre-collisional datum with y₀ = (1, 0, 0), v̄₀ = 0 and the given invariants."""
    w = np.array([-np.sqrt(inv.radial_speed_squared), np.sqrt(inv.A0), 0.0])
    return PhasePoint(np.zeros(3), np.array([-1.0, 0.0, 0.0]), w, np.zeros(3))


def polar_frame(y0, w0) -> PolarFrame:
    """
    Shortest-arc rotation R₀ taking e₃ to (y₀∧w₀)/|y₀∧w₀| and the angle ϑ₀.

    For y₀∧w₀ = 0 any plane through y₀ is used; its normal is chosen
    orthogonal to y₀.
    """
    y0 = np.asarray(y0, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    L = np.cross(y0, w0)
    if np.linalg.norm(L) > 0:
        f3 = L / np.linalg.norm(L)
    else:
        helper = np.eye(3)[np.argmin(np.abs(y0))]
        f3 = np.cross(y0, helper)
        f3 /= np.linalg.norm(f3)

    e3 = np.array([0.0, 0.0, 1.0])
    k = np.cross(e3, f3)
    s = np.linalg.norm(k)
    c = float(e3 @ f3)
    if s < 1e-15:
        R0 = np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    else:
        K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
        R0 = np.eye(3) + K + K @ K * ((1.0 - c) / (s * s))

    coords = R0.T @ y0
    theta0 = float(np.arctan2(coords[0], coords[1]))
    return PolarFrame(R0=R0, theta0=theta0)


def rho_star(inv: CollisionInvariants, pot: HardenedPotential) -> float:
    """
    Distance of closest approach of the centres.

    Args:
        inv: Collision invariants of a pre-collisional, non-grazing datum
        pot: Hardened potential

    Returns:
        The unique root of g(ρ) = 2E₀ − A₀/ρ² − 4ε⁻¹Φ₀(ρ) in (0, 1)

    Raises:
        BracketError: If g has no sign change on (0, 1)
    """
    if inv.E0 <= 0:
        raise BracketError("No closest approach inside the support for zero relative speed")
    if _is_head_on(inv):
        return inverse_on_support(pot.base, inv.E0 * pot.epsilon / 2.0)

    g = _radicand(inv, pot)
    if not g(1.0) > 0:
        raise BracketError(f"Datum is not collisional at eps={pot.epsilon:.3e}: g(1) = {g(1.0):.3e}")
    lo = 0.5
    while g(lo) >= 0:
        lo *= 0.5
        if lo < 1e-300:
            raise BracketError("Could not bracket the closest approach")
    root = brentq(g, lo, 1.0, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    logger.debug("rho_star eps=%.3e: %.17g (bracket lo=%.3e)", pot.epsilon, root, lo)
    return float(root)


def _radial_integral(
    inv: CollisionInvariants,
    pot: HardenedPotential,
    rho: float,
    weight: Callable[[float], float],
    tol: float,
) -> Tuple[float, float]:
    """∫_ρ^1 weight(r)/√g(r) dr after r = ρ + (1 − ρ)u²."""
    g = _radicand(inv, pot)
    slope = _radicand_slope(inv, pot, rho)
    width = 1.0 - rho

    def integrand(u):
        d = width * u * u
        r = rho + d
        if u < LINEAR_ZONE:
            return weight(r) * 2.0 * np.sqrt(width) / np.sqrt(slope)
        value = g(r)
        if value <= 0:
            if u >= 1e-3:
                raise QuadratureError(f"Negative radicand {value:.3e} at r={r:.17g}")
            # round-off of the root itself
            value = slope * d
        return weight(r) * 2.0 * width * u / np.sqrt(value)

    result, err = quad(integrand, 0.0, 1.0, epsabs=tol, epsrel=1e-12, limit=200)
    if not np.isfinite(result) or err > 100.0 * max(tol, 1e-12 * abs(result)):
        raise QuadratureError(f"Radial quadrature did not converge: {result!r} ± {err:.3e}")
    return float(result), float(err)


def tau_star_with_error(inv: CollisionInvariants, pot: HardenedPotential, quad_tol: float = QUAD_TOL) -> Tuple[float, float]:
    """Time of closest approach with the quadrature error estimate."""
    if _is_grazing(inv):
        return 0.0, 0.0
    rho = rho_star(inv, pot)
    if _radicand_slope(inv, pot, rho) < NEAR_GRAZING_SLOPE:
        logger.warning("Near-grazing datum at eps=%.3e; using the integrated contact window", pot.epsilon)
        trajectory = integrate_reduced(SoftProblem(pot, canonical_datum(inv)))
        return 0.5 * detect_contact_window(trajectory).duration, 0.0
    return _radial_integral(inv, pot, rho, lambda r: 1.0, quad_tol)


def tau_star(inv: CollisionInvariants, pot: HardenedPotential, quad_tol: float = QUAD_TOL) -> float:
    """
    Time of closest approach τ* = ∫_{ρ*}^1 dr / √(2E₀ − A₀/r² − 4ε⁻¹Φ₀(r)).

    Zero for grazing data. Data whose radicand slope at ρ* falls below
    1e-12 are integrated instead.
    """
    return tau_star_with_error(inv, pot, quad_tol)[0]


def _require_pre_collisional(z0: PhasePoint) -> None:
    cls = classify(z0, tol=CONTACT_TOL)
    if cls not in (ConfigClass.PRE_COLLISIONAL, ConfigClass.GRAZING):
        raise ValueError(f"Expected a pre-collisional contact datum, got {cls.value}")


def deflection_angle(z0: PhasePoint, pot: HardenedPotential, quad_tol: float = QUAD_TOL) -> float:
    """
    Polar angle of the reduced trajectory at closest approach.

    Raises:
        ValueError: For head-on (A₀ = 0) or grazing data, which have the
            closed form ϑ* = ϑ₀
    """
    _require_pre_collisional(z0)
    inv = collision_invariants(z0)
    if _is_head_on(inv) or _is_grazing(inv):
        raise ValueError("Degenerate polar frame: use the head-on or grazing closed form")
    frame = polar_frame(z0.x - z0.xbar, z0.v - z0.vbar)
    rho = rho_star(inv, pot)
    sqrt_A0 = np.sqrt(inv.A0)
    sweep, _ = _radial_integral(inv, pot, rho, lambda r: sqrt_A0 / (r * r), quad_tol)
    return frame.theta0 - sweep


def apse_line(z0: PhasePoint, pot: HardenedPotential, quad_tol: float = QUAD_TOL) -> np.ndarray:
    """
    Apse line ω* = R₀[e(ϑ*), 0].

    Head-on and grazing data have ω* = y₀/|y₀|.
    """
    _require_pre_collisional(z0)
    y0 = z0.x - z0.xbar
    inv = collision_invariants(z0)
    if _is_head_on(inv) or _is_grazing(inv):
        return y0 / np.linalg.norm(y0)
    frame = polar_frame(y0, z0.v - z0.vbar)
    omega = frame.embed(deflection_angle(z0, pot, quad_tol))
    return omega / np.linalg.norm(omega)


def collision_analysis(z0: PhasePoint, pot: HardenedPotential, quad_tol: float = QUAD_TOL) -> CollisionAnalysis:
    """ρ*, τ*, ϑ* and ω* of one soft collision of a pre-collisional datum."""
    _require_pre_collisional(z0)
    inv = collision_invariants(z0)
    y0 = z0.x - z0.xbar
    frame = polar_frame(y0, z0.v - z0.vbar)

    if _is_grazing(inv):
        return CollisionAnalysis(
            rho_star=float(np.linalg.norm(y0)), tau_star=0.0, theta_star=frame.theta0,
            apse=y0 / np.linalg.norm(y0), epsilon=pot.epsilon, invariants_in=inv, branch="grazing",
        )

    rho = rho_star(inv, pot)
    tau = tau_star(inv, pot, quad_tol)
    if _is_head_on(inv):
        return CollisionAnalysis(
            rho_star=rho, tau_star=tau, theta_star=frame.theta0,
            apse=y0 / np.linalg.norm(y0), epsilon=pot.epsilon, invariants_in=inv, branch="head_on",
        )

    theta = deflection_angle(z0, pot, quad_tol)
    omega = frame.embed(theta)
    return CollisionAnalysis(
        rho_star=rho, tau_star=tau, theta_star=theta, apse=omega / np.linalg.norm(omega),
        epsilon=pot.epsilon, invariants_in=inv, branch="generic",
    )


def soft_scatter(
    z0: PhasePoint,
    pot: HardenedPotential,
    quad_tol: float = QUAD_TOL,
    analysis: Optional[CollisionAnalysis] = None,
) -> SoftScatteringResult:
    """
    Explicit soft scattering map σ^εZ₀ at the exit time 2τ*.

    Positions: ([0 I; I 0] + [ωω −ωω; −ωω ωω])X₀ + τ*[I I; I I]V₀.
    Velocities: (I − 2ν̂*⊗ν̂*)V₀ with ν̂* = (ω*, −ω*)/√2.
    """
    if analysis is None:
        analysis = collision_analysis(z0, pot, quad_tol)
    omega = analysis.apse
    P = np.outer(omega, omega)
    I3 = np.eye(3)
    Z3 = np.zeros((3, 3))
    swap = np.block([[Z3, I3], [I3, Z3]])
    apse_block = np.block([[P, -P], [-P, P]])
    drift = np.block([[I3, I3], [I3, I3]])
    X_out = (swap + apse_block) @ z0.X + analysis.tau_star * (drift @ z0.V)

    nu_hat = np.concatenate([omega, -omega]) / np.sqrt(2.0)
    V_out = z0.V - 2.0 * nu_hat * float(nu_hat @ z0.V)
    return SoftScatteringResult(
        pre=z0,
        post=PhasePoint.from_blocks(X_out, V_out),
        nu_hat_star=nu_hat,
        exit_time=2.0 * analysis.tau_star,
    )


def closest_approach_envelope(
    inv: CollisionInvariants,
    pot: HardenedPotential,
    constants: CertifiedConstants,
) -> Tuple[float, float]:
    """
    Envelope 1 − (E₀ε/(2c₁))^{1/β} ≤ ρ* ≤ 1 − (ε(2E₀ − A₀/ρ_low²)/(4c₂))^{1/β}.

    Valid while ρ* stays in [r₀, 1], where the (1 − r)^β envelopes hold.
    """
    inv_beta = 1.0 / pot.beta
    lower = 1.0 - (inv.E0 * pot.epsilon / (2.0 * constants.c1)) ** inv_beta
    lower_safe = max(lower, constants.r0)
    excess = max(2.0 * inv.E0 - inv.A0 / lower_safe ** 2, 0.0)
    upper = 1.0 - (pot.epsilon * excess / (4.0 * constants.c2)) ** inv_beta
    return float(lower), float(upper)


def apse_symmetry_residual(tr: SampledTrajectory, apse, samples: int = 201) -> float:
    """
    sup over s of |y(τ_m + s) + (I − 2ω*⊗ω*) y(τ_m − s)|, τ_m the window midpoint.
    """
    window = detect_contact_window(tr)
    if window.none_flag:
        return 0.0
    mid = 0.5 * (window.tau_minus + window.tau_plus)
    half = 0.5 * window.duration
    s = np.linspace(0.0, half, samples)
    omega = np.asarray(apse, dtype=float)
    reflect = np.eye(3) - 2.0 * np.outer(omega, omega)
    after = tr.relative_position(mid + s)
    before = tr.relative_position(mid - s)
    return float(np.max(np.linalg.norm(after + before @ reflect.T, axis=1)))


def _sweep_row(z0: PhasePoint, base: ReferencePotential, eps: float, quad_tol: float) -> SweepRow:
    row = SweepRow(eps=eps)
    try:
        pot = HardenedPotential(base, eps)
        analysis = collision_analysis(z0, pot, quad_tol)
        result = soft_scatter(z0, pot, quad_tol, analysis)
        hard = boltzmann_matrix((z0.xbar - z0.x) / np.linalg.norm(z0.xbar - z0.x))
        y0 = z0.x - z0.xbar
        row.rho_star = analysis.rho_star
        row.tau_star = analysis.tau_star
        row.theta_star = analysis.theta_star
        row.apse = analysis.apse
        row.scatter_err = float(np.linalg.norm(result.post.V - hard.apply(z0.V)))
        row.apse_err = float(np.linalg.norm(analysis.apse - y0 / np.linalg.norm(y0)))
    except (Soft2HardError, ValueError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        logger.warning("Sweep row eps=%.3e failed: %s", eps, row.error)
    return row


def hardening_sweep(
    z0: PhasePoint,
    base: ReferencePotential,
    eps_grid: Sequence[float],
    quad_tol: float = QUAD_TOL,
    threads: int = 1,
    exclude_largest: int = 2,
) -> SweepTable:
    """
    Collision analysis along a decreasing ε grid.

    Each row carries ρ*, τ*, ϑ*, ω* and |Π₂σ^εZ₀ − σ_nΠ₂Z₀|; failures
    annotate their row. The exponent of τ* ~ ε^{slope} is fitted by least
    squares after dropping the ``exclude_largest`` largest ε.

    Args:
        z0: Pre-collisional datum
        base: Reference potential
        eps_grid: Strictly decreasing values in (0, 1)
        quad_tol: Absolute tolerance of the radial quadratures
        threads: Worker threads; rows are emitted in grid order regardless
        exclude_largest: Pre-asymptotic points left out of the fit

    Returns:
        SweepTable ordered like ``eps_grid``
    """
    eps = [float(e) for e in eps_grid]
    if not eps or any(not 0 < e < 1 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps_grid must be strictly decreasing inside (0, 1)")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows: List[SweepRow] = list(pool.map(lambda e: _sweep_row(z0, base, e, quad_tol), eps))
    else:
        rows = [_sweep_row(z0, base, e, quad_tol) for e in eps]

    table = SweepTable(rows=rows, beta=base.beta)
    fit_rows = [r for r in rows[exclude_largest:] if r.ok and r.tau_star > 0]
    if len(fit_rows) >= 2:
        fit = fit_loglog([r.eps for r in fit_rows], [r.tau_star for r in fit_rows])
        table.slope = fit.slope
        table.slope_ci = fit.ci
    return table
