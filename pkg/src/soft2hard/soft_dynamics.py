"""Numerical integration of the soft two-body system and its reduced form."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .exceptions import ConfigError, EnergyDriftError, IntegrationError, NumericalError
from .geometry import collision_invariants, free_flight
from .hard_dynamics import collision_time
from .models import ContactWindow, PhasePoint, SampledTrajectory
from .potentials import HardenedPotential, inverse_on_support

logger = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-12
MAX_ENERGY_DRIFT = 1e-8
EVENT_XTOL = 1e-12
EVENT_MAXITER = 80
CONTACT_TOL = 1e-12
METHOD = "DOP853"
# Tolerances of the full/reduced consistency runs.
CONSISTENCY_REL_TOL = 1e-12
CONSISTENCY_ABS_TOL = 1e-14


@dataclass
class SoftProblem:
    """Initial value problem for the soft system on t_span = (T₀, T₁).

    ``z0`` holds at T₀.
    """

    potential: HardenedPotential
    z0: PhasePoint
    t_span: Tuple[float, float] = field(default=None)
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    max_energy_drift: float = MAX_ENERGY_DRIFT

    def __post_init__(self):
        if self.t_span is None:
            self.t_span = default_time_span(self.potential, self.z0)
        t0, t1 = (float(t) for t in self.t_span)
        if not t0 < t1:
            raise ConfigError(f"t_span must be increasing, got {self.t_span}")
        for name in ("rel_tol", "abs_tol"):
            tol = getattr(self, name)
            if not 0 < tol <= 1e-4:
                raise ConfigError(f"{name} must lie in (0, 1e-4], got {tol}")
        self.t_span = (t0, t1)

    @property
    def max_step(self) -> float:
        """Step cap resolving a collision of duration O(ε^{1/β})."""
        return self.potential.support_time_scale() / 10.0


def default_time_span(potential: HardenedPotential, z0: PhasePoint) -> Tuple[float, float]:
    """
    Time span [0, 2(1 + t_enter + Δτ_estimate)] covering one full collision.

    The duration estimate is the smaller of two upper bounds: the depth
    below the head-on closest approach over the initial radial speed, and
    2π/√A₀, since the polar angle turns at rate √A₀/r² ≥ √A₀ and sweeps
    less than π inside a repulsive support.
    """
    inv = collision_invariants(z0)
    y0 = z0.x - z0.xbar
    w0 = z0.v - z0.vbar
    if inv.E0 == 0.0:
        return 0.0, 2.0
    t_enter = collision_time(z0) if z0.separation >= 1.0 else 0.0
    t_enter = 0.0 if t_enter is None else t_enter
    rho_low = inverse_on_support(potential.base, inv.E0 * potential.epsilon / 2.0)
    radial = abs(float(y0 @ w0)) / max(np.linalg.norm(y0), 1e-300)
    bounds = []
    if radial > 0.0:
        bounds.append(4.0 * (1.0 - rho_low) / radial)
    if inv.A0 > 0.0:
        bounds.append(2.0 * np.pi / np.sqrt(inv.A0))
    estimate = min(bounds)
    return 0.0, 2.0 * (1.0 + t_enter + estimate)


def _full_rhs(potential: HardenedPotential) -> Callable:
    def rhs(t, Z):
        force = potential.force(Z[0:3] - Z[3:6])
        return np.concatenate([Z[6:9], Z[9:12], force, -force])
    return rhs


def _reduced_rhs(potential: HardenedPotential) -> Callable:
    def rhs(t, Y):
        return np.concatenate([Y[3:6], 2.0 * potential.force(Y[0:3])])
    return rhs


def _full_energy(potential: HardenedPotential, states: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(states[:, 0:3] - states[:, 3:6], axis=1)
    kinetic = 0.5 * (np.sum(states[:, 6:9] ** 2, axis=1) + np.sum(states[:, 9:12] ** 2, axis=1))
    return kinetic + np.asarray(potential.eval(r))


def _reduced_energy(potential: HardenedPotential, states: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(states[:, 0:3], axis=1)
    return 0.5 * np.sum(states[:, 3:6] ** 2, axis=1) + 2.0 * np.asarray(potential.eval(r))


def _solve(p: SoftProblem, rhs: Callable, y0: np.ndarray, energy: Callable, reduced: bool) -> SampledTrajectory:
    sol = solve_ivp(
        rhs,
        p.t_span,
        y0,
        method=METHOD,
        rtol=p.rel_tol,
        atol=p.abs_tol,
        max_step=p.max_step,
        dense_output=True,
    )
    if sol.status != 0:
        raise IntegrationError(f"Integration failed at t={sol.t[-1]:.17g}: {sol.message}")
    states = sol.y.T
    if not np.all(np.isfinite(states)):
        raise IntegrationError("Integrator produced non-finite states")

    H = energy(p.potential, states)
    scale = max(abs(H[0]), np.finfo(float).tiny)
    drift = float(np.max(np.abs(H - H[0])) / scale)
    logger.debug(
        "%s run eps=%.3e: %d steps, %d rhs evaluations, energy drift %.3e",
        "reduced" if reduced else "full", p.potential.epsilon, sol.t.size, sol.nfev, drift,
    )
    if drift > p.max_energy_drift:
        raise EnergyDriftError(
            f"Energy drift {drift:.3e} exceeds {p.max_energy_drift:.1e} at eps={p.potential.epsilon:.3e}",
            drift=drift,
        )
    return SampledTrajectory(
        times=sol.t,
        states=states,
        dense_eval=sol.sol,
        energy_drift=drift,
        epsilon=p.potential.epsilon,
        reduced=reduced,
        nfev=sol.nfev,
    )


def integrate(p: SoftProblem) -> SampledTrajectory:
    """
    Integrate the 12-dimensional soft system.

    dx/dt = v, dx̄/dt = v̄, dv/dt = −∇Φ^ε(x − x̄), dv̄/dt = +∇Φ^ε(x − x̄),
    with an adaptive 8(5,3) Dormand–Prince pair and its dense output.

    Args:
        p: Soft initial value problem

    Returns:
        SampledTrajectory of full states

    Raises:
        ConfigError: If the two centres coincide initially
        IntegrationError: On step-size underflow near the origin singularity
        EnergyDriftError: If the Hamiltonian drifts by more than the limit
    """
    if p.z0.separation == 0.0:
        raise ConfigError("Soft phase space excludes coinciding centres x = x̄")
    return _solve(p, _full_rhs(p.potential), p.z0.to_array(), _full_energy, reduced=False)


def integrate_reduced(p: SoftProblem) -> SampledTrajectory:
    """Integrate dy/dt = w, dw/dt = −2∇Φ^ε(y) from y₀ = x₀ − x̄₀, w₀ = v₀ − v̄₀."""
    if p.z0.separation == 0.0:
        raise ConfigError("Soft phase space excludes coinciding centres x = x̄")
    y0 = np.concatenate([p.z0.x - p.z0.xbar, p.z0.v - p.z0.vbar])
    return _solve(p, _reduced_rhs(p.potential), y0, _reduced_energy, reduced=True)


def reduced_consistency_residual(p: SoftProblem, samples: int = 201) -> float:
    """
    Sup-norm distance between to_reduced(integrate(p)) and integrate_reduced(p).

    Both runs use the tighter of the problem's tolerances and
    CONSISTENCY_REL_TOL / CONSISTENCY_ABS_TOL, and are compared on a
    common uniform grid of ``samples`` times over t_span.
    """
    tight = SoftProblem(
        p.potential,
        p.z0,
        p.t_span,
        min(p.rel_tol, CONSISTENCY_REL_TOL),
        min(p.abs_tol, CONSISTENCY_ABS_TOL),
        p.max_energy_drift,
    )
    full = integrate(tight)
    reduced = integrate_reduced(tight)
    t = np.linspace(*tight.t_span, samples)
    diff = np.hstack([
        full.relative_position(t) - reduced.relative_position(t),
        full.relative_velocity(t) - reduced.relative_velocity(t),
    ])
    residual = float(np.max(np.abs(diff)))
    logger.debug("Full/reduced consistency at eps=%.3e: %.3e", p.potential.epsilon, residual)
    return residual


def _contact_function(tr: SampledTrajectory) -> Callable[[float], float]:
    def F(t):
        y = tr.relative_position(t)
        return float(y @ y) - 1.0
    return F


def _crossing(F: Callable[[float], float], lo: float, hi: float) -> float:
    f_lo, f_hi = F(lo), F(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        return lo if abs(f_lo) <= abs(f_hi) else hi
    return brentq(F, lo, hi, xtol=EVENT_XTOL, maxiter=EVENT_MAXITER)


def detect_contact_window(tr: SampledTrajectory) -> ContactWindow:
    """
    Locate entrance and exit times of the supports.

    Sign changes of F(t) = |y(t)|² − 1 are bracketed on the step grid (and
    its midpoints) and refined on the dense output. A start on the contact
    sphere with inward relative velocity is an entrance at T₀.

    Raises:
        NumericalError: If the trajectory starts or ends inside the support
    """
    F = _contact_function(tr)
    t_start, t_end = tr.t_span

    mids = 0.5 * (tr.times[:-1] + tr.times[1:])
    grid = np.sort(np.concatenate([tr.times, mids]))
    y = tr.relative_position(grid)
    w = tr.relative_velocity(grid)
    values = np.sum(y * y, axis=1) - 1.0

    if values[0] < -CONTACT_TOL or values[-1] < -CONTACT_TOL:
        raise NumericalError("Trajectory too short: an endpoint lies inside the support")

    entering_at_start = abs(values[0]) <= CONTACT_TOL and float(y[0] @ w[0]) < 0
    leaving_at_end = abs(values[-1]) <= CONTACT_TOL and float(y[-1] @ w[-1]) > 0
    if entering_at_start:
        values[0] = 0.0

    # Samples in the round-off band around zero still bracket a crossing.
    downs, ups = [], []
    inside = entering_at_start
    for i in range(1, grid.size):
        a, b = values[i - 1], values[i]
        if not inside and a >= 0 > b:
            downs.append(_crossing(F, grid[i - 1], grid[i]))
            inside = True
        elif inside and a < 0 <= b:
            ups.append(_crossing(F, grid[i - 1], grid[i]))
            inside = False

    tau_minus = t_start if entering_at_start else (downs[0] if downs else None)
    if tau_minus is None:
        return ContactWindow(None, None)
    if inside:
        if leaving_at_end:
            ups.append(t_end)
        else:
            raise NumericalError("Trajectory too short: contact window not closed before T1")
    return ContactWindow(float(tau_minus), float(ups[-1]))


def time_reversal_residual(p: SoftProblem) -> float:
    """
    Integrate forward, reverse velocities, integrate the same duration and
    reverse again; return the sup-norm distance to Z₀.
    """
    forward = integrate(p)
    zT = forward.final_state()
    flipped = PhasePoint(zT.x, zT.xbar, -zT.v, -zT.vbar)
    back = integrate(SoftProblem(p.potential, flipped, p.t_span, p.rel_tol, p.abs_tol, p.max_energy_drift))
    z_back = back.final_state()
    returned = np.concatenate([z_back.x, z_back.xbar, -z_back.v, -z_back.vbar])
    return float(np.max(np.abs(returned - p.z0.to_array())))


def soft_velocity_path(tr: SampledTrajectory) -> Callable[[np.ndarray], np.ndarray]:
    """
    Velocity map t ↦ V^ε(t) = (v^ε, v̄^ε).

    Outside the integrated span the velocities are held at their end
    values, which is exact when both ends are force-free.
    """
    t_lo, t_hi = tr.t_span
    V_lo = tr.states[0, 6:12]
    V_hi = tr.states[-1, 6:12]

    def path(t):
        t_arr = np.asarray(t, dtype=float)
        ts = np.atleast_1d(t_arr)
        out = np.empty((ts.size, 6))
        inside = (ts >= t_lo) & (ts <= t_hi)
        if np.any(inside):
            out[inside] = tr.velocities(ts[inside])
        out[ts < t_lo] = V_lo
        out[ts > t_hi] = V_hi
        return out[0] if t_arr.ndim == 0 else out

    return path


def problem_on_interval(
    potential: HardenedPotential,
    z0: PhasePoint,
    interval: Tuple[float, float],
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> SoftProblem:
    """
    Soft problem for data ``z0`` given at t = 0 observed on (T₀, T₁).

    For T₀ < 0 the datum is flown back freely, which is exact for data on
    the pre-collisional contact set and for separated data.
    """
    t0, t1 = interval
    start = free_flight(z0, t0) if t0 < 0 else z0
    begin = min(t0, 0.0)
    end = max(t1, default_time_span(potential, z0)[1])
    return SoftProblem(potential, start, (begin, end), rel_tol, abs_tol)


def trajectory_table(tr: SampledTrajectory, potential: HardenedPotential, times=None) -> np.ndarray:
    """
    Rows t, x(3), x̄(3), v(3), v̄(3), H, |y| for CSV export.

    Args:
        tr: Full (non-reduced) trajectory
        potential: Potential used for the energy column
        times: Output times; defaults to the integrator steps
    """
    if tr.reduced:
        raise ValueError("Trajectory export needs a full 12-dimensional run")
    t = tr.times if times is None else np.asarray(times, dtype=float)
    states = tr(t)
    H = _full_energy(potential, states)
    sep = np.linalg.norm(states[:, 0:3] - states[:, 3:6], axis=1)
    return np.column_stack([t, states, H, sep])
