"""Variation and L¹ diagnostics for soft versus hard velocity trajectories.

Paths are vectorised callables t ↦ u(t) returning one row per time. The
variation of a path is the supremum over partitions of summed increments;
it is approached by uniform partitions of doubling size, with known kinks
(collision time, contact window endpoints) always kept as partition points.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import quad

from .exceptions import ConfigError
from .geometry import angular_momentum, kinetic_energy, linear_momentum
from .hard_dynamics import hard_velocity_path, sample_hard, surgery_solve
from .models import (
    BoundReport,
    ConvergenceReport,
    Partition,
    PhasePoint,
    VariationReport,
)
from .potentials import HardenedPotential, ReferencePotential
from .soft_dynamics import (
    DEFAULT_ABS_TOL,
    DEFAULT_REL_TOL,
    detect_contact_window,
    integrate,
    problem_on_interval,
    soft_velocity_path,
)

logger = logging.getLogger(__name__)

Path = Callable[[np.ndarray], np.ndarray]

VARIATION_TOL = 1e-8
VARIATION_MAX_N = 2 ** 20
L1_TOL = 1e-9
CONSERVATION_SAMPLES = 2001


class LogLogFit(NamedTuple):
    slope: float
    intercept: float
    residual: float
    ci: Tuple[float, float]


def fit_loglog(x: Sequence[float], y: Sequence[float]) -> LogLogFit:
    """
    Ordinary least squares of log y against log x.

    Returns:
        Slope, intercept, RMS residual and a 95% confidence interval on the slope
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ValueError("A log-log fit needs at least two points")
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    ci = (float("nan"), float("nan"))
    dof = lx.size - 2
    if dof > 0:
        se = np.sqrt(np.sum(resid ** 2) / dof / np.sum((lx - lx.mean()) ** 2))
        half = float(stats.t.ppf(0.975, dof) * se)
        ci = (float(coef[0] - half), float(coef[0] + half))
    return LogLogFit(slope=float(coef[0]), intercept=float(coef[1]), residual=rms, ci=ci)


def _rows(u: Path, t: np.ndarray) -> np.ndarray:
    values = np.asarray(u(t), dtype=float)
    return values.reshape(t.size, -1)


def pointwise_variation(
    u: Path,
    part: Partition,
    domain: Optional[Tuple[float, float]] = None,
) -> float:
    """
    Σ_j |u(t_{j+1}) − u(t_j)| over a partition, Euclidean norm on the values.

    Raises:
        ValueError: If the partition leaves the declared domain of ``u``
    """
    if domain is not None and (part.points[0] < domain[0] or part.points[-1] > domain[1]):
        raise ValueError(f"Partition leaves the domain {domain} of the path")
    values = _rows(u, part.points)
    return float(np.sum(np.linalg.norm(np.diff(values, axis=0), axis=1)))


def l1_norm(u: Path, interval: Tuple[float, float], breakpoints: Sequence[float] = (), tol: float = L1_TOL) -> float:
    """∫_I |u(t)| dt."""
    return l1_distance(u, lambda t: np.zeros_like(np.asarray(u(t), dtype=float)), interval, breakpoints, tol)


def variation_refined(
    u: Path,
    interval: Tuple[float, float],
    breakpoints: Sequence[float] = (),
    tol: float = VARIATION_TOL,
    n_start: int = 16,
    n_max: int = VARIATION_MAX_N,
) -> VariationReport:
    """
    Pointwise variation on uniform partitions of doubling size.

    Stops when the relative change drops below ``tol`` or the partition
    exceeds ``n_max`` cells; non-convergence is reported, not raised.
    """
    n = n_start
    previous = None
    p_var = 0.0
    converged = False
    while n <= n_max:
        p_var = pointwise_variation(u, Partition.uniform(interval, n, breakpoints))
        if previous is not None:
            change = abs(p_var - previous)
            if change <= tol * max(p_var, np.finfo(float).tiny) or p_var == previous:
                converged = True
                break
        previous = p_var
        n *= 2
    if not converged:
        logger.warning("Variation did not converge on %s up to N=%d (last %.12g)", interval, n_max, p_var)
    return VariationReport(
        p_var=p_var,
        l1_norm=l1_norm(u, interval, breakpoints),
        refinement_level=min(n, n_max),
        converged=converged,
    )


def l1_distance(
    u: Path,
    w: Path,
    interval: Tuple[float, float],
    breakpoints: Sequence[float] = (),
    tol: float = L1_TOL,
) -> float:
    """
    ∫_I |u(t) − w(t)| dt by adaptive quadrature, split at the breakpoints.
    """
    t0, t1 = interval
    points = sorted(b for b in breakpoints if t0 < b < t1)

    def integrand(t):
        diff = np.asarray(u(t), dtype=float) - np.asarray(w(t), dtype=float)
        return float(np.linalg.norm(diff))

    value, _ = quad(integrand, t0, t1, points=points or None, epsabs=tol, epsrel=1e-10, limit=1000)
    return float(value)


@dataclass
class _SoftRun:
    eps: float
    path: Path
    breakpoints: List[float]
    momentum_residual: float


def _soft_run(
    z0: PhasePoint,
    base: ReferencePotential,
    eps: float,
    interval: Tuple[float, float],
    rel_tol: float,
    abs_tol: float,
    hard_breaks: Sequence[float],
) -> _SoftRun:
    pot = HardenedPotential(base, eps)
    trajectory = integrate(problem_on_interval(pot, z0, interval, rel_tol, abs_tol))
    window = detect_contact_window(trajectory)
    breaks = list(hard_breaks)
    if not window.none_flag:
        breaks += [window.tau_minus, window.tau_plus]
    path = soft_velocity_path(trajectory)

    t = np.linspace(interval[0], interval[1], CONSERVATION_SAMPLES)
    V = path(t)
    momentum = V[:, 0:3] + V[:, 3:6]
    residual = float(np.max(np.linalg.norm(momentum - (z0.v + z0.vbar), axis=1)))
    return _SoftRun(eps=eps, path=path, breakpoints=sorted(breaks), momentum_residual=residual)


def _check_grid(eps_grid: Sequence[float]) -> List[float]:
    eps = [float(e) for e in eps_grid]
    if not eps or any(not 0 < e < 1 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps_grid must be strictly decreasing inside (0, 1)")
    return eps


def _soft_runs(z0, base, eps, interval, rel_tol, abs_tol, hard_breaks, threads) -> List[_SoftRun]:
    def run(e):
        return _soft_run(z0, base, e, interval, rel_tol, abs_tol, hard_breaks)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, eps))
    return [run(e) for e in eps]


def _hard_breaks(tr, interval) -> List[float]:
    if tr.collides and interval[0] < tr.collision_time < interval[1]:
        return [tr.collision_time]
    return []


def _bound_report(runs: List[_SoftRun], interval, hard_variation: float) -> BoundReport:
    variations = [variation_refined(r.path, interval, r.breakpoints) for r in runs]
    return BoundReport(eps=[r.eps for r in runs], variations=variations, hard_variation=hard_variation)


def hard_variation(z0: PhasePoint, interval: Tuple[float, float]) -> float:
    """Variation of the hard velocities on the interval: the jump √2|(v₀ − v̄₀)·n| if τ ∈ I."""
    tr = surgery_solve(z0)
    return tr.velocity_jump if _hard_breaks(tr, interval) else 0.0


def uniform_bound_check(
    z0: PhasePoint,
    base: ReferencePotential,
    eps_grid: Sequence[float],
    interval: Tuple[float, float],
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    threads: int = 1,
) -> BoundReport:
    """
    Variation of V^ε = (v^ε, v̄^ε) on the interval for every ε of the grid.

    The report's ``bounded`` flag is the numeric proxy for the uniform
    bound: the supremum over the grid may not exceed 1.5 times the value at
    the largest ε plus the hard-limit variation.
    """
    eps = _check_grid(eps_grid)
    tr = surgery_solve(z0)
    breaks = _hard_breaks(tr, interval)
    runs = _soft_runs(z0, base, eps, interval, rel_tol, abs_tol, breaks, threads)
    return _bound_report(runs, interval, tr.velocity_jump if breaks else 0.0)


def _hard_conservation(z0: PhasePoint, interval) -> Tuple[float, float]:
    tr = surgery_solve(z0)
    t = np.linspace(interval[0], interval[1], CONSERVATION_SAMPLES)
    states = sample_hard(tr, t)
    LM0 = linear_momentum(z0)
    AM0 = angular_momentum(z0, np.zeros(3))
    KE0 = kinetic_energy(z0)
    worst = 0.0
    for row in states:
        z = PhasePoint.from_array(row)
        worst = max(
            worst,
            float(np.linalg.norm(linear_momentum(z) - LM0)),
            float(np.linalg.norm(angular_momentum(z, np.zeros(3)) - AM0)),
            abs(kinetic_energy(z) - KE0) / max(KE0, 1.0),
        )
    separation = float(np.min(np.linalg.norm(states[:, 0:3] - states[:, 3:6], axis=1)))
    return worst, separation


def weak_star_report(
    z0: PhasePoint,
    base: ReferencePotential,
    eps_grid: Sequence[float],
    interval: Tuple[float, float],
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    threads: int = 1,
) -> ConvergenceReport:
    """
    Bounded variation plus L¹ convergence of V^ε to the hard velocities.

    Also reports conservation residuals of the hard limit at sampled times,
    the momentum residual of the soft velocities and the minimum hard
    separation.
    """
    eps = _check_grid(eps_grid)
    tr = surgery_solve(z0)
    breaks = _hard_breaks(tr, interval)
    hard_path = hard_velocity_path(tr)
    runs = _soft_runs(z0, base, eps, interval, rel_tol, abs_tol, breaks, threads)

    bound = _bound_report(runs, interval, tr.velocity_jump if breaks else 0.0)
    distances = [l1_distance(r.path, hard_path, interval, r.breakpoints) for r in runs]
    positive = [(e, d) for e, d in zip(eps, distances) if d > 0]
    slope = fit_loglog(*zip(*positive)).slope if len(positive) >= 2 else float("nan")
    conservation, separation = _hard_conservation(z0, interval)

    return ConvergenceReport(
        eps=eps,
        l1_distances=distances,
        l1_slope=slope,
        bound=bound,
        conservation_max_residual=conservation,
        soft_momentum_residual=max((r.momentum_residual for r in runs), default=0.0),
        min_hard_separation=separation,
    )
