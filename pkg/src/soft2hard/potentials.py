"""Reference potential Φ₀, the hardening family Φ^ε = Φ₀/ε and hypothesis checks.

The standard family is Φ₀(r) = r^{-s}(1 − r)^β on (0, 1], zero beyond. The
exponent s must be positive so that Φ₀ blows up at the origin; negative s
(which some write-ups of this family state) would make Φ₀ vanish there.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Mapping, Optional

import numpy as np
from scipy.optimize import brentq

from .exceptions import ConfigError, HypothesisError
from .models import CertifiedConstants, ValidationReport

logger = logging.getLogger(__name__)

DEFAULT_R0 = 0.5


def _scalar_or_array(value, like):
    return float(value) if np.ndim(like) == 0 else value


@dataclass
class ReferencePotential:
    """Radial profile Φ₀ supported on [0, 1] with its derivative.

    ``eval_fn`` and ``deriv_fn`` receive an array of radii in (0, 1) only;
    the support cut-off and the origin are handled here.
    """

    eval_fn: Callable[[np.ndarray], np.ndarray]
    deriv_fn: Callable[[np.ndarray], np.ndarray]
    s: float
    beta: float
    name: str = "custom"
    certified_constants: Optional[CertifiedConstants] = field(default=None, compare=False)

    def eval(self, r):
        """Φ₀(r); zero for r ≥ 1, +∞ at r ≤ 0."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(r_arr)
        inside = (r_arr > 0) & (r_arr < 1)
        out[r_arr <= 0] = np.inf
        if np.any(inside):
            out[inside] = self.eval_fn(r_arr[inside])
        return _scalar_or_array(out[0] if np.ndim(r) == 0 else out, r)

    def deriv(self, r):
        """Φ₀′(r); zero for r ≥ 1, −∞ at r ≤ 0."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(r_arr)
        inside = (r_arr > 0) & (r_arr < 1)
        out[r_arr <= 0] = -np.inf
        if np.any(inside):
            out[inside] = self.deriv_fn(r_arr[inside])
        return _scalar_or_array(out[0] if np.ndim(r) == 0 else out, r)

    def describe(self) -> dict:
        return {"family": self.name, "s": self.s, "beta": self.beta}


@dataclass(frozen=True)
class HardenedPotential:
    """Φ^ε(y) = Φ₀(|y|)/ε."""

    base: ReferencePotential
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"Hardening parameter must lie in (0, 1), got {self.epsilon}")

    @property
    def beta(self) -> float:
        return self.base.beta

    def eval(self, r):
        return self.base.eval(r) / self.epsilon

    def deriv(self, r):
        return self.base.deriv(r) / self.epsilon

    def gradient(self, y) -> np.ndarray:
        """∇Φ^ε(y) = Φ₀′(|y|)/ε · y/|y| (rows of ``y`` are points)."""
        y = np.asarray(y, dtype=float)
        r = np.linalg.norm(y, axis=-1)
        r_safe = np.where(r > 0, r, 1.0)
        scale = np.asarray(self.deriv(r)) / r_safe
        return y * scale[..., None] if y.ndim > 1 else y * float(scale)

    def force(self, y) -> np.ndarray:
        """Force on body 1, −∇Φ^ε(x − x̄)."""
        return -self.gradient(y)

    def support_time_scale(self) -> float:
        """ε^{1/β}, the order of the collision duration."""
        return self.epsilon ** (1.0 / self.beta)


def standard_family(s: float, beta: float) -> ReferencePotential:
    """
    Build Φ₀(r) = r^{-s}(1 − r)^β with its analytic derivative.

    Args:
        s: Origin-singularity exponent, s > 0
        beta: Boundary decay exponent, β > 2

    Returns:
        ReferencePotential of the standard family

    Raises:
        HypothesisError: If s ≤ 0 (origin blow-up violated) or β ≤ 2
    """
    if not s > 0:
        raise HypothesisError(
            f"origin blow-up violated: s must be positive, got s={s}",
            hypothesis="P1-blowup",
        )
    if not beta > 2:
        raise HypothesisError(
            f"beta > 2 required, got beta={beta}",
            hypothesis="P2-beta",
        )

    def eval_fn(r):
        return r ** (-s) * (1.0 - r) ** beta

    def deriv_fn(r):
        return r ** (-s - 1.0) * (1.0 - r) ** (beta - 1.0) * (-s * (1.0 - r) - beta * r)

    return ReferencePotential(eval_fn, deriv_fn, s=float(s), beta=float(beta), name="standard")


def potential_from_spec(spec: Mapping) -> ReferencePotential:
    """Build a reference potential from {"family": "standard", "s": ..., "beta": ...}."""
    family = spec.get("family", "standard")
    if family != "standard":
        raise ConfigError(f"Unknown potential family: {family!r}")
    return standard_family(float(spec.get("s", 1.0)), float(spec.get("beta", 3.0)))


def inverse_on_support(p: ReferencePotential, value: float) -> float:
    """
    Invert Φ₀ on (0, 1).

    Args:
        p: Reference potential (strictly decreasing on (0, 1))
        value: Target value, > 0

    Returns:
        The unique r in (0, 1) with Φ₀(r) = value

    Raises:
        ValueError: If value ≤ 0 (Φ₀ vanishes on the whole of [1, ∞))
    """
    if not value > 0:
        raise ValueError(f"inverse_on_support needs a positive value, got {value}")

    lo = 0.5
    while p.eval(lo) <= value:
        lo *= 0.5
        if lo < 1e-300:
            raise ValueError(f"Φ₀ never reaches {value} on (0, 1)")
    return float(brentq(lambda r: p.eval(r) - value, lo, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))


def validate_hypotheses(
    p: ReferencePotential,
    grid_size: int = 2000,
    r0: float = DEFAULT_R0,
) -> ValidationReport:
    """
    Numerically check the structural hypotheses on a grid.

    Checks positivity, strict decrease and convexity on (0, 1), compact
    support, blow-up at the origin and agreement of the derivative with
    central differences. On [r0, 1 − 1/grid_size] the envelope constants
    c₁, c₂ (of Φ₀/(1 − r)^β) and κ₁, κ₂ (of |Φ₀′|/(1 − r)^{β−1}) are taken
    as grid inf/sup and stored on ``p`` when every check passes.

    Args:
        p: Reference potential to validate
        grid_size: Number of grid cells on (0, 1), at least 100
        r0: Left end of the envelope interval

    Returns:
        ValidationReport listing each failed hypothesis with its grid point
    """
    if grid_size < 100:
        raise ConfigError(f"grid_size must be at least 100, got {grid_size}")

    failures: List[str] = []
    r = np.arange(1, grid_size) / grid_size
    phi = np.asarray(p.eval(r))
    dphi = np.asarray(p.deriv(r))

    def first_bad(mask: np.ndarray) -> Optional[float]:
        idx = np.flatnonzero(mask)
        return float(r[idx[0]]) if idx.size else None

    bad = first_bad(~(phi > 0))
    if bad is not None:
        failures.append(f"P1-positive: Φ₀(r) ≤ 0 at r={bad:.6g}")
    bad = first_bad(~(dphi < 0))
    if bad is not None:
        failures.append(f"P1-monotone: Φ₀′(r) ≥ 0 at r={bad:.6g}")

    second = phi[:-2] - 2.0 * phi[1:-1] + phi[2:]
    convex_bad = np.flatnonzero(~(second > 0))
    convex = convex_bad.size == 0
    if not convex:
        failures.append(f"P1-convex: second difference ≤ 0 at r={r[convex_bad[0] + 1]:.6g}")

    outside = np.asarray(p.eval(np.array([1.0, 1.5, 2.0])))
    if np.any(outside != 0):
        failures.append("P1-support: Φ₀ does not vanish on r ≥ 1")
    if not p.eval(1e-8) > 1e6:
        failures.append("P1-blowup: Φ₀(1e-8) ≤ 1e6")

    # Derivative consistency on interior points, relative to the local scale.
    h = 1e-6
    r_check = r[(r > 0.01) & (r < 0.999)][:: max(1, grid_size // 200)]
    fd = (np.asarray(p.eval(r_check + h)) - np.asarray(p.eval(r_check - h))) / (2 * h)
    d = np.asarray(p.deriv(r_check))
    rel = np.abs(fd - d) / np.maximum(np.abs(d), 1e-12)
    if np.any(rel > 1e-4):
        failures.append(f"P1-derivative: Φ₀′ disagrees with finite differences at r={r_check[np.argmax(rel)]:.6g}")

    window = r >= r0
    constants = None
    if np.any(window) and not failures:
        gap = 1.0 - r[window]
        ratio_phi = phi[window] / gap ** p.beta
        ratio_dphi = np.abs(dphi[window]) / gap ** (p.beta - 1.0)
        constants = CertifiedConstants(
            c1=float(ratio_phi.min()),
            c2=float(ratio_phi.max()),
            kappa1=float(ratio_dphi.min()),
            kappa2=float(ratio_dphi.max()),
            r0=float(r0),
        )
        if not (0 < constants.c1 <= constants.c2 and np.isfinite(constants.c2)):
            failures.append("P2-envelope: no finite positive c₁ ≤ c₂ on [r0, 1)")
        if not (0 < constants.kappa1 <= constants.kappa2 and np.isfinite(constants.kappa2)):
            failures.append("P3-envelope: no finite positive κ₁ ≤ κ₂ on [r0, 1)")

    passed = not failures
    if passed:
        p.certified_constants = constants
        logger.debug("Certified constants for %s: %s", p.name, constants)
    else:
        logger.warning("Potential %s failed validation: %s", p.name, "; ".join(failures))
    return ValidationReport(passed=passed, failures=failures, constants=constants if passed else None, convex=convex)
