"""Data models for soft2hard."""

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

# Mass of each sphere; the quasi-reflection takes its own mass argument.
MASS = 1.0


def _vec3(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"Non-finite component in {arr!r}")
    return arr


@dataclass(frozen=True)
class PhasePoint:
    """Full two-body state Z = [x, x̄, v, v̄] (unit diameters, unit masses)."""

    x: np.ndarray
    xbar: np.ndarray
    v: np.ndarray
    vbar: np.ndarray

    def __post_init__(self):
        for name in ("x", "xbar", "v", "vbar"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))

    @property
    def X(self) -> np.ndarray:
        """Positions Π₁Z as a 6-vector."""
        return np.concatenate([self.x, self.xbar])

    @property
    def V(self) -> np.ndarray:
        """Velocities Π₂Z as a 6-vector."""
        return np.concatenate([self.v, self.vbar])

    @property
    def separation(self) -> float:
        return float(np.linalg.norm(self.x - self.xbar))

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.xbar, self.v, self.vbar])

    @classmethod
    def from_array(cls, arr) -> "PhasePoint":
        arr = np.asarray(arr, dtype=float).reshape(12)
        return cls(arr[0:3], arr[3:6], arr[6:9], arr[9:12])

    @classmethod
    def from_blocks(cls, X, V) -> "PhasePoint":
        X = np.asarray(X, dtype=float).reshape(6)
        V = np.asarray(V, dtype=float).reshape(6)
        return cls(X[:3], X[3:], V[:3], V[3:])


@dataclass(frozen=True)
class ReducedState:
    """Centre-of-mass frame variables (y, w, ȳ, w̄)."""

    y: np.ndarray
    w: np.ndarray
    ybar: np.ndarray
    wbar: np.ndarray

    def __post_init__(self):
        for name in ("y", "w", "ybar", "wbar"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))


@dataclass(frozen=True)
class CollisionInvariants:
    """Reduced energy E₀ = ½|w₀|² and squared angular momentum A₀ = |y₀∧w₀|²."""

    E0: float
    A0: float

    def __post_init__(self):
        if self.E0 < 0 or self.A0 < 0:
            raise ValueError(f"Invariants must be non-negative: E0={self.E0}, A0={self.A0}")

    @property
    def radial_speed_squared(self) -> float:
        """(y₀·w₀)² for data on the contact sphere |y₀| = 1."""
        return max(2.0 * self.E0 - self.A0, 0.0)


class ConfigClass(Enum):
    """Collision-configuration class of a phase point."""
    PRE_COLLISIONAL = "pre_collisional"
    POST_COLLISIONAL = "post_collisional"
    GRAZING = "grazing"
    NON_CONTACT = "non_contact"


# ---------------------------------------------------------------------------
# Hard-sphere dynamics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScatteringMatrix:
    """Boltzmann scattering σ_n = I − 2ν̂_n⊗ν̂_n."""

    matrix: np.ndarray
    normal: np.ndarray
    nu_hat: np.ndarray

    def apply(self, V) -> np.ndarray:
        return self.matrix @ np.asarray(V, dtype=float).reshape(6)


@dataclass(frozen=True)
class HardTrajectory:
    """Piecewise-linear hard-sphere solution produced by trajectory surgery.

    All times are absolute; ``t0`` is the time at which ``initial`` holds.
    """

    initial: PhasePoint
    t0: float
    collision_time: Optional[float]
    pre_velocities: np.ndarray
    post_velocities: np.ndarray
    grazing: bool
    normal: Optional[np.ndarray] = None

    @property
    def collides(self) -> bool:
        return self.collision_time is not None and not self.grazing

    @property
    def velocity_jump(self) -> float:
        """Euclidean norm of the 6-vector velocity jump at the collision."""
        return float(np.linalg.norm(self.post_velocities - self.pre_velocities))


@dataclass(frozen=True)
class MassInertia:
    """Mass m, inertia tensor J and block matrix M = diag(√m I, √m I, √J, √J)."""

    m: float
    J: np.ndarray
    M: np.ndarray


# ---------------------------------------------------------------------------
# Soft dynamics
# ---------------------------------------------------------------------------

@dataclass
class SampledTrajectory:
    """Dense numerical solution of the soft system.

    For full runs ``states`` has 12 columns [x, x̄, v, v̄]; for reduced runs
    6 columns [y, w] and ``reduced`` is True.
    """

    times: np.ndarray
    states: np.ndarray
    dense_eval: Callable[[np.ndarray], np.ndarray]
    energy_drift: float
    epsilon: float
    reduced: bool = False
    nfev: int = 0

    def __call__(self, t) -> np.ndarray:
        """Evaluate the dense interpolant; rows are states for array ``t``."""
        t_arr = np.asarray(t, dtype=float)
        out = np.asarray(self.dense_eval(np.atleast_1d(t_arr)))
        out = out.T
        return out[0] if t_arr.ndim == 0 else out

    @property
    def t_span(self) -> Tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def relative_position(self, t) -> np.ndarray:
        s = self(t)
        if self.reduced:
            return s[..., 0:3]
        return s[..., 0:3] - s[..., 3:6]

    def relative_velocity(self, t) -> np.ndarray:
        s = self(t)
        if self.reduced:
            return s[..., 3:6]
        return s[..., 6:9] - s[..., 9:12]

    def velocities(self, t) -> np.ndarray:
        """V^ε(t) = (v^ε, v̄^ε); only defined for full runs."""
        if self.reduced:
            raise ValueError("Reduced trajectories carry no body velocities")
        return self(t)[..., 6:12]

    def final_state(self) -> PhasePoint:
        if self.reduced:
            raise ValueError("Reduced trajectories carry no body states")
        return PhasePoint.from_array(self.states[-1])


@dataclass(frozen=True)
class ContactWindow:
    """Entrance and exit times of the supports of the two soft spheres."""

    tau_minus: Optional[float]
    tau_plus: Optional[float]

    @property
    def none_flag(self) -> bool:
        return self.tau_minus is None

    @property
    def duration(self) -> float:
        if self.none_flag:
            return 0.0
        return float(self.tau_plus - self.tau_minus)


# ---------------------------------------------------------------------------
# Scattering analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarFrame:
    """Rotation R₀ with R₀e₃ along y₀∧w₀, and the initial polar angle ϑ₀."""

    R0: np.ndarray
    theta0: float

    @staticmethod
    def e(theta: float) -> np.ndarray:
        """Planar unit vector (sin ϑ, cos ϑ)."""
        return np.array([np.sin(theta), np.cos(theta)])

    def embed(self, theta: float) -> np.ndarray:
        """R₀[e(ϑ), 0] in world coordinates."""
        return self.R0 @ np.append(self.e(theta), 0.0)


@dataclass(frozen=True)
class CollisionAnalysis:
    """Closest approach, timing and apse line of one soft collision."""

    rho_star: float
    tau_star: float
    theta_star: float
    apse: np.ndarray
    epsilon: float
    invariants_in: CollisionInvariants
    branch: str = "generic"


@dataclass(frozen=True)
class SoftScatteringResult:
    """σ^εZ₀ assembled from the apse line and the time of closest approach."""

    pre: PhasePoint
    post: PhasePoint
    nu_hat_star: np.ndarray
    exit_time: float

    @property
    def reflection(self) -> np.ndarray:
        return np.eye(6) - 2.0 * np.outer(self.nu_hat_star, self.nu_hat_star)


@dataclass
class SweepRow:
    """One ε of a hardening sweep."""

    eps: float
    rho_star: float = float("nan")
    tau_star: float = float("nan")
    theta_star: float = float("nan")
    apse: np.ndarray = field(default_factory=lambda: np.full(3, np.nan))
    scatter_err: float = float("nan")
    apse_err: float = float("nan")
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepTable:
    """Rows ordered by ε plus the fitted collision-duration exponent."""

    rows: List[SweepRow]
    beta: float
    slope: float = float("nan")
    slope_ci: Tuple[float, float] = (float("nan"), float("nan"))

    @property
    def beta_inverse(self) -> float:
        return 1.0 / self.beta

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows], dtype=float)

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "slope_ci": list(self.slope_ci),
            "beta_inverse": self.beta_inverse,
            "rows": len(self.rows),
            "failed_rows": sum(1 for row in self.rows if not row.ok),
        }


# ---------------------------------------------------------------------------
# Variation analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """Strictly increasing finite set of points in an interval I = (T₀, T₁).

    Points lie in the closure [T₀, T₁]. A point at T₀ or T₁ samples the
    one-sided value u(T₀⁺) or u(T₁⁻), so paths must be continuous at the
    ends of I; jumps at T₀ or T₁ themselves are not part of the variation on I.
    """

    points: np.ndarray
    interval: Tuple[float, float]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        t0, t1 = self.interval
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("A partition needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("Partition points must be strictly increasing")
        if pts[0] < t0 or pts[-1] > t1:
            raise ValueError(f"Partition points leave the closure [{t0}, {t1}] of the interval")

    @classmethod
    def uniform(cls, interval: Tuple[float, float], n: int, breakpoints=()) -> "Partition":
        """n + 1 equispaced points on the closed interval, plus breakpoints."""
        t0, t1 = interval
        pts = np.linspace(t0, t1, n + 1)
        extra = [b for b in breakpoints if t0 < b < t1]
        if extra:
            pts = np.unique(np.concatenate([pts, extra]))
        return cls(pts, interval)


@dataclass(frozen=True)
class VariationReport:
    """Pointwise variation with its refinement level."""

    p_var: float
    l1_norm: float
    refinement_level: int
    converged: bool

    @property
    def bv_norm(self) -> float:
        return self.l1_norm + self.p_var


@dataclass
class BoundReport:
    """Uniform variation bound over an ε grid."""

    eps: List[float]
    variations: List[VariationReport]
    hard_variation: float

    @property
    def var_max(self) -> float:
        return max((r.p_var for r in self.variations), default=0.0)

    @property
    def ratio(self) -> float:
        if self.hard_variation == 0.0:
            return 0.0 if self.var_max == 0.0 else float("inf")
        return self.var_max / self.hard_variation

    @property
    def bounded(self) -> bool:
        """sup over the grid ≤ 1.5 × value at the largest ε + hard-limit value."""
        if not self.variations:
            return True
        first = self.variations[0].p_var
        return bool(np.isfinite(self.var_max)) and self.var_max <= 1.5 * first + self.hard_variation


@dataclass
class ConvergenceReport:
    """Evidence for weak-star convergence of V^ε to the hard velocities."""

    eps: List[float]
    l1_distances: List[float]
    l1_slope: float
    bound: BoundReport
    conservation_max_residual: float
    soft_momentum_residual: float
    min_hard_separation: float

    @property
    def strictly_decreasing(self) -> bool:
        d = np.asarray(self.l1_distances)
        return bool(np.all(np.diff(d) < 0))

    def summary(self) -> dict:
        return {
            "l1_slope": self.l1_slope,
            "var_max": self.bound.var_max,
            "var_hard": self.bound.hard_variation,
            "bounded": self.bound.bounded,
            "l1_strictly_decreasing": self.strictly_decreasing,
            "conservation_max_residual": self.conservation_max_residual,
            "soft_momentum_residual": self.soft_momentum_residual,
            "min_hard_separation": self.min_hard_separation,
        }


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CertifiedConstants:
    """Empirical envelope constants c₁, c₂, κ₁, κ₂ on [r₀, 1)."""

    c1: float
    c2: float
    kappa1: float
    kappa2: float
    r0: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "c1": self.c1,
            "c2": self.c2,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "r0": self.r0,
        }


@dataclass
class ValidationReport:
    """Outcome of the numerical hypothesis check of a reference potential."""

    passed: bool
    failures: List[str]
    constants: Optional[CertifiedConstants] = None
    convex: bool = True

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failures": list(self.failures),
            "convex": self.convex,
            "constants": self.constants.to_dict() if self.constants else None,
        }


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Configuration for one soft2hard experiment."""

    # Potential
    family: str = "standard"
    s: float = 1.0
    beta: float = 3.0

    # Initial datum: a preset name or an explicit 12-vector [x, x̄, v, v̄]
    preset: Optional[str] = "head_on"
    datum: Optional[List[float]] = None

    # Hardening grid ε = 2^{-k}, k_min..k_max, or a single ε
    k_min: int = 6
    k_max: int = 20
    eps: Optional[float] = None

    # Interval of study (T₀, T₁)
    t0: float = -1.0
    t1: float = 1.0

    # Tolerances
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    quad_tol: float = 1e-10

    # Output
    output_dir: Optional[Path] = None
    verbose: bool = False
    json_output: bool = False

    # Performance
    threads: int = 1
    grid_size: int = 2000
    samples: int = 1001

    @property
    def eps_grid(self) -> List[float]:
        """Strictly decreasing hardening grid."""
        if self.eps is not None:
            return [float(self.eps)]
        return [2.0 ** (-k) for k in range(self.k_min, self.k_max + 1)]

    def get_output_dir(self, command: str) -> Path:
        """Get the actual output directory."""
        if self.output_dir:
            return self.output_dir
        return Path("soft2hard_out") / command

    def to_dict(self) -> dict:
        """Canonical JSON-ready form; excludes presentation-only fields."""
        return {
            "family": self.family,
            "s": self.s,
            "beta": self.beta,
            "preset": self.preset,
            "datum": self.datum,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "eps": self.eps,
            "t0": self.t0,
            "t1": self.t1,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "quad_tol": self.quad_tol,
            "grid_size": self.grid_size,
            "samples": self.samples,
        }


@dataclass
class RunSummary:
    """Summary of one CLI command."""

    command: str
    outputs: List[Path]
    details: dict
    start_time: datetime
    end_time: datetime
    failed: bool = False
    error: Optional[str] = None

    @property
    def elapsed_time(self) -> float:
        """Total elapsed time in seconds."""
        return (self.end_time - self.start_time).total_seconds()

    @property
    def exit_code(self) -> int:
        """Exit code for CLI: 0 = success, 1 = numerical failure."""
        return 1 if self.failed else 0

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON output."""
        return {
            "command": self.command,
            "outputs": [str(p) for p in self.outputs],
            "details": self.details,
            "failed": self.failed,
            "error": self.error,
            "elapsed_time": self.elapsed_time,
        }
