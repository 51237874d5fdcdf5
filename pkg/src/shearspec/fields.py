"""Shear profiles and confinement weights.

A shear profile is the positive speed field ``psi(x')`` of the transport
operator; a weight field is the positive bounded function ``w(x1, x')`` that
equals 1 outside its confinement region and is integrable along each confined
fiber.  Both come as small parametric families plus a user-sampled grid form;
every other module consumes these objects.

Profiles and weights depend on the first fiber coordinate only (written
``x2``); for two fiber dimensions the remaining coordinate is passive.  The
fiber domain is the finite box [-fiber_halfwidth, fiber_halfwidth] per axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError, QuadratureError

PROFILE_KINDS = ("constant", "affine-saturating", "bump-plus-floor", "user-sampled")
WEIGHT_KINDS = ("unit", "exponential-decay", "gaussian", "compact-bump",
                "product-separable", "user-sampled")
MASS_PROFILES = ("constant", "linear", "plateau-linear")

_SQRT_PI = math.sqrt(math.pi)
# sup |d/dx exp(-x^2)| = sqrt(2/e), attained at x = 1/sqrt(2)
_BUMP_SLOPE = math.sqrt(2.0 / math.e)


def _first_coord(xprime) -> float:
    if xprime is None:
        return 0.0
    arr = np.atleast_1d(np.asarray(xprime, dtype=float))
    return float(arr[0]) if arr.size else 0.0


@dataclass(frozen=True)
class ConfinementRegion:
    """The set S of confined fibers, as intervals in the first fiber coordinate.

    ``representation`` is one of ``full`` (every fiber confined), ``empty``
    (no weight anywhere) or ``intervals``.  Membership of a fiber point is
    decided by its first coordinate alone.
    """

    representation: str = "empty"
    intervals: tuple[tuple[float, float], ...] = ()
    measure_positive_complement: bool = True

    def __post_init__(self):
        if self.representation not in ("full", "empty", "intervals"):
            raise ConfigError(f"unknown confinement representation {self.representation!r}")
        ivs = sorted(self.intervals)
        for (a, b) in ivs:
            if not a < b:
                raise ConfigError(f"degenerate confinement interval ({a}, {b})")
        for (_, b), (a2, _) in zip(ivs, ivs[1:]):
            if a2 <= b:
                raise ConfigError("confinement intervals must be disjoint")
        object.__setattr__(self, "intervals", tuple(ivs))
        if self.representation == "full":
            object.__setattr__(self, "measure_positive_complement", False)

    @classmethod
    def full(cls) -> "ConfinementRegion":
        return cls(representation="full")

    @classmethod
    def empty(cls) -> "ConfinementRegion":
        return cls(representation="empty")

    @classmethod
    def from_intervals(cls, intervals) -> "ConfinementRegion":
        return cls(representation="intervals", intervals=tuple(tuple(iv) for iv in intervals))

    def contains(self, xprime) -> bool:
        if self.representation == "full":
            return True
        if self.representation == "empty":
            return False
        x2 = _first_coord(xprime)
        return any(a <= x2 <= b for a, b in self.intervals)

    def is_empty(self) -> bool:
        return self.representation == "empty"

    def is_full(self) -> bool:
        return self.representation == "full"

    def locate(self, xprime) -> tuple[int, float] | None:
        """Index of the containing interval and normalized position in [0, 1]."""
        if self.representation != "intervals":
            return None
        x2 = _first_coord(xprime)
        for i, (a, b) in enumerate(self.intervals):
            if a <= x2 <= b:
                return i, (x2 - a) / (b - a)
        return None


@dataclass(frozen=True)
class BoundaryPhase:
    """Boundary matching phase alpha = e^{i beta} selecting the self-adjoint extension.

    ``beta`` is constant per experiment; ``beta_fn`` (a map from the fiber
    point to [0, 2pi)) is only used by the singular-continuous construction.
    """

    beta: float = 0.0
    beta_fn: object = None

    def __post_init__(self):
        if not 0.0 <= self.beta < 2.0 * math.pi:
            raise ConfigError(f"beta must lie in [0, 2pi), got {self.beta}")

    @property
    def alpha(self) -> complex:
        return complex(math.cos(self.beta), math.sin(self.beta))

    def beta_at(self, xprime) -> float:
        if self.beta_fn is not None:
            return float(self.beta_fn(xprime))
        return self.beta

    def alpha_at(self, xprime) -> complex:
        b = self.beta_at(xprime)
        return complex(math.cos(b), math.sin(b))


@dataclass(frozen=True)
class ShearProfile:
    """Positive speed field psi with its regularity metadata.

    ``ell`` is the declared uniform lower bound and ``lipschitz`` the declared
    global Lipschitz constant; both are validated against samples by
    :func:`validate_regularity`.  ``dim_fiber`` = 0 means the one-dimensional
    operator with scalar constant psi.
    """

    kind: str
    params: tuple[float, ...]
    ell: float
    lipschitz: float
    dim_fiber: int = 1
    fiber_halfwidth: float = 4.0
    sample_axis: tuple[float, ...] = ()
    sample_values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ConfigError(f"unknown profile kind {self.kind!r}")
        if self.ell <= 0.0:
            raise ConfigError("profile lower bound ell must be positive")
        if self.lipschitz < 0.0:
            raise ConfigError("Lipschitz constant must be nonnegative")
        if self.dim_fiber not in (0, 1, 2):
            raise ConfigError("dim_fiber must be 0, 1 or 2")
        if self.kind != "constant" and self.dim_fiber == 0:
            raise ConfigError(f"{self.kind} profile requires dim_fiber >= 1")

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, c: float, dim_fiber: int = 0, fiber_halfwidth: float = 4.0) -> "ShearProfile":
        if c <= 0:
            raise ConfigError("constant profile must be positive")
        return cls("constant", (c,), ell=c, lipschitz=0.0,
                   dim_fiber=dim_fiber, fiber_halfwidth=fiber_halfwidth)

    @classmethod
    def affine_saturating(cls, base: float = 2.0, amplitude: float = 1.0,
                          dim_fiber: int = 1, fiber_halfwidth: float = 4.0,
                          ell: float | None = None, lipschitz: float | None = None) -> "ShearProfile":
        """psi(x2) = base + amplitude * tanh(x2); ell = base - |amplitude|, L = |amplitude|."""
        ell_v = base - abs(amplitude) if ell is None else ell
        lip_v = abs(amplitude) if lipschitz is None else lipschitz
        return cls("affine-saturating", (base, amplitude), ell=ell_v, lipschitz=lip_v,
                   dim_fiber=dim_fiber, fiber_halfwidth=fiber_halfwidth)

    @classmethod
    def bump_plus_floor(cls, floor: float = 1.0, amplitude: float = 1.0,
                        dim_fiber: int = 1, fiber_halfwidth: float = 4.0) -> "ShearProfile":
        """psi(x2) = floor + amplitude * exp(-x2^2); L = |amplitude| * sqrt(2/e)."""
        return cls("bump-plus-floor", (floor, amplitude),
                   ell=floor, lipschitz=abs(amplitude) * _BUMP_SLOPE,
                   dim_fiber=dim_fiber, fiber_halfwidth=fiber_halfwidth)

    @classmethod
    def user_sampled(cls, axis, values, ell: float, lipschitz: float,
                     dim_fiber: int = 1) -> "ShearProfile":
        axis = tuple(float(a) for a in axis)
        values = tuple(float(v) for v in values)
        if len(axis) != len(values) or len(axis) < 2:
            raise ConfigError("user-sampled profile needs matching axis/values, length >= 2")
        if any(v <= 0 for v in values):
            raise ConfigError("sampled profile values must be positive")
        return cls("user-sampled", (), ell=ell, lipschitz=lipschitz, dim_fiber=dim_fiber,
                   fiber_halfwidth=max(abs(axis[0]), abs(axis[-1])),
                   sample_axis=axis, sample_values=values)

    # -- evaluation ---------------------------------------------------------

    def values(self, x2: np.ndarray) -> np.ndarray:
        """Vectorized psi over first-fiber-coordinate samples."""
        x2 = np.asarray(x2, dtype=float)
        if self.kind == "constant":
            return np.full_like(x2, self.params[0])
        if self.kind == "affine-saturating":
            a, b = self.params
            return a + b * np.tanh(x2)
        if self.kind == "bump-plus-floor":
            a, b = self.params
            return a + b * np.exp(-(x2 ** 2))
        lo, hi = self.sample_axis[0], self.sample_axis[-1]
        if np.any(x2 < lo - 1e-12) or np.any(x2 > hi + 1e-12):
            raise DomainError("sampled profile queried outside its sample axis")
        return np.interp(x2, self.sample_axis, self.sample_values)

    def gradient(self, x2: np.ndarray) -> np.ndarray:
        """d psi / d x2 for the closed-form families."""
        x2 = np.asarray(x2, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(x2)
        if self.kind == "affine-saturating":
            _, b = self.params
            return b / np.cosh(x2) ** 2
        if self.kind == "bump-plus-floor":
            _, b = self.params
            return -2.0 * b * x2 * np.exp(-(x2 ** 2))
        raise DomainError("no closed-form gradient for user-sampled profiles")

    def sup_bound(self) -> float:
        if self.kind == "constant":
            return self.params[0]
        if self.kind in ("affine-saturating", "bump-plus-floor"):
            a, b = self.params
            return a + abs(b)
        return max(self.sample_values)


def evaluate_profile(profile: ShearProfile, xprime) -> float:
    """psi at one fiber point.  For dim_fiber = 0, pass None (or ()) as the point."""
    if profile.dim_fiber == 0:
        return float(profile.params[0])
    x2 = _first_coord(xprime)
    if profile.kind != "user-sampled" and abs(x2) > profile.fiber_halfwidth + 1e-12:
        raise DomainError(f"fiber point {x2} outside box of halfwidth {profile.fiber_halfwidth}")
    return float(profile.values(np.asarray([x2]))[0])


@dataclass(frozen=True)
class WeightField:
    """Confinement weight w(x1, x') with per-fiber mass W(x') and bound M.

    Outside the confinement region the weight is identically 1 (fiber mass
    infinite); inside, each family has a closed-form fiber mass.  ``m_bound``
    is the declared uniform bound M (strict: W < M on S), when available.
    """

    kind: str
    params: dict = field(default_factory=dict)
    confinement: ConfinementRegion = field(default_factory=ConfinementRegion.empty)
    m_bound: float | None = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ConfigError(f"unknown weight kind {self.kind!r}")
        if self.kind == "unit" and not self.confinement.is_empty():
            raise ConfigError("unit weight must have an empty confinement region")
        if self.kind != "unit" and self.confinement.is_empty():
            raise ConfigError(f"{self.kind} weight needs a nonempty confinement region")
        if self.m_bound is not None and self.m_bound <= 0:
            raise ConfigError("m_bound must be positive")
        if self.kind == "product-separable":
            prof = self.params.get("mass_profile", "constant")
            if prof not in MASS_PROFILES:
                raise ConfigError(f"unknown mass profile {prof!r}")
            if self.params.get("base", "exp") not in ("exp", "gaussian"):
                raise ConfigError("product-separable base must be 'exp' or 'gaussian'")

    # -- constructors -------------------------------------------------------

    @classmethod
    def unit(cls) -> "WeightField":
        return cls("unit")

    @classmethod
    def exponential(cls, scale: float = 1.0, region: ConfinementRegion | None = None,
                    m_bound: float | None = None) -> "WeightField":
        """w = exp(-|x1|/scale) on S; fiber mass 2*scale."""
        region = ConfinementRegion.full() if region is None else region
        return cls("exponential-decay", {"scale": float(scale)}, region, m_bound)

    @classmethod
    def gaussian(cls, scale: float = 1.0, region: ConfinementRegion | None = None,
                 m_bound: float | None = None) -> "WeightField":
        """w = exp(-(x1/scale)^2) on S; fiber mass scale*sqrt(pi)."""
        region = ConfinementRegion.full() if region is None else region
        return cls("gaussian", {"scale": float(scale)}, region, m_bound)

    @classmethod
    def compact_bump(cls, flat_halfwidth: float = 1.0, tail_scale: float = 0.5,
                     region: ConfinementRegion | None = None,
                     m_bound: float | None = None) -> "WeightField":
        """Flat top of halfwidth r with exponential tails of scale s; mass 2r + 2s.

        The weight stays strictly positive everywhere, as required; "compact"
        refers to the flat core, not the support.
        """
        region = ConfinementRegion.full() if region is None else region
        return cls("compact-bump", {"flat_halfwidth": float(flat_halfwidth),
                                    "tail_scale": float(tail_scale)}, region, m_bound)

    @classmethod
    def product_separable(cls, region: ConfinementRegion, mass_lo: float, mass_hi: float,
                          base: str = "exp", mass_profile: str = "linear",
                          m_bound: float | None = None) -> "WeightField":
        """Fiber-dependent mass over S: W(x2) follows ``mass_profile`` from lo to hi.

        ``linear`` ramps lo -> hi across each confinement interval;
        ``plateau-linear`` holds hi on the first half then ramps hi -> lo;
        ``constant`` is hi everywhere.  mass_lo = 0 is allowed (the infimum is
        then not attained) and only enters spectrum assembly through W ranges.
        """
        if mass_hi <= 0 or mass_lo < 0 or mass_lo > mass_hi:
            raise ConfigError("need 0 <= mass_lo <= mass_hi, mass_hi > 0")
        return cls("product-separable",
                   {"base": base, "mass_profile": mass_profile,
                    "mass_lo": float(mass_lo), "mass_hi": float(mass_hi)},
                   region, m_bound)

    @classmethod
    def user_sampled(cls, axis, values, region: ConfinementRegion,
                     m_bound: float | None = None) -> "WeightField":
        axis = np.asarray(axis, dtype=float)
        values = np.asarray(values, dtype=float)
        if axis.ndim != 1 or axis.shape != values.shape or axis.size < 4:
            raise ConfigError("user-sampled weight needs matching 1-D axis/values, length >= 4")
        if np.any(values <= 0):
            raise ConfigError("weight samples must be strictly positive")
        return cls("user-sampled", {"axis": tuple(axis), "values": tuple(values)},
                   region, m_bound)

    # -- per-fiber data -----------------------------------------------------

    def fiber_scale(self, xprime) -> float:
        """The 1-D scale of the weight slice on a confined fiber."""
        if self.kind == "exponential-decay" or self.kind == "gaussian":
            return self.params["scale"]
        if self.kind == "compact-bump":
            return self.params["tail_scale"]
        if self.kind == "product-separable":
            mass = self._separable_mass(xprime)
            if self.params.get("base", "exp") == "exp":
                return mass / 2.0
            return mass / _SQRT_PI
        raise DomainError(f"no scalar fiber scale for kind {self.kind!r}")

    def _separable_mass(self, xprime) -> float:
        loc = self.confinement.locate(xprime)
        if loc is None:
            raise DomainError("fiber point outside the confinement region")
        _, u = loc
        lo, hi = self.params["mass_lo"], self.params["mass_hi"]
        prof = self.params.get("mass_profile", "constant")
        if prof == "constant":
            return hi
        if prof == "linear":
            return lo + (hi - lo) * u
        # plateau-linear: hold hi on [0, 1/2], ramp hi -> lo on (1/2, 1]
        if u <= 0.5:
            return hi
        return hi + (lo - hi) * (2.0 * u - 1.0)

    def slice_values(self, x1: np.ndarray, xprime) -> np.ndarray:
        """w(x1, x') along one fiber (identically 1 off the confinement region)."""
        x1 = np.asarray(x1, dtype=float)
        if not self.confinement.contains(xprime):
            return np.ones_like(x1)
        if self.kind == "exponential-decay":
            return np.exp(-np.abs(x1) / self.params["scale"])
        if self.kind == "gaussian":
            return np.exp(-((x1 / self.params["scale"]) ** 2))
        if self.kind == "compact-bump":
            r, s = self.params["flat_halfwidth"], self.params["tail_scale"]
            return np.exp(-np.maximum(np.abs(x1) - r, 0.0) / s)
        if self.kind == "product-separable":
            s = self.fiber_scale(xprime)
            if s <= 0:
                raise DomainError("degenerate fiber (zero mass) has no weight slice")
            if self.params.get("base", "exp") == "exp":
                return np.exp(-np.abs(x1) / s)
            return np.exp(-((x1 / s) ** 2))
        axis = np.asarray(self.params["axis"])
        vals = np.asarray(self.params["values"])
        return np.interp(x1, axis, vals, left=vals[0], right=vals[-1])

    def mass_range(self) -> tuple[float, float]:
        """(inf, sup) of the fiber mass over S, in closed form where available."""
        if self.confinement.is_empty():
            return (math.inf, math.inf)
        if self.kind == "exponential-decay":
            m = 2.0 * self.params["scale"]
            return (m, m)
        if self.kind == "gaussian":
            m = self.params["scale"] * _SQRT_PI
            return (m, m)
        if self.kind == "compact-bump":
            m = 2.0 * (self.params["flat_halfwidth"] + self.params["tail_scale"])
            return (m, m)
        if self.kind == "product-separable":
            if self.params.get("mass_profile", "constant") == "constant":
                return (self.params["mass_hi"], self.params["mass_hi"])
            return (self.params["mass_lo"], self.params["mass_hi"])
        axis = np.asarray(self.params["axis"])
        vals = np.asarray(self.params["values"])
        m = float(np.trapezoid(vals, axis))
        return (m, m)

    def sup_norm(self) -> float:
        return 1.0

    def breakpoints(self, xprime) -> tuple[float, ...]:
        """x1 locations where the fiber slice loses smoothness (kinks of w)."""
        if not self.confinement.contains(xprime):
            return ()
        if self.kind == "exponential-decay":
            return (0.0,)
        if self.kind == "compact-bump":
            r = self.params["flat_halfwidth"]
            return (-r, r)
        if self.kind == "product-separable" and self.params.get("base", "exp") == "exp":
            return (0.0,)
        return ()

    def tail_cutoff(self, xprime, tail_mass: float = 1e-10) -> float:
        """X such that the fiber weight mass beyond |x1| > X is below ``tail_mass``."""
        if not self.confinement.contains(xprime):
            raise DomainError("tail cutoff requested on an unconfined fiber")
        if self.kind in ("exponential-decay", "gaussian", "compact-bump", "product-separable"):
            if self.kind == "gaussian" or (self.kind == "product-separable"
                                           and self.params.get("base") == "gaussian"):
                s = self.fiber_scale(xprime)
                return s * float(special.erfcinv(tail_mass / (s * _SQRT_PI)))
            s = self.fiber_scale(xprime)
            r = self.params.get("flat_halfwidth", 0.0) if self.kind == "compact-bump" else 0.0
            return r + s * math.log(2.0 * s / tail_mass)
        axis = np.asarray(self.params["axis"])
        return float(max(abs(axis[0]), abs(axis[-1])))


def fiber_mass(weight: WeightField, xprime) -> float:
    """W(x') = integral of w(., x') over the line; ``inf`` off the confinement region.

    Built-in families use closed forms; user-sampled weights fall back to
    trapezoid quadrature with a half-resolution convergence check.
    """
    if not weight.confinement.contains(xprime):
        return math.inf
    if weight.kind == "exponential-decay":
        return 2.0 * weight.params["scale"]
    if weight.kind == "gaussian":
        return weight.params["scale"] * _SQRT_PI
    if weight.kind == "compact-bump":
        return 2.0 * (weight.params["flat_halfwidth"] + weight.params["tail_scale"])
    if weight.kind == "product-separable":
        return weight._separable_mass(xprime)
    axis = np.asarray(weight.params["axis"])
    vals = np.asarray(weight.params["values"])
    full = float(np.trapezoid(vals, axis))
    half = float(np.trapezoid(vals[::2], axis[::2]))
    achieved = abs(full - half) / max(abs(full), 1e-300)
    if achieved > 1e-6:
        raise QuadratureError(
            f"sampled-weight mass quadrature not converged (achieved rel. tol {achieved:.3e})",
            achieved_tol=achieved)
    return full


@dataclass(frozen=True)
class RegularityReport:
    ell_observed: float
    lipschitz_observed: float
    passed: bool


def validate_regularity(profile: ShearProfile, sample_count: int) -> RegularityReport:
    """Check the declared (ell, L) against profile samples on the fiber box.

    ``ell_observed`` is the sample minimum; ``lipschitz_observed`` the largest
    adjacent difference quotient (which dominates all pair quotients on a 1-D
    axis).  Passing allows 1e-12 slack against the declared constants.
    """
    if sample_count < 2:
        raise ConfigError("need at least 2 samples")
    if profile.dim_fiber == 0:
        v = profile.params[0]
        return RegularityReport(v, 0.0, passed=(v >= profile.ell - 1e-12))
    if profile.kind == "user-sampled":
        axis = np.asarray(profile.sample_axis)
        x2 = np.linspace(axis[0], axis[-1], sample_count)
    else:
        x2 = np.linspace(-profile.fiber_halfwidth, profile.fiber_halfwidth, sample_count)
    vals = profile.values(x2)
    ell_obs = float(np.min(vals))
    quot = np.abs(np.diff(vals)) / np.diff(x2)
    lip_obs = float(np.max(quot)) if quot.size else 0.0
    passed = (ell_obs >= profile.ell - 1e-12) and (lip_obs <= profile.lipschitz + 1e-12)
    return RegularityReport(ell_obs, lip_obs, passed)
