"""Assembling the operator spectrum from fiber ladders.

The direct-integral criterion makes the spectrum the union, over positive-
measure families of fibers, of the closures of the fiber eigenvalue branches
lambda_k(x') = psi(x') (beta + 2 pi k) / W(x').  Unconfined fibers contribute
the whole line.  This module builds that union as an explicit interval/point
set, computes the weighted spectral gap, detects embedded eigenvalues from
mass plateaus, and constructs the Cantor-phase example with singular
continuous spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import intervals as iv
from .errors import ConfigError, DomainError
from .fields import BoundaryPhase, ShearProfile, WeightField

TAG_PP = "pp"
TAG_AC = "ac-candidate"
TAG_SC = "sc"

POINT_TOL = 1e-12
MAX_CANTOR_DEPTH = 30
MAX_MATERIALIZED_DEPTH = 16


@dataclass(frozen=True)
class SpectrumPoint:
    value: float
    multiplicity: str = "finite"  # "finite" | "infinite"
    embedded: bool = False


@dataclass
class SpectrumSet:
    """Disjoint closed intervals plus isolated points, with classification tags.

    ``interval_tags``/``point_tags`` align with the component lists; merged
    serialization order is intervals first, then points.  ``resolved_band``
    bounds the lambda range the finite branch window fully determines (None
    means complete); queries outside are answered as unresolved.
    """

    intervals: list[tuple[float, float]] = field(default_factory=list)
    interval_tags: list[str] = field(default_factory=list)
    points: list[SpectrumPoint] = field(default_factory=list)
    point_tags: list[str] = field(default_factory=list)
    resolved_band: tuple[float, float] | None = None
    merge_tol: float = iv.MERGE_TOL

    def normalized(self) -> "SpectrumSet":
        by_tag: dict[str, list[tuple[float, float]]] = {}
        for (lo, hi), tag in zip(self.intervals, self.interval_tags):
            by_tag.setdefault(tag, []).append((lo, hi))
        out_ivs: list[tuple[float, float]] = []
        out_tags: list[str] = []
        for tag in sorted(by_tag):
            merged = iv.normalize(by_tag[tag], self.merge_tol)
            out_ivs.extend(merged)
            out_tags.extend([tag] * len(merged))
        order = np.argsort([lo for lo, _ in out_ivs]) if out_ivs else []
        out_ivs = [out_ivs[i] for i in order]
        out_tags = [out_tags[i] for i in order]

        # dedupe points, flag any interior to an interval as embedded
        seen: list[SpectrumPoint] = []
        seen_tags: list[str] = []
        for pt, tag in sorted(zip(self.points, self.point_tags), key=lambda z: z[0].value):
            dup = next((i for i, q in enumerate(seen)
                        if abs(q.value - pt.value) <= self.merge_tol), None)
            if dup is not None:
                if pt.multiplicity == "infinite":
                    seen[dup] = replace(seen[dup], multiplicity="infinite")
                if pt.embedded:
                    seen[dup] = replace(seen[dup], embedded=True)
                continue
            if _interior_to(out_ivs, pt.value, self.merge_tol):
                pt = replace(pt, embedded=True)
            seen.append(pt)
            seen_tags.append(tag)
        return SpectrumSet(out_ivs, out_tags, seen, seen_tags,
                           self.resolved_band, self.merge_tol)

    def union(self, other: "SpectrumSet") -> "SpectrumSet":
        band = _band_union(self.resolved_band, other.resolved_band)
        return SpectrumSet(self.intervals + other.intervals,
                           self.interval_tags + other.interval_tags,
                           self.points + other.points,
                           self.point_tags + other.point_tags,
                           band, max(self.merge_tol, other.merge_tol)).normalized()

    def contains(self, lam: float, tol: float = 1e-9) -> bool:
        if iv.contains(self.intervals, lam, tol):
            return True
        return any(abs(p.value - lam) <= tol for p in self.points)

    def is_resolved(self, lam: float) -> bool:
        if self.resolved_band is None:
            return True
        lo, hi = self.resolved_band
        return lo <= lam <= hi

    def min_nonzero_abs(self) -> float:
        """Distance from 0 to the nearest nonzero spectral component."""
        best = math.inf
        for lo, hi in self.intervals:
            if lo == 0.0 and hi == 0.0:
                continue
            if lo <= 0.0 <= hi:
                return 0.0
            best = min(best, lo if lo > 0.0 else -hi)
        for p in self.points:
            if p.value != 0.0:
                best = min(best, abs(p.value))
        return best

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "intervals": [[_enc(lo), _enc(hi)] for lo, hi in self.intervals],
            "points": [{"lambda": p.value, "multiplicity": p.multiplicity,
                        "embedded": p.embedded} for p in self.points],
            "tags": list(self.interval_tags) + list(self.point_tags),
            "resolved_band": None if self.resolved_band is None
            else [_enc(self.resolved_band[0]), _enc(self.resolved_band[1])],
            "merge_tol": self.merge_tol,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumSet":
        ivs = [(_dec(a), _dec(b)) for a, b in d["intervals"]]
        pts = [SpectrumPoint(p["lambda"], p["multiplicity"], p.get("embedded", False))
               for p in d["points"]]
        tags = d["tags"]
        band = d.get("resolved_band")
        return cls(ivs, tags[:len(ivs)], pts, tags[len(ivs):],
                   None if band is None else (_dec(band[0]), _dec(band[1])),
                   d.get("merge_tol", iv.MERGE_TOL))


def _enc(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _dec(x) -> float:
    if isinstance(x, str):
        return math.inf if x == "inf" else -math.inf
    return float(x)


def _interior_to(intervals, x: float, tol: float) -> bool:
    for lo, hi in intervals:
        strict_lo = x > lo + tol if not math.isinf(lo) else True
        strict_hi = x < hi - tol if not math.isinf(hi) else True
        if strict_lo and strict_hi and iv.contains([(lo, hi)], x):
            return True
    return False


def _band_union(a, b):
    """Resolved band of a union: where both parts answer, conservatively.

    None marks a fully resolved set; because every fully resolved operand in
    this package is also full-line spectrum, the union inherits completeness.
    """
    if a is None or b is None:
        return None
    return (max(a[0], b[0]), min(a[1], b[1]))


# -- branch machinery ---------------------------------------------------------


def _fiber_points(profile: ShearProfile, fiber_samples: int) -> list:
    if profile.dim_fiber == 0:
        return [None]
    xw = profile.fiber_halfwidth
    return list(np.linspace(-xw, xw, fiber_samples))


def _psi_over_w_range(profile: ShearProfile, weight: WeightField,
                      s_points: list) -> tuple[float, float, bool]:
    """(inf, sup) of psi/W over confined fibers; exact for constant psi."""
    if profile.kind == "constant" and weight.kind != "user-sampled":
        m, mm = weight.mass_range()
        psi = profile.params[0]
        lo = psi / mm if mm > 0 else math.inf
        hi = math.inf if m == 0.0 else psi / m
        return lo, hi, True
    from .fields import fiber_mass
    vals = []
    for xp in s_points:
        w = fiber_mass(weight, xp)
        psi = profile.params[0] if profile.dim_fiber == 0 else float(profile.values(np.asarray([xp]))[0])
        if w > 0 and not math.isinf(w):
            vals.append(psi / w)
    if not vals:
        return math.inf, math.inf, False
    return min(vals), max(vals), False


def _branch_component(a_k: float, ratio_lo: float, ratio_hi: float,
                      point_multiplicity: str):
    """Closure of {a_k * r : r in the psi/W ratio range} as interval or point."""
    if a_k == 0.0:
        return ("point", SpectrumPoint(0.0, point_multiplicity))
    lo = a_k * ratio_lo if a_k > 0 else a_k * ratio_hi
    hi = a_k * ratio_hi if a_k > 0 else a_k * ratio_lo
    if not math.isinf(lo) and not math.isinf(hi) and abs(hi - lo) <= POINT_TOL * max(1.0, abs(lo)):
        return ("point", SpectrumPoint(lo, point_multiplicity))
    return ("interval", (lo, hi))


def assemble_spectrum(profile: ShearProfile, weight: WeightField, phase: BoundaryPhase,
                      k_window: tuple[int, int], fiber_samples: int = 129,
                      restrict: str = "full") -> SpectrumSet:
    """Union of closed branch ranges over k, plus the full line off S.

    ``restrict`` picks the confined part ("S"), its complement ("Sc") or the
    whole operator ("full"); the decomposition satisfies the union law
    S + Sc = full.  Branch endpoints use the closed-form mass range when the
    profile is constant; otherwise the sampled closure of the branch values.
    """
    if phase.beta_fn is not None:
        raise ConfigError("assemble_spectrum requires a constant boundary phase")
    if fiber_samples < 2:
        raise ConfigError("need at least 2 fiber samples")
    if restrict not in ("full", "S", "Sc"):
        raise ConfigError(f"unknown restriction {restrict!r}")
    k_lo, k_hi = k_window
    if k_hi < k_lo:
        raise ConfigError("empty branch window")

    pts = _fiber_points(profile, fiber_samples)
    region = weight.confinement
    s_points = [p for p in pts if region.contains(p)]
    out = SpectrumSet()

    has_s = bool(s_points) and restrict in ("full", "S")
    has_sc = restrict in ("full", "Sc") and _complement_positive(profile, region)

    if has_s:
        ratio_lo, ratio_hi, exact = _psi_over_w_range(profile, weight, s_points)
        mult = "finite" if profile.dim_fiber == 0 else "infinite"
        point_mult = mult if ratio_lo == ratio_hi else "infinite"
        for k in range(k_lo, k_hi + 1):
            a_k = phase.beta + 2.0 * math.pi * k
            kind, payload = _branch_component(a_k, ratio_lo, ratio_hi, point_mult)
            if kind == "point":
                out.points.append(payload)
                out.point_tags.append(TAG_PP)
            else:
                out.intervals.append(payload)
                out.interval_tags.append(TAG_AC)
        for lam in detect_embedded_eigenvalues(weight, phase, fiber_samples,
                                               k_window=k_window, profile=profile):
            out.points.append(SpectrumPoint(lam, "infinite", embedded=False))
            out.point_tags.append(TAG_PP)
        out.resolved_band = _resolved_band(phase, k_window, ratio_lo, ratio_hi)

    if has_sc:
        # the full line makes every query resolved regardless of the window
        out.intervals.append((-math.inf, math.inf))
        out.interval_tags.append(TAG_AC)
        out.resolved_band = None

    return out.normalized()


def _complement_positive(profile: ShearProfile, region) -> bool:
    if region.is_full():
        return False
    if region.is_empty():
        return True
    if profile.dim_fiber == 0:
        return False
    box = 2.0 * profile.fiber_halfwidth
    covered = sum(min(b, profile.fiber_halfwidth) - max(a, -profile.fiber_halfwidth)
                  for a, b in region.intervals
                  if b > -profile.fiber_halfwidth and a < profile.fiber_halfwidth)
    return covered < box - 1e-12


def _resolved_band(phase: BoundaryPhase, k_window: tuple[int, int],
                   ratio_lo: float, ratio_hi: float):
    """Range of lambda fully determined by the finite branch window.

    The first missing branches (k below/above the window) approach zero no
    closer than a_k * ratio_lo; inside that the window is complete.
    """
    k_lo, k_hi = k_window
    a_above = phase.beta + 2.0 * math.pi * (k_hi + 1)
    a_below = phase.beta + 2.0 * math.pi * (k_lo - 1)
    hi = a_above * ratio_lo if a_above > 0 else math.inf
    lo = a_below * ratio_lo if a_below < 0 else -math.inf
    return (lo, hi)


def branch_table(profile: ShearProfile, weight: WeightField, phase: BoundaryPhase,
                 k_window: tuple[int, int], fiber_samples: int = 129) -> list[tuple[int, float, float]]:
    """Rows (k, x2, lambda_k(x2)) over confined fiber samples, for export."""
    from .fields import fiber_mass
    rows = []
    for xp in _fiber_points(profile, fiber_samples):
        if not weight.confinement.contains(xp):
            continue
        w = fiber_mass(weight, xp)
        if w <= 0 or math.isinf(w):
            continue
        psi = profile.params[0] if profile.dim_fiber == 0 else float(profile.values(np.asarray([xp]))[0])
        x2 = 0.0 if xp is None else float(np.atleast_1d(xp)[0])
        for k in range(k_window[0], k_window[1] + 1):
            rows.append((k, x2, psi * (phase.beta + 2.0 * math.pi * k) / w))
    return rows


def spectral_gap(weight: WeightField, phase: BoundaryPhase,
                 profile: ShearProfile | None = None) -> float:
    """Radius delta = 2 pi inf(psi) / M of the symmetric weighted gap.

    Nonzero confined-fiber eigenvalues satisfy |lambda| = psi |2 pi k| / W
    >= 2 pi inf(psi) / M, so the confined spectrum avoids (-delta, delta)
    except for 0.  Requires beta = 0 and an M bound.
    """
    if phase.beta_fn is not None or phase.beta != 0.0:
        raise ConfigError("spectral gap requires the symmetric domain (beta = 0)")
    if weight.m_bound is None:
        raise ConfigError("spectral gap needs the confinement bound M")
    psi_inf = 1.0 if profile is None else profile.ell
    return 2.0 * math.pi * psi_inf / weight.m_bound


def detect_embedded_eigenvalues(weight: WeightField, phase: BoundaryPhase,
                                fiber_samples: int, k_window: tuple[int, int] = (-3, 3),
                                profile: ShearProfile | None = None) -> list[float]:
    """Ladder values from mass plateaus of positive sampled measure.

    A plateau is a run of at least two adjacent confined samples on which both
    the fiber mass and psi are constant to relative tolerance 1e-12; each one
    contributes its full ladder over the branch window.
    """
    from .fields import fiber_mass
    if profile is None:
        profile = ShearProfile.constant(1.0, dim_fiber=1)
    pts = _fiber_points(profile, fiber_samples)
    samples = []
    for xp in pts:
        if not weight.confinement.contains(xp):
            samples.append(None)
            continue
        w = fiber_mass(weight, xp)
        psi = profile.params[0] if profile.dim_fiber == 0 else float(profile.values(np.asarray([xp]))[0])
        samples.append(None if (w <= 0 or math.isinf(w)) else (w, psi))
    plateaus: list[tuple[float, float]] = []
    run: list[tuple[float, float]] = []
    for s in samples + [None]:
        if s is not None and (not run or _close_pair(run[-1], s)):
            run.append(s)
            continue
        if len(run) >= 2:
            plateaus.append(run[0])
        run = [s] if s is not None else []
    out = set()
    for w, psi in plateaus:
        for k in range(k_window[0], k_window[1] + 1):
            out.add(psi * (phase.beta + 2.0 * math.pi * k) / w)
    return sorted(out)


def _close_pair(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return (abs(a[0] - b[0]) <= 1e-12 * max(1.0, abs(a[0]))
            and abs(a[1] - b[1]) <= 1e-12 * max(1.0, abs(a[1])))


# -- singular continuous construction ----------------------------------------


@dataclass(frozen=True)
class CantorSpec:
    """Middle-thirds construction on the base interval (0, pi / W).

    ``depth`` levels of the construction are stored; membership queries are
    answered exactly at that depth by ternary-digit recursion, so no interval
    list is needed.  The period of the assembled spectrum is 2 pi / W.
    """

    depth: int
    total_mass: float

    def __post_init__(self):
        if not 1 <= self.depth <= MAX_CANTOR_DEPTH:
            raise ConfigError(f"depth must be in [1, {MAX_CANTOR_DEPTH}]")
        if self.total_mass < 0.5:
            raise ConfigError("need pi / W <= 2 pi, i.e. total mass >= 1/2")

    @property
    def base_length(self) -> float:
        return math.pi / self.total_mass

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.total_mass

    def contains(self, lam: float) -> bool:
        """Membership of lam in the depth-n approximation of C + period * Z."""
        r = math.fmod(lam, self.period)
        if r < 0.0:
            r += self.period
        if r <= 0.0 or r >= self.base_length:
            return False
        t = r / self.base_length
        for _ in range(self.depth):
            if t <= 1.0 / 3.0:
                t *= 3.0
            elif t >= 2.0 / 3.0:
                t = 3.0 * t - 2.0
            else:
                return False
        return True

    def base_intervals(self) -> list[tuple[float, float]]:
        """The 2^depth closed component intervals within the base interval."""
        if self.depth > MAX_MATERIALIZED_DEPTH:
            raise ConfigError(
                f"interval materialization capped at depth {MAX_MATERIALIZED_DEPTH}; "
                "use membership queries for deeper approximations")
        comps = [(0.0, self.base_length)]
        for _ in range(self.depth):
            nxt = []
            for a, b in comps:
                third = (b - a) / 3.0
                nxt.append((a, a + third))
                nxt.append((b - third, b))
            comps = nxt
        return comps

    def phase_map(self) -> BoundaryPhase:
        """A boundary-phase field whose range fills the stored approximation.

        Maps the fractional part of the first fiber coordinate through the
        inverse ternary-digit expansion onto component left endpoints.
        """
        depth, length = self.depth, self.base_length

        def beta_fn(xprime) -> float:
            u = float(np.atleast_1d(np.asarray(xprime, dtype=float))[0]) % 1.0
            t = 0.0
            scale = 1.0
            for _ in range(depth):
                bit = 1.0 if u >= 0.5 else 0.0
                u = (u * 2.0) % 1.0
                scale /= 3.0
                t += bit * 2.0 * scale
            return t * length

        return BoundaryPhase(0.0, beta_fn=beta_fn)


def cantor_spectrum(spec: CantorSpec, k_window: tuple[int, int]) -> SpectrumSet:
    """Depth-n approximation of the singular continuous spectrum C + (2 pi / W) Z."""
    k_lo, k_hi = k_window
    if k_hi < k_lo:
        raise ConfigError("empty translation window")
    base = spec.base_intervals()
    out = SpectrumSet()
    for k in range(k_lo, k_hi + 1):
        shift = spec.period * k
        for a, b in base:
            out.intervals.append((a + shift, b + shift))
            out.interval_tags.append(TAG_SC)
    out.resolved_band = (spec.period * k_lo, spec.period * (k_hi + 1))
    return out.normalized()


def default_k_window(profile: ShearProfile, weight: WeightField, phase: BoundaryPhase,
                     lambda_range: tuple[float, float]) -> tuple[int, int]:
    """Smallest branch window whose components can reach the lambda range."""
    lam_lo, lam_hi = lambda_range
    if lam_hi < lam_lo:
        raise ConfigError("empty lambda range")
    m, mm = weight.mass_range()
    if math.isinf(mm):
        return (0, 0)
    psi_lo = profile.ell
    k_hi = int(math.ceil((lam_hi * mm / psi_lo - phase.beta) / (2.0 * math.pi))) if lam_hi > 0 else 0
    k_lo = int(math.floor((lam_lo * mm / psi_lo - phase.beta) / (2.0 * math.pi))) if lam_lo < 0 else 0
    return (min(k_lo, 0), max(k_hi, 0))
