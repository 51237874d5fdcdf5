"""Spectral measures and the density of states, computed two independent ways.

The cumulative route integrates the frequency-side product of the two fields
over the sublevel region psi(x') xi <= lambda and differentiates in lambda
(central differences with one Richardson step).  The direct route evaluates
the level-set integral, which for a shear profile collapses to
integral of Ff(lambda/psi, x') conj(Fg)(lambda/psi, x') / psi(x') dx'
because the surface element exactly cancels the gradient factor.  Keeping
both paths alive is the correctness argument for each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, ResolutionError
from .fields import ShearProfile, WeightField
from .grids import Grid, GridField, NormSpec, eval_fourier_at, norm, partial_fourier, zero_pad
from .spectrum import spectral_gap

PAD_FACTOR = 4
CDF_STEP = 1e-3
BAND_MARGIN = 0.875  # fraction of the Nyquist band considered resolved


@dataclass(frozen=True)
class SpectralDensityReport:
    """Density of states at one lambda, from both evaluators, with constants."""

    lam: float
    value_surface: complex
    value_cdf_derivative: complex
    bound_rhs: float
    ell: float
    lipschitz: float
    l_gamma: float
    tolerance: float

    @property
    def cross_check_error(self) -> float:
        return abs(self.value_surface - self.value_cdf_derivative)


def _psi_on_fibers(profile: ShearProfile, grid: Grid) -> np.ndarray:
    if profile.dim_fiber == 0 or not grid.fiber_shape:
        return np.array(profile.params[0] if profile.kind == "constant"
                        else profile.values(np.zeros(1))[0])
    return profile.values(grid.fiber_coordinate())


class CumulativeMeasure:
    """Per-fiber antiderivative of Ff conj(Fg) in the frequency variable.

    On the zero-padded grid the product is a trigonometric polynomial that is
    exactly periodic over the frequency window, so its Fourier modes give a
    closed-form antiderivative, evaluable at any cutoff.  This is the
    cumulative (lambda -> (E(lambda) f, g)) side of the dual-route check.
    """

    def __init__(self, profile: ShearProfile, f: GridField, g: GridField,
                 pad_factor: int = PAD_FACTOR, fiber_mask: np.ndarray | None = None):
        if f.grid is not g.grid and f.grid != g.grid:
            raise ConfigError("fields must share a grid")
        self.profile = profile
        self.grid = f.grid
        fh = partial_fourier(zero_pad(f, pad_factor))
        gh = partial_fourier(zero_pad(g, pad_factor))
        pad_grid = fh.grid
        prod = fh.samples * np.conj(gh.samples)
        self.n_fine = pad_grid.n
        self.xi_min = float(pad_grid.xi[0])
        self.period = self.n_fine * pad_grid.dxi
        flat = prod.reshape(self.n_fine, -1)
        self.modes = np.fft.fft(flat, axis=0) / self.n_fine
        self.m = np.fft.fftfreq(self.n_fine, d=1.0 / self.n_fine)
        self.psi = np.atleast_1d(_psi_on_fibers(profile, self.grid)).reshape(-1)
        fw = self.grid.fiber_quad_weights()
        self.fiber_w = np.atleast_1d(fw).reshape(-1).astype(float)
        if fiber_mask is not None:
            self.fiber_w = self.fiber_w * np.atleast_1d(fiber_mask).reshape(-1)

    def per_fiber_cdf(self, lam: float) -> np.ndarray:
        cutoff = np.clip(lam / self.psi - self.xi_min, 0.0, self.period)
        with np.errstate(divide="ignore", invalid="ignore"):
            freq = 2.0 * math.pi * self.m / self.period
            phase = np.exp(1j * np.outer(freq, cutoff))
            coef = np.zeros_like(self.m, dtype=complex)
            nz = self.m != 0
            coef[nz] = 1.0 / (1j * freq[nz])
        vals = np.sum(self.modes * ((phase - 1.0) * coef[:, None]), axis=0)
        vals = vals + self.modes[0] * cutoff
        return vals

    def cdf(self, lam: float) -> complex:
        if math.isinf(lam):
            lam = math.copysign(1e300, lam)
        return complex(np.sum(self.per_fiber_cdf(lam) * self.fiber_w))

    def derivative(self, lam: float, h: float = CDF_STEP) -> complex:
        """Richardson-extrapolated central difference of the cumulative measure."""
        d1 = (self.cdf(lam + h) - self.cdf(lam - h)) / (2.0 * h)
        d2 = (self.cdf(lam + h / 2) - self.cdf(lam - h / 2)) / h
        return (4.0 * d2 - d1) / 3.0


def spectral_cdf(profile: ShearProfile, f: GridField, g: GridField, lam: float,
                 pad_factor: int = PAD_FACTOR) -> complex:
    """(E(lambda) f, g): frequency-side integral over psi(x') xi <= lambda."""
    return CumulativeMeasure(profile, f, g, pad_factor).cdf(lam)


def _surface_value(profile: ShearProfile, f: GridField, g: GridField, lam: float,
                   fiber_mask: np.ndarray | None = None) -> complex:
    grid = f.grid
    psi = _psi_on_fibers(profile, grid)
    xi_c = lam / psi
    if np.max(np.abs(xi_c)) > BAND_MARGIN * grid.xi_max:
        raise ResolutionError(
            f"lambda = {lam} needs frequency {np.max(np.abs(xi_c)):.3g} beyond the "
            f"resolved band {BAND_MARGIN * grid.xi_max:.3g}")
    fv = eval_fourier_at(f, xi_c)
    gv = eval_fourier_at(g, xi_c)
    integrand = fv * np.conj(gv) / psi
    if not grid.fiber_shape:
        return complex(integrand)
    fw = grid.fiber_quad_weights()
    if fiber_mask is not None:
        fw = fw * fiber_mask
    return complex(np.sum(integrand * fw))


def dos_surface(profile: ShearProfile, f: GridField, g: GridField, lam: float,
                sigma: float = 1.0, cumulative: CumulativeMeasure | None = None,
                h: float = CDF_STEP) -> SpectralDensityReport:
    """Density of states by the level-set formula, cross-checked by the CDF route.

    The level-set surface element times the inverse gradient weight reduces
    algebraically to 1/psi per unit fiber area (see README for the identity),
    so the surface integral is a plain fiber integral of the frequency trace.
    Requires a regular profile and sigma > 1/2.
    """
    if sigma <= 0.5:
        raise ConfigError("density-of-states reports need sigma > 1/2")
    surf = _surface_value(profile, f, g, lam)
    if cumulative is None:
        cumulative = CumulativeMeasure(profile, f, g)
    deriv = cumulative.derivative(lam, h)
    l_gamma = abs(lam) * profile.lipschitz / profile.ell ** 2
    spec = NormSpec(sigma, "X-sigma")
    rhs = (1.0 + l_gamma) * norm(f, spec) * norm(g, spec)
    return SpectralDensityReport(lam, surf, deriv, rhs, profile.ell,
                                 profile.lipschitz, l_gamma,
                                 tolerance=max(1e-3, h ** 2))


def _confinement_mask(weight: WeightField, grid: Grid) -> np.ndarray:
    """1.0 on unconfined fibers, 0.0 on confined ones (shaped like the fiber grid)."""
    if not grid.fiber_shape:
        return np.array(0.0 if weight.confinement.contains(None) else 1.0)
    x2 = grid.fiber_coordinate()
    out = np.ones(grid.fiber_shape)
    for idx in np.ndindex(*grid.fiber_shape):
        if weight.confinement.contains(x2[idx]):
            out[idx] = 0.0
    return out


def dos_weighted(profile: ShearProfile, weight: WeightField, f: GridField, g: GridField,
                 lam: float, sigma: float = 1.0,
                 h: float = CDF_STEP) -> SpectralDensityReport:
    """Weighted density of states inside the spectral gap.

    Confined fibers contribute nothing for 0 < |lambda| < delta, so only the
    complement of the confinement region is integrated; with a full
    confinement region the density is identically zero.  Errors outside the
    gap or at lambda = 0.
    """
    if sigma <= 0.5:
        raise ConfigError("density-of-states reports need sigma > 1/2")
    from .fields import BoundaryPhase
    delta = spectral_gap(weight, BoundaryPhase(0.0), profile)
    if lam == 0.0:
        raise DomainError("weighted density of states is undefined at lambda = 0 "
                          "(kernel eigenvalue)")
    if abs(lam) >= delta:
        raise DomainError(f"|lambda| = {abs(lam):.6g} is outside the spectral gap "
                          f"(delta = {delta:.6g})")
    l_gamma = abs(lam) * profile.lipschitz / profile.ell ** 2
    spec = NormSpec(sigma, "Y-sigma", weight)
    rhs = (1.0 + l_gamma) * norm(f, spec) * norm(g, spec)
    mask = _confinement_mask(weight, f.grid)
    if not np.any(mask > 0.0):
        return SpectralDensityReport(lam, 0.0 + 0.0j, 0.0 + 0.0j, rhs,
                                     profile.ell, profile.lipschitz, l_gamma,
                                     tolerance=max(1e-3, h ** 2))
    surf = _surface_value(profile, f, g, lam, fiber_mask=mask)
    deriv = CumulativeMeasure(profile, f, g, fiber_mask=mask).derivative(lam, h)
    return SpectralDensityReport(lam, surf, deriv, rhs, profile.ell,
                                 profile.lipschitz, l_gamma,
                                 tolerance=max(1e-3, h ** 2))


def verify_dos_bound(reports: list[SpectralDensityReport], f: GridField, g: GridField,
                     spec: NormSpec) -> dict:
    """Fit the constant in |density| <= C (1 + L_Gamma) |f| |g| over a sweep.

    Returns the pointwise left side, the bound shape (1 + L_Gamma) |f| |g|,
    and fitted_C = sup(lhs / rhs); the lambda shape of the bound is asserted
    by the caller comparing fits across grids.
    """
    if spec.sigma <= 0.5:
        raise ConfigError("the bound is formulated for sigma > 1/2")
    nf, ng = norm(f, spec), norm(g, spec)
    lhs = np.array([abs(r.value_surface) for r in reports])
    rhs = np.array([(1.0 + r.l_gamma) * nf * ng for r in reports])
    ratio = lhs / rhs
    return {"lhs": lhs, "rhs_shape": rhs, "fitted_C": float(np.max(ratio)),
            "lambdas": np.array([r.lam for r in reports])}


def surface_element_factors(profile: ShearProfile, lam: float, x2: np.ndarray):
    """(area element, gradient magnitude) of the level set at fiber points.

    Their ratio equals 1/psi identically; both factors are exposed so tests
    can confirm the collapse identity at random points.
    """
    psi = profile.values(x2)
    dpsi = profile.gradient(x2)
    area = np.sqrt(1.0 + (lam * dpsi / psi ** 2) ** 2)
    grad = np.sqrt(psi ** 2 + (lam / psi) ** 2 * dpsi ** 2)
    return area, grad
