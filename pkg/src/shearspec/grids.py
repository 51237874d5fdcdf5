"""Tensor grids, sampled fields, the partial Fourier transform, and norms.

The x1 axis is uniform with n (a power of two) points on [-X, X), FFT
convention; fiber axes are closed uniform grids on [-X', X'] with trapezoid
weights.  The partial transform uses the unitary 1/sqrt(2 pi) normalization,
so Plancherel holds on the grid to machine accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .fields import WeightField

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Grid:
    """x1-axis times fiber-axes tensor grid."""

    n: int
    x_half: float
    fiber_shape: tuple[int, ...] = ()
    fiber_half: float = 4.0

    def __post_init__(self):
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise ConfigError("x1 sample count must be a power of two")
        if len(self.fiber_shape) > 2:
            raise ConfigError("at most two fiber dimensions are supported")

    @property
    def dx(self) -> float:
        return 2.0 * self.x_half / self.n

    @property
    def x1(self) -> np.ndarray:
        return -self.x_half + self.dx * np.arange(self.n)

    @property
    def xi(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.fftshift(np.fft.fftfreq(self.n, d=self.dx))

    @property
    def dxi(self) -> float:
        return math.pi / self.x_half

    @property
    def xi_max(self) -> float:
        return math.pi / self.dx

    def fiber_axes(self) -> list[np.ndarray]:
        return [np.linspace(-self.fiber_half, self.fiber_half, m)
                for m in self.fiber_shape]

    def fiber_quad_weights(self) -> np.ndarray:
        """Trapezoid weights over the fiber box, shaped like the fiber grid."""
        if not self.fiber_shape:
            return np.array(1.0)
        w = np.array(1.0)
        for ax in self.fiber_axes():
            wa = np.full(ax.shape, ax[1] - ax[0])
            wa[0] *= 0.5
            wa[-1] *= 0.5
            w = np.multiply.outer(w, wa) if w.ndim else wa
        return w

    def fiber_coordinate(self) -> np.ndarray | None:
        """First fiber coordinate broadcast over the fiber shape (None for d = 1)."""
        if not self.fiber_shape:
            return None
        x2 = self.fiber_axes()[0]
        if len(self.fiber_shape) == 1:
            return x2
        return np.broadcast_to(x2[:, None], self.fiber_shape)

    def padded(self, factor: int) -> "Grid":
        return replace(self, n=self.n * factor, x_half=self.x_half * factor)


@dataclass
class GridField:
    """Complex samples on a grid, in space ('x') or frequency ('xi') domain."""

    grid: Grid
    samples: np.ndarray
    domain: str = "x"

    def __post_init__(self):
        expect = (self.grid.n, *self.grid.fiber_shape)
        if self.samples.shape != expect:
            raise ConfigError(f"sample shape {self.samples.shape} != grid shape {expect}")
        self.samples = np.ascontiguousarray(self.samples, dtype=complex)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "GridField":
        """Sample fn(x1) (d = 1), fn(x1, x2) (d = 2) or fn(x1, x2, x3)."""
        axes = [grid.x1] + grid.fiber_axes()
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(grid, np.asarray(fn(*mesh), dtype=complex))

    def copy(self) -> "GridField":
        return GridField(self.grid, self.samples.copy(), self.domain)

    def __add__(self, other: "GridField") -> "GridField":
        return GridField(self.grid, self.samples + other.samples, self.domain)

    def __sub__(self, other: "GridField") -> "GridField":
        return GridField(self.grid, self.samples - other.samples, self.domain)

    def __mul__(self, c) -> "GridField":
        return GridField(self.grid, self.samples * c, self.domain)

    __rmul__ = __mul__


def partial_fourier(f: GridField) -> GridField:
    """Unitary partial Fourier transform along x1, frequency axis ascending."""
    if f.domain != "x":
        raise ConfigError("partial_fourier expects a space-domain field")
    g = f.grid
    spec = np.fft.fft(f.samples, axis=0)
    phase = np.exp(-1j * np.fft.ifftshift(g.xi) * (-g.x_half))
    shape = (g.n,) + (1,) * len(g.fiber_shape)
    out = np.fft.fftshift(spec * phase.reshape(shape) * (g.dx / SQRT_2PI), axes=0)
    return GridField(g, out, domain="xi")


def inverse_partial_fourier(f: GridField) -> GridField:
    if f.domain != "xi":
        raise ConfigError("inverse_partial_fourier expects a frequency-domain field")
    g = f.grid
    spec = np.fft.ifftshift(f.samples, axes=0)
    phase = np.exp(1j * np.fft.ifftshift(g.xi) * (-g.x_half))
    shape = (g.n,) + (1,) * len(g.fiber_shape)
    out = np.fft.ifft(spec * phase.reshape(shape), axis=0) * (SQRT_2PI / g.dx)
    return GridField(g, out, domain="x")


def zero_pad(f: GridField, factor: int) -> GridField:
    """Embed a space-domain field in a factor-times-wider x1 window."""
    if f.domain != "x":
        raise ConfigError("zero_pad expects a space-domain field")
    if factor < 1:
        raise ConfigError("pad factor must be >= 1")
    g = f.grid
    big = g.padded(factor)
    out = np.zeros((big.n, *g.fiber_shape), dtype=complex)
    lo = (factor - 1) * g.n // 2
    out[lo:lo + g.n] = f.samples
    return GridField(big, out, domain="x")


def eval_fourier_at(f: GridField, xi_query: np.ndarray) -> np.ndarray:
    """Partial transform evaluated at one off-grid frequency per fiber.

    Direct evaluation of the grid function's trigonometric-polynomial
    transform, which is exactly its band-limited interpolation.
    ``xi_query`` has the fiber shape; the result does too.
    """
    if f.domain != "x":
        raise ConfigError("eval_fourier_at expects a space-domain field")
    g = f.grid
    flat = f.samples.reshape(g.n, -1)
    q = np.broadcast_to(np.asarray(xi_query, dtype=float), g.fiber_shape or (1,)).reshape(-1)
    kernel = np.exp(-1j * np.outer(g.x1, q))
    vals = np.sum(flat * kernel, axis=0) * (g.dx / SQRT_2PI)
    return vals.reshape(g.fiber_shape) if g.fiber_shape else vals[0]


@dataclass(frozen=True)
class NormSpec:
    """Which norm to integrate: plain/weighted L2, or the sigma-weighted spaces.

    ``X-sigma`` carries the (1 + x1^2)^sigma weight on every fiber;
    ``Y-sigma`` uses the weighted L2 norm on confined fibers and the
    X-sigma norm elsewhere (it needs ``weight``).
    """

    sigma: float = 1.0
    flavor: str = "X-sigma"  # plain-L2 | X-sigma | weighted-L2 | Y-sigma
    weight: WeightField | None = None

    def __post_init__(self):
        if self.flavor not in ("plain-L2", "X-sigma", "weighted-L2", "Y-sigma"):
            raise ConfigError(f"unknown norm flavor {self.flavor!r}")
        if self.flavor in ("weighted-L2", "Y-sigma") and self.weight is None:
            raise ConfigError(f"{self.flavor} norm needs a weight field")


def norm(f: GridField, spec: NormSpec) -> float:
    """Quadrature of the defining integral of the requested norm."""
    if f.domain != "x":
        raise ConfigError("norms are defined on space-domain fields")
    g = f.grid
    absq = np.abs(f.samples) ** 2
    x1 = g.x1
    sig_w = (1.0 + x1 ** 2) ** spec.sigma

    def fiber_profile(kind: str, xprime) -> np.ndarray:
        if kind == "plain":
            return np.ones_like(x1)
        if kind == "sigma":
            return sig_w
        return spec.weight.slice_values(x1, xprime)

    if not g.fiber_shape:
        kind = _fiber_kind(spec, None)
        return math.sqrt(float(np.sum(absq * fiber_profile(kind, None)) * g.dx))

    fw = g.fiber_quad_weights()
    x2 = g.fiber_coordinate()
    per_fiber = np.empty(g.fiber_shape)
    it = np.ndindex(*g.fiber_shape)
    for idx in it:
        xp = x2[idx]
        kind = _fiber_kind(spec, xp)
        per_fiber[idx] = float(np.sum(absq[(slice(None),) + idx] * fiber_profile(kind, xp)) * g.dx)
    return math.sqrt(float(np.sum(per_fiber * fw)))


def _fiber_kind(spec: NormSpec, xprime) -> str:
    if spec.flavor == "plain-L2":
        return "plain"
    if spec.flavor == "X-sigma":
        return "sigma"
    if spec.flavor == "weighted-L2":
        return "weighted"
    return "weighted" if spec.weight.confinement.contains(xprime) else "sigma"


def inner_l2(f: GridField, g_field: GridField,
             weight: WeightField | None = None) -> complex:
    """L2 (optionally w-weighted) inner product of two space-domain fields."""
    g = f.grid
    prod = f.samples * np.conj(g_field.samples)
    if weight is not None:
        wvals = np.empty_like(prod, dtype=float)
        if not g.fiber_shape:
            wvals[:] = weight.slice_values(g.x1, None)
        else:
            x2 = g.fiber_coordinate()
            for idx in np.ndindex(*g.fiber_shape):
                wvals[(slice(None),) + idx] = weight.slice_values(g.x1, x2[idx])
        prod = prod * wvals
    if not g.fiber_shape:
        return complex(np.sum(prod) * g.dx)
    fw = g.fiber_quad_weights()
    return complex(np.sum(np.sum(prod, axis=0) * fw) * g.dx)
