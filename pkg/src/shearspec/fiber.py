"""One-fiber operators: coordinate map, eigenvalues, witnesses, evolution, oracle.

On a confined fiber the operator -i (psi/w) d/dx acts on the weighted line.
The strictly increasing map Phi(x) = integral of w from 0 to x straightens it
into -i psi d/dy on an interval of length W = fiber mass, with the twisted
matching g(W+) = alpha g(-W-).  Everything here works in that picture:
eigenvalues form the ladder psi (beta + 2 pi k) / W, eigenfunctions are
unimodular waves in Phi, and evolution is twisted translation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.interpolate import PchipInterpolator
from scipy.linalg import dft, eigvalsh
from scipy.sparse.linalg import eigsh

from .errors import ConfigError, MassError, ResolutionError
from .fields import BoundaryPhase, WeightField, fiber_mass
from .interp import interp_bounded, interp_periodic

DEFAULT_TABLE_SIZE = 2 ** 14
DEFAULT_TAIL_MASS = 1e-10


@dataclass
class FiberOperator:
    """The 1-D fiber operator at a fixed fiber point.

    ``mass`` is the fiber weight mass W (``inf`` on unconfined fibers, where
    the operator is plain transport at speed ``psi_value``).  ``w_minus`` and
    ``w_plus`` are the one-sided masses, Phi(-inf) = -w_minus and
    Phi(+inf) = w_plus, with w_minus + w_plus = W.
    """

    psi_value: float
    weight: WeightField
    xprime: object
    phase: BoundaryPhase
    mass: float
    w_minus: float
    w_plus: float
    x_max: float
    _phi_nodes: np.ndarray | None = None
    _phi_values: np.ndarray | None = None
    _phi_inverse: object = None

    @classmethod
    def build(cls, profile_value: float, weight: WeightField, phase: BoundaryPhase,
              xprime=None, table_size: int = DEFAULT_TABLE_SIZE,
              tail_mass: float = DEFAULT_TAIL_MASS) -> "FiberOperator":
        if profile_value <= 0:
            raise ConfigError("fiber speed must be positive")
        mass = fiber_mass(weight, xprime)
        if math.isinf(mass):
            return cls(profile_value, weight, xprime, phase,
                       mass=math.inf, w_minus=math.inf, w_plus=math.inf,
                       x_max=math.inf)
        if mass <= 0:
            raise MassError("degenerate fiber: nonpositive weight mass")
        x_max = weight.tail_cutoff(xprime, tail_mass)
        xs = np.linspace(-x_max, x_max, table_size)
        phis = _phi_values(weight, xprime, xs)
        op = cls(profile_value, weight, xprime, phase,
                 mass=mass, w_minus=-float(phis[0]), w_plus=float(phis[-1]), x_max=x_max,
                 _phi_nodes=xs, _phi_values=phis,
                 _phi_inverse=PchipInterpolator(phis, xs, extrapolate=False))
        return op

    # -- coordinate map -----------------------------------------------------

    def phi(self, x) -> np.ndarray:
        """Phi(x) = integral of the weight slice from 0 to x (strictly increasing)."""
        self._require_finite()
        return _phi_values(self.weight, self.xprime, np.asarray(x, dtype=float))

    def phi_inv(self, y) -> np.ndarray:
        """Numeric inverse of Phi; queries are clamped to the tabulated range.

        A monotone-cubic table lookup provides the starting guess and two
        Newton corrections (Phi and its derivative w are closed-form) polish
        it to near machine accuracy.
        """
        self._require_finite()
        y = np.clip(np.asarray(y, dtype=float), self._phi_values[0], self._phi_values[-1])
        x = np.asarray(self._phi_inverse(y), dtype=float)
        for _ in range(2):
            x = x - (self.phi(x) - y) / self.weight_slice(x)
            x = np.clip(x, -self.x_max, self.x_max)
        return x

    def weight_slice(self, x) -> np.ndarray:
        return self.weight.slice_values(np.asarray(x, dtype=float), self.xprime)

    def grid(self, n: int) -> np.ndarray:
        """Uniform x grid covering the fiber up to the tail cutoff.

        Node placement is snapped so that every kink of the weight slice sits
        on a grid node (count may be adjusted slightly); interpolation can
        then stay one-sided around kinks and keep full order.
        """
        self._require_finite()
        cuts = [c for c in self.weight.breakpoints(self.xprime) if 0.0 < abs(c) < self.x_max]
        n_odd = n if n % 2 == 1 else n + 1
        if not cuts:
            return np.linspace(-self.x_max, self.x_max, n_odd)
        r = min(abs(c) for c in cuts)
        h0 = 2.0 * self.x_max / (n_odd - 1)
        m = max(1, round(r / h0))
        h = r / m
        half = int(math.ceil(self.x_max / h - 1e-9))
        return h * np.arange(-half, half + 1)

    def grid_barriers(self, x: np.ndarray) -> np.ndarray:
        """Node indices of weight kinks, for kink-aware interpolation."""
        if math.isinf(self.mass):
            return np.empty(0, dtype=np.int64)
        dx = x[1] - x[0]
        out = []
        for c in self.weight.breakpoints(self.xprime):
            j = int(round((c - x[0]) / dx))
            if 0 < j < x.size - 1 and abs(x[j] - c) < 1e-9 * max(1.0, abs(c)):
                out.append(j)
        return np.asarray(sorted(out), dtype=np.int64)

    def norm_w(self, f: np.ndarray, x: np.ndarray, n_quad: int = 4097) -> float:
        """Weighted L2 norm, integrated in the Phi coordinate.

        The substitution dy = w dx absorbs any kink of the weight, so the
        integrand stays smooth and the trapezoid rule keeps high accuracy.
        """
        return math.sqrt(abs(self.inner_w(f, f, x, n_quad)))

    def inner_w(self, f: np.ndarray, g: np.ndarray, x: np.ndarray,
                n_quad: int = 4097) -> complex:
        if math.isinf(self.mass):
            return complex(np.trapezoid(np.asarray(f) * np.conj(g), x))
        y = np.linspace(-self.w_minus, self.w_plus, n_quad)
        xq = self.phi_inv(y)
        dx = x[1] - x[0]
        barriers = self.grid_barriers(x)
        fq = interp_bounded(np.asarray(f), x[0], dx, xq, fill=0.0, barriers=barriers)
        gq = interp_bounded(np.asarray(g), x[0], dx, xq, fill=0.0, barriers=barriers)
        return complex(np.trapezoid(fq * np.conj(gq), y))

    def _require_finite(self):
        if math.isinf(self.mass):
            raise MassError("operation requires a finite-mass fiber")


def _phi_values(weight: WeightField, xprime, x: np.ndarray) -> np.ndarray:
    """Closed-form Phi for the built-in families, cumulative quadrature otherwise."""
    from scipy.special import erf

    kind = weight.kind
    if kind == "product-separable":
        base = weight.params.get("base", "exp")
        s = weight.fiber_scale(xprime)
        if base == "exp":
            return s * np.sign(x) * (1.0 - np.exp(-np.abs(x) / s))
        return s * math.sqrt(math.pi) / 2.0 * erf(x / s)
    if kind == "exponential-decay":
        s = weight.params["scale"]
        return s * np.sign(x) * (1.0 - np.exp(-np.abs(x) / s))
    if kind == "gaussian":
        s = weight.params["scale"]
        return s * math.sqrt(math.pi) / 2.0 * erf(x / s)
    if kind == "compact-bump":
        r, s = weight.params["flat_halfwidth"], weight.params["tail_scale"]
        core = np.clip(x, -r, r)
        tail = np.sign(x) * s * (1.0 - np.exp(-np.maximum(np.abs(x) - r, 0.0) / s))
        return core + tail
    # user-sampled: cumulative trapezoid anchored at 0
    axis = np.asarray(weight.params["axis"])
    vals = np.asarray(weight.params["values"])
    fine = np.linspace(axis[0], axis[-1], 1 << 15)
    wf = np.interp(fine, axis, vals)
    cum = np.concatenate([[0.0], np.cumsum((wf[1:] + wf[:-1]) / 2.0 * np.diff(fine))])
    cum -= np.interp(0.0, fine, cum)
    return np.interp(x, fine, cum)


@dataclass(frozen=True)
class FiberSpectrum:
    """Spectrum of one fiber: a point ladder (finite mass) or the full line.

    Ladder eigenvalues are ``scale * (base + step * k)`` with base = beta/W,
    step = 2 pi / W and scale = psi.
    """

    tag: str  # "point-ladder" | "full-line"
    base: float = 0.0
    step: float = 0.0
    scale: float = 1.0

    def eigenvalue(self, k: int) -> float:
        if self.tag != "point-ladder":
            raise MassError("full-line fiber has no eigenvalue ladder")
        return self.scale * (self.base + self.step * k)


def fiber_spectrum(op: FiberOperator) -> FiberSpectrum:
    if math.isinf(op.mass):
        return FiberSpectrum(tag="full-line", scale=op.psi_value)
    return FiberSpectrum(tag="point-ladder", base=op.phase.beta / op.mass,
                         step=2.0 * math.pi / op.mass, scale=op.psi_value)


def fiber_eigenvalues(op: FiberOperator, k_range: tuple[int, int]) -> np.ndarray:
    """Ladder psi (beta + 2 pi k) / W for k in the inclusive range, ascending."""
    if math.isinf(op.mass):
        raise MassError("infinite-mass fiber: spectrum is the full line, not a ladder")
    k0, k1 = k_range
    if k1 < k0:
        raise ConfigError("empty k range")
    k = np.arange(k0, k1 + 1)
    return op.psi_value * (op.phase.beta + 2.0 * math.pi * k) / op.mass


def fiber_eigenfunction(op: FiberOperator, k: int, x: np.ndarray) -> np.ndarray:
    """Unit-norm eigenfunction exp(i (beta + 2 pi k) Phi(x) / W) / sqrt(W).

    The Phi-exponent equals lambda_k / psi, so the boundary relation
    f(+inf) = alpha f(-inf) holds for every fiber speed; the phase convention
    f(0) = W^(-1/2) > 0 comes from Phi(0) = 0.
    """
    op._require_finite()
    wave = (op.phase.beta + 2.0 * math.pi * k) / op.mass
    return np.exp(1j * wave * op.phi(x)) / math.sqrt(op.mass)


@dataclass(frozen=True)
class DeficiencyWitness:
    sign: int
    x: np.ndarray
    samples: np.ndarray
    in_adjoint_domain: bool
    limits_nonzero: bool
    residual: float
    limit_left: float
    limit_right: float


def _fd6_weights() -> list[np.ndarray]:
    """7-node first-derivative weights for evaluation at node positions 0..6."""
    out = []
    nodes = np.arange(7, dtype=float)
    for pos in range(7):
        v = np.vander(nodes - pos, increasing=True).T  # v[m, i] = (s_i)^m
        rhs = np.zeros(7)
        rhs[1] = 1.0
        out.append(np.linalg.solve(v, rhs))
    return out


_FD6 = _fd6_weights()


def _fd6_derivative(vals: np.ndarray, h: float) -> np.ndarray:
    """6th-order first derivative on a uniform grid, one-sided at the ends."""
    n = vals.shape[0]
    if n < 7:
        raise ResolutionError("need at least 7 nodes for 6th-order differences")
    dv = np.empty_like(vals, dtype=float)
    c = _FD6[3]
    acc = np.zeros(n - 6, dtype=float)
    for i in range(7):
        acc += c[i] * vals[i: n - 6 + i]
    dv[3: n - 3] = acc
    for j in range(3):
        dv[j] = np.dot(_FD6[j], vals[:7])
        dv[n - 1 - j] = np.dot(_FD6[6 - j], vals[n - 7:])
    return dv / h


def deficiency_witness(op: FiberOperator, sign: int, n: int = 8193) -> DeficiencyWitness:
    """Witness g_sign = exp(sign * Phi) for the (1,1) deficiency of the minimal domain.

    Checks numerically that w^(-1) g' = sign * g, that g and w^(-1) g' lie in
    the weighted L2 space, and that both limits at the ends are nonzero: the
    witness sits in the adjoint's domain but not in the minimal one.  The
    derivative is formed by 6th-order differences taken piecewise between the
    weight's kink locations, and the residual is reported relative to the
    weighted L2 norm (membership of that space is the actual claim).
    """
    if sign not in (+1, -1):
        raise ConfigError("sign must be +1 or -1")
    op._require_finite()
    x = op.grid(n)
    g = np.exp(sign * op.phi(x))
    cuts = [c for c in op.weight.breakpoints(op.xprime) if -op.x_max < c < op.x_max]
    edges = [-op.x_max] + sorted(cuts) + [op.x_max]
    h_target = 2.0 * op.x_max / (n - 1)
    resid_sq = 0.0
    norm_sq = 0.0
    tnorm_sq = 0.0
    for a, b in zip(edges, edges[1:]):
        m = max(int(round((b - a) / h_target)) + 1, 9)
        xp = np.linspace(a, b, m)
        gp = np.exp(sign * op.phi(xp))
        wp = op.weight_slice(xp)
        dg = _fd6_derivative(gp, xp[1] - xp[0])
        r = dg / wp - sign * gp
        resid_sq += float(np.trapezoid(np.abs(r) ** 2 * wp, xp))
        norm_sq += float(np.trapezoid(gp ** 2 * wp, xp))
        tnorm_sq += float(np.trapezoid((dg / wp) ** 2 * wp, xp))
    residual = math.sqrt(resid_sq / norm_sq)
    limit_left, limit_right = float(g[0]), float(g[-1])
    in_adjoint = bool(math.isfinite(norm_sq) and math.isfinite(tnorm_sq)
                      and residual <= 1e-8)
    limits_ok = bool(abs(limit_left) > 1e-300 and abs(limit_right) > 1e-300)
    return DeficiencyWitness(sign, x, g, in_adjoint, limits_ok, residual,
                             limit_left, limit_right)


def fiber_evolve(op: FiberOperator, t: float, f: np.ndarray, x: np.ndarray,
                 periodic: bool = False) -> np.ndarray:
    """Apply exp(i t H) along one fiber.

    Finite mass: twisted translation in the Phi coordinate.  With
    Phi(x) + t psi = ybar + n W and ybar in [-W-, W+), the result is
    alpha^n f(Phi^(-1)(ybar)).  Infinite mass: plain translation
    f(x + t psi), with optional periodic wrap on the sample window.
    """
    f = np.asarray(f)
    x = np.asarray(x, dtype=float)
    if x.size < 16:
        raise ResolutionError("fiber grid too coarse for evolution (need >= 16 points)")
    if t == 0.0:
        return f.astype(complex, copy=True)
    dx = x[1] - x[0]
    if math.isinf(op.mass):
        q = x + t * op.psi_value
        if periodic:
            return interp_periodic(f, x[0], dx, q)
        return interp_bounded(f, x[0], dx, q, fill=0.0)
    y = op.phi(x) + t * op.psi_value
    wraps = np.floor((y + op.w_minus) / op.mass).astype(np.int64)
    ybar = y - wraps * op.mass
    xbar = op.phi_inv(ybar)
    vals = interp_bounded(f, x[0], dx, xbar, fill=0.0, barriers=op.grid_barriers(x))
    # endpoint queries clamp onto the grid ends; keep those samples
    edge = (xbar <= x[0]) | (xbar >= x[-1])
    if np.any(edge):
        vals = np.where(edge & (xbar <= x[0]), f[0], vals)
        vals = np.where(edge & (xbar >= x[-1]), f[-1], vals)
    return np.exp(1j * op.phase.beta * wraps) * vals


# -- mode transforms (eigen-expansion on one fiber) --------------------------

def phi_mode_coefficients(op: FiberOperator, f: np.ndarray, x: np.ndarray,
                          n_modes: int = 256) -> np.ndarray:
    """Coefficients of f in the fiber eigenbasis, fftfreq mode order.

    Resamples f onto a uniform Phi grid and projects with the rectangle rule,
    which is spectrally exact for the twisted-periodic products involved.
    """
    op._require_finite()
    w_tot, w_minus = op.mass, op.w_minus
    h = w_tot / n_modes
    y = -w_minus + h * np.arange(n_modes)
    xq = op.phi_inv(y)
    g = interp_bounded(np.asarray(f), x[0], x[1] - x[0], xq, fill=0.0,
                       barriers=op.grid_barriers(x))
    j = np.arange(n_modes)
    beta = op.phase.beta
    twisted = g * np.exp(-1j * beta * j / n_modes)
    spec = np.fft.fft(twisted)
    k = np.fft.fftfreq(n_modes, d=1.0 / n_modes)
    phase_fix = np.exp(1j * (beta + 2.0 * math.pi * k) * w_minus / w_tot)
    return (h / math.sqrt(w_tot)) * phase_fix * spec


def phi_mode_synthesis(op: FiberOperator, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Sum of coefficients times eigenfunctions, evaluated exactly at x."""
    op._require_finite()
    n_modes = coeffs.shape[0]
    k = np.fft.fftfreq(n_modes, d=1.0 / n_modes)
    phases = op.phi(x)[:, None] * (op.phase.beta + 2.0 * math.pi * k)[None, :] / op.mass
    basis = np.exp(1j * phases) / math.sqrt(op.mass)
    return basis @ coeffs


def mode_eigenvalues(op: FiberOperator, n_modes: int) -> np.ndarray:
    k = np.fft.fftfreq(n_modes, d=1.0 / n_modes)
    return op.psi_value * (op.phase.beta + 2.0 * math.pi * k) / op.mass


# -- independent matrix discretization oracle --------------------------------

_SHIFT_FRACTION = 2.0 - math.sqrt(2.0)  # keeps the shift off every ladder point


def fiber_matrix_oracle(op: FiberOperator, n: int, method: str = "fd4",
                        num_eigs: int = 14) -> np.ndarray:
    """Eigenvalues near zero of the discretized straightened operator.

    Discretizes -i psi d/dy on the Phi interval of length W with the
    alpha-twisted periodic boundary.  ``fd4`` assembles 4th-order central
    differences sparsely and shift-inverts near zero; central stencils carry
    a spurious near-null branch at the grid's top frequencies, so candidate
    eigenvectors are filtered by their band occupancy.  ``spectral`` builds
    the dense Fourier differentiation matrix (exact ladder up to roundoff).
    """
    op._require_finite()
    if n < 64:
        raise ConfigError("matrix oracle needs n >= 64")
    w_tot = op.mass
    beta = op.phase.beta
    psi = op.psi_value
    if method == "spectral":
        if n > 2048:
            raise ConfigError("dense spectral oracle limited to n <= 2048")
        f_mat = dft(n) / math.sqrt(n)
        kappa = 2.0 * math.pi * np.fft.fftfreq(n, d=w_tot / n)
        d_h = f_mat.conj().T @ (1j * kappa[:, None] * f_mat)
        s_twist = np.exp(1j * beta * np.arange(n) / n)
        a = psi * beta / w_tot * np.eye(n) + (-1j * psi) * (s_twist[:, None] * d_h * np.conj(s_twist)[None, :])
        vals = eigvalsh((a + a.conj().T) / 2.0)
        order = np.argsort(np.abs(vals))[:num_eigs]
        return np.sort(vals[order])
    if method != "fd4":
        raise ConfigError(f"unknown oracle method {method!r}")
    h = w_tot / n
    alpha = op.phase.alpha
    # -i psi * 4th-order central difference with twisted wraparound
    stencil = {-2: 1.0 / (12.0 * h), -1: -8.0 / (12.0 * h),
               1: 8.0 / (12.0 * h), 2: -1.0 / (12.0 * h)}
    rows, cols, vals = [], [], []
    for off, coef in stencil.items():
        j = np.arange(n)
        jj = j + off
        twist = np.ones(n, dtype=complex)
        twist[jj >= n] = alpha
        twist[jj < 0] = np.conj(alpha)
        rows.append(j)
        cols.append(jj % n)
        vals.append(-1j * psi * coef * twist)
    a = sparse.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
    sigma = psi * (beta + math.pi * _SHIFT_FRACTION) / w_tot
    k_req = min(max(3 * num_eigs, 24), n - 2)
    vals_all, vecs = eigsh(a, k=k_req, sigma=sigma)
    keep = _filter_spurious(vecs, beta, n)
    vals_phys = vals_all[keep]
    order = np.argsort(np.abs(vals_phys))[:num_eigs]
    return np.sort(vals_phys[order])


def _filter_spurious(vecs: np.ndarray, beta: float, n: int) -> np.ndarray:
    """Keep eigenvectors whose energy lives in the lower half of the mode band."""
    j = np.arange(n)
    untwist = np.exp(-1j * beta * j / n)[:, None]
    spec = np.fft.fft(vecs * untwist, axis=0)
    m = np.fft.fftfreq(n, d=1.0 / n)
    low = np.abs(m) <= n / 4
    energy_low = np.sum(np.abs(spec[low, :]) ** 2, axis=0)
    energy_tot = np.sum(np.abs(spec) ** 2, axis=0)
    return energy_low / energy_tot > 0.5
