import math

import numpy as np
import pytest

from shearspec.errors import MassError
from shearspec.fields import BoundaryPhase, WeightField
from shearspec.fiber import (
    FiberOperator,
    deficiency_witness,
    fiber_eigenfunction,
    fiber_eigenvalues,
    fiber_evolve,
    fiber_matrix_oracle,
    fiber_spectrum,
    mode_eigenvalues,
    phi_mode_coefficients,
    phi_mode_synthesis,
)

W_EXP = WeightField.exponential(1.0)  # fiber mass 2
BUILTIN_WEIGHTS = [
    WeightField.exponential(1.0),
    WeightField.exponential(2.5),
    WeightField.gaussian(1.0),
    WeightField.compact_bump(1.0, 0.5),
]


def _op(psi=1.0, beta=0.0, weight=W_EXP):
    return FiberOperator.build(psi, weight, BoundaryPhase(beta))


def test_phi_map_exponential_closed_form():
    op = _op()
    x = np.array([-2.0, 0.0, 1.0])
    expect = np.sign(x) * (1.0 - np.exp(-np.abs(x)))
    assert np.allclose(op.phi(x), expect, atol=1e-14)
    assert op.phi(np.array([0.0]))[0] == 0.0
    assert op.w_minus + op.w_plus == pytest.approx(op.mass, abs=1e-9)


def test_phi_inverse_round_trip():
    op = _op(weight=WeightField.compact_bump(1.0, 0.5))
    x = np.linspace(-2.5, 2.5, 101)
    assert np.max(np.abs(op.phi_inv(op.phi(x)) - x)) < 1e-10


def test_eigenvalue_ladder_w2_beta0():
    lam = fiber_eigenvalues(_op(), (-2, 2))
    assert np.allclose(lam, np.array([-2, -1, 0, 1, 2]) * math.pi, atol=1e-12)


def test_eigenvalue_ladder_w2_beta_pi():
    lam = fiber_eigenvalues(_op(beta=math.pi), (-2, 2))
    expect = np.array([-3, -1, 1, 3, 5]) * math.pi / 2.0
    assert np.allclose(lam, expect, atol=1e-12)


def test_eigenvalue_ladder_w_2pi_integers():
    op = _op(weight=WeightField.exponential(math.pi))
    assert np.allclose(fiber_eigenvalues(op, (-3, 3)), np.arange(-3, 4), atol=1e-12)


def test_eigenvalues_scale_with_psi():
    lam1 = fiber_eigenvalues(_op(psi=1.0), (0, 3))
    lam2 = fiber_eigenvalues(_op(psi=2.0), (0, 3))
    assert np.allclose(lam2, 2.0 * lam1)


def test_infinite_mass_has_no_ladder():
    op = FiberOperator.build(1.0, WeightField.unit(), BoundaryPhase(0.0))
    assert fiber_spectrum(op).tag == "full-line"
    with pytest.raises(MassError):
        fiber_eigenvalues(op, (0, 1))


def test_eigenfunction_k0_constant():
    op = _op()
    x = op.grid(1025)
    e0 = fiber_eigenfunction(op, 0, x)
    assert np.allclose(e0, 1.0 / math.sqrt(2.0), atol=1e-14)


def test_eigenfunction_unit_norm_and_k1_form():
    op = _op()
    x = op.grid(2049)
    e1 = fiber_eigenfunction(op, 1, x)
    assert op.norm_w(e1, x) == pytest.approx(1.0, abs=1e-8)
    expect = np.exp(1j * math.pi * op.phi(x)) / math.sqrt(2.0)
    assert np.max(np.abs(e1 - expect)) < 1e-14


@pytest.mark.parametrize("beta", [0.0, math.pi / 3, math.pi])
def test_eigenfunction_boundary_ratio_is_alpha(beta):
    op = _op(beta=beta)
    x = op.grid(2049)
    for k in (0, 1, -2):
        ek = fiber_eigenfunction(op, k, x)
        ratio = ek[-1] / ek[0]
        assert abs(ratio - op.phase.alpha) < 1e-6


@pytest.mark.parametrize("weight", BUILTIN_WEIGHTS)
@pytest.mark.parametrize("sign", [+1, -1])
def test_deficiency_witness_all_builtins(weight, sign):
    op = FiberOperator.build(1.0, weight, BoundaryPhase(0.0))
    wit = deficiency_witness(op, sign)
    assert wit.in_adjoint_domain
    assert wit.limits_nonzero
    assert wit.residual <= 1e-8


def test_deficiency_witness_exponential_limits():
    op = _op()
    wit = deficiency_witness(op, +1)
    assert wit.limit_right == pytest.approx(math.e, rel=1e-9)
    assert wit.limit_left == pytest.approx(1.0 / math.e, rel=1e-9)


def test_evolve_identity_at_t0():
    op = _op()
    x = op.grid(513)
    f = np.exp(-x ** 2).astype(complex)
    assert np.array_equal(fiber_evolve(op, 0.0, f, x), f)


@pytest.mark.parametrize("beta", [0.0, math.pi / 3])
def test_evolve_eigenfunction_phase(beta):
    op = _op(psi=1.5, beta=beta)
    x = op.grid(4097)
    for k, t in [(0, 0.7), (1, 0.7), (-2, 2.3)]:
        ek = fiber_eigenfunction(op, k, x)
        lam = op.psi_value * (beta + 2 * math.pi * k) / op.mass
        out = fiber_evolve(op, t, ek, x)
        assert np.max(np.abs(out - np.exp(1j * t * lam) * ek)) < 1e-8


def test_evolve_infinite_mass_translation():
    op = FiberOperator.build(2.0, WeightField.unit(), BoundaryPhase(0.0))
    x = np.linspace(-12, 12, 1024, endpoint=False)
    f = np.exp(-x ** 2 / 2)
    out = fiber_evolve(op, 1.0, f, x)
    assert np.max(np.abs(out - np.exp(-(x + 2.0) ** 2 / 2))) < 1e-10


@pytest.mark.parametrize("weight", BUILTIN_WEIGHTS)
def test_evolve_unitary(weight):
    op = FiberOperator.build(1.0, weight, BoundaryPhase(math.pi / 3))
    x = op.grid(4097)
    f = np.exp(-x ** 2 / 2).astype(complex)
    assert abs(op.norm_w(fiber_evolve(op, 0.6, f, x), x) - op.norm_w(f, x)) < 1e-6


def test_evolve_group_law():
    op = _op(beta=math.pi / 3)
    x = op.grid(16385)
    f = np.exp(-x ** 2 / 2).astype(complex)
    ab = fiber_evolve(op, 0.9, fiber_evolve(op, 0.6, f, x), x)
    onestep = fiber_evolve(op, 1.5, f, x)
    assert np.max(np.abs(ab - onestep)) < 1e-6


def test_evolve_wrap_factor_matches_eigen_expansion():
    # several wraps of the W=2 fiber: the alpha^n factor must match the
    # phase picked up mode by mode
    op = _op(beta=math.pi / 3)
    x = op.grid(4097)
    f = np.exp(-x ** 2 / 2).astype(complex)
    t = 7.3
    direct = fiber_evolve(op, t, f, x)
    coeff = phi_mode_coefficients(op, f, x, 512)
    lam = mode_eigenvalues(op, 512)
    via_modes = phi_mode_synthesis(op, np.exp(1j * t * lam) * coeff, x)
    assert np.max(np.abs(direct - via_modes)) < 1e-6


def test_mode_transform_round_trip_and_purity():
    op = _op(beta=math.pi / 3)
    x = op.grid(4097)
    e1 = fiber_eigenfunction(op, 1, x)
    c = phi_mode_coefficients(op, e1, x, 256)
    assert abs(c[1] - 1.0) < 1e-9
    assert np.max(np.abs(np.delete(c, 1))) < 1e-9
    f = np.exp(-x ** 2 / 2).astype(complex)
    back = phi_mode_synthesis(op, phi_mode_coefficients(op, f, x, 512), x)
    assert np.max(np.abs(back - f)) < 1e-5


def test_matrix_oracle_spectral_integer_ladder():
    op = _op(weight=WeightField.exponential(math.pi))  # W = 2 pi
    vals = fiber_matrix_oracle(op, 256, method="spectral", num_eigs=9)
    assert np.max(np.abs(vals - np.arange(-4, 5))) < 1e-6


def test_matrix_oracle_fd4_multiples_of_pi():
    vals = fiber_matrix_oracle(_op(), 4096, method="fd4", num_eigs=5)
    expect = np.array([-2, -1, 0, 1, 2]) * math.pi
    assert np.max(np.abs(vals - expect)) < 1e-3 * math.pi


def test_matrix_oracle_beta_pi_no_zero_mode():
    vals = fiber_matrix_oracle(_op(beta=math.pi), 4096, method="fd4", num_eigs=5)
    expect = np.sort(np.array([-3, -1, 1, -5, 3]) * math.pi / 2.0)
    assert np.max(np.abs(np.sort(vals) - expect)) < 1e-3 * math.pi
    assert np.min(np.abs(vals)) > 1.0


@pytest.mark.parametrize("weight", BUILTIN_WEIGHTS)
@pytest.mark.parametrize("beta", [0.0, math.pi / 3, math.pi])
def test_matrix_oracle_consistent_with_ladder(weight, beta):
    # at beta = pi the 5th-smallest |lambda| is a +/- tie, so compare each
    # value against its nearest ladder point and match |lambda| multisets
    op = FiberOperator.build(1.0, weight, BoundaryPhase(beta))
    got = fiber_matrix_oracle(op, 4096, method="fd4", num_eigs=5)
    ks = np.arange(-8, 9)
    ladder = op.psi_value * (beta + 2 * math.pi * ks) / op.mass
    for v in got:
        nearest = ladder[np.argmin(np.abs(ladder - v))]
        assert abs(v - nearest) <= 1e-3 * max(abs(nearest), 1.0)
    expect_abs = np.sort(np.abs(ladder))[:5]
    rel = np.abs(np.sort(np.abs(got)) - expect_abs) / np.maximum(expect_abs, 1.0)
    assert np.max(rel) <= 1e-3
