import math

import numpy as np
import pytest
from scipy.integrate import quad

from shearspec.errors import ConfigError, DomainError
from shearspec.fields import (
    BoundaryPhase,
    ConfinementRegion,
    ShearProfile,
    WeightField,
    evaluate_profile,
    fiber_mass,
    validate_regularity,
)


def test_constant_profile_identity():
    p = ShearProfile.constant(1.0)
    assert evaluate_profile(p, None) == 1.0


def test_affine_saturating_at_zero():
    p = ShearProfile.affine_saturating(2.0, 1.0)
    assert evaluate_profile(p, 0.0) == pytest.approx(2.0, abs=1e-15)


def test_bump_plus_floor_closed_form():
    p = ShearProfile.bump_plus_floor(1.0, 1.0)
    assert evaluate_profile(p, 1.0) == pytest.approx(1.0 + math.exp(-1.0), rel=1e-14)


def test_profile_out_of_box_rejected():
    p = ShearProfile.affine_saturating(fiber_halfwidth=3.0)
    with pytest.raises(DomainError):
        evaluate_profile(p, 5.0)


def test_user_sampled_profile_out_of_domain():
    p = ShearProfile.user_sampled([-1, 0, 1], [1.0, 2.0, 1.0], ell=1.0, lipschitz=1.0)
    with pytest.raises(DomainError):
        p.values(np.array([2.0]))


def test_fiber_mass_exponential():
    w = WeightField.exponential(1.0)
    assert fiber_mass(w, 0.0) == pytest.approx(2.0, rel=1e-14)


def test_fiber_mass_gaussian():
    w = WeightField.gaussian(1.0)
    assert fiber_mass(w, None) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_fiber_mass_unit_weight_infinite():
    w = WeightField.unit()
    assert math.isinf(fiber_mass(w, 0.0))
    assert w.confinement.is_empty()


def test_fiber_mass_off_region_infinite():
    w = WeightField.exponential(1.0, region=ConfinementRegion.from_intervals([(-1, 1)]))
    assert math.isinf(fiber_mass(w, 2.0))
    assert fiber_mass(w, 0.5) == pytest.approx(2.0)


@pytest.mark.parametrize("weight", [
    WeightField.exponential(1.0),
    WeightField.exponential(2.5),
    WeightField.gaussian(1.0),
    WeightField.gaussian(0.7),
    WeightField.compact_bump(1.0, 0.5),
])
def test_fiber_mass_matches_quadrature_oracle(weight):
    # independent high-resolution quadrature of the actual slice values
    ref, _ = quad(lambda t: weight.slice_values(np.array([t]), 0.0)[0],
                  -60, 60, limit=400)
    assert fiber_mass(weight, 0.0) == pytest.approx(ref, rel=1e-8)


def test_product_separable_mass_ramp():
    region = ConfinementRegion.from_intervals([(-1.0, 1.0)])
    w = WeightField.product_separable(region, mass_lo=1.0, mass_hi=2.0)
    assert fiber_mass(w, -1.0) == pytest.approx(1.0)
    assert fiber_mass(w, 1.0) == pytest.approx(2.0)
    assert fiber_mass(w, 0.0) == pytest.approx(1.5)
    assert w.mass_range() == (1.0, 2.0)


def test_product_separable_plateau():
    region = ConfinementRegion.from_intervals([(0.0, 1.0)])
    w = WeightField.product_separable(region, 1.0, 2.0, mass_profile="plateau-linear")
    assert fiber_mass(w, 0.25) == pytest.approx(2.0)
    assert fiber_mass(w, 1.0) == pytest.approx(1.0)


def test_mass_consistent_with_slice_integral():
    region = ConfinementRegion.from_intervals([(-1.0, 1.0)])
    w = WeightField.product_separable(region, 1.0, 2.0)
    ref, _ = quad(lambda t: w.slice_values(np.array([t]), 0.3)[0], -40, 40, limit=200)
    assert fiber_mass(w, 0.3) == pytest.approx(ref, rel=1e-8)


def test_validate_regularity_constant():
    rep = validate_regularity(ShearProfile.constant(1.0, dim_fiber=1), 100)
    assert rep.ell_observed == pytest.approx(1.0)
    assert rep.lipschitz_observed == pytest.approx(0.0, abs=1e-15)
    assert rep.passed


def test_validate_regularity_tanh():
    p = ShearProfile.affine_saturating(2.0, 1.0, ell=1.0, lipschitz=1.0)
    rep = validate_regularity(p, 10_000)
    assert rep.ell_observed >= 1.0
    assert rep.lipschitz_observed <= 1.0 + 1e-12
    assert rep.passed


def test_validate_regularity_rejects_zero_lipschitz_claim():
    p = ShearProfile.affine_saturating(2.0, 1.0, ell=1.0, lipschitz=0.0)
    assert not validate_regularity(p, 1000).passed


@pytest.mark.parametrize("profile", [
    ShearProfile.constant(1.0, dim_fiber=1),
    ShearProfile.constant(2.0),
    ShearProfile.affine_saturating(2.0, 1.0),
    ShearProfile.bump_plus_floor(1.0, 1.0),
])
def test_builtin_profiles_pass_declared_regularity(profile):
    assert validate_regularity(profile, 10_000).passed


def test_boundary_phase_unit_modulus():
    ph = BoundaryPhase(1.234)
    assert abs(ph.alpha) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ConfigError):
        BoundaryPhase(7.0)


def test_confinement_region_validation():
    with pytest.raises(ConfigError):
        ConfinementRegion.from_intervals([(0, 1), (0.5, 2)])
    region = ConfinementRegion.from_intervals([(2, 3), (0, 1)])
    assert region.intervals == ((0.0, 1.0), (2.0, 3.0))
    assert region.contains(0.5) and not region.contains(1.5)


def test_weight_tail_cutoff_bounds_tail_mass():
    for w in (WeightField.exponential(1.0), WeightField.gaussian(1.0),
              WeightField.compact_bump(1.0, 0.5)):
        x_max = w.tail_cutoff(0.0, 1e-10)
        tail, _ = quad(lambda t: w.slice_values(np.array([t]), 0.0)[0], x_max, x_max + 200)
        assert 2 * tail <= 1.2e-10
