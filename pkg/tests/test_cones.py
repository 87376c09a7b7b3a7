import math

import numpy as np
import pytest

from affinity.cones import (
    ConePair,
    ProjectiveInterval,
    find_invariant_cone,
    induced_projective_map,
    maps_into,
    oracle_constant,
    pressure_bounds,
    pressure_lower_cone,
    supermultiplicativity_constant,
    verify_cone,
)
from affinity.config import DEFAULT_LIMITS
from affinity.exceptions import AffinityWarning, InputError, PreconditionError, UnsupportedDimensionError
from affinity.linalg import log_svf_batch, singular_values_batch
from affinity.methods import Method
from affinity.pressure import LinearTuple, partition_sum, pressure_upper

DIAGONAL = LinearTuple.of([np.diag([1 / 2, 1 / 3]), np.diag([1 / 4, 1 / 5])])
DIAGONAL_P = math.log(0.5 * (1 / 3) ** 0.5 + 0.25 * (1 / 5) ** 0.5)
QUADRANT = ProjectiveInterval(0.0, math.pi / 2)
MIDDLE = ProjectiveInterval(math.pi / 8, 3 * math.pi / 8)


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def positive_tuple(seed, m=2):
    rng = np.random.default_rng(seed)
    return LinearTuple.of([rng.uniform(0.1, 1.0, size=(2, 2)) for _ in range(m)])


def cone_maps(rng, K, K_inner, count, spread=6.0):
    """Random matrices sending K into K_inner, parametrised by the images of K's edges."""
    e_lo, e_hi = K.boundary_vectors()
    E_inv = np.linalg.inv(np.column_stack([e_lo, e_hi]))
    t1 = rng.uniform(K_inner.lo, K_inner.hi, count)
    t2 = rng.uniform(K_inner.lo, K_inner.hi, count)
    ratio = np.exp(rng.uniform(-spread, spread, count))
    scale = np.exp(rng.uniform(-2.0, 2.0, count))
    u1 = np.stack([np.cos(t1), np.sin(t1)], axis=-1)
    u2 = np.stack([np.cos(t2), np.sin(t2)], axis=-1) * ratio[:, None]
    images = np.stack([u1, u2], axis=-1) * scale[:, None, None]
    return images @ E_inv


def test_projective_interval_normalises():
    arc = ProjectiveInterval(math.pi + 0.2, math.pi + 0.7)
    assert arc.lo == pytest.approx(0.2, abs=1e-15)
    assert arc.length == pytest.approx(0.5, abs=1e-15)
    assert arc.contains(0.4) and arc.contains(0.4 + math.pi) and not arc.contains(1.0)
    for lo, hi in ((0.0, 0.0), (0.0, math.pi), (1.0, 0.5)):
        with pytest.raises(InputError):
            ProjectiveInterval(lo, hi)


def test_arc_across_zero():
    arc = ProjectiveInterval.from_start(-0.1, 0.3)
    assert arc.contains(0.05) and arc.contains(math.pi - 0.05)
    assert not arc.contains(0.25)


def test_induced_projective_map():
    assert induced_projective_map(np.eye(2), 0.7) == pytest.approx(0.7, abs=1e-15)
    assert induced_projective_map(rotation(1.0), 2.5) == pytest.approx((3.5) % math.pi, abs=1e-14)
    assert induced_projective_map(np.diag([2.0, 1.0]), math.pi / 4) == pytest.approx(math.atan(0.5), abs=1e-14)
    with pytest.raises(UnsupportedDimensionError):
        induced_projective_map(np.eye(3), 0.1)


def test_constant_for_quadrant_pair():
    c = supermultiplicativity_constant(QUADRANT, MIDDLE)
    assert 0.0 < c <= 1.0
    assert c == pytest.approx(0.5 * math.sin(math.pi / 8) * math.tan(math.pi / 4), rel=1e-9)
    assert oracle_constant(QUADRANT, MIDDLE) >= c


def test_constant_rejects_degenerate_geometry():
    with pytest.raises(InputError):
        supermultiplicativity_constant(MIDDLE, QUADRANT)
    with pytest.raises(InputError):
        supermultiplicativity_constant(QUADRANT, QUADRANT)


def test_constant_with_narrow_inner_cone():
    K = ProjectiveInterval(0.0, math.pi / 2)
    inner = ProjectiveInterval(math.pi / 4 - 1e-6, math.pi / 4 + 1e-6)
    c = supermultiplicativity_constant(K, inner)
    assert c <= 1.0
    assert c == pytest.approx(0.5 * math.sin(math.pi / 4 - 1e-6), rel=1e-6)


def test_constant_fuzz():
    rng = np.random.default_rng(99)
    c = supermultiplicativity_constant(QUADRANT, MIDDLE)
    B = cone_maps(rng, QUADRANT, MIDDLE, 10 ** 5)
    theta = rng.uniform(MIDDLE.lo, MIDDLE.hi, 10 ** 5)
    w = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    ratio = np.linalg.norm(np.einsum("nab,nb->na", B, w), axis=1) / singular_values_batch(B)[:, 0]
    assert np.count_nonzero(ratio < c) == 0


def test_constant_for_nearly_rank_one_map():
    c = supermultiplicativity_constant(QUADRANT, MIDDLE)
    u = np.array([math.cos(MIDDLE.lo), math.sin(MIDDLE.lo)])
    B = np.outer(u, [1.0, 1e-3]) + 1e-9 * np.eye(2)
    for theta in np.linspace(MIDDLE.lo, MIDDLE.hi, 101):
        w = np.array([math.cos(theta), math.sin(theta)])
        assert np.linalg.norm(B @ w) >= c * np.linalg.norm(B, 2)


def test_products_are_supermultiplicative():
    rng = np.random.default_rng(5)
    c = supermultiplicativity_constant(QUADRANT, MIDDLE)
    B1 = cone_maps(rng, QUADRANT, MIDDLE, 20000, spread=3.0)
    B2 = cone_maps(rng, QUADRANT, MIDDLE, 20000, spread=3.0)
    l1, l2 = np.log(singular_values_batch(B1)), np.log(singular_values_batch(B2))
    l12 = np.log(singular_values_batch(B1 @ B2))
    for s in np.arange(0.0, 2.01, 0.25):
        slack = log_svf_batch(l12, s) - log_svf_batch(l1, s) - log_svf_batch(l2, s) - math.log(c)
        assert np.min(slack) >= -1e-9


@pytest.mark.parametrize("seeds", [range(50), range(50, 250)])
def test_positive_tuples_have_cones(seeds):
    for seed in seeds:
        T = positive_tuple(seed, m=2 + seed % 2)
        pair = find_invariant_cone(T)
        assert pair is not None, seed
        assert verify_cone(T, pair)
        assert pair.gap >= DEFAULT_LIMITS.min_gap * (1.0 - 1e-9)
        assert 0.0 < pair.c <= 1.0
        assert 0.0 < pair.K.lo and pair.K.hi < math.pi / 2, seed


def test_sign_flipped_positive_tuples_use_the_second_quadrant():
    flip = np.diag([1.0, -1.0])
    for seed in range(20):
        T = LinearTuple.of([flip @ A @ flip for A in positive_tuple(seed).stack])
        pair = find_invariant_cone(T)
        assert pair is not None, seed
        assert verify_cone(T, pair)
        assert math.pi / 2 < pair.K.lo and pair.K.hi < math.pi, seed


def test_diagonal_cone_is_around_the_horizontal():
    pair = find_invariant_cone(DIAGONAL)
    assert pair is not None
    assert pair.K.contains(0.0) and pair.K_inner.contains(0.0)
    assert not pair.flagged


def test_rotation_has_no_cone():
    assert find_invariant_cone(LinearTuple.of([rotation(0.3)])) is None


def test_cone_search_needs_planar_tuples():
    with pytest.raises(UnsupportedDimensionError):
        find_invariant_cone(LinearTuple.of([0.5 * np.eye(3)]))


def test_cone_survives_small_perturbations():
    rng = np.random.default_rng(17)
    T = positive_tuple(3)
    pair = find_invariant_cone(T)
    alpha_star = float(T.singular_values[:, -1].min())
    size = 1e-3 * pair.gap * alpha_star
    for _ in range(100):
        E = rng.uniform(-1.0, 1.0, size=T.stack.shape) * size / 2.0
        assert verify_cone(T.perturbed(E, 1.0), pair)


def test_products_stay_in_the_cone():
    rng = np.random.default_rng(23)
    T = positive_tuple(8, m=3)
    pair = find_invariant_cone(T)
    for _ in range(50):
        word = tuple(rng.integers(T.m, size=rng.integers(1, 5)))
        assert maps_into(T.product(word), pair.K, pair.K_inner)


def test_diagonal_lower_bound():
    pair = find_invariant_cone(DIAGONAL)
    L10 = pressure_lower_cone(DIAGONAL, 1.5, 10, pair)
    assert L10 == pytest.approx(DIAGONAL_P + math.log(pair.c) / 10, rel=1e-10)
    assert L10 <= DIAGONAL_P


def test_zero_exponent_lower_bound():
    T = positive_tuple(4, m=3)
    pair = find_invariant_cone(T)
    for n in (1, 3, 6):
        L = pressure_lower_cone(T, 0.0, n, pair)
        assert L == pytest.approx(math.log(3) + math.log(pair.c) / n, rel=1e-12)
        assert L <= math.log(3)


def test_lower_bound_requires_the_cone():
    pair = find_invariant_cone(DIAGONAL)
    rotated = LinearTuple.of([rotation(math.pi / 2) @ A for A in DIAGONAL.stack])
    with pytest.raises(PreconditionError):
        pressure_lower_cone(rotated, 1.5, 4, pair)


def test_sandwich_on_positive_tuples():
    for seed in range(50):
        T = positive_tuple(seed, m=2 + seed % 2)
        pair = find_invariant_cone(T)
        assert pair is not None, seed
        for s in (0.0, 0.7, 1.0, 1.6, 2.0, 2.5):
            upper = pressure_upper(T, s, 8).upper
            for n in (1, 4, 8):
                assert pressure_lower_cone(T, s, n, pair) <= upper + 1e-9


def test_pressure_bounds_with_cone():
    bounds = pressure_bounds(DIAGONAL, 1.5, 10)
    assert bounds.method == Method.CONE_CERTIFIED
    assert bounds.lower <= bounds.upper
    assert bounds.upper == pytest.approx(DIAGONAL_P, abs=1e-10)
    log_c = math.log(bounds.cone.c)
    S10 = partition_sum(DIAGONAL, 1.5, 10)
    assert bounds.gap <= abs(log_c) / 10 + (bounds.upper - S10 / 10) + 1e-12


def test_pressure_bounds_without_cone():
    bounds = pressure_bounds(DIAGONAL, 1.5, 4, cone="off")
    assert bounds.lower is None and bounds.method == Method.SUBADDITIVE_INF
    with pytest.warns(AffinityWarning):
        bounds = pressure_bounds(LinearTuple.of([rotation(0.3)]), 1.0, 3)
    assert bounds.lower is None
    with pytest.raises(InputError):
        pressure_bounds(DIAGONAL, 1.5, 4, cone="sometimes")


def test_pressure_bounds_with_given_pair():
    pair = ConePair(K=QUADRANT, K_inner=MIDDLE, gap=math.pi / 8, c=supermultiplicativity_constant(QUADRANT, MIDDLE))
    T = LinearTuple.of([np.array([[1.0, 0.8], [0.8, 1.0]]) * 0.5])
    bounds = pressure_bounds(T, 1.0, 5, cone=pair)
    assert bounds.cone is pair
    assert bounds.lower <= bounds.upper
