import math

import numpy as np
import pytest

from affinity.dimension import (
    affinity_dimension_bounds,
    affinity_dimension_upper,
    joint_spectral_radius_bounds,
    pressure_bracket_root,
    similarity_dimension,
    zero_temperature_slope,
)
from affinity.exceptions import AffinityWarning, InputError
from affinity.methods import Method
from affinity.pressure import LinearTuple

DIAGONAL = LinearTuple.of([np.diag([1 / 2, 1 / 3]), np.diag([1 / 4, 1 / 5])])
THREE_STRIPS = LinearTuple.of([np.diag([1 / 2, 1 / 4])] * 3)
THREE_STRIPS_DIMENSION = 1.0 + math.log(1.5) / math.log(4.0)


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def contractive_tuple(seed, m=2, d=2):
    rng = np.random.default_rng(seed)
    matrices = []
    for _ in range(m):
        A = rng.normal(size=(d, d))
        matrices.append(0.8 * A / np.linalg.norm(A, 2))
    return LinearTuple.of(matrices)


@pytest.mark.parametrize(
    "ratios, expected",
    [
        ([0.5, 0.5], 1.0),
        ([0.5, 0.5, 0.5], math.log(3) / math.log(2)),
        ([0.5] * 4, 2.0),
        ([1 / 3, 1 / 3], math.log(2) / math.log(3)),
        ([0.7], 0.0),
    ],
)
def test_similarity_dimension(ratios, expected):
    assert similarity_dimension(ratios) == pytest.approx(expected, abs=1e-11)


@pytest.mark.parametrize("ratios", [[], [0.5, 1.0], [0.0, 0.5], [0.5, float("inf")]])
def test_similarity_dimension_rejects(ratios):
    with pytest.raises(InputError):
        similarity_dimension(ratios)


def test_upper_bound_for_strips():
    assert affinity_dimension_upper(THREE_STRIPS, 4) == pytest.approx(THREE_STRIPS_DIMENSION, abs=1e-9)
    assert THREE_STRIPS_DIMENSION == pytest.approx(1.2924813, abs=1e-7)


def test_upper_bound_requires_contractions():
    with pytest.raises(InputError):
        affinity_dimension_upper(LinearTuple.of([np.eye(2)]), 3)
    with pytest.raises(InputError):
        affinity_dimension_bounds(LinearTuple.of([np.diag([0.5, 0.2]), np.diag([1.2, 0.1])]), 3)


def test_single_map_has_dimension_zero():
    assert affinity_dimension_upper(LinearTuple.of([np.diag([0.5, 0.3])]), 5) == 0.0


def test_upper_bound_improves_with_doubling():
    for seed in range(10):
        T = contractive_tuple(seed, m=3)
        upper = [affinity_dimension_upper(T, n) for n in (1, 2, 4, 8)]
        assert all(b <= a + 1e-9 for a, b in zip(upper, upper[1:]))


def test_conformal_bounds_are_exact():
    T = LinearTuple.of([0.5 * rotation(0.3), 0.5 * rotation(1.0), 0.5 * np.eye(2)])
    bounds = affinity_dimension_bounds(T, 3)
    assert bounds.lower_method == Method.EXACT_CONFORMAL
    assert bounds.lower <= math.log(3) / math.log(2) <= bounds.upper
    assert 0.0 <= bounds.gap <= 1e-9


def test_strip_bounds_contain_dimension_at_level_twelve():
    bounds = affinity_dimension_bounds(THREE_STRIPS, 12)
    assert bounds.cone is not None
    assert bounds.lower <= THREE_STRIPS_DIMENSION <= bounds.upper
    assert bounds.upper == pytest.approx(THREE_STRIPS_DIMENSION, abs=1e-8)
    assert bounds.gap <= -math.log(bounds.cone.c) / (12 * math.log(2.0)) + 1e-9
    assert affinity_dimension_upper(THREE_STRIPS, 12) >= THREE_STRIPS_DIMENSION


def test_cone_bounds_for_strips():
    for n in (4, 8):
        bounds = affinity_dimension_bounds(THREE_STRIPS, n)
        assert bounds.cone is not None
        assert bounds.lower - 1e-9 <= THREE_STRIPS_DIMENSION <= bounds.upper + 1e-9
        assert 0.0 <= bounds.gap <= -math.log(bounds.cone.c) / (n * math.log(2.0)) + 1e-9
        assert bounds.lower_method in (Method.CONE_CERTIFIED, Method.SLOPE_BRACKET)


def test_cone_bounds_for_diagonal_pair():
    bounds = affinity_dimension_bounds(DIAGONAL, 8)
    assert bounds.lower is not None
    assert bounds.lower <= bounds.upper
    assert bounds.upper <= affinity_dimension_upper(DIAGONAL, 8) + 1e-12


def test_bounds_without_cone():
    T = LinearTuple.of([0.6 * rotation(1.2) @ np.diag([1.0, 0.5])])
    bounds = affinity_dimension_bounds(T, 4, use_cone=False)
    assert bounds.lower is None and bounds.gap is None
    with pytest.warns(AffinityWarning):
        bounds = affinity_dimension_bounds(LinearTuple.of([0.6 * rotation(1.2) @ np.diag([1.0, 0.5])] * 2), 4)
    assert bounds.lower is None
    with pytest.warns(AffinityWarning):
        affinity_dimension_bounds(contractive_tuple(1, d=3), 2)


def test_pressure_bracket_root():
    slopes = (math.log(0.25), math.log(0.5))
    lo, hi = pressure_bracket_root(1.0, 0.1, 0.2, slopes)
    assert lo == pytest.approx(1.0 + 0.1 / math.log(4.0), rel=1e-14)
    assert hi == pytest.approx(1.0 + 0.2 / math.log(2.0), rel=1e-14)
    lo, hi = pressure_bracket_root(1.0, -0.2, -0.1, slopes)
    assert lo == pytest.approx(1.0 - 0.2 / math.log(2.0), rel=1e-14)
    assert hi == pytest.approx(1.0 - 0.1 / math.log(4.0), rel=1e-14)
    lo, hi = pressure_bracket_root(1.0, -0.1, 0.1, slopes)
    assert lo < 1.0 < hi
    with pytest.raises(InputError):
        pressure_bracket_root(1.0, 0.2, 0.1, slopes)
    with pytest.raises(InputError):
        pressure_bracket_root(1.0, 0.1, 0.2, (0.1, 0.2))


@pytest.mark.parametrize("n_max", [8, 32])
def test_jsr_of_single_non_normal_matrix(n_max):
    lo, hi = joint_spectral_radius_bounds(LinearTuple.of([np.array([[0.9, 1.0], [0.0, 0.5]])]), n_max)
    assert lo <= hi
    assert lo == pytest.approx(0.9, abs=1e-6)
    assert hi == pytest.approx(0.9, abs=1e-6)


def test_upper_bound_at_level_one_is_similarity_dimension():
    T = LinearTuple.of([0.5 * rotation(0.3), 0.5 * rotation(1.0), 0.5 * np.eye(2)])
    upper = affinity_dimension_upper(T, 1)
    assert upper == pytest.approx(similarity_dimension([0.5, 0.5, 0.5]), abs=1e-8)
    assert upper == pytest.approx(math.log(3) / math.log(2), abs=1e-8)


def test_jsr_of_diagonal_pair():
    lo, hi = joint_spectral_radius_bounds(DIAGONAL, 6)
    assert hi == pytest.approx(0.5, rel=1e-14)
    assert lo == pytest.approx(0.5, abs=1e-6)


def test_jsr_of_isometries():
    lo, hi = joint_spectral_radius_bounds(LinearTuple.of([np.eye(2), rotation(0.7)]), 5)
    assert lo == pytest.approx(1.0, abs=1e-9)
    assert hi == pytest.approx(1.0, abs=1e-9)


def test_jsr_bounds_bracket_level_norms():
    T = contractive_tuple(4, m=2)
    lo, hi = joint_spectral_radius_bounds(T, 6, power=2 ** 10)
    assert lo <= hi <= float(T.singular_values[:, 0].max()) + 1e-15
    rho = max(abs(np.linalg.eigvals(A)).max() for A in T.stack)
    assert hi >= rho - 1e-12


def test_jsr_power_must_be_power_of_two():
    with pytest.raises(InputError):
        joint_spectral_radius_bounds(DIAGONAL, 3, power=1000)


def test_zero_temperature_slope():
    assert zero_temperature_slope(DIAGONAL, 64.0, 4) == pytest.approx(math.log(0.5), abs=1e-2)
    with pytest.raises(InputError):
        zero_temperature_slope(DIAGONAL, 0.0, 4)
