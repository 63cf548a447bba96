import csv

import numpy as np
import pytest
from scipy.integrate import quad

import fine_properties
from errors import InputInvariantError, LadderError, OrderMismatchError
from fine_properties import (EPS_SLOPE, check_ladder, continuity_check_k_eq_n, gradient_continuity_check_k_gt_n,
                             lebesgue_scan, linfty_bound_check, radial_pairs, trend_slope, verdicts_to_csv)
from grid_function import GridFunction
from measures import Potential
from regions import Region
from zoo import gradient, hessian, higher_gradient

LADDER_STEPS = (1 / 32, 1 / 64, 1 / 128)
CIRCLE_ANGLES = np.pi * np.array([1, 2, 3, 5, 6, 7, 4.5]) / 8
CIRCLE_POINTS = [[0.0, 1.0]] + [[float(np.cos(t)), float(np.sin(t))] for t in CIRCLE_ANGLES]
# at least 0.3 away from the half-disk boundary
INTERIOR_POINTS = [[0.0, 0.5], [0.0, 0.3], [0.1, 0.35], [-0.1, 0.35],
                   [0.3, 0.4], [-0.3, 0.4], [0.2, 0.55], [-0.2, 0.55]]


def _halfdisk(x):
    return ((np.linalg.norm(x, axis=1) < 1) & (x[:, 1] > 0)).astype(float)


def _ladder(f, half_width):
    return [GridFunction.from_function(f, [-half_width, -half_width], [half_width, half_width], h)
            for h in LADDER_STEPS]


@pytest.fixture(scope="module")
def halfdisk_ladder():
    return _ladder(_halfdisk, 2.0)


@pytest.fixture(scope="module")
def circle_verdicts(halfdisk_ladder):
    return lebesgue_scan(gradient(2), halfdisk_ladder, CIRCLE_POINTS, 0.4, 2)


@pytest.fixture(scope="module")
def interior_verdicts(halfdisk_ladder):
    return lebesgue_scan(gradient(2), halfdisk_ladder, INTERIOR_POINTS, 0.2, 1)


def test_trend_slope():
    hs = [1 / 32, 1 / 64, 1 / 128]
    logs = np.log(1 / np.array(hs))
    assert trend_slope(hs, [Potential(v) for v in 2 * logs + 1]) == pytest.approx(2.0)
    assert trend_slope(hs[:2], [Potential(1.0), Potential(1.0)]) is None
    assert trend_slope(hs, [Potential(1.0), Potential.inf(), Potential(1.0)]) == float("inf")


def test_ladder_must_be_nested():
    a = GridFunction.from_function(lambda x: x[:, 0], [-1, -1], [1, 1], 1 / 8)
    b = GridFunction.from_function(lambda x: x[:, 0], [-1, -1], [1, 1], 1 / 12)
    c = GridFunction.from_function(lambda x: x[:, 0], [-1, -1], [2, 1], 1 / 16)
    check_ladder([a, GridFunction.from_function(lambda x: x[:, 0], [-1, -1], [1, 1], 1 / 16)])
    with pytest.raises(LadderError):
        check_ladder([a, b])
    with pytest.raises(LadderError):
        check_ladder([a, c])
    with pytest.raises(LadderError):
        check_ladder([])


def test_circle_points_are_sigma_candidates(circle_verdicts):
    assert len(circle_verdicts) == 8
    for circle in circle_verdicts:
        assert circle.predicted == "sigma_candidate"
        assert circle.potential_trend > 0.5
        assert all(v >= EPS_SLOPE for v in circle.radius_slopes.values())
        assert circle.osc_last > 0.1
        assert not circle.osc_vanishing
        # M_1 stays bounded while the potential diverges
        assert max(circle.maximal_values) <= 2 * min(circle.maximal_values)


def test_interior_halfdisk_points_are_lebesgue(interior_verdicts):
    assert len(interior_verdicts) == 8
    for interior in interior_verdicts:
        assert interior.predicted == "lebesgue"
        assert interior.potential_trend == pytest.approx(0.0, abs=1e-9)
        assert interior.means_cauchy
        assert interior.osc_vanishing
        assert interior.consistent


def test_smooth_function_has_only_lebesgue_points():
    ladder = _ladder(lambda x: np.sin(x[:, 0]) * np.cos(x[:, 1]), 1.0)
    verdicts = lebesgue_scan(gradient(2), ladder, [[0.1, 0.5], [-0.3, 0.0]], 0.4, 2)
    for v in verdicts:
        assert v.predicted == "lebesgue"
        assert abs(v.potential_trend) < EPS_SLOPE
        assert v.means_cauchy
        assert v.consistent


@pytest.mark.parametrize("slopes, predicted", [
    ((0.9, 0.9, 0.05), "undetermined"),
    ((0.05, 0.05, 0.9), "undetermined"),
    ((0.9, 0.9, 0.9), "sigma_candidate"),
    ((0.05, 0.0, 0.1), "lebesgue"),
])
def test_verdict_needs_agreement_across_radii(monkeypatch, slopes, predicted):
    ladder = _ladder(lambda x: x[:, 0], 1.0)
    fitted = iter(slopes)
    monkeypatch.setattr(fine_properties, "trend_slope", lambda hs, potentials: next(fitted))
    verdict, = lebesgue_scan(gradient(2), ladder, [[0.0, 0.0]], 0.4, 2)
    assert verdict.predicted == predicted
    assert verdict.potential_trend == slopes[0]
    assert verdict.predicted != "lebesgue" or verdict.potential_trend < EPS_SLOPE


def test_sigma_candidates_survive_more_radii(halfdisk_ladder, circle_verdicts):
    fewer = lebesgue_scan(gradient(2), halfdisk_ladder, CIRCLE_POINTS, 0.4, 2, radius_factors=(1.0, 0.5))
    for small, large in zip(fewer, circle_verdicts):
        assert set(small.radius_slopes) < set(large.radius_slopes)
        for rho, slope in small.radius_slopes.items():
            assert large.radius_slopes[rho] == slope
        if small.predicted == "sigma_candidate":
            assert large.predicted == "sigma_candidate"
    assert [v.predicted for v in fewer] == ["sigma_candidate"] * 8


def test_radius_factors_must_shrink_the_ball(halfdisk_ladder):
    with pytest.raises(InputInvariantError):
        lebesgue_scan(gradient(2), halfdisk_ladder, CIRCLE_POINTS[:1], 0.4, 2, radius_factors=(2.0,))


def test_verdicts_csv(circle_verdicts, interior_verdicts, tmp_path):
    path = tmp_path / "scan.csv"
    verdicts_to_csv([circle_verdicts[0], interior_verdicts[0]], str(path))
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["x0", "slope", "osc_last", "verdict"]
    assert [r[3] for r in rows[1:]] == ["sigma_candidate", "lebesgue"]
    assert rows[1][0] == "0.0 1.0"


def test_verdict_model(circle_verdicts):
    model = circle_verdicts[0].to_model()
    assert model.predicted == "sigma_candidate"
    assert set(model.radius_slopes) == {"0.4", "0.2", "0.1"}
    assert len(model.maximal_values) == len(LADDER_STEPS)


def test_radial_pairs():
    pairs = radial_pairs([[0.0, 0.0]], 0.5)
    assert len(pairs) == 24
    distances = sorted({round(float(np.linalg.norm(y - x)), 12) for x, y in pairs})
    assert distances == [0.03125, 0.0625, 0.125]


def test_continuity_of_abs_with_hessian():
    u = GridFunction.from_function(lambda x: np.linalg.norm(x, axis=1), [-1, -1], [1, 1], 1 / 64)
    report = continuity_check_k_eq_n(hessian(2), u, 0.5)
    assert len(report.pairs) == 24
    assert 0 < report.suite_constant < 10
    assert report.monotone
    for pair in report.pairs:
        assert pair.lhs == pytest.approx(pair.distance, rel=0.05)
        assert pair.variation_term > 0
    model = report.to_model()
    assert list(model.modulus) == ["0.25", "0.125", "0.0625"]


def test_continuity_of_affine_function_has_no_variation():
    u = GridFunction.from_function(lambda x: 1 + 2 * x[:, 0] - x[:, 1], [-1, -1], [1, 1], 1 / 32)
    report = continuity_check_k_eq_n(hessian(2), u, 0.5, centers=[[0.1, 0.0]])
    for pair in report.pairs:
        assert pair.variation_term < 1e-8
        assert pair.oscillation_term > 0


def test_continuity_is_scale_invariant():
    u = GridFunction.from_function(lambda x: np.linalg.norm(x, axis=1), [-1, -1], [1, 1], 1 / 64)
    v = GridFunction.from_function(lambda x: np.linalg.norm(2 * x, axis=1) / 2, [-0.5, -0.5], [0.5, 0.5], 1 / 128)
    a = continuity_check_k_eq_n(hessian(2), u, 0.5)
    b = continuity_check_k_eq_n(hessian(2), v, 0.25)
    assert b.suite_constant == pytest.approx(a.suite_constant, rel=0.05)


def test_gradient_continuity_for_third_order():
    u = GridFunction.from_function(lambda x: np.linalg.norm(x, axis=1) * x[:, 0], [-1, -1], [1, 1], 1 / 64)
    report = gradient_continuity_check_k_gt_n(higher_gradient(2, 3), u, 0.5)
    assert report.derivative_order == 1
    modulus = list(report.modulus.values())
    assert modulus[0] >= 1.5 * modulus[-1]
    assert 0 < report.suite_constant < 20


def test_order_mismatch():
    u = GridFunction.from_function(lambda x: x[:, 0], [-1, -1], [1, 1], 1 / 16)
    with pytest.raises(OrderMismatchError):
        continuity_check_k_eq_n(gradient(2), u, 0.5)
    with pytest.raises(OrderMismatchError):
        gradient_continuity_check_k_gt_n(hessian(2), u, 0.5)
    with pytest.raises(OrderMismatchError):
        linfty_bound_check(gradient(2), u, Region.ball([0.0, 0.0], 0.5))


def test_linfty_constant():
    u = GridFunction.from_function(lambda x: np.full(len(x), 3.0), [-1, -1], [1, 1], 1 / 32)
    report = linfty_bound_check(hessian(2), u, Region.ball([0.0, 0.0], 0.5))
    assert report.lhs == pytest.approx(3.0)
    assert report.mean_term == pytest.approx(3.0)
    assert report.variation_term == 0.0
    assert report.ratio == pytest.approx(1.0)


def test_linfty_abs():
    u = GridFunction.from_function(lambda x: np.linalg.norm(x, axis=1), [-1.5, -1.5], [1.5, 1.5], 1 / 64)
    report = linfty_bound_check(hessian(2), u, Region.ball([0.0, 0.0], 1.0))
    assert report.lhs == pytest.approx(1.0)
    assert report.mean_term == pytest.approx(2 / 3, rel=1e-2)
    # |D^2 |x|| = sqrt(1 - sin^2(2t)/4) / |x| in the unweighted entry norm
    expected, _ = quad(lambda t: np.sqrt(1 - np.sin(2 * t) ** 2 / 4), 0, 2 * np.pi)
    assert report.variation_term == pytest.approx(expected, rel=0.05)
    assert report.to_model().ratio == pytest.approx(report.ratio)
