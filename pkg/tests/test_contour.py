"""Closed-contour geometry: constructors, spectral tangents, measures,
resampling, distances, and CSV round-tripping."""
from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import make_wobbly_contour
from qgpatch.contour import (
    Contour,
    area,
    centroid,
    chord_arc_constant,
    contour_distance,
    make_circle,
    make_ellipse,
    perimeter,
    read_contour_csv,
    resample,
    tangent,
    write_contour_csv,
)
from qgpatch.errors import ContourError, DomainError

# Circumference of the (2, 1) ellipse, frozen from the complete elliptic
# integral of the second kind evaluated in scipy: 8 E(0.75).
ELLIPSE_2_1_PERIMETER = 9.688448220547675


def test_circle_construction_and_measures():
    circle = make_circle(1.0, 256)
    assert circle.node_count == 256
    assert area(circle) == pytest.approx(math.pi, abs=1e-12)
    assert perimeter(make_circle(2.0, 64)) == pytest.approx(4.0 * math.pi, abs=1e-10)
    assert centroid(circle) == pytest.approx([0.0, 0.0], abs=1e-14)


def test_circle_node_count_validation():
    with pytest.raises(ContourError):
        make_circle(1.0, 4)
    with pytest.raises(ContourError):
        make_circle(1.0, 33)
    with pytest.raises(DomainError):
        make_circle(-1.0, 64)


def test_ellipse_measures():
    assert area(make_ellipse(2.0, 1.0, 256)) == pytest.approx(2.0 * math.pi,
                                                              abs=1e-10)
    assert perimeter(make_ellipse(2.0, 1.0, 256)) == pytest.approx(
        ELLIPSE_2_1_PERIMETER, rel=1e-9)
    assert np.array_equal(make_ellipse(1.0, 1.0, 64).nodes,
                          make_circle(1.0, 64).nodes)


def test_eccentricity_raises_chord_arc_constant():
    assert chord_arc_constant(make_ellipse(3.0, 0.2, 64)) \
        > chord_arc_constant(make_circle(1.0, 64))


def test_translated_centroid():
    nodes = make_circle(1.0, 256).nodes + np.array([5.0, -3.0])
    assert centroid(Contour(nodes)) == pytest.approx([5.0, -3.0], abs=1e-10)


def test_tangent_of_circle_and_ellipse():
    circle = make_circle(1.0, 64)
    tans = tangent(circle)
    assert tans[0] == pytest.approx([0.0, 1.0], abs=1e-12)
    speeds = np.hypot(*tangent(make_circle(2.0, 64)).T)
    assert np.max(np.abs(speeds - 2.0)) <= 1e-12
    ell = make_ellipse(2.0, 1.0, 64)
    quarter = 64 // 4  # node at parameter pi/2
    assert tangent(ell)[quarter] == pytest.approx([-2.0, 0.0], abs=1e-10)


def test_tangent_translation_invariant():
    wobbly = make_wobbly_contour(5)
    shifted = Contour(wobbly.nodes + np.array([2.0, -7.0]))
    assert np.allclose(tangent(wobbly), tangent(shifted), rtol=0, atol=1e-12)


def test_measures_invariant_under_index_rotation():
    wobbly = make_wobbly_contour(9)
    rolled = Contour(np.roll(wobbly.nodes, 13, axis=0))
    assert area(rolled) == pytest.approx(area(wobbly), rel=1e-13)
    assert perimeter(rolled) == pytest.approx(perimeter(wobbly), rel=1e-13)


def test_chord_arc_of_circles():
    # Unit circle: the worst ratio pairs antipodal nodes, parameter distance
    # pi against chord 2, giving pi/2 in the reciprocal direction.
    assert chord_arc_constant(make_circle(1.0, 128)) == pytest.approx(
        math.pi / 2.0, abs=1e-6)
    # Radius 5: the chord/parameter ratio approaches the radius at the
    # smallest separations and dominates the reciprocal direction.
    assert chord_arc_constant(make_circle(5.0, 128)) == pytest.approx(
        5.0, abs=1e-3)


def test_chord_arc_refinement_stable():
    wobbly = make_wobbly_contour(2, node_count=64)
    coarse = chord_arc_constant(wobbly)
    fine = chord_arc_constant(resample(wobbly, 128))
    assert abs(fine - coarse) / coarse <= 0.02


def test_resample_circle_stays_on_circle():
    fine = resample(make_circle(1.0, 64), 128)
    assert fine.node_count == 128
    radii = np.hypot(fine.nodes[:, 0], fine.nodes[:, 1])
    assert np.max(np.abs(radii - 1.0)) <= 1e-10


def test_resample_identity_and_area_preservation():
    ell = make_ellipse(2.0, 1.0, 64)
    same = resample(ell, 64)
    assert np.max(np.abs(same.nodes - ell.nodes)) <= 1e-14
    finer = resample(ell, 256)
    assert area(finer) == pytest.approx(area(ell), abs=1e-10)
    with pytest.raises(DomainError):
        resample(ell, 8)


def test_contour_distance_values():
    circle = make_circle(1.0, 64)
    assert contour_distance(circle, circle) == 0.0
    assert contour_distance(circle, make_circle(1.1, 64)) == pytest.approx(
        0.1, abs=1e-12)
    rolled = Contour(np.roll(circle.nodes, 1, axis=0))
    assert contour_distance(circle, rolled) == pytest.approx(
        2.0 * math.sin(math.pi / 64.0), abs=1e-12)
    with pytest.raises(DomainError):
        contour_distance(circle, make_circle(1.0, 128))


def test_rejects_degenerate_inputs():
    with pytest.raises(ContourError):
        Contour(np.zeros((16, 2)))  # coincident nodes
    nodes = make_circle(1.0, 32).nodes.copy()
    nodes[3] = nodes[4]
    with pytest.raises(ContourError):
        Contour(nodes)
    with pytest.raises(ContourError):
        Contour(make_circle(1.0, 32).nodes[::-1].copy())  # clockwise
    ts = np.linspace(0.0, 2.0 * np.pi, 32, endpoint=False)
    figure_eight = np.stack([np.cos(ts) * np.cos(2 * ts),
                             np.sin(ts) * np.cos(2 * ts)], axis=1)
    with pytest.raises(ContourError):
        Contour(figure_eight)
    bad = make_circle(1.0, 32).nodes.copy()
    bad[5, 0] = np.nan
    with pytest.raises(ContourError):
        Contour(bad)


def test_csv_round_trip(tmp_path):
    wobbly = make_wobbly_contour(4, node_count=32)
    path = tmp_path / "contour.csv"
    write_contour_csv(wobbly, path)
    header = path.read_text().splitlines()[0]
    assert header == "alpha,x1,x2"
    back = read_contour_csv(path)
    assert np.array_equal(back.nodes, wobbly.nodes)
