"""Test path resampling and heading derivation."""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from path_projection.exceptions import ParameterError
from path_projection.geometry import Point3, from_xyz_ypr
from path_projection.ingestion import load_path_file
from path_projection.resampler import (AnchorKind, NavPath, Pose,
                                       ResampleParams, derive_headings,
                                       resample)


def make_path(points: list[tuple[float, float]], frame: str = "map") -> NavPath:
    """Build a path from planar points."""
    return NavPath(frame, [Pose(Point3(x, y, 0.0)) for x, y in points])


def oracle(
    points: list[tuple[float, float]], spacing: float, diameter: float
) -> list[int]:
    """Indices kept by a plain backward linear scan."""
    kept: list[int] = []
    if not points:
        return kept
    kept.append(len(points) - 1)
    threshold = spacing + diameter
    last = points[-1]
    for index in range(len(points) - 2, -1, -1):
        x, y = points[index]
        if math.hypot(x - last[0], y - last[1]) >= threshold:
            kept.append(index)
            last = points[index]
            threshold = spacing
    return kept


def test_params_validation() -> None:
    """Test parameter ranges."""
    with pytest.raises(ParameterError):
        ResampleParams(0.0)
    with pytest.raises(ParameterError):
        ResampleParams(-1.0)
    with pytest.raises(ParameterError):
        ResampleParams(0.5, -0.1)
    with pytest.raises(ParameterError):
        ResampleParams(math.inf)


def test_empty_path() -> None:
    """Test that an empty path has no anchors."""
    assert resample(NavPath("map"), ResampleParams(0.5, 0.3)) == []


def test_single_pose() -> None:
    """Test a path with only a destination."""
    anchors = resample(make_path([(3.0, 4.0)]), ResampleParams(0.5, 0.3))
    assert len(anchors) == 1
    assert anchors[0].kind is AnchorKind.DESTINATION
    assert anchors[0].position == Point3(3.0, 4.0, 0.0)


def test_straight_line_worked_example() -> None:
    """Test the 11-point line with D=0.25 and a 0.2 m destination circle."""
    path = make_path([(k / 10, 0.0) for k in range(11)])
    anchors = resample(path, ResampleParams(0.25, 0.2))
    assert [a.position.x for a in anchors] == [1.0, 0.5, 0.2]
    assert [a.kind for a in anchors] == [
        AnchorKind.DESTINATION,
        AnchorKind.ARROW,
        AnchorKind.ARROW,
    ]
    assert [a.source_index for a in anchors] == [10, 5, 2]


def test_short_path_keeps_destination_only() -> None:
    """Test a path shorter than the destination clearance."""
    path = make_path([(0.0, 0.0), (0.1, 0.0), (0.2, 0.0)])
    anchors = resample(path, ResampleParams(0.5, 0.3))
    assert [a.source_index for a in anchors] == [2]


def test_exact_threshold_is_kept() -> None:
    """Test that a pose exactly D away is kept."""
    path = make_path([(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)])
    anchors = resample(path, ResampleParams(0.5))
    assert [a.source_index for a in anchors] == [2, 1, 0]


def test_distance_is_planar() -> None:
    """Test that height differences are ignored."""
    path = NavPath(
        "map",
        [Pose(Point3(0.0, 0.0, 5.0)), Pose(Point3(0.4, 0.0, 0.0))],
    )
    assert len(resample(path, ResampleParams(0.5))) == 1


def test_matches_linear_scan_oracle() -> None:
    """Test 1000 random paths against an independent linear scan."""
    rng = np.random.default_rng(7)
    elapsed = 0.0
    for _ in range(1000):
        count = int(rng.integers(5, 501))
        steps = rng.uniform(0.01, 1.0, count)
        angles = np.cumsum(rng.normal(0.0, 0.4, count))
        xs = np.cumsum(steps * np.cos(angles))
        ys = np.cumsum(steps * np.sin(angles))
        points = [(float(x), float(y)) for x, y in zip(xs, ys)]
        spacing = float(rng.uniform(0.1, 2.0))
        diameter = float(rng.uniform(0.0, 1.0))

        path = make_path(points)
        params = ResampleParams(spacing, diameter)
        start = time.perf_counter()
        anchors = resample(path, params)
        elapsed += time.perf_counter() - start

        assert [a.source_index for a in anchors] == oracle(points, spacing, diameter)
        for k in range(1, len(anchors)):
            gap = anchors[k].position.planar_distance_to(anchors[k - 1].position)
            assert gap >= (spacing + diameter if k == 1 else spacing)
    assert elapsed < 5.0


def test_sample_path_matches_oracle(data_dir: Path) -> None:
    """Test the packaged 37-pose path against the oracle."""
    path = load_path_file(data_dir / "sample_path.json")
    assert len(path) == 37
    points = [(p.x, p.y) for p in path.positions]
    anchors = resample(path, ResampleParams(0.5, 0.3))
    assert [a.source_index for a in anchors] == oracle(points, 0.5, 0.3)


def test_resample_is_deterministic() -> None:
    """Test that repeated calls agree."""
    path = make_path([(math.cos(k / 5), math.sin(k / 5)) for k in range(60)])
    params = ResampleParams(0.3, 0.1)
    assert resample(path, params) == resample(path, params)


def test_headings_point_toward_destination() -> None:
    """Test arrow headings along a straight line and an L turn."""
    path = make_path([(k / 10, 0.0) for k in range(11)])
    anchors = derive_headings(resample(path, ResampleParams(0.25, 0.2)))
    assert [a.heading for a in anchors] == [0.0, 0.0, 0.0]

    turn = make_path([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])
    anchors = derive_headings(resample(turn, ResampleParams(0.5)))
    assert anchors[1].heading == pytest.approx(math.pi / 2)
    assert anchors[2].heading == pytest.approx(0.0)
    assert anchors[0].heading == anchors[1].heading


def test_lone_destination_heading() -> None:
    """Test that a destination without arrows has heading zero."""
    anchors = derive_headings(resample(make_path([(1.0, 1.0)]), ResampleParams(0.5)))
    assert anchors[0].heading == 0.0


def test_transformed_path() -> None:
    """Test re-expressing a path in the parent frame."""
    path = make_path([(1.0, 0.0)], frame="odom")
    moved = path.transformed(
        from_xyz_ypr(2.0, 0.0, 0.0, math.pi / 2, 0.0, 0.0, "map", "odom")
    )
    assert moved.frame == "map"
    assert moved.poses[0].position.as_array() == pytest.approx(
        [2.0, 1.0, 0.0], abs=1e-12
    )
    with pytest.raises(ParameterError):
        path.transformed(from_xyz_ypr(0, 0, 0, 0, 0, 0, "map", "base"))
