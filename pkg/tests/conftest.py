"""Conftest for pytest."""

import sys
from pathlib import Path
from typing import Callable

import pytest

# Add the parent directory to the path so that path_projection can be imported
sys.path.insert(0, str(Path(__file__).parent.parent))

from path_projection.geometry import (Point3, RigidTransform,  # noqa: E402
                                      TransformTree, UnitQuaternion,
                                      load_transform_tree)
from path_projection.pipeline import DATA_DIR, ProjectionPipeline  # noqa: E402
from path_projection.projector import (Intrinsics,  # noqa: E402
                                       ProjectorConfig,
                                       load_projector_config)
from path_projection.resampler import ResampleParams  # noqa: E402


@pytest.fixture
def nadir_mount() -> Callable[[float], RigidTransform]:
    """Factory for a mount looking straight down from a given height.

    The optical axis maps exactly to -Z, image right to +X and image down to -Y.
    """

    def _mount(height: float) -> RigidTransform:
        return RigidTransform(
            Point3(0.0, 0.0, height),
            UnitQuaternion(1.0, 0.0, 0.0, 0.0),
            "base_link",
            "projector_lens",
        )

    return _mount


@pytest.fixture
def data_dir() -> Path:
    """Directory of the packaged sample files."""
    return DATA_DIR


@pytest.fixture
def intrinsics() -> Intrinsics:
    """Small undistorted projector for fast tests."""
    return Intrinsics(64, 48, 50.0, 50.0, 31.5, 23.5)


@pytest.fixture
def sample_projector(data_dir: Path) -> ProjectorConfig:
    """Sample calibration without a mount."""
    return load_projector_config(
        (data_dir / "projector_camera_info.yaml").read_text(encoding="utf-8")
    )


@pytest.fixture
def sample_tree(data_dir: Path) -> TransformTree:
    """Sample transform tree with the mast and headlight projectors."""
    return load_transform_tree(
        (data_dir / "tf_publisher.yaml").read_text(encoding="utf-8")
    )


@pytest.fixture
def sample_pipeline(
    sample_projector: ProjectorConfig, sample_tree: TransformTree
) -> ProjectionPipeline:
    """Pipeline for the mast projector with default markers."""
    return ProjectionPipeline(
        sample_projector, sample_tree, ResampleParams(0.5, 0.3)
    )
