"""Constrained parameter types with built-in validation.

These annotated types are the single source of truth for parameter ranges:
the engine config model and the CLI ``--set`` overrides both validate through
them, so a value accepted in a YAML file is accepted on the command line and
vice versa.
"""

from typing import Annotated

from pydantic import AfterValidator, BaseModel, ConfigDict, Field


def _require_odd(value: int) -> int:
    if value % 2 == 0:
        raise ValueError(f"must be odd, got {value}")
    return value


def _require_even(value: int) -> int:
    if value % 2 != 0:
        raise ValueError(f"must be even, got {value}")
    return value


RayCount = Annotated[
    int,
    Field(ge=4, le=256, description="Trajectories per patch (X), even"),
    AfterValidator(_require_even),
]

WindowSize = Annotated[
    int,
    Field(ge=3, le=63, description="Mapping / occlusion window width (w), odd"),
    AfterValidator(_require_odd),
]

RansacThreshold = Annotated[
    float, Field(gt=0, le=1, description="RANSAC residual threshold on normalized depth")
]

PlanarRatio = Annotated[float, Field(gt=0, lt=1, description="Inlier ratio for planar triangles")]

Truncation = Annotated[float, Field(gt=0, description="Truncation of E_re and E_cl (tau)")]

DepthTolerance = Annotated[
    float, Field(gt=0, le=1, description="Base relative depth tolerance (mu at layer 0)")
]

MinWeight = Annotated[
    float, Field(ge=0, lt=1, description="Lower bound on each cost weight (eta)")
]

GradientThreshold = Annotated[
    float, Field(ge=0, description="Sobel gradient threshold on [0, 255] mono depth (delta)")
]

ClusterSize = Annotated[int, Field(ge=1, description="Minimum occlusion cluster size (sigma)")]

CrossingBudget = Annotated[
    int, Field(ge=1, le=1024, description="Continuous-edge crossing budget at layer 0 (epsilon)")
]

LayerCount = Annotated[int, Field(ge=1, le=8, description="Pyramid layers (L)")]

SweepCount = Annotated[int, Field(ge=0, le=64, description="Checkerboard sweeps per layer")]

PassCount = Annotated[int, Field(ge=1, le=8, description="Reconstruction passes")]

Seed = Annotated[int, Field(ge=0, lt=2**64, description="Seed for every stochastic choice")]

IterationCount = Annotated[int, Field(ge=1, le=100000, description="RANSAC iterations")]

RefineRounds = Annotated[int, Field(ge=0, le=16, description="Spherical refinement rounds")]

AngleStep = Annotated[float, Field(gt=0, le=1.5, description="Initial normal step (radians)")]

ViewFraction = Annotated[
    float, Field(gt=0, le=1, description="Fraction of best source views averaged")
]

IntensitySigma = Annotated[float, Field(gt=0, description="Bilateral intensity sigma")]

Radius = Annotated[int, Field(ge=1, description="Trajectory length cap in pixels")]

MinViews = Annotated[int, Field(ge=1, description="Views that must agree for fusion")]

RelativeTolerance = Annotated[float, Field(gt=0, lt=1, description="Relative depth agreement")]

PixelTolerance = Annotated[float, Field(gt=0, description="Reprojection distance in pixels")]

DownsampleFactor = Annotated[int, Field(ge=1, le=2, description="Input downsampling (1 or 2)")]


class ParameterOverrides(BaseModel):
    """Model for validating individual parameter overrides.

    Used by the CLI ``--set`` flag: every field is optional so overrides can be
    applied one at a time with validation on assignment.
    """

    ray_count: RayCount | None = None
    window_size: WindowSize | None = None
    ransac_threshold: RansacThreshold | None = None
    planar_ratio: PlanarRatio | None = None
    truncation: Truncation | None = None
    depth_tolerance: DepthTolerance | None = None
    min_weight: MinWeight | None = None
    gradient_threshold: GradientThreshold | None = None
    min_cluster_size: ClusterSize | None = None
    crossing_budget: CrossingBudget | None = None
    layers: LayerCount | None = None
    sweeps: SweepCount | None = None
    passes: PassCount | None = None
    seed: Seed | None = None
    ransac_iterations: IterationCount | None = None
    refine_rounds: RefineRounds | None = None
    refine_angle_step: AngleStep | None = None
    view_fraction: ViewFraction | None = None
    intensity_sigma: IntensitySigma | None = None
    max_radius: Radius | None = None
    fusion_min_views: MinViews | None = None
    fusion_depth_agreement: RelativeTolerance | None = None
    fusion_reprojection_px: PixelTolerance | None = None
    downsample: DownsampleFactor | None = None

    model_config = ConfigDict(validate_assignment=True)
