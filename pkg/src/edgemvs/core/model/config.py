"""Configuration models and loading for edgemvs.

This module provides Pydantic models for the reconstruction parameters, the
ablation toggles and the combined run configuration, with YAML loading and
saving.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, ClassVar

from pydantic import BaseModel, Field, field_validator, model_validator
import yaml

from edgemvs.core.model.errors import ConfigurationError
from edgemvs.core.model.parameters import (
    AngleStep,
    ClusterSize,
    CrossingBudget,
    DepthTolerance,
    DownsampleFactor,
    GradientThreshold,
    IntensitySigma,
    IterationCount,
    LayerCount,
    MinViews,
    MinWeight,
    PassCount,
    PixelTolerance,
    PlanarRatio,
    RansacThreshold,
    Radius,
    RayCount,
    RefineRounds,
    RelativeTolerance,
    Seed,
    SweepCount,
    Truncation,
    ViewFraction,
    WindowSize,
)

if TYPE_CHECKING:
    from edgemvs.core.model.config_override import ConfigOverride

#: Order of the four cost terms everywhere weights appear as a sequence.
WEIGHT_TERMS = ("matching", "reprojection", "color", "depth")


class EngineConfig(BaseModel):
    """Numeric parameters of every stage, with the published defaults."""

    ray_count: RayCount = 16
    window_size: WindowSize = 11
    ransac_threshold: RansacThreshold = 5e-3
    planar_ratio: PlanarRatio = 0.7
    truncation: Truncation = 3.0
    depth_tolerance: DepthTolerance = 0.05
    min_weight: MinWeight = 0.1
    gradient_threshold: GradientThreshold = 1.8
    min_cluster_size: ClusterSize = 12
    crossing_budget: CrossingBudget = 8
    initial_weights: list[float] = Field(default_factory=lambda: [1.0, 0.2, 0.2, 0.2])
    layers: LayerCount = 4
    sweeps: SweepCount = 3
    passes: PassCount = 2
    seed: Seed = 0
    ransac_iterations: IterationCount = 1000
    refine_rounds: RefineRounds = 3
    refine_angle_step: AngleStep = 0.2
    view_fraction: ViewFraction = 0.6
    intensity_sigma: IntensitySigma = 10.0
    #: None = min(width, height) // 4 at each pyramid layer.
    max_radius: Radius | None = None
    fusion_min_views: MinViews = 2
    fusion_depth_agreement: RelativeTolerance = 0.01
    fusion_reprojection_px: PixelTolerance = 2.0
    downsample: DownsampleFactor = 1

    @field_validator("initial_weights")
    @classmethod
    def validate_initial_weights(cls, v: list[float]) -> list[float]:
        """Four strictly positive pre-normalization weights."""
        if len(v) != len(WEIGHT_TERMS):
            raise ValueError(f"initial_weights needs {len(WEIGHT_TERMS)} values, got {len(v)}")
        if any(w <= 0 for w in v):
            raise ValueError("initial_weights must all be positive")
        return v

    def depth_tolerance_at(self, layer: int) -> float:
        """mu(n) = base * 2**n."""
        return self.depth_tolerance * 2**layer

    def crossing_budget_at(self, layer: int) -> int:
        """epsilon(n) = base * 2**n pixels."""
        return self.crossing_budget * 2**layer

    def radius_at(self, width: int, height: int) -> int:
        """Trajectory cap for a layer of the given size."""
        if self.max_radius is not None:
            return self.max_radius
        return max(1, min(width, height) // 4)


class AblationConfig(BaseModel):
    """Stage toggles; turning one off removes that feature and nothing else."""

    deformation: bool = True
    trajectories: bool = True
    mapping: bool = True
    refinement: bool = True
    propagation: bool = True
    restoration_init: bool = True
    restoration_supervision: bool = True
    segmentation: bool = True
    occlusion: bool = True
    strict_edges: bool = True

    #: CLI spellings that switch off more than one toggle.
    COMPOSITES: ClassVar[dict[str, tuple[str, ...]]] = {
        "restoration": ("restoration_init", "restoration_supervision"),
    }

    @classmethod
    def names(cls) -> list[str]:
        """Every name accepted by ``--ablate`` (dash-separated)."""
        fields = [name.replace("_", "-") for name in cls.model_fields]
        composites = [name.replace("_", "-") for name in cls.COMPOSITES]
        return sorted(fields + composites)

    def without(self, name: str) -> AblationConfig:
        """Return a copy with the named toggle (or composite) switched off."""
        key = name.removeprefix("no-").replace("-", "_")
        targets = self.COMPOSITES.get(key, (key,))
        unknown = [target for target in targets if target not in type(self).model_fields]
        if unknown:
            raise ConfigurationError(
                f"Unknown ablation '{name}'. Valid: {', '.join(self.names())}"
            )
        return self.model_copy(update=dict.fromkeys(targets, False))


class RunConfig(BaseModel):
    """Main configuration model."""

    engine: EngineConfig = Field(default_factory=EngineConfig)
    ablation: AblationConfig = Field(default_factory=AblationConfig)
    #: None = resolve from EDGEMVS_JOBS / CPU count (see engine._resolve_jobs).
    threads: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def validate_weight_bound(self) -> RunConfig:
        """Four weights each above eta cannot sum to 1 when 4*eta > 1."""
        if 4 * self.engine.min_weight > 1:
            raise ValueError("min_weight is infeasible: 4 * min_weight exceeds 1")
        return self

    @classmethod
    def from_yaml(cls, path: str | Path) -> RunConfig:
        """Load configuration from YAML file."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")

        with open(path) as f:
            data = yaml.safe_load(f) or {}

        return cls(**data)

    @classmethod
    def generate_default(cls) -> RunConfig:
        """Default configuration with the published parameter values."""
        return cls()

    def to_yaml_text(self) -> str:
        """Serialize to YAML text (what ``--print-config`` shows)."""
        data = self.model_dump(mode="json")
        return yaml.dump(data, default_flow_style=False, sort_keys=False)

    def to_yaml(self, path: str | Path) -> None:
        """Save configuration to YAML file."""
        Path(path).write_text(self.to_yaml_text())

    def apply_overrides(self, overrides: ConfigOverride) -> RunConfig:
        """Apply command-line overrides and return a new config instance.

        Args:
            overrides: ConfigOverride instance with override settings

        Returns:
            New RunConfig instance with overrides applied
        """
        if not overrides.has_overrides():
            return self

        config_dict = self.model_dump(mode="json")
        modified_dict = overrides.merge_with_config_dict(config_dict)
        return RunConfig(**modified_dict)
