"""Configuration override system for command-line customization.

This module provides functionality to override configuration settings via
command-line flags (``--set key=value``, ``--ablate name``, ``--seed``,
``--threads``), allowing temporary modifications without editing the
configuration file.
"""

from __future__ import annotations

from collections.abc import Callable
import copy
from dataclasses import dataclass, field
from typing import Any

from pydantic import ValidationError
from pydantic_core import ErrorDetails

from edgemvs.core.model.config import AblationConfig
from edgemvs.core.model.parameters import ParameterOverrides

#: Short spellings accepted by ``--set`` (the symbols parameters are known by).
PARAMETER_ALIASES = {
    "X": "ray_count",
    "w": "window_size",
    "gamma": "ransac_threshold",
    "kappa": "planar_ratio",
    "tau": "truncation",
    "mu": "depth_tolerance",
    "eta": "min_weight",
    "delta": "gradient_threshold",
    "sigma": "min_cluster_size",
    "epsilon": "crossing_budget",
    "L": "layers",
}


@dataclass
class ConfigOverride:
    """Stores configuration overrides from command-line flags.

    Attributes:
        ablations: Toggle names to switch off (``--ablate``, repeatable)
        seed: Replacement seed (``--seed``)
        threads: Worker cap (``--threads``)
    """

    ablations: list[str] = field(default_factory=list)
    seed: int | None = None
    threads: int | None = None

    # Use Pydantic model internally for validation
    _parameter_model: ParameterOverrides = field(
        default_factory=ParameterOverrides, init=False, repr=False
    )

    @property
    def parameter_overrides(self) -> dict[str, Any]:
        """Parameters explicitly overridden so far."""
        return {
            k: v for k, v in self._parameter_model.model_dump().items() if v is not None
        }

    def add_ablation(self, name: str) -> None:
        """Switch off a stage toggle.

        Args:
            name: Toggle name, with or without the ``no-`` prefix

        Raises:
            ConfigurationError: If the name is not a known toggle
        """
        AblationConfig().without(name)
        if name not in self.ablations:
            self.ablations.append(name)

    def set_parameter(self, name: str, value: str | float) -> None:
        """Override one engine parameter with Pydantic validation.

        Args:
            name: Parameter name or alias (e.g. 'window_size' or 'w')
            value: New value; strings are coerced by the parameter's type

        Raises:
            ValueError: If the name is unknown or the value out of range
        """
        name = PARAMETER_ALIASES.get(name, name)
        if name not in ParameterOverrides.model_fields:
            valid = sorted(ParameterOverrides.model_fields) + sorted(PARAMETER_ALIASES)
            raise ValueError(f"Invalid parameter: '{name}'. Valid names: {', '.join(valid)}")

        try:
            setattr(self._parameter_model, name, value)
        except ValidationError as e:
            raise ValueError(self._format_validation_error(name, value, e)) from None

    def _format_validation_error(
        self, name: str, value: str | float, error: ValidationError
    ) -> str:
        """Convert Pydantic ValidationError to user-friendly message."""
        for err in error.errors():
            if name in str(err.get("loc", ())):
                return self._format_specific_error(name, value, err)

        return f"Invalid value for {name}: {value}"

    def _format_specific_error(self, name: str, value: str | float, err: ErrorDetails) -> str:
        """Format a specific validation error based on its type."""
        err_type = err.get("type", "")
        ctx: dict[str, Any] = err.get("ctx", {}) or {}

        error_formatters: dict[str, Callable[[], str]] = {
            "greater_than_equal": lambda: f"{name} must be >= {ctx.get('ge', 0)}, got {value}",
            "less_than_equal": lambda: f"{name} must be <= {ctx.get('le', 'max')}, got {value}",
            "greater_than": lambda: f"{name} must be > {ctx.get('gt', 0)}, got {value}",
            "less_than": lambda: f"{name} must be < {ctx.get('lt', 'max')}, got {value}",
            "int_parsing": lambda: f"{name} must be a valid integer, got {value}",
            "int_from_float": lambda: f"{name} must be an integer, got {value}",
            "float_parsing": lambda: f"{name} must be a number, got {value}",
            "value_error": lambda: f"{name} {ctx.get('error', err.get('msg', 'is invalid'))}",
        }

        formatter = error_formatters.get(err_type)
        if formatter is not None:
            return formatter()
        return f"Invalid value for {name}: {err.get('msg', 'validation failed')}"

    def parse_assignment(self, assignment: str) -> None:
        """Parse an override string in format 'name=value'.

        Args:
            assignment: String like 'window_size=9' or 'w=9'

        Raises:
            ValueError: If string format is invalid
        """
        if "=" not in assignment:
            raise ValueError(f"Invalid override format: {assignment}. Expected 'name=value'")

        name, value_str = assignment.split("=", 1)
        name, value_str = name.strip(), value_str.strip()
        if value_str.lower() in ("none", "null", ""):
            raise ValueError(f"Invalid override value for {name}: a value is required")
        self.set_parameter(name, value_str)

    def has_overrides(self) -> bool:
        """Check if any overrides are configured."""
        return bool(
            self.ablations
            or self.parameter_overrides
            or self.seed is not None
            or self.threads is not None
        )

    def merge_with_config_dict(self, config_dict: dict[str, Any]) -> dict[str, Any]:
        """Merge overrides with a configuration dictionary.

        Args:
            config_dict: Original configuration as dict (``RunConfig.model_dump``)

        Returns:
            Modified configuration dictionary
        """
        merged = copy.deepcopy(config_dict)
        engine = merged.setdefault("engine", {})
        engine.update(self.parameter_overrides)
        if self.seed is not None:
            engine["seed"] = self.seed
        if self.threads is not None:
            merged["threads"] = self.threads
        self._apply_ablations(merged)
        return merged

    def _apply_ablations(self, config: dict[str, Any]) -> None:
        """Switch off every requested toggle."""
        if not self.ablations:
            return
        ablation = AblationConfig(**config.get("ablation", {}))
        for name in self.ablations:
            ablation = ablation.without(name)
        config["ablation"] = ablation.model_dump()
