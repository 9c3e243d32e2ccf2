"""Error hierarchy.

Every error raised on purpose by edgemvs derives from EdgeMVSError, and also
from the builtin a caller would naturally catch (a missing scene file is still
a FileNotFoundError), so the CLI can report any stage failure uniformly.
"""

from __future__ import annotations


class EdgeMVSError(Exception):
    """Base class for all edgemvs errors."""


class SceneLoadError(EdgeMVSError, FileNotFoundError):
    """A required scene file is missing or unreadable."""


class SceneValidationError(EdgeMVSError, ValueError):
    """Loaded scene data violates a cross-file invariant."""


class ConfigurationError(EdgeMVSError, ValueError):
    """Parameters are infeasible or inconsistent."""


class ContractError(EdgeMVSError, ValueError):
    """A pure operation was called outside its precondition."""


class SynthSpecError(EdgeMVSError, ValueError):
    """A synthetic scene description is ambiguous or invalid."""


class RasterFormatError(EdgeMVSError, ValueError):
    """A raster file is malformed or a raster cannot be encoded."""


class EvaluationError(EdgeMVSError, ValueError):
    """Result and ground-truth directories do not describe the same views."""
