"""edgemvs: edge-aware patch-deformation multi-view stereo with depth restoration."""

from edgemvs.__version__ import __version__, __version_info__

__all__ = ["__version__", "__version_info__"]
