"""CLI package for edgemvs."""
