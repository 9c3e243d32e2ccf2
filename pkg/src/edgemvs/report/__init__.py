"""Evaluation reports and debug overlays."""
