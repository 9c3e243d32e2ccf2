"""Depth-edge guidance derived from segmentation and monocular depth."""
