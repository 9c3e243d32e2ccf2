"""PatchMatch solver: costs, weights, refinement and the layer loop."""
