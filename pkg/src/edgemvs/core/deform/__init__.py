"""Edge-aligned patch deformation."""
