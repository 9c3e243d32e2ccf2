"""File formats: PFM depth rasters, PNG rasters, the scene directory and PLY clouds."""
