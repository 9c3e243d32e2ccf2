"""Data models: configuration, cameras, scenes, hypotheses and errors."""
