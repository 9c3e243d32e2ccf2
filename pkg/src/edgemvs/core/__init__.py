"""Core reconstruction stages and their data models."""
