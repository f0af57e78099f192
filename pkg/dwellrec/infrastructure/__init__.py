"""Caching and run-manifest infrastructure."""
