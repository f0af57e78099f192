"""Pydantic wire schemas for logs and the remote embedding service."""
