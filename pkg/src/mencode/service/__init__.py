"""FastAPI service wrapping the mencode core package."""

from .app import app

__all__ = ["app"]
