"""HTTP service exposing the retrieval engine over a shared filesystem."""

from .app import create_app

__all__ = ["create_app"]
