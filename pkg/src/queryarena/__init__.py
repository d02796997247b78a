"""queryarena: a self-hosted SQL learning game server."""

__version__ = "0.1.0"
