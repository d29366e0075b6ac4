"""Flux-qubit ensemble broadening suppression and cavity superradiance."""

__version__ = "0.1.0"
