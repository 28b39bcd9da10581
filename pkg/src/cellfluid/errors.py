"""Shared exception types."""


class ScenarioError(ValueError):
    """Unreadable or malformed scenario input (bad key, bad value, bad file)."""


class ModelError(RuntimeError):
    """A model cannot be solved as posed (instability, singularity, divergence)."""


class QuadratureError(RuntimeError):
    """A numerical integral failed to reach its accuracy target."""
