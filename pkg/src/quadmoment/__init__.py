"""Second moments of h*R over families of quadratic fields with prescribed local behaviour."""

__version__ = "0.1.0"
