"""Window-parameter estimation from workload distributions.

Capacity and timeout are both chosen by the same smallest-covering rule:
the smallest integer at which the relevant CDF reaches the requested
coverage.  Capacity covers the composition-degree law at level ``alpha``;
timeout covers the response-time-span law at level ``1 - beta``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, NoSolutionError

__all__ = ["WindowParams", "estimate_capacity", "estimate_timeout"]


@dataclass(frozen=True)
class WindowParams:
    """Aggregation-window sizing: tuple capacity and timeout in seconds."""

    capacity: int
    timeout_s: int

    def __post_init__(self):
        if self.capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {self.capacity}")
        if self.timeout_s < 1:
            raise ConfigError(f"timeout_s must be >= 1, got {self.timeout_s}")


def _check_level(name, value):
    if not (0.0 < value < 1.0):
        raise ConfigError(f"{name} must lie strictly between 0 and 1, got {value}")


def estimate_capacity(degree_dist, alpha: float, max_degree: int = 10_000) -> int:
    """Smallest integer n with P(degree <= n) >= alpha.

    Raises NoSolutionError if no n up to ``max_degree`` reaches the level.
    """
    _check_level("alpha", alpha)
    for n in range(1, max_degree + 1):
        if degree_dist.cdf(n) >= alpha:
            return n
    raise NoSolutionError(
        f"no capacity up to {max_degree} reaches coverage {alpha}"
    )


def estimate_timeout(span_dist, beta: float, max_timeout_s: int = 86_400) -> int:
    """Smallest integer t (seconds) with P(span <= t) >= 1 - beta.

    ``beta`` is the tolerated fraction of instances allowed to outlive the
    window.  Raises NoSolutionError when the bound is not reached within
    ``max_timeout_s``.
    """
    _check_level("beta", beta)
    target = 1.0 - beta
    for t in range(1, max_timeout_s + 1):
        if span_dist.cdf(t) >= target:
            return t
    raise NoSolutionError(
        f"no timeout up to {max_timeout_s}s reaches coverage {target}"
    )


def estimate_window_params(degree_dist, span_dist, alpha: float, beta: float) -> WindowParams:
    """Convenience wrapper joining both estimates into a WindowParams."""
    return WindowParams(
        capacity=estimate_capacity(degree_dist, alpha),
        timeout_s=estimate_timeout(span_dist, beta),
    )
