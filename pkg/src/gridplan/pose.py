"""SE2 pose type and angle helpers shared across the package."""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def norm_angle(a: float) -> float:
    """Normalize an angle into [0, 2*pi)."""
    a = math.fmod(a, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    # fmod can return TWO_PI for inputs just below a multiple of 2*pi
    if a >= TWO_PI:
        a -= TWO_PI
    return a


def ang_diff(a: float, b: float) -> float:
    """Signed smallest difference a - b, in (-pi, pi]."""
    d = math.fmod(a - b, TWO_PI)
    if d <= -math.pi:
        d += TWO_PI
    elif d > math.pi:
        d -= TWO_PI
    return d


@dataclass(frozen=True)
class PoseSE2:
    """A continuous planar pose (x, y, theta) with theta in [0, 2*pi)."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", norm_angle(self.theta))

    def heading_bin(self, heading_bins: int) -> int:
        """Nearest uniform heading bin index."""
        b = int(round(self.theta / (TWO_PI / heading_bins))) % heading_bins
        return b

    def nearest_heading(self, headings: list[float]) -> int:
        """Index of the closest heading in an explicit (possibly non-uniform) list."""
        best, best_d = 0, float("inf")
        for i, h in enumerate(headings):
            d = abs(ang_diff(self.theta, h))
            if d < best_d:
                best, best_d = i, d
        return best

    def translated(self, dx: float, dy: float, dtheta: float = 0.0) -> "PoseSE2":
        return PoseSE2(self.x + dx, self.y + dy, self.theta + dtheta)

    def distance_to(self, other: "PoseSE2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)
