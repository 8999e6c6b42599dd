"""Piecewise-linear computation-load model for semantic compression.

Compressing the source to a ratio ``rho`` in (0, 1] multiplies the link's
equivalent rate by 1/rho but costs computation power c(rho) * p0, where the
load c is piecewise linear in rho: segment s has slope ``slopes[s-1]`` and
intercept ``intercepts[s-1]`` and covers ratios in
[lower_breaks[s-1], lower_breaks[s-2]), the first segment being closed at 1.
Slopes are negative and strictly decreasing, so the load grows ever faster
as the ratio shrinks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError

# Slack admitted when mapping a power back to a ratio at a segment edge.
EDGE_TOL = 1e-9


@dataclass(frozen=True)
class LoadModel:
    """Per-segment slopes, intercepts and lower breakpoints of the load curve."""

    slopes: tuple[float, ...]
    intercepts: tuple[float, ...]
    lower_breaks: tuple[float, ...]

    def __post_init__(self):
        slopes = tuple(float(x) for x in self.slopes)
        intercepts = tuple(float(x) for x in self.intercepts)
        breaks = tuple(float(x) for x in self.lower_breaks)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "intercepts", intercepts)
        object.__setattr__(self, "lower_breaks", breaks)
        if not slopes or len(slopes) != len(intercepts) or len(slopes) != len(breaks):
            raise ConfigError("load model needs equal, non-empty slope/intercept/break lists")
        if slopes[0] >= 0:
            raise ConfigError("load slopes must be negative: required 0 > A_1, got A_1 = %g" % slopes[0])
        for s in range(1, len(slopes)):
            if slopes[s] >= slopes[s - 1]:
                raise ConfigError(
                    "load slopes must be strictly decreasing: required "
                    f"A_{s} > A_{s + 1}, got {slopes[s - 1]:g} then {slopes[s]:g}"
                )
        if breaks[0] > 1.0:
            raise ConfigError(
                f"breakpoints must not exceed 1: required D_1 <= 1, got D_1 = {breaks[0]:g}"
            )
        if breaks[-1] <= 0.0:
            raise ConfigError(
                f"breakpoints must be positive: required D_{len(breaks)} > 0, "
                f"got {breaks[-1]:g}"
            )
        for s in range(1, len(breaks)):
            if breaks[s] >= breaks[s - 1]:
                raise ConfigError(
                    "breakpoints must be strictly decreasing: required "
                    f"D_{s} > D_{s + 1}, got {breaks[s - 1]:g} then {breaks[s]:g}"
                )
        # The load is decreasing on each segment, so its minimum over segment s
        # sits at the upper ratio end; require it non-negative there.
        for s in range(len(slopes)):
            upper = 1.0 if s == 0 else breaks[s - 1]
            if slopes[s] * upper + intercepts[s] < 0.0:
                raise ConfigError(
                    f"load becomes negative on segment {s + 1} "
                    f"(value {slopes[s] * upper + intercepts[s]:g} at ratio {upper:g})"
                )

    @property
    def n_segments(self) -> int:
        return len(self.slopes)

    @property
    def min_ratio(self) -> float:
        """Smallest admissible compression ratio."""
        return self.lower_breaks[-1]

    def upper_break(self, s: int) -> float:
        """Upper ratio end of segment ``s`` (1-based); 1 for the first segment."""
        self._check_segment(s)
        return 1.0 if s == 1 else self.lower_breaks[s - 2]

    def _check_segment(self, s: int) -> None:
        if not 1 <= s <= self.n_segments:
            raise ValueError(f"segment index {s} outside 1..{self.n_segments}")

    @classmethod
    def from_triples(cls, triples: Sequence[tuple[float, float, float]]) -> "LoadModel":
        """Build from (slope, intercept, lower_break) triples, one per segment."""
        slopes, intercepts, breaks = zip(*triples)
        return cls(tuple(slopes), tuple(intercepts), tuple(breaks))

    @classmethod
    def default(cls) -> "LoadModel":
        """Three-segment model, continuous with zero load at ratio 1."""
        return cls(
            slopes=(-0.5, -1.0, -2.0),
            intercepts=(0.5, 0.85, 1.25),
            lower_breaks=(0.7, 0.4, 0.2),
        )


def segment_of(rho: float, model: LoadModel) -> int:
    """1-based index of the segment whose ratio range contains ``rho``."""
    if rho > 1.0 or rho < model.min_ratio:
        raise ValueError(
            f"ratio {rho:g} outside the admissible range "
            f"[{model.min_ratio:g}, 1]"
        )
    for s in range(1, model.n_segments + 1):
        if rho >= model.lower_breaks[s - 1]:
            return s
    return model.n_segments


def load(rho: float, model: LoadModel) -> float:
    """Computation load c(rho), dimensionless and non-negative."""
    s = segment_of(rho, model)
    return model.slopes[s - 1] * rho + model.intercepts[s - 1]


def compression_power(rho: float, model: LoadModel, p0: float) -> float:
    """Computation power c(rho) * p0 spent on compressing to ratio ``rho``, in mW."""
    if p0 < 0:
        raise ValueError("p0 must be non-negative")
    return load(rho, model) * p0


def rho_from_power(p_c: float, s: int, model: LoadModel, p0: float) -> float:
    """Ratio on segment ``s`` whose compression power equals ``p_c``.

    Inverts c(rho) * p0 = p_c on the segment's line; errors if the resulting
    ratio falls outside the segment's closed ratio range (beyond a tiny
    round-off slack, within which it is clamped to the range).
    """
    if p_c < 0:
        raise ValueError("compression power must be non-negative")
    if p0 <= 0:
        raise ValueError("p0 must be positive to invert the load")
    model._check_segment(s)
    rho = (p_c / p0 - model.intercepts[s - 1]) / model.slopes[s - 1]
    lo = model.lower_breaks[s - 1]
    hi = model.upper_break(s)
    if not lo - EDGE_TOL <= rho <= hi + EDGE_TOL:
        raise ValueError(
            f"power {p_c:g} maps to ratio {rho:g}, outside segment {s}'s "
            f"range [{lo:g}, {hi:g}]"
        )
    return min(max(rho, lo), hi)


def segment_trace_bounds(s: int, model: LoadModel, p_max: float, p0: float) -> tuple[float, float]:
    """Admissible transmit power (covariance trace) range while segment ``s`` is active.

    With the whole budget split between transmission and compression, the
    transmit power for ratios inside segment s spans
    [max(0, p_max - c(lower_break) * p0), p_max - c(upper_break) * p0].
    Returns (lo, hi); hi < lo means the segment is unaffordable under the
    budget.  ``p0 = 0`` is accepted here (the range degenerates to
    [p_max, p_max] for every segment).
    """
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    if p0 < 0:
        raise ValueError("p0 must be non-negative")
    model._check_segment(s)
    a = model.slopes[s - 1]
    b = model.intercepts[s - 1]
    cost_at_lower = (a * model.lower_breaks[s - 1] + b) * p0
    cost_at_upper = (a * model.upper_break(s) + b) * p0
    return max(0.0, p_max - cost_at_lower), p_max - cost_at_upper
