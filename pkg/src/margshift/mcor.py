"""Constant hazard-odds-shift model: the link between phi and a single shift.

The model assumes the column hazards are a constant shift of the row
hazards on the log-odds scale:

    logit(omega_i^Y) = logit(omega_i^X) + delta,    i = 1..r-1.

delta = 0 is exactly marginal homogeneity.  Under this structure every
index has the same angle, so phi collapses to a closed form in delta alone:

    phi = f(delta) = (4/pi) * arccos(e^delta / sqrt(e^{2 delta} + 1)) - 1
                   = (4/pi) * arctan(e^{-delta}) - 1,

strictly decreasing from +1 (delta -> -inf) to -1 (delta -> +inf).  This
module evaluates f and its inverse, builds model-structured populations for
simulation, and tabulates the link curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .tables import ProbTable, _frozen

__all__ = [
    "McorScenario",
    "phi_of_delta",
    "delta_of_phi",
    "scenario_table",
    "curve_grid",
]


def _logit(w: np.ndarray) -> np.ndarray:
    return np.log(w) - np.log1p(-w)


def _expit(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True, eq=False)
class McorScenario:
    """A population with row hazards ``base_haz_x`` and log-odds shift ``delta``.

    The column hazards are derived as expit(logit(base_haz_x) + delta) and
    must stay strictly inside (0, 1); a shift large enough to saturate them
    in double precision is rejected.
    """

    base_haz_x: np.ndarray
    delta: float

    def __post_init__(self) -> None:
        base = np.asarray(self.base_haz_x, dtype=np.float64)
        if base.ndim != 1 or base.shape[0] < 1:
            raise DomainError("base_haz_x must be a 1-d sequence of length >= 1")
        if not np.all(np.isfinite(base)) or np.any(base <= 0.0) or np.any(base >= 1.0):
            raise DomainError("base hazards must lie strictly in (0, 1)")
        delta = float(self.delta)
        if not math.isfinite(delta):
            raise DomainError("delta must be finite")
        object.__setattr__(self, "base_haz_x", _frozen(base))
        object.__setattr__(self, "delta", delta)
        omega_y = self.omega_y
        if np.any(omega_y <= 0.0) or np.any(omega_y >= 1.0):
            raise DomainError(
                "derived column hazards leave (0, 1); the shift is too extreme "
                "for these base hazards"
            )

    @property
    def omega_x(self) -> np.ndarray:
        return self.base_haz_x

    @property
    def omega_y(self) -> np.ndarray:
        """Column hazards implied by the log-odds shift."""
        return _expit(_logit(self.base_haz_x) + self.delta)

    @property
    def r(self) -> int:
        return self.base_haz_x.shape[0] + 1


def phi_of_delta(delta: float) -> float:
    """Closed-form phi under the constant hazard-odds-shift model.

    Evaluated as (4/pi) * arctan(e^{-delta}) - 1 with a reflected branch for
    delta < 0, so no intermediate can overflow for any finite delta.
    """
    delta = float(delta)
    if not math.isfinite(delta):
        raise DomainError("delta must be finite")
    if delta >= 0.0:
        theta = math.atan(math.exp(-delta))
    else:
        theta = math.pi / 2.0 - math.atan(math.exp(delta))
    return (4.0 / math.pi) * theta - 1.0


def delta_of_phi(phi_val: float) -> float:
    """Inverse of :func:`phi_of_delta` on (-1, 1).

    With theta = pi (phi + 1) / 4 the inverse is
    delta = (1/2) ln(cos^2 theta / (1 - cos^2 theta)), computed as
    ln(cos theta) - ln(sin theta) to stay accurate near both endpoints.
    """
    phi_val = float(phi_val)
    if not math.isfinite(phi_val) or abs(phi_val) >= 1.0:
        raise DomainError(f"phi must lie strictly in (-1, 1), got {phi_val!r}")
    theta = math.pi * (phi_val + 1.0) / 4.0
    return math.log(math.cos(theta)) - math.log(math.sin(theta))


def _marginal_from_hazards(omega: np.ndarray) -> np.ndarray:
    r = omega.shape[0] + 1
    p = np.empty(r)
    s = 1.0
    for i in range(r - 1):
        p[i] = s * omega[i]
        s *= 1.0 - omega[i]
    p[r - 1] = s  # last category absorbs the remaining survival
    return p


def scenario_table(scenario: McorScenario) -> ProbTable:
    """Joint probability table realizing a scenario's two margins.

    Each margin is rebuilt from its hazard sequence (p_i = s_i omega_i,
    s_{i+1} = s_i (1 - omega_i)), and the joint is their independence
    product.  phi and psi depend only on the margins, so any coupling would
    give the same measure value; independence is the simplest reproducible
    choice.  Interval widths in sampling experiments DO depend on the
    coupling, so simulation reports record it.
    """
    p_x = _marginal_from_hazards(scenario.omega_x)
    p_y = _marginal_from_hazards(scenario.omega_y)
    return ProbTable(np.outer(p_x, p_y))


def curve_grid(
    delta_min: float, delta_max: float, step: float
) -> list[tuple[float, float]]:
    """Ordered (delta, phi_of_delta(delta)) pairs over an inclusive grid.

    Grid points are snapped to 12 decimal places so that decimal steps land
    exactly on decimal grid values (e.g. a grid over [-6, 6] contains 0.0,
    not 8.9e-16).

    Raises
    ------
    DomainError
        If the range is empty or degenerate (fewer than two points), or
        step <= 0, or any bound is not finite.
    """
    delta_min = float(delta_min)
    delta_max = float(delta_max)
    step = float(step)
    if not (math.isfinite(delta_min) and math.isfinite(delta_max) and math.isfinite(step)):
        raise DomainError("grid bounds and step must be finite")
    if step <= 0.0:
        raise DomainError(f"step must be positive, got {step!r}")
    if delta_min >= delta_max:
        raise DomainError(
            f"delta_min must be smaller than delta_max, got [{delta_min!r}, {delta_max!r}]"
        )
    count = int(math.floor((delta_max - delta_min) / step + 1e-9)) + 1
    if count < 2:
        raise DomainError("grid is degenerate: fewer than two points; reduce step")
    points = []
    for k in range(count):
        d = round(delta_min + k * step, 12)
        points.append((d, phi_of_delta(d)))
    return points
