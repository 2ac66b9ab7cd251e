"""Discordance terms and the marginal-change measures phi and psi.

Given the two hazard sequences, each index i contributes a pair of
*discordance terms*

    W1_i = omega_i^X (1 - omega_i^Y)      (row hazard fires, column does not)
    W2_i = omega_i^Y (1 - omega_i^X)      (column hazard fires, row does not)

Under marginal homogeneity W1_i = W2_i for every i.  Two summary measures
are built on these terms:

``phi``
    Directional, in [-1, 1].  Each index is mapped to the angle
    theta_i = arctan(W1_i / W2_i) in [0, pi/2] (equivalently
    arccos(W2_i / sqrt(W1_i^2 + W2_i^2))), and

        phi = (4/pi) * sum_i w_i (theta_i - pi/4),

    with weights w_i = (W1_i + W2_i) / sum_j (W1_j + W2_j).  phi = +1
    exactly when W2 vanishes everywhere (row hazard dominates), -1 when W1
    vanishes everywhere (column hazard dominates), 0 under marginal
    homogeneity.  The sign convention is pinned down by the extreme cases:
    a column hazard that always fires first drives phi to -1.

``psi``
    Direction-blind power divergence between the normalized W1 and W2
    profiles, in [0, 1], indexed by lambda > -1.  psi = 0 iff marginal
    homogeneity holds; psi = 1 at maximal departure (at every index one of
    the two terms vanishes).  lambda = 0 is the Kullback-Leibler limit,
    taken analytically.

Both measures are undefined when every W1_i + W2_i = 0
(:class:`~margshift.errors.DegenerateMassError`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateMassError, DomainError, ShapeError
from .tables import HazardPair, _frozen

__all__ = [
    "DiscordanceTerms",
    "AngleDecomposition",
    "discordance",
    "phi",
    "psi",
    "angle_decomposition",
]

# below this, psi uses the analytic lambda -> 0 limit
_LAMBDA_ZERO_THRESHOLD = 1e-8

_LN2 = math.log(2.0)
_QUARTER_PI = math.pi / 4.0

# tolerated floating excess beyond the mathematical range before clamping
_RANGE_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class DiscordanceTerms:
    """Per-index discordance terms W1, W2 (length r-1)."""

    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "w1", _frozen(np.asarray(self.w1, dtype=np.float64)))
        object.__setattr__(self, "w2", _frozen(np.asarray(self.w2, dtype=np.float64)))
        if self.w1.ndim != 1 or self.w1.shape != self.w2.shape or self.w1.shape[0] < 1:
            raise ShapeError("w1 and w2 must be 1-d arrays of equal positive length")
        for name, w in (("w1", self.w1), ("w2", self.w2)):
            if np.any(w < 0.0) or np.any(w > 1.0) or not np.all(np.isfinite(w)):
                raise DomainError(f"{name} entries must lie in [0, 1]")

    @property
    def total_mass(self) -> float:
        """Total discordance mass sum_i (W1_i + W2_i)."""
        return float(np.sum(self.w1 + self.w2))

    def normalized(self) -> tuple[np.ndarray, np.ndarray]:
        """W1 and W2 divided by the total mass."""
        total = self.total_mass
        if total == 0.0:
            raise DegenerateMassError("all discordance terms vanish")
        return self.w1 / total, self.w2 / total


@dataclass(frozen=True, eq=False)
class AngleDecomposition:
    """Per-index angles and weights as used inside phi.

    ``defined`` marks indices with W1_i + W2_i > 0; elsewhere the angle is
    meaningless and both theta and weight are reported as 0.
    """

    theta: np.ndarray
    weight: np.ndarray
    defined: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", _frozen(np.asarray(self.theta, dtype=np.float64)))
        object.__setattr__(self, "weight", _frozen(np.asarray(self.weight, dtype=np.float64)))
        object.__setattr__(self, "defined", _frozen(np.asarray(self.defined, dtype=bool)))
        if not (self.theta.shape == self.weight.shape == self.defined.shape):
            raise ShapeError("theta, weight and defined must share one shape")
        th = self.theta[self.defined]
        if np.any(th < 0.0) or np.any(th > math.pi / 2.0):
            raise DomainError("defined angles must lie in [0, pi/2]")
        if abs(float(self.weight[self.defined].sum()) - 1.0) > 1e-12:
            raise DomainError("defined weights must sum to 1")


class _CellTerms(NamedTuple):
    """Intermediates of the cells -> hazards -> W chain (no validation)."""

    row: np.ndarray
    col: np.ndarray
    surv_x: np.ndarray
    surv_y: np.ndarray
    omega_x: np.ndarray
    omega_y: np.ndarray
    w1: np.ndarray
    w2: np.ndarray


def _cell_terms(p: np.ndarray, r: int) -> _CellTerms:
    """Smooth, unguarded evaluation of the W chain from flat cells.

    Used by the gradient machinery: it must stay evaluable slightly off the
    probability simplex (unnormalized totals, tiny negative excursions from
    finite-difference steps), so it performs no clipping and no exhaustion
    handling.  Callers are responsible for staying away from zero survivals.
    """
    cells = np.asarray(p, dtype=np.float64).reshape(r, r)
    row = cells.sum(axis=1)
    col = cells.sum(axis=0)
    surv_x = np.flip(np.cumsum(np.flip(row)))
    surv_y = np.flip(np.cumsum(np.flip(col)))
    omega_x = row[:-1] / surv_x[:-1]
    omega_y = col[:-1] / surv_y[:-1]
    w1 = omega_x * (1.0 - omega_y)
    w2 = omega_y * (1.0 - omega_x)
    return _CellTerms(row, col, surv_x, surv_y, omega_x, omega_y, w1, w2)


def _phi_raw(w1: np.ndarray, w2: np.ndarray) -> float:
    """phi formula without range clamping.

    arctan2 is the smooth extension of arccos(W2 / sqrt(W1^2 + W2^2)) to
    slightly negative arguments, and yields 0 (with zero weight) at
    undefined indices instead of NaN.
    """
    total = np.sum(w1 + w2)
    theta = np.arctan2(w1, w2)
    weight = (w1 + w2) / total
    return float((4.0 / math.pi) * np.sum(weight * (theta - _QUARTER_PI)))


def _clamp(value: float, lo: float, hi: float) -> float:
    if lo - _RANGE_SLACK <= value < lo:
        return lo
    if hi < value <= hi + _RANGE_SLACK:
        return hi
    return value


def discordance(haz: HazardPair) -> DiscordanceTerms:
    """Discordance terms W1_i = omega_i^X (1-omega_i^Y), W2_i = omega_i^Y (1-omega_i^X)."""
    return DiscordanceTerms(
        w1=haz.omega_x * (1.0 - haz.omega_y),
        w2=haz.omega_y * (1.0 - haz.omega_x),
    )


def phi(d: DiscordanceTerms) -> float:
    """Directional departure from marginal homogeneity, in [-1, 1].

    Indices with W1_i + W2_i = 0 carry zero weight and contribute nothing.

    Raises
    ------
    DegenerateMassError
        If every W1_i + W2_i = 0, where the measure is undefined.
    """
    if d.total_mass == 0.0:
        raise DegenerateMassError("all discordance terms vanish; phi is undefined")
    return _clamp(_phi_raw(d.w1, d.w2), -1.0, 1.0)


def _psi_raw(w1: np.ndarray, w2: np.ndarray, lam: float) -> float:
    t = w1 + w2
    total = np.sum(t)
    keep = t > 0.0
    x = w1[keep] / t[keep]
    u = t[keep] / total
    if abs(lam) < _LAMBDA_ZERO_THRESHOLD:
        # analytic lambda -> 0 limit: (1/ln 2) * KL against the midpoint,
        # with 0 * log 0 = 0
        def xlog2x(v: np.ndarray) -> np.ndarray:
            out = np.zeros_like(v)
            pos = v > 0.0
            out[pos] = v[pos] * np.log(2.0 * v[pos])
            return out

        g = (xlog2x(x) + xlog2x(1.0 - x)) / _LN2
    else:
        denom = math.expm1(lam * _LN2)  # 2^lambda - 1 without cancellation

        def xpow(v: np.ndarray) -> np.ndarray:
            # v * (2v)^lambda, with the v -> 0 limit 0 for every lambda > -1
            out = np.zeros_like(v)
            pos = v > 0.0
            out[pos] = v[pos] * (2.0 * v[pos]) ** lam
            return out

        g = (xpow(x) + xpow(1.0 - x) - 1.0) / denom
    return float(np.sum(u * g))


def psi(d: DiscordanceTerms, lam: float) -> float:
    """Power-divergence departure from marginal homogeneity, in [0, 1].

    Parameters
    ----------
    d : DiscordanceTerms
    lam : float
        Divergence index, must exceed -1.  Values within 1e-8 of 0 use the
        analytic limit (Kullback-Leibler divergence scaled by 1/ln 2).

    Raises
    ------
    DomainError
        If lam <= -1 or lam is not finite.
    DegenerateMassError
        If every W1_i + W2_i = 0.
    """
    lam = float(lam)
    if not math.isfinite(lam) or lam <= -1.0:
        raise DomainError(f"lambda must be a finite number > -1, got {lam!r}")
    if d.total_mass == 0.0:
        raise DegenerateMassError("all discordance terms vanish; psi is undefined")
    return _clamp(_psi_raw(d.w1, d.w2, lam), 0.0, 1.0)


def angle_decomposition(d: DiscordanceTerms) -> AngleDecomposition:
    """Per-index angles theta_i and weights behind phi, for diagnostics.

    Raises
    ------
    DegenerateMassError
        If every W1_i + W2_i = 0.
    """
    total = d.total_mass
    if total == 0.0:
        raise DegenerateMassError("all discordance terms vanish")
    t = d.w1 + d.w2
    defined = t > 0.0
    theta = np.where(defined, np.arctan2(d.w1, d.w2), 0.0)
    return AngleDecomposition(theta=theta, weight=t / total, defined=defined)
