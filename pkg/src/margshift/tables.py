"""Square contingency tables and their discrete-time hazard decomposition.

A square r x r table cross-classifies the same ordinal scale twice (rows =
first variable X, columns = second variable Y, e.g. pre- and
post-intervention categories).  Treating the ordered categories as discrete
time points, each margin defines a survival sequence

    s_i = P(category >= i)

and a hazard sequence

    omega_i = P(category = i | category >= i) = p_i / s_i,   i = 1..r-1.

The two hazard sequences are the raw material for the marginal-change
measures in :mod:`margshift.measures`.

All types are immutable after construction (backing arrays are read-only),
so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError, ZeroTotalError

__all__ = [
    "CountTable",
    "ProbTable",
    "MarginalPair",
    "HazardPair",
    "from_counts",
    "marginals",
    "hazards",
]

# User-supplied probability tables are renormalized when their total mass is
# within this tolerance of 1, rejected otherwise.
PROB_SUM_TOL = 1e-9

_INVARIANT_TOL = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _tail_sums(v: np.ndarray) -> np.ndarray:
    # s_i = sum_{k >= i} v_k, accumulated from the tail so that tiny tail
    # mass is not lost to cancellation (preferred over 1 - F_{i-1}).
    return np.flip(np.cumsum(np.flip(v)))


@dataclass(frozen=True, eq=False)
class CountTable:
    """Observed r x r table of nonnegative integer counts.

    Parameters
    ----------
    counts : array-like
        Square matrix of nonnegative integers; rows index the first (X)
        variable, columns the second (Y).
    """

    counts: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.counts)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
            raise ShapeError(
                f"counts must be a square r x r matrix with r >= 2, got shape {arr.shape}"
            )
        if np.issubdtype(arr.dtype, np.floating):
            if not np.all(np.isfinite(arr)) or np.any(arr != np.floor(arr)):
                raise DomainError("counts must be integers")
        elif not np.issubdtype(arr.dtype, np.integer):
            raise DomainError(f"counts must be integers, got dtype {arr.dtype}")
        if np.any(arr < 0):
            raise DomainError("counts must be nonnegative")
        arr = arr.astype(np.int64)
        if arr.sum() == 0:
            raise ZeroTotalError("count table sums to zero")
        object.__setattr__(self, "counts", _frozen(arr))

    @property
    def r(self) -> int:
        """Number of categories."""
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        """Total sample size."""
        return int(self.counts.sum())

    def transposed(self) -> "CountTable":
        """Table with the roles of the two variables swapped."""
        return CountTable(self.counts.T.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CountTable):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)


@dataclass(frozen=True, eq=False)
class ProbTable:
    """Joint probability table p_ij with unit total mass.

    Tables whose entries sum to within ``PROB_SUM_TOL`` of 1 are
    renormalized exactly; anything further off is rejected.
    """

    p: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.p, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
            raise ShapeError(
                f"probability table must be square r x r with r >= 2, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError("probabilities must be finite")
        if np.any(arr < 0):
            raise DomainError("probabilities must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise DomainError(
                f"probabilities sum to {total!r}, more than {PROB_SUM_TOL} away from 1"
            )
        if total != 1.0:
            arr = arr / total
        else:
            arr = arr.copy()
        object.__setattr__(self, "p", _frozen(arr))

    @property
    def r(self) -> int:
        return self.p.shape[0]

    def transposed(self) -> "ProbTable":
        return ProbTable(self.p.T.copy())


@dataclass(frozen=True, eq=False)
class MarginalPair:
    """Row/column marginals with their cumulative and survival sequences.

    ``row_surv[i]`` is the tail mass of the row margin from category i+1 on
    (1-indexed: s_i = P(X >= i)); likewise for the column margin.
    """

    row: np.ndarray
    col: np.ndarray
    row_cum: np.ndarray
    col_cum: np.ndarray
    row_surv: np.ndarray
    col_surv: np.ndarray

    def __post_init__(self) -> None:
        for name in ("row", "col", "row_cum", "col_cum", "row_surv", "col_surv"):
            object.__setattr__(
                self, name, _frozen(np.asarray(getattr(self, name), dtype=np.float64))
            )
        r = self.row.shape[0]
        for name in ("col", "row_cum", "col_cum", "row_surv", "col_surv"):
            if getattr(self, name).shape != (r,):
                raise ShapeError(f"{name} must have length {r}")
        for name, marg in (("row", self.row), ("col", self.col)):
            if abs(float(marg.sum()) - 1.0) > _INVARIANT_TOL:
                raise DomainError(f"{name} marginal does not sum to 1")
        for cum, surv, name in (
            (self.row_cum, self.row_surv, "row"),
            (self.col_cum, self.col_surv, "col"),
        ):
            # s_i = 1 - F_{i-1} with F_0 = 0
            prev = np.concatenate(([0.0], cum[:-1]))
            if np.max(np.abs(surv - (1.0 - prev))) > _INVARIANT_TOL:
                raise DomainError(f"{name} survivals are inconsistent with cumulatives")
            if np.any(np.diff(surv) > 0.0):
                raise DomainError(f"{name} survivals must be nonincreasing")

    @property
    def r(self) -> int:
        return self.row.shape[0]


@dataclass(frozen=True, eq=False)
class HazardPair:
    """Discrete-time hazard sequences of the two margins (length r-1).

    An index where the survival is exactly zero has no defined hazard (a
    0/0); it is flagged in ``exhausted_*`` and the hazard is set to 0 by
    convention, so downstream discordance terms at that index are governed
    solely by the other margin.
    """

    omega_x: np.ndarray
    omega_y: np.ndarray
    exhausted_x: np.ndarray
    exhausted_y: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega_x", _frozen(np.asarray(self.omega_x, dtype=np.float64)))
        object.__setattr__(self, "omega_y", _frozen(np.asarray(self.omega_y, dtype=np.float64)))
        object.__setattr__(self, "exhausted_x", _frozen(np.asarray(self.exhausted_x, dtype=bool)))
        object.__setattr__(self, "exhausted_y", _frozen(np.asarray(self.exhausted_y, dtype=bool)))
        m = self.omega_x.shape[0]
        if m < 1:
            raise ShapeError("hazard sequences must have length r - 1 >= 1")
        for name in ("omega_y", "exhausted_x", "exhausted_y"):
            if getattr(self, name).shape != (m,):
                raise ShapeError(f"{name} must have length {m}")
        for omega, flag, name in (
            (self.omega_x, self.exhausted_x, "omega_x"),
            (self.omega_y, self.exhausted_y, "omega_y"),
        ):
            if np.any(omega < 0.0) or np.any(omega > 1.0):
                raise DomainError(f"{name} entries must lie in [0, 1]")
            if np.any(omega[flag] != 0.0):
                raise DomainError(f"exhausted {name} entries must be 0 by convention")

    @property
    def size(self) -> int:
        return self.omega_x.shape[0]


def from_counts(table: CountTable) -> ProbTable:
    """Maximum likelihood cell probabilities p_ij = n_ij / n.

    Parameters
    ----------
    table : CountTable

    Returns
    -------
    ProbTable
    """
    return ProbTable(table.counts / table.n)


def marginals(prob: ProbTable) -> MarginalPair:
    """Row/column marginals with cumulative and survival sequences.

    Survivals are accumulated as tail sums rather than 1 - F_{i-1}; the two
    forms agree mathematically but the tail sum avoids cancellation when
    the remaining mass is tiny.
    """
    row = prob.p.sum(axis=1)
    col = prob.p.sum(axis=0)
    return MarginalPair(
        row=row,
        col=col,
        row_cum=np.cumsum(row),
        col_cum=np.cumsum(col),
        row_surv=_tail_sums(row),
        col_surv=_tail_sums(col),
    )


def hazards(marg: MarginalPair) -> HazardPair:
    """Discrete-time hazards omega_i = p_i / s_i for i = 1..r-1.

    Indices with s_i = 0 are flagged exhausted and get omega_i = 0; see
    :class:`HazardPair`.
    """

    def one_margin(p: np.ndarray, surv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = surv[:-1]
        exhausted = s == 0.0
        safe = np.where(exhausted, 1.0, s)
        omega = np.where(exhausted, 0.0, p[:-1] / safe)
        # the ratio cannot exceed 1 mathematically; guard the last ulp
        return np.minimum(omega, 1.0), exhausted

    omega_x, exhausted_x = one_margin(marg.row, marg.row_surv)
    omega_y, exhausted_y = one_margin(marg.col, marg.col_surv)
    return HazardPair(
        omega_x=omega_x,
        omega_y=omega_y,
        exhausted_x=exhausted_x,
        exhausted_y=exhausted_y,
    )
