"""Point estimation, delta-method standard errors and confidence intervals.

The cell counts are treated as one multinomial draw over the r^2 cells, so
sqrt(n) (p_hat - p) is asymptotically normal with covariance

    xi(p) = diag(p) - p p^T.

Propagating through the measure phi (or psi) with the delta method gives

    se = sqrt( grad^T xi grad / n ),      CI = estimate +- z * se.

Two gradient routes are kept permanently: the analytic chain rule
(:func:`grad_phi`) and central finite differences (:func:`grad_fd`), so
either can audit the other.  Both exploit the fact that the measures are
homogeneous of degree 0 in the cells when survivals are written as tail
sums: coordinates can be perturbed without renormalizing onto the simplex,
and adding a multiple of the all-ones vector to a gradient never changes
the quadratic form (xi annihilates constants).

A nonparametric multinomial bootstrap (:func:`bootstrap_ci`) provides an
independent percentile interval for cross-checking the delta method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateMassError,
    DomainError,
    MethodMismatchError,
    NonDifferentiableError,
    TooManyDegenerateReplicatesError,
)
from .measures import (
    _LAMBDA_ZERO_THRESHOLD,
    _cell_terms,
    _phi_raw,
    _psi_raw,
    discordance,
    phi,
    psi,
)
from .tables import CountTable, from_counts, hazards, marginals

__all__ = [
    "ConfInterval",
    "EstimateReport",
    "GroupComparison",
    "multinomial_covariance",
    "grad_phi",
    "grad_fd",
    "wald_ci",
    "bootstrap_ci",
    "compare_groups",
    "z_quantile",
]

# share of degenerate bootstrap replicates tolerated before giving up
_DEGENERATE_REPLICATE_CAP = 0.01

_QUARTER_PI = math.pi / 4.0


@dataclass(frozen=True)
class ConfInterval:
    """A point estimate with its interval.

    Delta-method endpoints are reported raw, never clamped into the
    measure's logical range; ``exceeds_range`` flags intervals that poke
    outside it (clamping would silently distort coverage studies).
    """

    estimate: float
    se: float
    lower: float
    upper: float
    level: float
    method: str  # "delta" | "bootstrap-percentile"
    exceeds_range: bool = False


@dataclass(frozen=True)
class EstimateReport:
    """Estimate, interval and diagnostics for one table and one measure."""

    measure: str  # "phi" | "psi"
    lam: float | None
    ci: ConfInterval
    n: int
    gradient_norm: float | None
    degenerate_flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class GroupComparison:
    """Difference of two independent estimates with its Wald interval."""

    difference: ConfInterval
    significant: bool
    zero_width: bool


def _check_level(level: float) -> float:
    level = float(level)
    if not (0.0 < level < 1.0):
        raise DomainError(f"confidence level must lie in (0, 1), got {level!r}")
    return level


def _check_measure(measure: str, lam: float | None) -> tuple[str, float | None]:
    if measure not in ("phi", "psi"):
        raise DomainError(f"measure must be 'phi' or 'psi', got {measure!r}")
    if measure == "phi":
        return "phi", None
    if lam is None:
        raise DomainError("measure 'psi' needs a lambda value")
    lam = float(lam)
    if not math.isfinite(lam) or lam <= -1.0:
        raise DomainError(f"lambda must be a finite number > -1, got {lam!r}")
    return "psi", lam


def _flat_prob(p: np.ndarray) -> tuple[np.ndarray, int]:
    """Validate a flat cell-probability vector and return it with r."""
    vec = np.asarray(p, dtype=np.float64)
    if vec.ndim != 1:
        raise DomainError("flat probability vector must be 1-d")
    r = math.isqrt(vec.shape[0])
    if r * r != vec.shape[0] or r < 2:
        raise DomainError(
            f"vector length {vec.shape[0]} is not r^2 for a table with r >= 2"
        )
    if not np.all(np.isfinite(vec)) or np.any(vec < 0.0):
        raise DomainError("cell probabilities must be finite and nonnegative")
    if abs(float(vec.sum()) - 1.0) > 1e-9:
        raise DomainError("cell probabilities must sum to 1")
    return vec, r


def _checked_terms(vec: np.ndarray, r: int):
    """Run the W chain and reject points where phi is not differentiable."""
    cells = vec.reshape(r, r)
    row = cells.sum(axis=1)
    col = cells.sum(axis=0)
    surv_x = np.flip(np.cumsum(np.flip(row)))
    surv_y = np.flip(np.cumsum(np.flip(col)))
    for name, surv in (("row", surv_x), ("column", surv_y)):
        dead = np.flatnonzero(surv[:-1] == 0.0)
        if dead.size:
            raise NonDifferentiableError(
                f"{name} survival is exhausted at index {dead[0] + 1}; "
                "the hazard there is a 0/0"
            )
    terms = _cell_terms(vec, r)
    t = terms.w1 + terms.w2
    if float(np.sum(t)) == 0.0:
        raise DegenerateMassError("all discordance terms vanish; the measure is undefined")
    dead = np.flatnonzero(t == 0.0)
    if dead.size:
        raise NonDifferentiableError(
            f"both discordance terms vanish at index {dead[0] + 1}; "
            "the angle there is undefined"
        )
    if np.all(terms.w1 == 0.0) or np.all(terms.w2 == 0.0):
        bound = -1 if np.all(terms.w1 == 0.0) else 1
        raise NonDifferentiableError(
            f"the estimate sits at the boundary phi = {bound}; "
            "the delta-method interval is undefined there"
        )
    return terms


def multinomial_covariance(p: np.ndarray) -> np.ndarray:
    """Multinomial covariance xi(p) = diag(p) - p p^T (an r^2 x r^2 matrix).

    The result is symmetric, positive semidefinite, and annihilates the
    all-ones vector (its rows sum to zero).
    """
    vec, _ = _flat_prob(p)
    return np.diag(vec) - np.outer(vec, vec)


def grad_phi(p: np.ndarray) -> np.ndarray:
    """Analytic gradient of phi with respect to the r^2 cell probabilities.

    Chain rule through cells -> marginals -> survivals -> hazards ->
    discordance terms -> angles -> phi, with survivals written as tail sums
    so the expression extends smoothly off the simplex.

    Raises
    ------
    DegenerateMassError
        If the total discordance mass is zero.
    NonDifferentiableError
        If any survival in use is exhausted, any index has
        W1_i = W2_i = 0, or the estimate sits at the boundary phi = +-1.
    """
    vec, r = _flat_prob(p)
    terms = _checked_terms(vec, r)
    w1, w2 = terms.w1, terms.w2

    t = w1 + w2
    total = float(np.sum(t))
    u = t / total
    theta = np.arctan2(w1, w2)
    rsq = w1 * w1 + w2 * w2
    centered = (theta - _QUARTER_PI) - float(np.sum(u * (theta - _QUARTER_PI)))

    c = 4.0 / math.pi
    g_w1 = c * (centered / total + u * w2 / rsq)
    g_w2 = c * (centered / total - u * w1 / rsq)
    return _chain_to_cells(terms, g_w1, g_w2, r)


def _grad_psi(p: np.ndarray, lam: float) -> np.ndarray:
    """Analytic gradient of psi(., lambda); needs every W1_i, W2_i > 0."""
    vec, r = _flat_prob(p)
    terms = _checked_terms(vec, r)
    w1, w2 = terms.w1, terms.w2
    dead = np.flatnonzero((w1 == 0.0) | (w2 == 0.0))
    if dead.size:
        raise NonDifferentiableError(
            f"a discordance term vanishes at index {dead[0] + 1}; "
            "psi is not differentiable there"
        )

    t = w1 + w2
    total = float(np.sum(t))
    x = w1 / t
    value = _psi_raw(w1, w2, lam)
    if abs(lam) < _LAMBDA_ZERO_THRESHOLD:
        g = (x * np.log(2.0 * x) + (1.0 - x) * np.log(2.0 * (1.0 - x))) / math.log(2.0)
        gprime = (np.log(2.0 * x) - np.log(2.0 * (1.0 - x))) / math.log(2.0)
    else:
        denom = math.expm1(lam * math.log(2.0))
        g = (x * (2.0 * x) ** lam + (1.0 - x) * (2.0 * (1.0 - x)) ** lam - 1.0) / denom
        gprime = (lam + 1.0) * ((2.0 * x) ** lam - (2.0 * (1.0 - x)) ** lam) / denom

    g_w1 = (g - value) / total + gprime * w2 / (total * t)
    g_w2 = (g - value) / total - gprime * w1 / (total * t)
    return _chain_to_cells(terms, g_w1, g_w2, r)


def _chain_to_cells(terms, g_w1: np.ndarray, g_w2: np.ndarray, r: int) -> np.ndarray:
    """Push gradients on (W1, W2) down to the r^2 cells."""
    omega_x, omega_y = terms.omega_x, terms.omega_y
    g_ox = g_w1 * (1.0 - omega_y) - g_w2 * omega_y
    g_oy = -g_w1 * omega_x + g_w2 * (1.0 - omega_x)

    def to_marginal(g_omega: np.ndarray, omega: np.ndarray, surv: np.ndarray) -> np.ndarray:
        # d omega_i / d m_k = delta_ik / s_i - (omega_i / s_i) [k >= i]
        g = np.zeros(r)
        g[: r - 1] = g_omega / surv[: r - 1]
        running = np.cumsum(g_omega * omega / surv[: r - 1])
        g[: r - 1] -= running
        g[r - 1] -= running[-1]
        return g

    g_row = to_marginal(g_ox, omega_x, terms.surv_x)
    g_col = to_marginal(g_oy, omega_y, terms.surv_y)
    return (g_row[:, None] + g_col[None, :]).ravel()


def grad_fd(p: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-finite-difference gradient of phi, the audit route.

    Each cell is stepped by +-h without renormalizing; degree-0 homogeneity
    of phi in the cells makes that legitimate.

    Parameters
    ----------
    p : array-like
        Flat cell probabilities (length r^2).
    h : float
        Step size, 0 < h < 1e-3.
    """
    h = float(h)
    if not (0.0 < h < 1e-3):
        raise DomainError(f"step must satisfy 0 < h < 1e-3, got {h!r}")
    vec, r = _flat_prob(p)
    _checked_terms(vec, r)  # same differentiability contract as grad_phi
    grad = np.empty(vec.shape[0])
    for k in range(vec.shape[0]):
        plus = vec.copy()
        plus[k] += h
        minus = vec.copy()
        minus[k] -= h
        tp = _cell_terms(plus, r)
        tm = _cell_terms(minus, r)
        grad[k] = (_phi_raw(tp.w1, tp.w2) - _phi_raw(tm.w1, tm.w2)) / (2.0 * h)
    return grad


def _grad_fd_psi(p: np.ndarray, lam: float, h: float = 1e-6) -> np.ndarray:
    """Finite-difference audit route for the psi gradient."""
    h = float(h)
    if not (0.0 < h < 1e-3):
        raise DomainError(f"step must satisfy 0 < h < 1e-3, got {h!r}")
    vec, r = _flat_prob(p)
    _checked_terms(vec, r)
    grad = np.empty(vec.shape[0])
    for k in range(vec.shape[0]):
        plus = vec.copy()
        plus[k] += h
        minus = vec.copy()
        minus[k] -= h
        tp = _cell_terms(plus, r)
        tm = _cell_terms(minus, r)
        grad[k] = (_psi_raw(tp.w1, tp.w2, lam) - _psi_raw(tm.w1, tm.w2, lam)) / (2.0 * h)
    return grad


def _plugin_estimate(table: CountTable, measure: str, lam: float | None) -> float:
    d = discordance(hazards(marginals(from_counts(table))))
    return phi(d) if measure == "phi" else psi(d, lam)


def wald_ci(
    table: CountTable,
    level: float = 0.95,
    measure: str = "phi",
    lam: float | None = None,
) -> EstimateReport:
    """Plug-in estimate with a delta-method Wald interval.

    Parameters
    ----------
    table : CountTable
        Observed counts (array-likes are accepted and wrapped).
    level : float
        Confidence level in (0, 1).
    measure : {"phi", "psi"}
    lam : float, optional
        Divergence index, required when measure is "psi".

    Returns
    -------
    EstimateReport
        With ``ci.method = "delta"``; endpoints are reported raw and
        ``ci.exceeds_range`` flags intervals leaving the logical range.

    Raises
    ------
    DegenerateMassError, NonDifferentiableError
        Propagated from the measure and gradient with diagnostics.
    """
    if not isinstance(table, CountTable):
        table = CountTable(table)
    level = _check_level(level)
    measure, lam = _check_measure(measure, lam)

    estimate = _plugin_estimate(table, measure, lam)
    pvec = from_counts(table).p.ravel()
    grad = grad_phi(pvec) if measure == "phi" else _grad_psi(pvec, lam)
    cov = multinomial_covariance(pvec)
    variance = float(grad @ cov @ grad) / table.n
    se = math.sqrt(max(variance, 0.0))
    z = z_quantile(1.0 - (1.0 - level) / 2.0)
    lower = estimate - z * se
    upper = estimate + z * se
    lo_edge, hi_edge = (-1.0, 1.0) if measure == "phi" else (0.0, 1.0)
    ci = ConfInterval(
        estimate=estimate,
        se=se,
        lower=lower,
        upper=upper,
        level=level,
        method="delta",
        exceeds_range=lower < lo_edge or upper > hi_edge,
    )
    return EstimateReport(
        measure=measure,
        lam=lam,
        ci=ci,
        n=table.n,
        gradient_norm=float(np.linalg.norm(grad)),
        degenerate_flags=(),
    )


def bootstrap_ci(
    table: CountTable,
    level: float = 0.95,
    replicates: int = 2000,
    seed: int = 0,
    measure: str = "phi",
    lam: float | None = None,
) -> EstimateReport:
    """Nonparametric multinomial bootstrap percentile interval.

    Replicates are multinomial redraws of size n from the observed cell
    frequencies.  Replicates where the measure is degenerate are counted
    and excluded; more than 1% of them aborts with
    :class:`TooManyDegenerateReplicatesError` rather than quietly reporting
    a biased interval.

    Deterministic for a fixed seed: replicate k uses a generator spawned
    from ``SeedSequence(seed)`` at position k, and aggregation (counts plus
    sorted percentile extraction) does not depend on evaluation order.
    """
    if not isinstance(table, CountTable):
        table = CountTable(table)
    level = _check_level(level)
    measure, lam = _check_measure(measure, lam)
    replicates = int(replicates)
    if replicates < 200:
        raise DomainError(f"bootstrap needs at least 200 replicates, got {replicates}")
    seed = int(seed)
    if seed < 0:
        raise DomainError("seed must be a nonnegative integer")

    n = table.n
    r = table.r
    pvec = from_counts(table).p.ravel()
    values = np.full(replicates, np.nan)
    degenerate = 0
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(replicates)):
        rng = np.random.default_rng(child)
        resampled = CountTable(rng.multinomial(n, pvec).reshape(r, r))
        try:
            values[k] = _plugin_estimate(resampled, measure, lam)
        except DegenerateMassError:
            degenerate += 1

    if degenerate > _DEGENERATE_REPLICATE_CAP * replicates:
        raise TooManyDegenerateReplicatesError(
            f"{degenerate} of {replicates} bootstrap replicates were degenerate "
            f"(cap {_DEGENERATE_REPLICATE_CAP:.0%}); the table is too sparse for "
            "a bootstrap interval"
        )

    kept = np.sort(values[~np.isnan(values)])
    alpha = 1.0 - level
    lower = float(np.percentile(kept, 100.0 * alpha / 2.0))
    upper = float(np.percentile(kept, 100.0 * (1.0 - alpha / 2.0)))
    se = float(np.std(kept, ddof=1))
    estimate = _plugin_estimate(table, measure, lam)
    flags = ()
    if degenerate:
        flags = (f"{degenerate} of {replicates} bootstrap replicates degenerate (excluded)",)
    ci = ConfInterval(
        estimate=estimate,
        se=se,
        lower=lower,
        upper=upper,
        level=level,
        method="bootstrap-percentile",
        exceeds_range=False,
    )
    return EstimateReport(
        measure=measure,
        lam=lam,
        ci=ci,
        n=n,
        gradient_norm=None,
        degenerate_flags=flags,
    )


def compare_groups(
    a: EstimateReport, b: EstimateReport, level: float = 0.95
) -> GroupComparison:
    """Wald interval for the difference of two independent estimates.

    Both reports must be delta-method reports of the same measure; the
    difference uses se = sqrt(se_a^2 + se_b^2).  A comparison where both
    standard errors vanish is flagged ``zero_width`` rather than trusted.

    Raises
    ------
    MethodMismatchError
        If either report is bootstrap-based, or the measures differ.
    """
    level = _check_level(level)
    for name, rep in (("first", a), ("second", b)):
        if rep.ci.method != "delta":
            raise MethodMismatchError(
                f"the {name} report uses method {rep.ci.method!r}; "
                "group comparison needs delta-method reports"
            )
    if a.measure != b.measure or a.lam != b.lam:
        raise MethodMismatchError("the two reports estimate different measures")

    diff = a.ci.estimate - b.ci.estimate
    se = math.hypot(a.ci.se, b.ci.se)
    z = z_quantile(1.0 - (1.0 - level) / 2.0)
    lower = diff - z * se
    upper = diff + z * se
    ci = ConfInterval(
        estimate=diff,
        se=se,
        lower=lower,
        upper=upper,
        level=level,
        method="delta",
        exceeds_range=lower < -2.0 or upper > 2.0,
    )
    return GroupComparison(
        difference=ci,
        significant=not (lower <= 0.0 <= upper),
        zero_width=se == 0.0,
    )


# Rational approximation of the standard normal quantile (Acklam's
# coefficients), refined by one Halley step through erfc; the refined value
# is accurate to well below 1e-9 over (0, 1).
_PPF_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_PPF_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_PPF_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_PPF_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_PPF_LOW = 0.02425


def z_quantile(q: float) -> float:
    """Standard normal quantile, accurate to better than 1e-9 on (0, 1)."""
    q = float(q)
    if not (0.0 < q < 1.0):
        raise DomainError(f"quantile level must lie in (0, 1), got {q!r}")
    a, b, c, d = _PPF_A, _PPF_B, _PPF_C, _PPF_D
    if q < _PPF_LOW:
        u = math.sqrt(-2.0 * math.log(q))
        x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) / (
            (((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0
        )
    elif q <= 1.0 - _PPF_LOW:
        u = q - 0.5
        v = u * u
        x = (
            (((((a[0] * v + a[1]) * v + a[2]) * v + a[3]) * v + a[4]) * v + a[5])
            * u
            / (((((b[0] * v + b[1]) * v + b[2]) * v + b[3]) * v + b[4]) * v + 1.0)
        )
    else:
        u = math.sqrt(-2.0 * math.log(1.0 - q))
        x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) / (
            (((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0
        )
    # one Halley refinement
    err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - q
    step = err * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - step / (1.0 + x * step / 2.0)
