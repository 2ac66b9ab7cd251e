"""Multinomial sampling and Monte Carlo coverage studies.

A coverage study draws tables from a shift-model population
(:func:`margshift.mcor.scenario_table`), computes a delta-method interval
per table, and reports the fraction of intervals containing the true phi.
Replicates are independent units of work: replicate k draws its generator
from ``SeedSequence(seed)`` at position k and the aggregation (hit counts,
width totals) is order-insensitive, so results are reproducible for a
fixed seed regardless of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMassError, DomainError, NonDifferentiableError
from .inference import wald_ci
from .mcor import McorScenario, phi_of_delta, scenario_table
from .tables import CountTable, ProbTable

__all__ = [
    "sample_table",
    "CoverageStudySpec",
    "CoverageResult",
    "coverage_study",
]


def sample_table(prob: ProbTable, n: int, seed) -> CountTable:
    """One multinomial draw of size n over the r^2 cells.

    Parameters
    ----------
    prob : ProbTable
    n : int
        Sample size, >= 1.
    seed : int, SeedSequence or Generator
        Anything :func:`numpy.random.default_rng` accepts; a fixed seed
        gives a fixed table.
    """
    if not isinstance(prob, ProbTable):
        prob = ProbTable(prob)
    n = int(n)
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    counts = rng.multinomial(n, prob.p.ravel()).reshape(prob.r, prob.r)
    return CountTable(counts)


@dataclass(frozen=True)
class CoverageStudySpec:
    """Settings for one coverage study."""

    scenario: McorScenario
    n: int
    replicates: int
    level: float = 0.95
    seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.scenario, McorScenario):
            raise DomainError("scenario must be an McorScenario")
        if int(self.replicates) < 100:
            raise DomainError(f"replicates must be >= 100, got {self.replicates}")
        if int(self.n) < 10:
            raise DomainError(f"sample size must be >= 10, got {self.n}")
        if not (0.0 < float(self.level) < 1.0):
            raise DomainError(f"level must lie in (0, 1), got {self.level!r}")
        if int(self.seed) < 0:
            raise DomainError("seed must be a nonnegative integer")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "replicates", int(self.replicates))
        object.__setattr__(self, "level", float(self.level))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class CoverageResult:
    """Outcome of a coverage study.

    ``coverage`` is hits / (replicates - degenerate_count): replicates
    whose interval is undefined are counted and reported, never silently
    dropped, but they cannot enter the denominator.  ``mcse`` is the
    binomial Monte Carlo standard error sqrt(c (1-c) / B_effective).
    """

    delta: float
    n: int
    replicates: int
    level: float
    seed: int
    true_value: float
    coverage: float
    mean_width: float
    degenerate_count: int
    mcse: float

    def as_dict(self) -> dict:
        """Stable field ordering for JSON and CSV emission."""
        return {
            "delta": self.delta,
            "n": self.n,
            "replicates": self.replicates,
            "level": self.level,
            "seed": self.seed,
            "true_phi": self.true_value,
            "coverage": self.coverage,
            "mean_width": self.mean_width,
            "degenerate_count": self.degenerate_count,
            "mcse": self.mcse,
        }


def coverage_study(spec: CoverageStudySpec) -> CoverageResult:
    """Empirical coverage of the delta-method interval under a scenario.

    The truth is the scenario's closed-form phi; each replicate samples a
    table from the scenario population and asks whether its interval
    contains the truth.
    """
    if not isinstance(spec, CoverageStudySpec):
        raise DomainError("spec must be a CoverageStudySpec")
    truth = scenario_table(spec.scenario)
    true_value = phi_of_delta(spec.scenario.delta)

    hits = 0
    width_total = 0.0
    degenerate = 0
    for child in np.random.SeedSequence(spec.seed).spawn(spec.replicates):
        table = sample_table(truth, spec.n, child)
        try:
            report = wald_ci(table, spec.level, "phi")
        except (DegenerateMassError, NonDifferentiableError):
            degenerate += 1
            continue
        if report.ci.lower <= true_value <= report.ci.upper:
            hits += 1
        width_total += report.ci.upper - report.ci.lower

    effective = spec.replicates - degenerate
    if effective == 0:
        raise DegenerateMassError(
            "every replicate was degenerate; the scenario/sample size cannot "
            "support a coverage estimate"
        )
    coverage = hits / effective
    return CoverageResult(
        delta=spec.scenario.delta,
        n=spec.n,
        replicates=spec.replicates,
        level=spec.level,
        seed=spec.seed,
        true_value=true_value,
        coverage=coverage,
        mean_width=width_total / effective,
        degenerate_count=degenerate,
        mcse=math.sqrt(coverage * (1.0 - coverage) / effective),
    )
