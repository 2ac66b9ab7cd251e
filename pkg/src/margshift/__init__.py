"""Directional measures of marginal change in square ordinal tables.

Given an r x r contingency table whose rows and columns share one ordered
scale (typically before/after states), margshift quantifies how far and in
which direction the two marginal distributions drift apart, by comparing
their discrete-time hazard sequences:

* ``phi`` in [-1, 1]: sign says which margin's hazard dominates, magnitude
  says how strongly; 0 under marginal homogeneity.
* ``psi`` in [0, 1]: a power-divergence family that measures the departure
  without direction.

The package adds delta-method and bootstrap confidence intervals for both
measures, a closed-form link between phi and a constant hazard-odds shift,
multinomial sampling, a Monte Carlo coverage harness, and a CLI
(``margshift estimate|compare|curve|simulate``).
"""

from .errors import (
    DegenerateMassError,
    DomainError,
    MargshiftError,
    MethodMismatchError,
    NonDifferentiableError,
    ShapeError,
    TableParseError,
    TooManyDegenerateReplicatesError,
    ZeroTotalError,
)
from .inference import (
    ConfInterval,
    EstimateReport,
    GroupComparison,
    bootstrap_ci,
    compare_groups,
    grad_fd,
    grad_phi,
    multinomial_covariance,
    wald_ci,
    z_quantile,
)
from .mcor import McorScenario, curve_grid, delta_of_phi, phi_of_delta, scenario_table
from .measures import (
    AngleDecomposition,
    DiscordanceTerms,
    angle_decomposition,
    discordance,
    phi,
    psi,
)
from .simulate import CoverageResult, CoverageStudySpec, coverage_study, sample_table
from .tables import (
    CountTable,
    HazardPair,
    MarginalPair,
    ProbTable,
    from_counts,
    hazards,
    marginals,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # tables
    "CountTable",
    "ProbTable",
    "MarginalPair",
    "HazardPair",
    "from_counts",
    "marginals",
    "hazards",
    # measures
    "DiscordanceTerms",
    "AngleDecomposition",
    "discordance",
    "phi",
    "psi",
    "angle_decomposition",
    # shift model
    "McorScenario",
    "phi_of_delta",
    "delta_of_phi",
    "scenario_table",
    "curve_grid",
    # inference
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
    # simulation
    "CoverageStudySpec",
    "CoverageResult",
    "sample_table",
    "coverage_study",
    # errors
    "MargshiftError",
    "ShapeError",
    "ZeroTotalError",
    "TableParseError",
    "DomainError",
    "DegenerateMassError",
    "NonDifferentiableError",
    "MethodMismatchError",
    "TooManyDegenerateReplicatesError",
]
