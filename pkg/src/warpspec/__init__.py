"""Spectral diagnostics for Laplacians on warped ends.

Modules: ``geometry`` (profiles h(r) and radial curvature), ``conditions``
(hypothesis checks on a radial window), ``thresholds`` (closed-form
eigenvalue thresholds), ``separation`` (mode operators), ``solver`` (Prüfer
shooting and classification), ``counterexample`` (the oscillating profile
f1 end to end) and ``cli``.
"""

from .conditions import HypothesisConstants, fit_constants, run_checks
from .errors import (
    BracketError,
    ConfigError,
    DomainError,
    EstimationError,
    EvaluationError,
    IntegrationError,
    ParameterError,
    UnsatisfiableHypotheses,
    WarpspecError,
    WindowError,
)
from .geometry import EndGeometry, OscillatoryExp, PowerLaw, Sampled, build_f1
from .separation import RadialOperator, build_radial_operator, check_lemma_3_1, sphere_spectrum
from .solver import (
    EigenScanResult,
    ShootingTrajectory,
    classify,
    dirichlet_interval_eigenvalues,
    estimate_decay,
    integrate,
    refine_candidate,
)
from .thresholds import beta, eta1, lambda1, star8_rhs, y1

__version__ = "0.1.0"
