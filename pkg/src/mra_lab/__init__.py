"""Numerical laboratory for group-invariant Gaussian mixture estimation.

The package computes the stabilizer projector that governs the likelihood
geometry of multi-reference alignment models, verifies the Fisher null
space and higher-order curvature identities by Monte Carlo, fits the MLE
via multistart EM, and reproduces the component-wise n^-1/2 and n^-1/4
estimation rates.
"""

from .errors import (
    AmbiguousStabilizerError,
    ConfigInvalidError,
    DegenerateEigensolveError,
    DimensionMismatchError,
    EmptyDatasetError,
    MRALabError,
    NotAGroupError,
    NotANullDirectionError,
    NotASubgroupError,
    SingularFisherError,
    SizeLimitError,
    ZeroDirectionError,
)
from .fisher import (
    CheckResult,
    CheckSuite,
    FisherEstimate,
    MatchReport,
    check_null_space_match,
    fisher_mc,
    geometry_checks,
    population_gap,
    quartic_curvature,
)
from .groups import (
    ELEMENT_ORDER_CONVENTION,
    FiniteIsometryGroup,
    VerificationReport,
    group_from_config,
    make_group,
    verify_group,
)
from .mle import FitConfig, MLEResult, align, em_step, fit
from .model import (
    Dataset,
    MixtureModel,
    empirical_loglik,
    hessian_quadform,
    hessian_quadform_many,
    hessian_quadform_rows,
    load_binary,
    load_csv,
    log_density,
    log_density_rows,
    orbit_distance,
    sample,
    save_binary,
    save_csv,
    score,
    score_rows,
    split_error,
)
from .randomness import stream
from .rates import (
    ConsistencyReport,
    NormalityReport,
    RateConfig,
    RateResult,
    consistency_curve,
    normality_probe,
    run,
    save_records_csv,
    save_summary_json,
)
from .stabilizer import (
    StabilizerReport,
    decompose,
    increases_degree,
    recover_stabilizer,
    stabilizer,
)
from .version import __version__, version_string

__all__ = [name for name in dir() if not name.startswith("_")]
