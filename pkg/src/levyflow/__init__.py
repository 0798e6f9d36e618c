"""Graph-expansion engine for Levy-driven renormalization flows.

Enumerates generalized graph configurations exactly, evaluates them under
Poisson particle or Gaussian noise by deterministic tensor quadrature or
seeded Monte Carlo, assembles perturbative series with linked-cluster and
vacuum-counterterm structure, and validates everything against independent
brute-force and sampling oracles.
"""

from .combinatorics import (
    CumulantSequence,
    IndexSet,
    SetPartition,
    bell_number,
    cumulants_from_moments,
    moments_from_cumulants,
    set_partitions,
    subsets,
)
from .evaluator import (
    Bump,
    CutoffRegion,
    PairProfile,
    TestField,
    VertexKernel,
    VertexKernelSet,
    build_integrand,
    evaluate_configuration,
    integrate,
)
from .flow import (
    ScanResult,
    Series,
    correlation_functional,
    effective_action_series,
    partition_function_series,
    renormalized_correlation,
    td_limit_scan,
    vacuum_counterterm,
)
from .graphs import (
    Configuration,
    GraphClass,
    LegSet,
    build_leg_set,
    classify,
    classical_reduction,
    connected_components,
    enumerate_configurations,
    is_connected,
    is_vacuum,
    parse_canonical,
)
from .noise_models import (
    ChargeMeasure,
    GaussianModel,
    IntensityProfile,
    PoissonModel,
    charge_moment,
    check_conditional_positivity,
    cumulant_kernel,
    intensity,
    intensity_integral,
    laplace_exponent,
)
from .oracle import (
    MCEstimate,
    PointConfiguration,
    exp_series_check,
    mc_correlation,
    mollified_configuration_value,
    partition_transform_check,
    sample_poisson_field,
)
from .quadrature import IntegrationResult, QuadratureError, QuadratureSpec

__version__ = "0.1.0"
