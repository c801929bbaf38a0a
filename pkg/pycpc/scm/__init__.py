"""This module provides the classes and functions for second-order correlations of characteristic polynomials of
sample covariance matrices.

## Description

This module provides the following classes and functions:

- BivariatePolynomial: A class for exact polynomials in mu and nu.
- TruncatedSeries: A class for exact power series in z.
- EnsembleSpec: A class for a complex or real ensemble with fourth moment b.
- ChiralAuxTable: A class for the auxiliary values of the chiral recursions.
- MomentTable: A class for a rectangle of exact second moments f(n, m).
- SeriesPolicy: A class for the evaluation policy of the special functions.
- KernelPoint: A class for a kernel evaluation request.
- ContourSpec: A class for a circle and resolution of a contour integral.
- RegimeConfig: A class for a bulk, soft-edge or hard-edge scaling.
- EntryDistribution: A class for the law of the matrix entries.
- SampleConfig: A class for a Monte Carlo run.
- first_moment_laguerre, second_moment_exact, second_moment_numeric, gf_coeff_recursive, gf_coeff_closed:
  Exact and numerical moments and generating-function coefficients.
- kernel_eval, apply_D_numeric, mp_density: Limit kernels, differential operators and the density.
- contour_integral, limit_scan: Cauchy-integral evaluation and limit scans.
- mc_second_moment, brute_force_expectation, chiral_identity_check: Probabilistic and exact oracles.

"""

from .contour import (
    ContourSpec,
    IdentityCheck,
    LimitRow,
    QuadratureError,
    QuadratureResult,
    RegimeConfig,
    airy_integral_identity_check,
    bessel_pair_laplace_check,
    bessel_product_identity_check,
    contour_integral,
    integrand,
    laplace_sine_identity_check,
    limit_scan,
)
from .ensemble import (
    DistributionKind,
    EntryDistribution,
    MCEstimate,
    MCReport,
    SampleConfig,
    StateSpaceError,
    brute_force_expectation,
    brute_force_polynomial,
    chiral_identity_check,
    mc_first_moment,
    mc_second_moment,
    sample_matrix,
    sample_moments,
)
from .kernels import (
    KernelDomainError,
    KernelKind,
    KernelPoint,
    Regime,
    StepSizeError,
    apply_D_numeric,
    bulk_unscaled_limit,
    diagonal_value,
    kernel,
    kernel_eval,
    mp_density,
    predicted_limit,
)
from .polycore import (
    BigFloat,
    BivariatePolynomial,
    PolynomialFormatError,
    Rational,
    bigfloat_to_rational,
    poly_arith,
    poly_eval,
    to_bigfloat,
    to_rational,
)
from .recursion import (
    ChiralAuxTable,
    EnsembleSpec,
    MomentIndexError,
    MomentTable,
    PrecisionLossError,
    Variant,
    chiral_system_table,
    first_moment_covariance,
    first_moment_laguerre,
    first_moment_recursive,
    first_moment_recursive_n,
    gf_coeff_closed,
    gf_coeff_recursive,
    gf_ode_check,
    gf_series,
    moment_table,
    second_moment_at,
    second_moment_auto,
    second_moment_chiral,
    second_moment_exact,
    second_moment_exact_alt,
    second_moment_numeric,
)
from .series import TruncatedSeries
from .specfun import SeriesConvergenceError, SeriesPolicy, airy, bessel_i, bessel_i_even, bessel_j, laguerre

__all__ = [
    'BigFloat',
    'BivariatePolynomial',
    'ChiralAuxTable',
    'ContourSpec',
    'DistributionKind',
    'EnsembleSpec',
    'EntryDistribution',
    'IdentityCheck',
    'KernelDomainError',
    'KernelKind',
    'KernelPoint',
    'LimitRow',
    'MCEstimate',
    'MCReport',
    'MomentIndexError',
    'MomentTable',
    'PolynomialFormatError',
    'PrecisionLossError',
    'QuadratureError',
    'QuadratureResult',
    'Rational',
    'Regime',
    'RegimeConfig',
    'SampleConfig',
    'SeriesConvergenceError',
    'SeriesPolicy',
    'StateSpaceError',
    'StepSizeError',
    'TruncatedSeries',
    'Variant',
    'airy',
    'airy_integral_identity_check',
    'apply_D_numeric',
    'bessel_i',
    'bessel_i_even',
    'bessel_j',
    'bessel_pair_laplace_check',
    'bessel_product_identity_check',
    'bigfloat_to_rational',
    'brute_force_expectation',
    'brute_force_polynomial',
    'bulk_unscaled_limit',
    'chiral_identity_check',
    'chiral_system_table',
    'contour_integral',
    'diagonal_value',
    'first_moment_covariance',
    'first_moment_laguerre',
    'first_moment_recursive',
    'first_moment_recursive_n',
    'gf_coeff_closed',
    'gf_coeff_recursive',
    'gf_ode_check',
    'gf_series',
    'integrand',
    'kernel',
    'kernel_eval',
    'laguerre',
    'laplace_sine_identity_check',
    'limit_scan',
    'mc_first_moment',
    'mc_second_moment',
    'moment_table',
    'mp_density',
    'poly_arith',
    'poly_eval',
    'predicted_limit',
    'sample_matrix',
    'sample_moments',
    'second_moment_at',
    'second_moment_auto',
    'second_moment_chiral',
    'second_moment_exact',
    'second_moment_exact_alt',
    'second_moment_numeric',
    'to_bigfloat',
    'to_rational',
]
