"""Zeros of Gaussian analytic functions and determinantal point processes.

Samplers for the zero sets of planar, spherical and hyperbolic Gaussian
analytic functions and of polynomials in several of them (including
determinants of random matrix power series), exact samplers for the
matching determinantal processes, and the estimators used to compare them.
"""
from .core import (DomainTag, PointSet, Region, RngStream, count_in_region, disk,
                   everywhere, outside_disk, sample_complex_gaussian, split_stream)
from .dpp import (DppKernelSpec, ProjectionBasis, RadialLaw, count_distribution_exact,
                  det_sphere_samples, ginibre_samples, hyperbolic1_counts, intensity,
                  kernel_eval, monomial_basis, poisson_binomial, projection_dpp_samples,
                  reference_density, sample_det_sphere, sample_ginibre_n,
                  sample_projection_dpp, sample_radii_hyperbolic1, truncation_rank)
from .gaf import (GafSpec, MobiusMap, TruncatedSeries, covariance, edelman_kostlan_intensity,
                  evaluate, gaf_zero_samples, mobius_cocycle, sample_gaf, truncation_order,
                  zeros_in_disk)
from .polygaf import (HomPoly, MatrixGafSpec, det_pencil_samples, det_pencil_zeros,
                      eval_polygaf, matrix_poly_zeros, matrix_series_samples,
                      matrix_series_zeros, pencil_eigenvalues, polygaf_series)
from .roots import poly_roots, winding_number
from .stats import (BinnedEstimate, CltReport, DeviationCurve, RadialBump, WickCoeffs,
                    clt_experiment, estimate_intensity, estimate_pair_correlation,
                    estimate_wick_coeffs, invariance_test, jensen_check, kappa_identity,
                    overcrowding_curve,
                    deviation_slope_experiment, smooth_statistic, smoothstep_bump,
                    tilted_overcrowding, two_point_from_formula)

__version__ = "0.1.0"
