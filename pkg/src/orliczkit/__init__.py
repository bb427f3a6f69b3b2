"""Numerical toolkit for Orlicz-space analysis on grids.

Modules cover Young-function growth certification (young), grid-sampled
modulars and gauge norms (gridfn), maximal/BMO/VMO diagnostics (oscillation),
variable singular-integral operators with commutators (czop), an interior
estimate verifier for higher-order elliptic systems (elliptic), and the
scenario harness (cli) with CSV/figure reporting (report).
"""

from .young import (
    YoungFunction,
    GrowthCertificate,
    ComplementaryPair,
    certify,
    certify_delta2,
    certify_nabla2,
    simonenko_indices,
    dilation_constant,
    hardy_constants,
    verify_hardy,
    complementary,
    make_young,
    make_power,
    make_exp_minus_one,
    make_t_log,
    make_power_log,
)
from .gridfn import (
    Grid,
    GridFunction,
    Ball,
    modular,
    luxemburg_norm,
    finite_difference,
    sobolev_orlicz_norm,
    jensen_check,
    make_field,
    save_binary,
    load_binary,
)
from .oscillation import (
    maximal,
    maximal_values,
    maximal_bounds_check,
    jensen_maximal_check,
    bmo_seminorm,
    vmo_modulus,
    john_nirenberg_check,
    oscillation_report,
)
from .czop import (
    VCZKernel,
    make_kernel,
    validate_kernel,
    apply_pv,
    apply_commutator,
    apply_multiplier,
    truncate,
    test_family,
    empirical_orlicz_bound,
)
from .elliptic import (
    EllipticSystem,
    ellipticity_constant,
    freeze,
    fundamental_kernel,
    convolution_identity_residual,
    representation_residual,
    cutoff,
    interpolation_check,
    interior_estimate,
    covering_estimate,
)

__all__ = [
    "YoungFunction", "GrowthCertificate", "ComplementaryPair", "certify",
    "certify_delta2", "certify_nabla2", "simonenko_indices", "dilation_constant",
    "hardy_constants", "verify_hardy", "complementary", "make_young", "make_power",
    "make_exp_minus_one", "make_t_log", "make_power_log",
    "Grid", "GridFunction", "Ball", "modular", "luxemburg_norm",
    "finite_difference", "sobolev_orlicz_norm", "jensen_check", "make_field",
    "save_binary", "load_binary",
    "maximal", "maximal_values", "maximal_bounds_check", "jensen_maximal_check",
    "bmo_seminorm", "vmo_modulus", "john_nirenberg_check", "oscillation_report",
    "VCZKernel", "make_kernel", "validate_kernel", "apply_pv", "apply_commutator",
    "apply_multiplier", "truncate", "test_family", "empirical_orlicz_bound",
    "EllipticSystem", "ellipticity_constant", "freeze", "fundamental_kernel",
    "convolution_identity_residual", "representation_residual", "cutoff",
    "interpolation_check", "interior_estimate", "covering_estimate",
]
