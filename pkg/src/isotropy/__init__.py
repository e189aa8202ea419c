"""Nonparametric hypothesis tests of isotropy and symmetry for spatial
random fields, with a Gaussian random field simulator and a Monte Carlo
size/power study harness."""

from .core import (
    ContrastMatrix,
    GridSpec,
    LagSet,
    SpatialDataset,
    default_contrast,
    default_lag_set,
    enumerate_lag_pairs,
)
from .distributions import RngStream, chi2_sf, cvm_test, f22_cdf, mix64
from .estimators import (
    EstimatorConfig,
    GHat,
    KernelSpec,
    classical_semivariogram,
    empirical_bandwidth,
    estimate_G,
    kernel_covariogram,
    kernel_semivariogram,
)
from .grf import (
    AnisotropyParams,
    ExponentialCovariance,
    GrfSampler,
    anisotropic_transform,
    covariance_matrix,
    phi_from_effective_range,
    simulate_grf,
    uniform_locations,
)
from .resampling import (
    Rect,
    SigmaHat,
    WindowSpec,
    gbbb_resample,
    gbbb_variance,
    moving_windows,
    subsample_variance,
)
from .spatial_tests import (
    TestResult,
    finite_sample_pvalue,
    gsc_gridded_test,
    gsc_nongridded_test,
    ms_test,
    quadratic_form,
)
from .spectral_tests import (
    Periodogram,
    SymmetryTestResult,
    fourier_frequencies,
    lz_complete_test,
    lz_reflection_test,
    periodogram,
)

__version__ = "0.1.0"
