"""Regularized kernel Fisher discriminant two-sample test."""

__version__ = "0.1.0"

from .calibration import (
    CalibrationMethod,
    CalibrationResult,
    MixtureSpec,
    calibrate,
    mixture_quantile,
    resample_critical_value,
)
from .errors import (
    DataFormatError,
    DegenerateSpectrumError,
    InvalidAmplitudeError,
    InvalidInputError,
    KFDAError,
    NumericFailureError,
    SingularCovarianceError,
    UnsupportedOrderError,
)
from .kernels import KernelFamily, KernelSpec, eval_kernel, gram
from .power import (
    AlternativeModel,
    PowerPoint,
    decaying_gamma_theoretical_power,
    directional_shift,
    empirical_power_curve,
    fixed_gamma_theoretical_power,
    roc_curve,
)
from .spectrum import GammaSweep, GramBundle, TwoSample, build_bundle, d_r, pooled_spectrum
from .statistics import (
    GammaSchedule,
    StatisticRequest,
    TestStatisticValue,
    kfda_statistic,
    mmd_statistic,
)

__all__ = [name for name in dir() if not name.startswith("_")]
