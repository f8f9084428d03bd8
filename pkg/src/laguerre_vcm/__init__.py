"""Laguerre-series estimation and inference for varying-coefficient models.

The model is y = sum_l beta_l(t) x_l + eps with each beta_l expanded in
density-weighted Laguerre functions of the effect modifier t.
"""

__version__ = "0.3.0"

from laguerre_vcm.density import EmpiricalDensity  # noqa: E402
from laguerre_vcm.density import ExponentialDensity  # noqa: E402
from laguerre_vcm.density import UniformDensity  # noqa: E402
from laguerre_vcm.density import parse_density  # noqa: E402
from laguerre_vcm.design import Dataset  # noqa: E402
from laguerre_vcm.design import TruncationPlan  # noqa: E402
from laguerre_vcm.estimator import FittedVCM  # noqa: E402
from laguerre_vcm.estimator import fit  # noqa: E402
from laguerre_vcm.estimator import select_truncation_loocv  # noqa: E402
from laguerre_vcm.inference import VarianceModel  # noqa: E402
from laguerre_vcm.inference import bootstrap_bands  # noqa: E402
from laguerre_vcm.inference import confidence_interval  # noqa: E402
from laguerre_vcm.inference import pointwise_test  # noqa: E402

__all__ = [
    "Dataset",
    "EmpiricalDensity",
    "ExponentialDensity",
    "FittedVCM",
    "TruncationPlan",
    "UniformDensity",
    "VarianceModel",
    "bootstrap_bands",
    "confidence_interval",
    "fit",
    "parse_density",
    "pointwise_test",
    "select_truncation_loocv",
]
