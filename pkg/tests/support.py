"""Data builders shared by the unit tests."""

import numpy as np

from laguerre_vcm.density import DesignDensity
from laguerre_vcm.design import Dataset
from laguerre_vcm.design import TruncationPlan
from laguerre_vcm.design import assemble_design


def span_dataset(
    rng: np.random.Generator,
    n: int,
    plan: TruncationPlan,
    density: DesignDensity,
    sigma: float = 0.0,
) -> tuple[Dataset, np.ndarray]:
    """Data generated from the truncated model itself; returns (data, true theta)."""
    t = rng.exponential(0.25, size=n) + 1e-6
    x = rng.normal(1.0, 0.5, size=(n, plan.r))
    theta = rng.normal(size=plan.total)
    zero = Dataset(t=t, x=x, y=np.zeros(n))
    y = assemble_design(zero, plan, density) @ theta + sigma * rng.standard_normal(n)
    return zero.with_response(y), theta
