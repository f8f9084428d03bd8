"""Scaling of the long-memory noise generator."""

import numpy as np
import pytest

from laguerre_vcm.simulation import fgn_covariance
from laguerre_vcm.simulation import generate_long_memory_noise

pytestmark = pytest.mark.e2e


class TestPartialSums:
    """Var(sum eps) / n^(2 - alpha) over 200 draws."""

    @pytest.mark.parametrize("alpha", [0.4, 0.8])
    @pytest.mark.parametrize("n", [256, 1024])
    def test_variance_ratio(self, alpha: float, n: int) -> None:
        """The ratio stays within 25% of one."""
        rng = np.random.default_rng(int(alpha * 10) * 10_000 + n)
        sums = [generate_long_memory_noise(n, alpha, rng).sum() for _ in range(200)]
        ratio = np.var(sums, ddof=1) / n ** (2.0 - alpha)
        assert ratio == pytest.approx(1.0, abs=0.25)

    def test_short_memory_limit(self) -> None:
        """alpha = 1 gives the identity covariance."""
        np.testing.assert_allclose(fgn_covariance(512, 1.0), np.eye(512), atol=1e-10)
