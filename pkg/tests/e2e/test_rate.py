"""Convergence rate of the series estimator."""

import pytest

from laguerre_vcm.simulation import RateConfig
from laguerre_vcm.simulation import run_rate_experiment

pytestmark = pytest.mark.e2e


class TestRate:
    """Log-log MISE slope against the bias/variance oracle."""

    def test_slope_tracks_oracle(self) -> None:
        """Slope is negative and within 0.15 of the oracle slope."""
        report = run_rate_experiment(RateConfig(), n_jobs=-1)
        assert report.fit.slope < 0
        assert report.fit.slope == pytest.approx(report.oracle_fit.slope, abs=0.15)
