"""Coverage, size and power of the point-wise procedures."""

import pytest

from laguerre_vcm.inference import asymptotic_power
from laguerre_vcm.simulation import CalibrationConfig
from laguerre_vcm.simulation import PowerConfig
from laguerre_vcm.simulation import run_calibration_experiment
from laguerre_vcm.simulation import run_power_experiment

pytestmark = pytest.mark.e2e


class TestCalibration:
    """i.i.d. errors, n = 1200, 500 replications."""

    def test_coverage_size_and_null_distribution(self) -> None:
        """Coverage in [0.90, 0.98], size in [0.03, 0.07], KS p > 0.01."""
        report = run_calibration_experiment(CalibrationConfig(n=1200, replications=500), n_jobs=-1)
        for t in (0.1, 0.25, 0.5):
            assert 0.90 <= report.coverage[t] <= 0.98
            assert 0.03 <= report.rejection_rate[t] <= 0.07
            assert report.ks_pvalue[t] > 0.01


class TestPower:
    """Empirical against analytic power under local alternatives."""

    def test_power_curve(self) -> None:
        """Agreement within 0.05 at delta/sigma in {1, 2, 3}."""
        report = run_power_experiment(PowerConfig(), n_jobs=-1)
        assert report.replications >= 1000
        for ratio, expected in report.analytic.items():
            assert report.empirical[ratio] == pytest.approx(expected, abs=0.05)

    def test_level_at_null(self) -> None:
        """Power at delta = 0 is the level."""
        assert asymptotic_power(0.0, 1.0, 0.05) == pytest.approx(0.05, abs=1e-15)
