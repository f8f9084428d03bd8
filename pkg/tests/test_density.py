"""Tests for design densities."""

import numpy as np
import pytest

from laguerre_vcm.density import DensityFamily
from laguerre_vcm.density import EmpiricalDensity
from laguerre_vcm.density import ExponentialDensity
from laguerre_vcm.density import UniformDensity
from laguerre_vcm.density import density_from_dict
from laguerre_vcm.density import parse_density
from laguerre_vcm.errors import DensityFloorError


class TestExponentialDensity:
    """Tests for ExponentialDensity."""

    def test_pdf_values(self) -> None:
        """h(t) = rate exp(-rate t)."""
        density = ExponentialDensity(rate=4.0)
        np.testing.assert_allclose(density.pdf([0.0, 0.25, 1.0]), [4.0, 4.0 * np.exp(-1.0), 4.0 * np.exp(-4.0)])

    def test_negative_t_has_zero_density(self) -> None:
        """The support is the positive half line."""
        assert ExponentialDensity(rate=1.0).pdf(-1.0) == 0.0

    def test_rejects_bad_parameters(self) -> None:
        """Rate and floor must be positive."""
        with pytest.raises(ValueError):
            ExponentialDensity(rate=0.0)
        with pytest.raises(ValueError):
            ExponentialDensity(rate=1.0, floor=0.0)

    def test_checked_pdf_reports_first_offender(self) -> None:
        """The floor error names the first point below m0."""
        density = ExponentialDensity(rate=1.0, floor=0.01)
        with pytest.raises(DensityFloorError) as excinfo:
            density.checked_pdf([0.5, 6.0, 9.0])
        assert excinfo.value.t == 6.0
        assert excinfo.value.floor == 0.01

    def test_in_support(self) -> None:
        """in_support compares against the floor."""
        density = ExponentialDensity(rate=1.0, floor=0.01)
        assert density.in_support([0.5, 6.0]).tolist() == [True, False]


class TestUniformDensity:
    """Tests for UniformDensity."""

    def test_pdf_inside_and_outside(self) -> None:
        """1 / (b - a) on the interval, zero elsewhere."""
        density = UniformDensity(a=0.0, b=2.0)
        np.testing.assert_allclose(density.pdf([0.5, 2.0, 2.5]), [0.5, 0.5, 0.0])

    def test_rejects_empty_interval(self) -> None:
        """a must be below b."""
        with pytest.raises(ValueError):
            UniformDensity(a=1.0, b=1.0)


class TestEmpiricalDensity:
    """Tests for the kernel density estimate."""

    def test_clips_to_floor(self) -> None:
        """Far outside the sample the estimate equals the floor."""
        rng = np.random.default_rng(3)
        density = EmpiricalDensity.from_sample(rng.exponential(0.25, size=200) + 1e-3, floor=1e-3)
        assert density.pdf(50.0) == pytest.approx(1e-3)
        assert density.in_support([50.0]).all()

    def test_integrates_to_about_one(self) -> None:
        """The unclipped part carries almost all the mass."""
        rng = np.random.default_rng(4)
        density = EmpiricalDensity.from_sample(rng.uniform(1.0, 2.0, size=500), floor=1e-9)
        grid = np.linspace(-1.0, 4.0, 5001)
        assert float(np.sum(density.pdf(grid)) * (grid[1] - grid[0])) == pytest.approx(1.0, abs=1e-3)

    def test_rejects_nonpositive_sample(self) -> None:
        """Sample values must be strictly positive."""
        with pytest.raises(ValueError):
            EmpiricalDensity.from_sample([0.5, 0.0, 1.0])

    def test_needs_two_points(self) -> None:
        """A single point has no spread."""
        with pytest.raises(ValueError):
            EmpiricalDensity.from_sample([0.5])


class TestParseDensity:
    """Tests for parse_density and density_from_dict."""

    def test_exponential(self) -> None:
        """exponential:rate."""
        density = parse_density("exponential:4")
        assert density == ExponentialDensity(rate=4.0)

    def test_exponential_with_floor(self) -> None:
        """exponential:rate:floor."""
        density = parse_density("exponential:2:1e-6")
        assert isinstance(density, ExponentialDensity)
        assert density.floor == 1e-6

    def test_uniform(self) -> None:
        """uniform:a:b."""
        assert parse_density("Uniform:0:1") == UniformDensity(a=0.0, b=1.0)

    def test_empirical_needs_sample(self) -> None:
        """The empirical family cannot be built without data."""
        with pytest.raises(ValueError, match="sample"):
            parse_density("empirical")

    def test_empirical_with_floor(self) -> None:
        """empirical:floor uses the given floor."""
        density = parse_density("empirical:0.01", sample=[0.1, 0.2, 0.4, 0.8])
        assert density.family is DensityFamily.EMPIRICAL
        assert density.floor == 0.01

    @pytest.mark.parametrize("text", ["gamma:2", "exponential", "uniform:1", "exponential:x"])
    def test_rejects_malformed(self, text: str) -> None:
        """Unknown families and wrong parameter counts are ValueErrors."""
        with pytest.raises(ValueError):
            parse_density(text)

    def test_from_dict_rebuilds_each_family(self) -> None:
        """to_dict output rebuilds an equivalent density."""
        densities = [
            ExponentialDensity(rate=3.0, floor=1e-8),
            UniformDensity(a=0.5, b=1.5),
            EmpiricalDensity.from_sample([0.2, 0.3, 0.9, 1.4]),
        ]
        grid = np.array([0.3, 0.7, 1.2])
        for density in densities:
            rebuilt = density_from_dict(density.to_dict())
            assert rebuilt.family is density.family
            np.testing.assert_allclose(rebuilt.pdf(grid), density.pdf(grid))
