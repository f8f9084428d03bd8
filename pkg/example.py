"""Example usage of laguerre-vcm.

This example demonstrates:
- Simulating data from the (beta1, beta2) scenario
- Choosing truncation levels by leave-one-out cross-validation
- Fitting the Laguerre model and comparing against the true curves
- Point-wise confidence intervals and tests
"""

import logging
import os

import numpy as np
from dotenv import load_dotenv
from rich.logging import RichHandler

from laguerre_vcm import VarianceModel
from laguerre_vcm import confidence_interval
from laguerre_vcm import fit
from laguerre_vcm import pointwise_test
from laguerre_vcm import select_truncation_loocv
from laguerre_vcm.simulation import Scenario
from laguerre_vcm.simulation import curve_comparison
from laguerre_vcm.simulation import generate_dataset
from laguerre_vcm.simulation import test_function

load_dotenv()


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(message)s", handlers=[RichHandler()])

    seed = int(os.environ.get("VCM_SEED", "0"))
    scenario = Scenario(n=400, sigma=1.0)
    data = generate_dataset(scenario, np.random.default_rng(seed)).data
    print(f"Simulated {data.n} rows with {data.r} covariates")

    selection = select_truncation_loocv(data, scenario.density)
    print(f"LOOCV chose {selection.plan} with score {selection.score:.4g}")
    fitted = fit(data, selection.plan, scenario.density)

    grid = np.linspace(0.05, 1.0, 20)
    truths = [lambda t, c=c: test_function(c, t) for c in scenario.coefficients]
    table = curve_comparison(fitted, truths, grid)
    squared = (table["estimate"] - table["true"]) ** 2
    print(squared.groupby(table["l"]).mean().rename("mean squared error"))

    for l in (1, 2):
        model = VarianceModel.from_fit(fitted, l)
        t0 = 0.25
        truth = float(test_function(scenario.coefficients[l - 1], t0))
        lower, upper = confidence_interval(fitted, l, t0, 0.05, model)
        result = pointwise_test(fitted, l, t0, truth, 0.05, model)
        print(f"beta{l}({t0}): 95% CI [{lower:.4f}, {upper:.4f}], true {truth:.4f}, p = {result.p_value:.3f}")


if __name__ == "__main__":
    main()
