import os

import pytest

RUN_E2E = os.environ.get("VCM_RUN_E2E") == "1"


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if RUN_E2E:
        return
    skip = pytest.mark.skip(reason="set VCM_RUN_E2E=1 to run the Monte Carlo checks")
    for item in items:
        if "e2e" in item.keywords:
            item.add_marker(skip)
