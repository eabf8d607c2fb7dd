import os

import pytest


def workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


@pytest.fixture(scope="session")
def parallelism() -> int:
    return workers()
