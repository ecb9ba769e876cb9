from __future__ import annotations

import pytest

from aspbench.solver import Solver


@pytest.fixture(scope="session")
def solver():
    s = Solver(default_timeout=120.0)
    yield s
    s.close()
