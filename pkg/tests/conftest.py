from __future__ import annotations

import pytest

from bearform.config import load_preset
from bearform.scenarios import run_chain, run_two_agent


@pytest.fixture(scope="session")
def fig2a_run():
    return run_two_agent(load_preset("paper-fig2a"))


@pytest.fixture(scope="session")
def fig2b_run():
    return run_two_agent(load_preset("paper-fig2b"))


@pytest.fixture(scope="session")
def chain_run():
    return run_chain(load_preset("paper-chain"))
