"""Shared fixtures: pay JIT compilation cost once, before anything is timed."""
import pytest

from chaincert import kernels


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    kernels.warmup()
    return kernels.BACKEND
