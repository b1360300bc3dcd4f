import numpy as np
import pytest

from dduio import dd_design, benchmark


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def bench_sys():
    return benchmark.system()


@pytest.fixture(scope="session")
def published_uio():
    return benchmark.PUBLISHED_UIO


@pytest.fixture(scope="session")
def bench_trace():
    return benchmark.collect(seed=0, T=benchmark.HORIZON)


@pytest.fixture(scope="session")
def bench_data(bench_trace):
    return dd_design.build_data_matrices(bench_trace, r_claimed=2)


@pytest.fixture(scope="session")
def bench_design(bench_data):
    return dd_design.run_algorithm_one(bench_data)
