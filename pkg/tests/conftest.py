"""
Shared fixtures: small lattices and kernels that keep every fast test in the
millisecond range.
"""
import pytest
from click.testing import CliRunner

from korobov_density.kernels import KorobovKernel, ProductWeights
from korobov_density.lattice import LatticeRule


@pytest.fixture
def weights2():
    return ProductWeights.power_law(2, 2)


@pytest.fixture
def kernel2(weights2):
    return KorobovKernel(2, weights2)


@pytest.fixture
def rule11(weights2):
    return LatticeRule.cbc(11, 2, 2, weights2)


@pytest.fixture
def kernel1():
    return KorobovKernel(2, ProductWeights((1.0,)))


@pytest.fixture
def rule7():
    return LatticeRule(7, (1,))


@pytest.fixture
def runner():
    return CliRunner()
