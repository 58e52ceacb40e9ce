import pytest

from atslab.ats_model import AtsParams


@pytest.fixture
def case5():
    return AtsParams(alpha=0.0, beta=1.0, delta=-0.5, k_bar=1.0, eta_bar=1.0, sigma_bar=0.2)


@pytest.fixture
def case5_ig():
    return AtsParams(alpha=0.5, beta=1.0, delta=-0.5, k_bar=1.0, eta_bar=1.0, sigma_bar=0.2)


@pytest.fixture
def case4():
    # delta = -beta = -1/2: the end of the Case-4 line, outside the strict region
    return AtsParams(alpha=0.0, beta=0.5, delta=-0.5, k_bar=1.0, eta_bar=1.0, sigma_bar=0.2)


@pytest.fixture
def case3():
    return AtsParams(alpha=0.0, beta=1.0, delta=-0.25, k_bar=1.0, eta_bar=1.0, sigma_bar=0.2)


@pytest.fixture
def case1():
    return AtsParams(alpha=0.0, beta=0.5, delta=0.0, k_bar=1.0, eta_bar=1.0, sigma_bar=0.2)


@pytest.fixture
def case2():
    return AtsParams(alpha=0.0, beta=1.0, delta=-0.75, k_bar=1.0, eta_bar=1.0, sigma_bar=0.2)
