import warnings

import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")


@pytest.fixture(scope="session")
def fig_params():
    """Reference parameter set used throughout: delta=2, kappa=.5, gamma=.1."""
    from dickelab.greens import standard_params

    return standard_params
