import warnings

import pytest

warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")

from kirchwave.core.model import default_problem, nonlin_spec
from kirchwave.core.spectral import SpectralField


@pytest.fixture(scope="session")
def spec_default():
    return default_problem()


@pytest.fixture(scope="session")
def spec_small():
    """Cheap instance for unit tests: few modes, short history grid."""
    return default_problem(n_modes=6, history_cells=16)


@pytest.fixture(scope="session")
def spec_small_unforced(spec_small):
    return spec_small.with_(
        nonlin=nonlin_spec(g_kind="zero"),
        h=SpectralField.zero(spec_small.grid),
    )
