import pytest

from logic.pv_model import DEFAULT_ARRAY, OperatingEnv, PvArraySpec
from service.simulation_service import Scenario


@pytest.fixture
def array() -> PvArraySpec:
    return DEFAULT_ARRAY


@pytest.fixture
def stc() -> OperatingEnv:
    return OperatingEnv(irradiance=1000.0, cell_temp=298.15)


@pytest.fixture
def quiet_scenario() -> Scenario:
    """Aligned tracker, full tank 2, wet soil: nothing to pump."""
    return Scenario.model_validate(
        {
            "duration_s": 10,
            "dt_s": 0.1,
            "tank2": {"volume_l": 13.8},
            "soil": {"moisture_fraction": 0.8},
        }
    )
