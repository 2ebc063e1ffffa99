import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sensorfield.geometry import SensorFieldConfig, max_rotation_alpha


def fig_params(omega: float, r: float) -> SensorFieldConfig:
    """The contour-plot case study parameters: 50 m spacing, 14 m road,
    0.5 m setback, rotation at its maximum (pi - omega)/2."""
    return SensorFieldConfig(
        range_r=r,
        opening_omega=omega,
        rotation_alpha=max_rotation_alpha(omega),
        sensor_to_road_dsr=0.5,
        sensor_spacing_dpyl=50.0,
        road_width_droad=14.0,
    )


@pytest.fixture
def fig_config():
    return fig_params
