import numpy as np
import pytest

from uavwsn import EnergyParams, Instance


@pytest.fixture
def params():
    return EnergyParams()


def make_instance(cluster_points, area_m=2000.0, start=(0.0, 0.0)):
    """Hand-built instance from nested point lists."""
    return Instance(area_m=area_m, start=np.asarray(start, dtype=float),
                    clusters=tuple(np.asarray(c, dtype=float)
                                   for c in cluster_points))
