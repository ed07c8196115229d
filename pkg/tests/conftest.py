import pytest

from ahst.modes import BeamGeometry, build_kernel_table


@pytest.fixture(scope="session")
def geometry():
    return BeamGeometry.default()


@pytest.fixture(scope="session")
def table(geometry):
    return build_kernel_table(geometry, 12)
