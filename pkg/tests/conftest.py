import numpy as np
import pytest

from shortcut_metrics.space_builder import HeisenbergGrid, ShortcutConfig, build_heisenberg


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_build():
    """Unit box, levels 1..4 on the m = 7 lattice."""
    return build_heisenberg(HeisenbergGrid(m=7, scale=0), ShortcutConfig(levels=(1, 2, 3, 4)))


@pytest.fixture(scope="session")
def region_build():
    """Quarter-side box, levels 3..7 on the m = 9 lattice."""
    return build_heisenberg(HeisenbergGrid(m=9, scale=2), ShortcutConfig(levels=(3, 4, 5, 6, 7)))
