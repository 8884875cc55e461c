import numpy as np
import pytest

from isinglab.antisym import AntisymSpec
from isinglab.lattice import SpinConfig, SublatticeSpec


@pytest.fixture
def stripes_spec():
    # period-2 vertical stripes: +1 on even x, -1 on odd x
    return AntisymSpec(
        lattice=SublatticeSpec(((2, 0), (0, 1))),
        flip_vector=(1, 0),
        cell_values=(((0, 0), 1), ((1, 0), -1)),
    )


@pytest.fixture
def checkerboard_spec():
    # columns (1,1) and (-1,1) generate the even-parity sublattice
    return AntisymSpec(
        lattice=SublatticeSpec(((1, -1), (1, 1))),
        flip_vector=(1, 0),
        cell_values=(((0, 0), 1), ((0, 1), -1)),
    )


@pytest.fixture
def random_config():
    def make(side, seed=0):
        rng = np.random.default_rng(seed)
        return SpinConfig.random(side, rng)

    return make
