import numpy as np
import pytest

from fsoturb.helpers import format_number
from fsoturb.spectrum import TurbulenceParams, BeamParams, ModeFilter, compute_variances


@pytest.fixture
def chamber():
    """
    The scales of the turbulence chamber with r0 = 2 mm.
    """
    return TurbulenceParams(r0=2e-3, l0=2.7e-3, L0=51e-3)


@pytest.fixture
def beam():
    return BeamParams(w=1e-3)


@pytest.fixture
def mode_filter(beam):
    return ModeFilter(w=beam.w)


@pytest.fixture
def chamber_variances(chamber, mode_filter):
    return compute_variances(chamber, mode_filter)


@pytest.fixture
def rng():
    return np.random.default_rng(20201)


@pytest.fixture
def transmittance_file(tmp_path):
    """
    Write the values to a CSV file, one per line, and return the path.
    """
    def write(values, header=None, name='transmittance.csv'):
        path = tmp_path / name
        with open(path, 'w') as out:
            if header is not None:
                out.write(header + '\n')
            out.writelines(format_number(value) + '\n' for value in values)
        return path
    return write
