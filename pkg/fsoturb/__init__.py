import logging
logging.basicConfig(encoding='utf-8', level=logging.INFO)

from . import cli

from .config import Config
from .spectrum import TurbulenceParams, BeamParams, ModeFilter, DistortionVariances, compute_variances
from .modes import DistortionCoeffs, ModeIndex, PhaseScreen, GridSpec, grid_overlap
from .analytic import PowerLawPdf, XiPdf, lambert_w
from .montecarlo import SimConfig, simulate_transmittance, simulate_crosstalk
from .estimate import TransmittanceSeries, estimate_r0

try:
    from ._version import __version__
except ImportError:
    # versioningit writes _version.py when the package is built
    __version__ = '1+unknown'

__all__ = ['Config', 'TurbulenceParams', 'BeamParams', 'ModeFilter', 'DistortionVariances', 'compute_variances',
           'DistortionCoeffs', 'ModeIndex', 'PhaseScreen', 'GridSpec', 'grid_overlap',
           'PowerLawPdf', 'XiPdf', 'lambert_w',
           'SimConfig', 'simulate_transmittance', 'simulate_crosstalk',
           'TransmittanceSeries', 'estimate_r0', '__version__']
