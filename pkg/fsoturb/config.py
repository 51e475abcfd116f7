import json
import logging
import math
import os
import pathlib

from fsoturb.errors import ConfigError
from fsoturb.spectrum import (TurbulenceParams, BeamParams, ModeFilter, FILTER_KINDS, INTENSITY_SPECTRUM,
                              INDEPENDENT, GH_COUPLINGS, compute_variances, variance_kernel)
from fsoturb.modes import GridSpec, ORDERS, FIRST
from fsoturb.montecarlo import SimConfig, ENGINES, CLOSED_FORM, MAX_SEED


logger = logging.getLogger(__name__)

# overrides the default number of worker processes
WORKERS_ENV = 'FSOTURB_WORKERS'
FORMATS = ('csv', 'json')
SAMPLE_CONFIG = pathlib.Path(os.path.dirname(__file__)) / 'data' / 'chamber.json'


def _positive_number(name, value):
    if isinstance(value, bool):
        raise ConfigError(f'{name} has to be a number, got {value!r}')
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f'{name} has to be a number, got {value!r}')
    if not math.isfinite(value) or value <= 0:
        raise ConfigError(f'{name} has to be positive and finite, got {value}')
    return value


def _integer(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f'{name} has to be an integer, got {value!r}')
    if value < minimum:
        raise ConfigError(f'{name} has to be at least {minimum}, got {value}')
    return int(value)


def _choice(name, value, choices):
    if value not in choices:
        raise ConfigError(f'Unknown {name} "{value}". Choose one of: {", ".join(choices)}')
    return value


def _boolean(name, value):
    if not isinstance(value, bool):
        raise ConfigError(f'{name} has to be true or false, got {value!r}')
    return value


class Config:
    """
    The configuration of a run: the turbulence, the beam, the simulation and the outputs.

    All lengths are in metres. The settings are stored as properties and are validated
    when assigned, so an invalid document is rejected before any computation starts.
    The defaults describe the turbulence chamber, see ``data/chamber.json``.
    """

    def __init__(self, **kwargs):
        # turbulence and beam
        self._r0 = 2e-3
        self._l0 = 2.7e-3
        self._L0 = 51e-3
        self._w = 1e-3
        self._filter_kind = INTENSITY_SPECTRUM
        self._gamma = None

        # simulation
        self._order = FIRST
        self._samples = 100_000
        self._seed = 0
        self._tracking = False
        self._gh_coupling = INDEPENDENT
        self._engine = CLOSED_FORM
        self._bins = 100
        self._log_bins = False
        self._workers = None
        self._grid_extent = 5.0
        self._grid_points = 512

        # tables
        self._n_level = 0
        self._n_max = 4
        self._points = 1000

        # estimation
        self._column = None
        self._confidence = 0.95

        # outputs
        self._out = None
        self._raw_out = None
        self._format = 'csv'

        # assign all the initial configuration values
        self.set_configs(**kwargs)

    @classmethod
    def from_file(cls, path):
        """
        Load a JSON document. Every key has to name a setting, unknown keys are rejected.

        :param path: the JSON file
        :rtype: :class:`Config`
        """
        path = pathlib.Path(path)
        try:
            with open(path) as config_file:
                document = json.load(config_file)
        except json.JSONDecodeError as error:
            raise ConfigError(f'{path} is not a valid JSON document: {error}')
        except OSError as error:
            raise ConfigError(f'Cannot read the config {path}: {error}')

        if not isinstance(document, dict):
            raise ConfigError(f'{path} has to contain a JSON object with the settings')
        unknown = sorted(set(document) - set(cls.setting_names()))
        if unknown:
            raise ConfigError(f'Unknown settings in {path}: {", ".join(unknown)}')

        logger.debug(f'Loading the config {path}')
        return cls(**document)

    @classmethod
    def setting_names(cls):
        return sorted(name for name, value in vars(cls).items() if isinstance(value, property))

    # --------------- turbulence
    @property
    def r0(self):
        """
        Fried parameter (m). Ignored when ``gamma`` is set.

        :rtype: float
        """
        return self._r0

    @r0.setter
    def r0(self, value):
        self._r0 = _positive_number('r0', value)
        logger.debug(f'Fried parameter r0: {self._r0} m')

    @property
    def l0(self):
        """
        Inner scale of the turbulence (m).
        """
        return self._l0

    @l0.setter
    def l0(self, value):
        self._l0 = _positive_number('l0', value)
        logger.debug(f'Inner scale l0: {self._l0} m')

    @property
    def L0(self):
        """
        Outer scale of the turbulence (m), larger than the inner scale.
        """
        return self._L0

    @L0.setter
    def L0(self, value):
        self._L0 = _positive_number('L0', value)
        logger.debug(f'Outer scale L0: {self._L0} m')

    @property
    def w(self):
        """
        Waist of the fundamental Gaussian mode (m).
        """
        return self._w

    @w.setter
    def w(self, value):
        self._w = _positive_number('w', value)
        logger.debug(f'Beam waist w: {self._w} m')

    @property
    def filter_kind(self):
        """
        The spectrum of the fundamental mode that filters the phase spectrum,
        ``intensity-spectrum`` or ``field-spectrum``.
        """
        return self._filter_kind

    @filter_kind.setter
    def filter_kind(self, value):
        self._filter_kind = _choice('mode filter', value, FILTER_KINDS)

    @property
    def gamma(self):
        """
        Optional power-law exponent 2 / (w^2 c_a). When set, it replaces r0: the Fried parameter
        is chosen so that the tilt variance gives this exponent.

        :rtype: float or None
        """
        return self._gamma

    @gamma.setter
    def gamma(self, value):
        self._gamma = _positive_number('gamma', value)
        logger.debug(f'Power-law exponent gamma: {self._gamma}')

    # --------------- simulation
    @property
    def order(self):
        """
        ``first`` (tilts) or ``second`` (tilts and curvatures) phase distortions.
        """
        return self._order

    @order.setter
    def order(self, value):
        self._order = _choice('order', value, ORDERS)

    @property
    def samples(self):
        return self._samples

    @samples.setter
    def samples(self, value):
        self._samples = _integer('samples', value, 1)
        if self._samples < 1000:
            logger.warning(f'Only {self._samples} samples, the histograms will be noisy')

    @property
    def seed(self):
        """
        Unsigned 64-bit seed. The same seed gives the same samples.
        """
        return self._seed

    @seed.setter
    def seed(self, value):
        seed = _integer('seed', value, 0)
        if seed > MAX_SEED:
            raise ConfigError(f'The seed has to fit in 64 bits, got {seed}')
        self._seed = seed

    @property
    def tracking(self):
        """
        Ideal tilt tracking, a = b = 0 in every realisation.
        """
        return self._tracking

    @tracking.setter
    def tracking(self, value):
        self._tracking = _boolean('tracking', value)

    @property
    def gh_coupling(self):
        return self._gh_coupling

    @gh_coupling.setter
    def gh_coupling(self, value):
        self._gh_coupling = _choice('g/h coupling', value, GH_COUPLINGS)

    @property
    def engine(self):
        """
        ``closed-form`` transmittance expressions or the ``grid`` overlap integral.
        """
        return self._engine

    @engine.setter
    def engine(self, value):
        self._engine = _choice('engine', value, ENGINES)

    @property
    def bins(self):
        return self._bins

    @bins.setter
    def bins(self, value):
        self._bins = _integer('bins', value, 1)

    @property
    def log_bins(self):
        return self._log_bins

    @log_bins.setter
    def log_bins(self, value):
        self._log_bins = _boolean('log_bins', value)

    @property
    def workers(self):
        """
        Worker processes of the Monte Carlo sampling. If not configured, the environment variable
        FSOTURB_WORKERS is checked, otherwise a single process is used.

        :rtype: int
        """
        if self._workers is not None:
            return self._workers
        from_env = os.getenv(WORKERS_ENV)
        if from_env:
            try:
                return _integer(WORKERS_ENV, int(from_env), 1)
            except ValueError:
                raise ConfigError(f'{WORKERS_ENV} has to be a positive integer, got "{from_env}"')
        return 1

    @workers.setter
    def workers(self, value):
        self._workers = _integer('workers', value, 1)

    @property
    def grid_extent(self):
        """
        Half width of the overlap grid in beam waists.
        """
        return self._grid_extent

    @grid_extent.setter
    def grid_extent(self, value):
        self._grid_extent = _positive_number('grid_extent', value)

    @property
    def grid_points(self):
        return self._grid_points

    @grid_points.setter
    def grid_points(self, value):
        self._grid_points = _integer('grid_points', value, 1)

    # --------------- tables
    @property
    def n_level(self):
        """
        The power level of the density table, 0 is the fundamental mode.
        """
        return self._n_level

    @n_level.setter
    def n_level(self, value):
        self._n_level = _integer('n_level', value, 0)

    @property
    def n_max(self):
        """
        The highest power level of the cross-talk simulation.
        """
        return self._n_max

    @n_max.setter
    def n_max(self, value):
        self._n_max = _integer('n_max', value, 1)

    @property
    def points(self):
        """
        Number of rows in a density table.
        """
        return self._points

    @points.setter
    def points(self, value):
        self._points = _integer('points', value, 2)

    # --------------- estimation
    @property
    def column(self):
        """
        The 0-based CSV column with the measured transmittance, the last column by default.
        """
        return self._column

    @column.setter
    def column(self, value):
        self._column = _integer('column', value, 0)

    @property
    def confidence(self):
        return self._confidence

    @confidence.setter
    def confidence(self, value):
        value = _positive_number('confidence', value)
        if value >= 1:
            raise ConfigError(f'The confidence level has to be below 1, got {value}')
        self._confidence = value

    # --------------- outputs
    @property
    def out(self):
        """
        Where the table or the JSON document is written, the standard output if None.
        """
        return self._out

    @out.setter
    def out(self, path):
        self._out = pathlib.Path(path)

    @property
    def raw_out(self):
        """
        Where the raw Monte Carlo samples are written, one per line.
        """
        return self._raw_out

    @raw_out.setter
    def raw_out(self, path):
        self._raw_out = pathlib.Path(path)

    @property
    def format(self):
        return self._format

    @format.setter
    def format(self, value):
        self._format = _choice('format', value, FORMATS)

    # --------------- derived objects
    def mode_filter(self):
        return ModeFilter(kind=self.filter_kind, w=self.w)

    def beam(self):
        return BeamParams(w=self.w)

    def turbulence(self):
        """
        The turbulence parameters. When ``gamma`` is configured, r0 follows from inverting
        c_a = 2 / (w^2 gamma) with the configured inner and outer scales.

        :rtype: :class:`fsoturb.spectrum.TurbulenceParams`
        """
        params = TurbulenceParams(r0=self.r0, l0=self.l0, L0=self.L0)
        if self.gamma is None:
            return params

        c_a = 2 / (self.w ** 2 * self.gamma)
        r0 = (variance_kernel(self.l0, self.L0, self.mode_filter()) / c_a) ** (3 / 5)
        logger.debug(f'gamma={self.gamma} corresponds to r0={r0:.6g} m')
        return params.with_r0(r0)

    def variances(self):
        return compute_variances(self.turbulence(), self.mode_filter(), gh_coupling=self.gh_coupling)

    def grid(self):
        return GridSpec(extent=self.grid_extent, points=self.grid_points)

    def sim_config(self):
        return SimConfig(order=self.order, samples=self.samples, seed=self.seed, tracking=self.tracking,
                         gh_coupling=self.gh_coupling, engine=self.engine, bins=self.bins,
                         log_bins=self.log_bins, workers=self.workers, grid=self.grid())

    def get_serializable(self):
        """
        Get a JSON serializable structure of the config.

        pathlib.Path is not JSON serializable, so replace it with str

        :return: Dictionary {key:value} with the settings
        :rtype: Dictionary
        """
        ser = {}
        for name in self.setting_names():
            value = getattr(self, name)
            if isinstance(value, pathlib.Path):
                value = str(value)
            ser[name] = value
        return ser

    def set_configs(self, **kwargs):
        # set all the configs one by one
        for k, v in kwargs.items():
            # skip None values, these come from the command line
            if v is None:
                continue

            if k not in self.setting_names():
                raise ConfigError(f'Unknown setting "{k}"')
            setattr(self, k, v)
