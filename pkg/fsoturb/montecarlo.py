"""
Monte Carlo simulation of the transmittance and cross-talk statistics.

The random numbers come from counter-based Philox streams: the sample index selects a fixed block
of the counter space and a row within it, so a sample is a function of the seed and its index only.
It does not depend on the order in which samples are evaluated nor on how many workers evaluate them.
"""
import concurrent.futures
import logging
import math
import pathlib
import time
from dataclasses import dataclass, field

import numpy as np

from fsoturb.errors import ParameterError
from fsoturb.modes import (DistortionCoeffs, PhaseScreen, GridSpec, FUNDAMENTAL, FIRST, ORDERS,
                           t00_first_order, t00_second_order, xi, crosstalk_first_order,
                           grid_overlap, grid_level_crosstalk)
from fsoturb.spectrum import INDEPENDENT, GH_COUPLINGS


logger = logging.getLogger(__name__)

CLOSED_FORM = 'closed-form'
GRID = 'grid'
ENGINES = (CLOSED_FORM, GRID)

MAX_SEED = 2 ** 64 - 1
# samples sharing one Philox counter block, also the unit of work handed to a worker
BLOCK_SIZE = 4096


@dataclass(frozen=True)
class SimConfig:
    """
    Settings of one simulation.

    :param order: ``first`` (tilts only) or ``second`` (tilts and curvatures)
    :param samples: number of phase screen realisations
    :param seed: unsigned 64-bit seed
    :param tracking: ideal tilt tracking, a = b = 0 in every realisation
    :param gh_coupling: ``independent`` or ``correlated`` curvatures g and h
    :param engine: ``closed-form`` or ``grid`` overlap integrals
    :param bins: number of histogram bins on [0, 1]
    :param log_bins: log-spaced bins that resolve the mass close to T = 0
    :param workers: processes used for the sampling, results do not depend on it
    :param grid: the grid of the ``grid`` engine
    """
    order: str = FIRST
    samples: int = 100_000
    seed: int = 0
    tracking: bool = False
    gh_coupling: str = INDEPENDENT
    engine: str = CLOSED_FORM
    bins: int = 100
    log_bins: bool = False
    workers: int = 1
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        if self.order not in ORDERS:
            raise ParameterError(f'Unknown order "{self.order}". Supported: {ORDERS}')
        if self.engine not in ENGINES:
            raise ParameterError(f'Unknown engine "{self.engine}". Supported: {ENGINES}')
        if self.gh_coupling not in GH_COUPLINGS:
            raise ParameterError(f'Unknown g/h coupling "{self.gh_coupling}". Supported: {GH_COUPLINGS}')
        if int(self.samples) != self.samples or self.samples < 1:
            raise ParameterError(f'At least one sample is needed, got {self.samples}')
        if int(self.seed) != self.seed or not 0 <= self.seed <= MAX_SEED:
            raise ParameterError(f'The seed has to be an unsigned 64-bit integer, got {self.seed}')
        if self.bins < 1:
            raise ParameterError(f'The histogram needs at least one bin, got {self.bins}')
        if self.workers < 1:
            raise ParameterError(f'At least one worker is needed, got {self.workers}')


@dataclass(frozen=True)
class EmpiricalPdf:
    """
    Histogram density estimate of values in [0, 1].
    """
    edges: np.ndarray
    density: np.ndarray
    count: int

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def mass(self):
        return float(np.sum(self.density * self.widths))

    def rows(self):
        """
        :return: (bin_lo, bin_hi, density) for every bin
        """
        return list(zip(self.edges[:-1], self.edges[1:], self.density))


@dataclass
class SimulationResult:
    """
    The outcome of :func:`simulate_transmittance`.
    """
    pdf: EmpiricalPdf
    samples: np.ndarray
    config: SimConfig

    @property
    def tracking(self):
        return self.config.tracking

    @property
    def mean(self):
        return float(np.mean(self.samples))

    @property
    def std_error(self):
        if len(self.samples) < 2:
            return float('nan')
        return float(np.std(self.samples, ddof=1) / math.sqrt(len(self.samples)))

    def write_samples(self, path):
        """
        Save the raw samples, one value per line.
        """
        path = pathlib.Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w') as out:
            out.writelines(f'{value:.17g}\n' for value in self.samples)
        logger.info(f'Saved {len(self.samples)} raw samples to {path}')


@dataclass
class CrosstalkResult:
    """
    The outcome of :func:`simulate_crosstalk`. ``samples`` has one column per power level 0..n_max.
    """
    pdfs: list
    samples: np.ndarray
    config: SimConfig

    @property
    def n_max(self):
        return self.samples.shape[1] - 1

    @property
    def means(self):
        return self.samples.mean(axis=0)


def _block_normals(seed, block):
    # the block number lives in the third counter word, leaving 2^128 draws per block
    counter = np.array([0, 0, block, 0], dtype=np.uint64)
    generator = np.random.Generator(np.random.Philox(key=seed, counter=counter))
    return generator.standard_normal((BLOCK_SIZE, 5))


def _cholesky_gh(variances):
    c_g = variances.c_g
    if c_g == 0:
        return np.zeros((2, 2))
    cov = variances.covariance_gh()[0, 1]
    return np.array([[math.sqrt(c_g), 0.0],
                     [cov / math.sqrt(c_g), math.sqrt(max(c_g - cov * cov / c_g, 0.0))]])


def sample_coeffs_batch(variances, config, start, stop):
    """
    Distortion coefficients of the samples start..stop-1, as arrays.

    Five standard normals are drawn for every sample regardless of the order and the tracking,
    so switching these options keeps the remaining coefficients of a sample unchanged.

    :rtype: :class:`DistortionCoeffs` with array fields
    """
    first_block, last_block = start // BLOCK_SIZE, max(stop - 1, start) // BLOCK_SIZE
    normals = np.concatenate([_block_normals(config.seed, block) for block in range(first_block, last_block + 1)])
    offset = first_block * BLOCK_SIZE
    normals = normals[start - offset:stop - offset]
    tilt = math.sqrt(variances.c_a)
    a = tilt * normals[:, 0]
    b = tilt * normals[:, 1]
    if config.tracking:
        a = np.zeros_like(a)
        b = np.zeros_like(b)

    if config.order == FIRST:
        zeros = np.zeros(len(normals))
        return DistortionCoeffs(a=a, b=b, g=zeros, h=zeros.copy(), s=zeros.copy())

    chol = _cholesky_gh(variances.with_coupling(config.gh_coupling))
    g = chol[0, 0] * normals[:, 2]
    h = chol[1, 0] * normals[:, 2] + chol[1, 1] * normals[:, 3]
    s = math.sqrt(variances.c_s) * normals[:, 4]
    return DistortionCoeffs(a=a, b=b, g=g, h=h, s=s)


def sample_coeffs(variances, config, index):
    """
    The distortion coefficients of one sample. a and b are N(0, c_a), s is N(0, c_s) and (g, h)
    have the marginal variance c_g with covariance c_s when the coupling is ``correlated``.
    The result depends on (seed, index) only.

    :param variances: the coefficient variances
    :type variances: :class:`DistortionVariances`
    :param config: the simulation settings
    :type config: :class:`SimConfig`
    :param index: sample ordinal
    :rtype: :class:`DistortionCoeffs`
    """
    return _unbatch(sample_coeffs_batch(variances, config, index, index + 1), 0)


def _unbatch(coeffs, i):
    return DistortionCoeffs(a=float(coeffs.a[i]), b=float(coeffs.b[i]), g=float(coeffs.g[i]),
                            h=float(coeffs.h[i]), s=float(coeffs.s[i]))


def _transmittance_chunk(variances, beam, config, start, stop):
    coeffs = sample_coeffs_batch(variances, config, start, stop)
    if config.engine == GRID:
        return np.array([grid_overlap(FUNDAMENTAL, FUNDAMENTAL, beam,
                                      PhaseScreen(_unbatch(coeffs, i), config.order), config.grid)
                         for i in range(stop - start)])
    if config.order == FIRST:
        return t00_first_order(beam, coeffs.a, coeffs.b)
    return t00_second_order(beam, coeffs)


def _crosstalk_chunk(variances, beam, config, n_max, start, stop):
    coeffs = sample_coeffs_batch(variances, config, start, stop)
    if config.order == FIRST and config.engine == CLOSED_FORM:
        perturbation = xi(beam, coeffs)
        return np.column_stack([crosstalk_first_order(level, perturbation) for level in range(n_max + 1)])
    return np.array([grid_level_crosstalk(beam, PhaseScreen(_unbatch(coeffs, i), config.order), n_max,
                                          config.grid)
                     for i in range(stop - start)])


def _chunks(samples):
    return [(start, min(start + BLOCK_SIZE, samples)) for start in range(0, samples, BLOCK_SIZE)]


def _run_chunks(function, config, *args):
    chunks = _chunks(config.samples)
    if config.workers == 1 or len(chunks) == 1:
        parts = [function(*args, start, stop) for start, stop in chunks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as executor:
            futures = [executor.submit(function, *args, start, stop) for start, stop in chunks]
            # keep the index order whatever the completion order
            parts = [future.result() for future in futures]
    return np.concatenate(parts)


def build_pdf(samples, bins=100, log_bins=False, min_edge=1e-4):
    """
    Histogram density on [0, 1], normalised so that sum(density * width) = 1.

    :param samples: values in [0, 1]
    :param bins: number of bins
    :param log_bins: use one bin [0, min_edge] followed by log-spaced bins up to 1
    :rtype: :class:`EmpiricalPdf`
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) == 0:
        raise ParameterError('Cannot build a density from no samples')
    if np.any(samples < 0) or np.any(samples > 1):
        raise ParameterError('Transmittance samples have to lie in [0, 1]')
    if log_bins:
        edges = np.concatenate([[0.0], np.geomspace(min_edge, 1.0, bins)])
    else:
        edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    density = counts / (len(samples) * np.diff(edges))
    return EmpiricalPdf(edges=edges, density=density, count=len(samples))


def simulate_transmittance(variances, beam, config):
    """
    Fundamental mode transmittance statistics.

    Every sample draws its coefficients (with a = b = 0 under tracking) and evaluates the
    transmittance with the first- or second-order closed form or with the grid overlap integral.

    :param variances: the coefficient variances
    :type variances: :class:`DistortionVariances`
    :param beam: the beam waist
    :param config: the simulation settings
    :type config: :class:`SimConfig`
    :rtype: :class:`SimulationResult`
    """
    start_time = time.perf_counter()
    samples = np.clip(_run_chunks(_transmittance_chunk, config, variances, beam, config), 0.0, 1.0)
    pdf = build_pdf(samples, bins=config.bins, log_bins=config.log_bins)
    result = SimulationResult(pdf=pdf, samples=samples, config=config)
    logger.info(f'Simulated {config.samples} {config.order}-order samples '
                f'({config.engine}, tracking={config.tracking}): mean T = {result.mean:.5f} '
                f'+- {result.std_error:.5f} ({time.perf_counter() - start_time:.1f} s)')
    return result


def simulate_crosstalk(variances, beam, config, n_max):
    """
    Cross-talk from the fundamental mode into the power levels 0..n_max.

    First-order closed-form runs use T_N = xi^N exp(-xi)/N!, anything else sums the grid overlaps
    of the modes of each level.

    :rtype: :class:`CrosstalkResult`
    """
    if n_max < 1:
        raise ParameterError(f'Cross-talk needs at least the level 1, got n_max={n_max}')
    start_time = time.perf_counter()
    samples = np.clip(_run_chunks(_crosstalk_chunk, config, variances, beam, config, n_max), 0.0, 1.0)
    pdfs = [build_pdf(samples[:, level], bins=config.bins, log_bins=config.log_bins)
            for level in range(n_max + 1)]
    result = CrosstalkResult(pdfs=pdfs, samples=samples, config=config)
    logger.info(f'Simulated cross-talk into levels 0..{n_max} with {config.samples} samples '
                f'({time.perf_counter() - start_time:.1f} s)')
    return result
