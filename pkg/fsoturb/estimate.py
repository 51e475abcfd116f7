"""
Fried parameter estimation from measured fundamental mode transmittance.

The measured samples are fitted with the first-order power law gamma T^(gamma - 1), the exponent
gives the tilt variance c_a = 2 / (w^2 gamma), and the a-priori inner and outer scales turn c_a into r0.
"""
import csv
import logging
import math
import pathlib
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, stats

from fsoturb.errors import DataError, DegenerateDataError, ParameterError
from fsoturb.spectrum import variance_kernel


logger = logging.getLogger(__name__)

MIN_SAMPLES = 100
# transmittance slightly above 1 is accepted as detector noise and clipped
UPPER_TOLERANCE = 1e-9


@dataclass(frozen=True)
class TransmittanceSeries:
    """
    Measured transmittance samples in (0, 1].

    :param samples: the retained samples
    :param rejected_count: dropouts (T = 0) that were excluded
    :param source: where the samples came from, e.g. the file name
    :param sample_rate: acquisition rate in Hz, if known
    """
    samples: np.ndarray
    rejected_count: int = 0
    source: Optional[str] = None
    sample_rate: Optional[float] = None

    @classmethod
    def from_values(cls, values, source=None, sample_rate=None):
        """
        Validate raw values. Negative, non-finite or values above 1 make the data unusable,
        exact zeros are dropouts and are excluded with a count.
        """
        values = np.asarray(values, dtype=float)
        invalid = ~np.isfinite(values) | (values < 0) | (values > 1 + UPPER_TOLERANCE)
        if np.any(invalid):
            raise DataError(f'{int(invalid.sum())} transmittance values lie outside [0, 1]',
                            offending_count=int(invalid.sum()))
        dropouts = values == 0
        if np.any(dropouts):
            logger.warning(f'Excluding {int(dropouts.sum())} zero transmittance samples (dropouts)')
        retained = np.minimum(values[~dropouts], 1.0)
        return cls(samples=retained, rejected_count=int(dropouts.sum()), source=source, sample_rate=sample_rate)

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class PowerLawFit:
    gamma: float
    std_error: float
    n: int
    method: str = 'mle'


@dataclass(frozen=True)
class FriedEstimate:
    """
    The fitted exponent, the tilt variance and the Fried parameter with its confidence interval.
    """
    gamma: float
    gamma_std_error: float
    c_a: float
    r0: float
    ci_lo: float
    ci_hi: float
    confidence: float
    n: int
    rejected_count: int = 0

    def get_serializable(self):
        return {'gamma': self.gamma, 'gamma_std_error': self.gamma_std_error, 'c_a': self.c_a, 'r0': self.r0,
                'ci_lo': self.ci_lo, 'ci_hi': self.ci_hi, 'confidence': self.confidence, 'n': self.n,
                'rejected_count': self.rejected_count}


def _parse_float(text):
    try:
        return float(text)
    except ValueError:
        return None


def _decoded_lines(path):
    with open(path, 'rb') as csv_file:
        for line_number, raw in enumerate(csv_file, start=1):
            try:
                yield raw.decode('utf-8-sig')
            except UnicodeDecodeError as error:
                raise DataError(f'{path}:{line_number}: not UTF-8 text ({error.reason})',
                                offending_count=1, line=line_number)


def load_series(path, column=None):
    """
    Read transmittance samples from a CSV file. Each row holds either one transmittance value
    or a ``time,transmittance`` pair, in which case the time column is ignored. A non-numeric row
    before the first value is treated as a header, lines starting with # are comments.

    :param path: the CSV file
    :param column: the 0-based column with the transmittance, by default the last one
    :rtype: :class:`TransmittanceSeries`
    """
    path = pathlib.Path(path)
    values = []
    header = None
    reader = csv.reader(_decoded_lines(path))
    for row in reader:
        line_number = reader.line_num
        if not row or not ''.join(row).strip() or row[0].lstrip().startswith('#'):
            continue
        if len(row) > 2 and column is None:
            raise DataError(f'{path}:{line_number}: expected one value or a "time,transmittance" pair',
                            offending_count=1, line=line_number)
        index = len(row) - 1 if column is None else column
        value = _parse_float(row[index]) if index < len(row) else None
        if value is None:
            if not values and header is None:
                header = row
                logger.debug(f'Skipping the header of {path}: {row}')
                continue
            raise DataError(f'{path}:{line_number}: malformed row {row}', offending_count=1, line=line_number)
        values.append(value)

    logger.info(f'Loaded {len(values)} transmittance samples from {path}')
    return TransmittanceSeries.from_values(values, source=str(path))


def _validated_samples(series):
    samples = np.asarray(series.samples if isinstance(series, TransmittanceSeries) else series, dtype=float)
    invalid = ~np.isfinite(samples) | (samples <= 0) | (samples > 1 + UPPER_TOLERANCE)
    if np.any(invalid):
        raise DataError(f'{int(invalid.sum())} samples are outside (0, 1]', offending_count=int(invalid.sum()))
    if len(samples) < MIN_SAMPLES:
        raise DataError(f'At least {MIN_SAMPLES} valid samples are needed, got {len(samples)}',
                        offending_count=MIN_SAMPLES - len(samples))
    return np.minimum(samples, 1.0)


def fit_power_law(series):
    """
    Maximum likelihood exponent of the density gamma T^(gamma - 1),

        gamma = n / (-sum ln T_i)   with standard error gamma / sqrt(n)

    :param series: the measured samples
    :type series: :class:`TransmittanceSeries` or array
    :rtype: :class:`PowerLawFit`
    """
    samples = _validated_samples(series)
    log_sum = -np.sum(np.log(samples))
    if log_sum <= 0:
        raise DegenerateDataError('No measurable turbulence: every transmittance sample equals 1')
    gamma = len(samples) / log_sum
    fit = PowerLawFit(gamma=gamma, std_error=gamma / math.sqrt(len(samples)), n=len(samples))
    logger.debug(f'Power law MLE: gamma={fit.gamma:.6g} +- {fit.std_error:.2g} from {fit.n} samples')
    return fit


def fit_power_law_histogram(series, bins=50):
    """
    Least-squares fit of gamma T^(gamma - 1) to the histogram density of the samples,
    the way a power law is fitted to a plotted distribution.

    :rtype: :class:`PowerLawFit`
    """
    samples = _validated_samples(series)
    density, edges = np.histogram(samples, bins=bins, range=(0, 1), density=True)
    centres = (edges[:-1] + edges[1:]) / 2
    initial = fit_power_law(samples).gamma
    params, covariance = optimize.curve_fit(lambda T, gamma: gamma * T ** (gamma - 1), centres, density,
                                            p0=[initial], bounds=(1e-6, np.inf))
    return PowerLawFit(gamma=float(params[0]), std_error=float(np.sqrt(covariance[0, 0])), n=len(samples),
                       method='histogram')


def c_a_from_gamma(gamma, beam):
    """
    The tilt variance 2 / (w^2 gamma) in (rad/m)^2.
    """
    if not gamma > 0:
        raise ParameterError(f'The power-law exponent has to be positive, got {gamma}')
    return 2 / (beam.w ** 2 * gamma)


def r0_from_c_a(c_a, l0, L0, mode_filter):
    """
    Invert c_a = r0^(-5/3) K(l0, L0, filter) for the Fried parameter, r0 = (K / c_a)^(3/5).

    :param c_a: tilt variance in (rad/m)^2
    :param l0: inner scale (m)
    :param L0: outer scale (m)
    :param mode_filter: the mode filter used for the variances
    :return: r0 in m
    """
    if not c_a > 0:
        raise ParameterError(f'The tilt variance has to be positive, got {c_a}')
    kernel = variance_kernel(l0, L0, mode_filter)
    return (kernel / c_a) ** (3 / 5)


def estimate_r0(series, beam, l0, L0, mode_filter, confidence=0.95):
    """
    The full pipeline: power-law MLE, tilt variance and Fried parameter.

    The confidence interval uses the normal approximation of ln(gamma), whose standard error is
    1/sqrt(n), propagated through r0 ~ gamma^(3/5).

    :rtype: :class:`FriedEstimate`
    """
    if not 0 < confidence < 1:
        raise ParameterError(f'The confidence level has to lie in (0, 1), got {confidence}')
    fit = fit_power_law(series)
    c_a = c_a_from_gamma(fit.gamma, beam)
    r0 = r0_from_c_a(c_a, l0, L0, mode_filter)
    half_width = 3 / 5 * stats.norm.ppf((1 + confidence) / 2) / math.sqrt(fit.n)
    rejected = series.rejected_count if isinstance(series, TransmittanceSeries) else 0
    estimate = FriedEstimate(gamma=fit.gamma, gamma_std_error=fit.std_error, c_a=c_a, r0=r0,
                             ci_lo=r0 * math.exp(-half_width), ci_hi=r0 * math.exp(half_width),
                             confidence=confidence, n=fit.n, rejected_count=rejected)
    logger.info(f'Estimated r0 = {r0 * 1e3:.4g} mm '
                f'({confidence:.0%} CI {estimate.ci_lo * 1e3:.4g}-{estimate.ci_hi * 1e3:.4g} mm) '
                f'from {fit.n} samples')
    return estimate
