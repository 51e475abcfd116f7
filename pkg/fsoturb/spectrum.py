"""
The von Karman phase power spectrum and the variances of the phase distortion coefficients.

Spatial frequencies are given in cycles per metre throughout. The (2 pi)^2 and (2 pi)^4 factors that
turn the frequency moments into variances of the derivatives (rad/m and rad/m^2) are folded into
the prefactors of :func:`compute_variances`.
"""
import functools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from fsoturb.errors import ParameterError, DomainError, NumericError


logger = logging.getLogger(__name__)

INTENSITY_SPECTRUM = 'intensity-spectrum'
FIELD_SPECTRUM = 'field-spectrum'
FILTER_KINDS = (INTENSITY_SPECTRUM, FIELD_SPECTRUM)

INDEPENDENT = 'independent'
CORRELATED = 'correlated'
GH_COUPLINGS = (INDEPENDENT, CORRELATED)

# relative tolerance requested from every quadrature segment
QUAD_EPSREL = 1e-10
# acceptable relative error of a whole moment
QUAD_MAX_RELERR = 1e-8


def vartheta_constant():
    """
    The dimensionless constant of the von Karman phase spectrum,

        2 sqrt(2) G(11/6)^2 / pi^(11/3) * [3/5 G(6/5)]^(5/6)  (about 0.0229)

    :return: the constant
    :rtype: float
    """
    return float(2 * math.sqrt(2) * special.gamma(11 / 6) ** 2 / math.pi ** (11 / 3)
                 * (3 / 5 * special.gamma(6 / 5)) ** (5 / 6))


VARTHETA = vartheta_constant()


def _check_length(name, value):
    if value is None or not np.isfinite(value) or value <= 0:
        raise ParameterError(f'{name} has to be a positive finite length in metres, got {value}')


@dataclass(frozen=True)
class TurbulenceParams:
    """
    Turbulence of the whole channel.

    :param r0: Fried parameter (m)
    :param l0: inner scale (m)
    :param L0: outer scale (m), larger than the inner scale
    """
    r0: float
    l0: float
    L0: float

    def __post_init__(self):
        _check_length('r0', self.r0)
        _check_length('l0', self.l0)
        _check_length('L0', self.L0)
        if self.L0 <= self.l0:
            raise ParameterError(f'The outer scale L0={self.L0} has to be larger than the inner scale l0={self.l0}')

    def with_r0(self, r0):
        return TurbulenceParams(r0=r0, l0=self.l0, L0=self.L0)


@dataclass(frozen=True)
class BeamParams:
    """
    :param w: waist of the fundamental Gaussian mode (m)
    """
    w: float

    def __post_init__(self):
        _check_length('w', self.w)


@dataclass(frozen=True)
class ModeFilter:
    """
    The spatial power spectrum |F(f)|^2 of the fundamental mode, normalised to F(0) = 1.

    ``intensity-spectrum`` takes the Fourier transform of the intensity profile exp(-2 r^2 / w^2),
    ``field-spectrum`` the transform of the field exp(-r^2 / w^2).
    """
    kind: str = INTENSITY_SPECTRUM
    w: float = 1e-3

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ParameterError(f'Unknown mode filter "{self.kind}". Supported filters: {FILTER_KINDS}')
        _check_length('w', self.w)

    @property
    def gaussian_rate(self):
        """
        The rate c of |F(f)|^2 = exp(-c f^2), in m^2.
        """
        if self.kind == INTENSITY_SPECTRUM:
            return math.pi ** 2 * self.w ** 2
        return 2 * math.pi ** 2 * self.w ** 2

    def value(self, f):
        return mode_filter_value(self, f)


@dataclass(frozen=True)
class DistortionVariances:
    """
    Variances of the Taylor coefficients of the phase screen.

    c_a is the variance of a and b in (rad/m)^2, c_g the variance of g and h and c_s the variance of s,
    both in (rad/m^2)^2. When ``gh_coupling`` is ``correlated``, g and h share the covariance c_s.
    """
    c_a: float
    c_g: float
    c_s: float
    gh_coupling: str = INDEPENDENT
    abserr: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ('c_a', 'c_g', 'c_s'):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ParameterError(f'The variance {name} has to be finite and non-negative, got {value}')
        if self.gh_coupling not in GH_COUPLINGS:
            raise ParameterError(f'Unknown g/h coupling "{self.gh_coupling}". Supported: {GH_COUPLINGS}')

    def covariance_gh(self):
        """
        :return: the 2x2 covariance matrix of (g, h)
        :rtype: numpy.ndarray
        """
        cov = self.c_s if self.gh_coupling == CORRELATED else 0.0
        return np.array([[self.c_g, cov], [cov, self.c_g]])

    def with_coupling(self, gh_coupling):
        return DistortionVariances(self.c_a, self.c_g, self.c_s, gh_coupling, dict(self.abserr))


def phase_psd(params, f):
    """
    The von Karman phase power spectrum

        W(f) = vartheta r0^(-5/3) (f^2 + L0^(-2))^(-11/6) exp(-l0^2 f^2)

    :param params: turbulence
    :type params: :class:`TurbulenceParams`
    :param f: spatial frequency in cycles/m, scalar or array, f >= 0
    :return: spectral density in rad^2 m^2
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DomainError('The spatial frequency has to be non-negative')
    psd = (VARTHETA * params.r0 ** (-5 / 3)
           * (f ** 2 + params.L0 ** -2) ** (-11 / 6)
           * np.exp(-params.l0 ** 2 * f ** 2))
    return psd if psd.ndim else float(psd)


def mode_filter_value(mode_filter, f):
    """
    |F(f)|^2 of the fundamental mode, equal to 1 at f = 0 and monotonically decreasing.

    :param mode_filter: the filter
    :type mode_filter: :class:`ModeFilter`
    :param f: spatial frequency in cycles/m
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DomainError('The spatial frequency has to be non-negative')
    value = np.exp(-mode_filter.gaussian_rate * f ** 2)
    return value if value.ndim else float(value)


def _segments(l0, L0, mode_filter):
    # the Gaussian factor exp(-(l0^2 + c) f^2) is exp(-100) at f_max
    f_max = 10 / math.sqrt(l0 ** 2 + mode_filter.gaussian_rate)
    knee = 1 / L0
    if knee >= f_max:
        return np.array([0.0, f_max])
    n_decades = max(1, int(np.ceil(np.log10(f_max / knee))))
    return np.concatenate([[0.0], np.geomspace(knee, f_max, n_decades + 1)])


@functools.lru_cache(maxsize=256)
def _unit_moment(l0, L0, kind, w, k, epsrel):
    """
    The moment integral for r0 = 1 m. It is evaluated segment by segment between 0, 1/L0 and
    decades up to f_max so that the adaptive scheme sees the knee of the spectrum.
    """
    mode_filter = ModeFilter(kind=kind, w=w)
    rate = l0 ** 2 + mode_filter.gaussian_rate
    power = 2 * k + 1

    def integrand(f):
        return f ** power * (f * f + L0 ** -2) ** (-11 / 6) * math.exp(-rate * f * f)

    edges = _segments(l0, L0, mode_filter)
    total, abserr, messages = 0.0, 0.0, []
    for lo, hi in zip(edges[:-1], edges[1:]):
        result = integrate.quad(integrand, lo, hi, epsabs=0, epsrel=epsrel, limit=200, full_output=1)
        total += result[0]
        abserr += result[1]
        if len(result) > 3:
            messages.append(f'[{lo:.3g}, {hi:.3g}] {result[3].splitlines()[0]}')

    if not np.isfinite(total) or total <= 0 or messages or abserr > QUAD_MAX_RELERR * total:
        raise NumericError(f'The spectral moment k={k} did not converge',
                           diagnostics={'value': total, 'abserr': abserr, 'segments': len(edges) - 1,
                                        'messages': messages})
    return VARTHETA * total, VARTHETA * abserr


def spectral_moment(params, mode_filter, k, epsrel=QUAD_EPSREL):
    """
    The filtered frequency moment

        int_0^inf f^(2k+1) W(f) |F(f)|^2 df

    The integrals of higher order Taylor coefficients follow the same family, e.g. k=1 gives the
    tilt variance and k=2 the curvature variances.

    :param params: turbulence
    :param mode_filter: the mode filter
    :param k: moment order, k >= 0
    :param epsrel: relative tolerance of each quadrature segment
    :return: (value, absolute error estimate)
    :rtype: tuple
    """
    if k < 0 or int(k) != k:
        raise DomainError(f'The moment order has to be a non-negative integer, got {k}')
    value, abserr = _unit_moment(params.l0, params.L0, mode_filter.kind, mode_filter.w, int(k), epsrel)
    scale = params.r0 ** (-5 / 3)
    return value * scale, abserr * scale


def variance_kernel(l0, L0, mode_filter):
    """
    The r0-independent kernel K such that c_a = r0^(-5/3) K.

    :return: K in (rad/m)^2 m^(5/3)
    """
    unit = TurbulenceParams(r0=1.0, l0=l0, L0=L0)
    moment, _ = spectral_moment(unit, mode_filter, 1)
    return 4 * math.pi ** 3 * moment


def compute_variances(params, mode_filter, gh_coupling=INDEPENDENT, epsrel=QUAD_EPSREL):
    """
    Variances of the tilts (a, b) and of the curvatures (g, h, s):

        c_a = 4 pi^3  int f^3 W |F|^2 df
        c_g = 12 pi^5 int f^5 W |F|^2 df
        c_s = 4 pi^5  int f^5 W |F|^2 df

    The f^5 moment is evaluated once so c_g = 3 c_s holds exactly.

    :param params: turbulence
    :type params: :class:`TurbulenceParams`
    :param mode_filter: the spectrum of the fundamental mode
    :type mode_filter: :class:`ModeFilter`
    :param gh_coupling: ``independent`` or ``correlated``
    :rtype: :class:`DistortionVariances`
    """
    start_time = time.perf_counter()
    tilt, tilt_err = spectral_moment(params, mode_filter, 1, epsrel=epsrel)
    curvature, curvature_err = spectral_moment(params, mode_filter, 2, epsrel=epsrel)
    c_s = 4 * math.pi ** 5 * curvature
    variances = DistortionVariances(
        c_a=4 * math.pi ** 3 * tilt,
        c_g=3 * c_s,
        c_s=c_s,
        gh_coupling=gh_coupling,
        abserr={'c_a': 4 * math.pi ** 3 * tilt_err,
                'c_g': 12 * math.pi ** 5 * curvature_err,
                'c_s': 4 * math.pi ** 5 * curvature_err})
    logger.debug(f'Variances for {params} with {mode_filter.kind}: c_a={variances.c_a:.6g}, '
                 f'c_g={variances.c_g:.6g}, c_s={variances.c_s:.6g} '
                 f'({time.perf_counter() - start_time:.3f} s)')
    return variances


def gamma_from_params(params, beam, mode_filter):
    """
    The exponent of the first-order transmittance law, 2 / (w^2 c_a).
    """
    moment, _ = spectral_moment(params, mode_filter, 1)
    return 2 / (beam.w ** 2 * 4 * math.pi ** 3 * moment)
