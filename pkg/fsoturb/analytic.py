"""
Closed-form probability densities of the first-order transmittance and cross-talk.

With Gaussian tilts the perturbation xi = (w^2/4)(a^2 + b^2) is exponentially distributed with
mean w^2 C_a / 2. The fundamental-mode transmittance exp(-xi) then follows a power law and the
level-N cross-talk xi^N exp(-xi)/N! follows a two-branch density expressed with the Lambert W function.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from fsoturb.errors import DomainError, NumericError, ParameterError


logger = logging.getLogger(__name__)

PRINCIPAL = 'principal'
LOWER = 'lower'
BRANCHES = (PRINCIPAL, LOWER)

BRANCH_POINT = -math.exp(-1)
# below this distance (in p = sqrt(2(e x + 1))) the branch point series is accurate to about 3e-14
_SERIES_ONLY = 1e-2
_EPS = np.finfo(float).eps
_HALLEY_MAX_ITER = 100


def _as_array(x):
    x = np.asarray(x, dtype=float)
    return x, x.ndim == 0


def _branch_point_series(p):
    # W = -1 + p - p^2/3 + 11/72 p^3 - 43/540 p^4 + 769/17280 p^5
    return -1 + p - p ** 2 / 3 + 11 / 72 * p ** 3 - 43 / 540 * p ** 4 + 769 / 17280 * p ** 5


def lambert_w(branch, x):
    """
    Real Lambert W function, the solution of W exp(W) = x.

    The principal branch (W >= -1) is defined for x >= -1/e, the lower branch (W <= -1) for
    -1/e <= x < 0. The value is refined with Halley's iteration from a series guess around the
    branch point and logarithmic guesses elsewhere.

    :param branch: ``principal`` or ``lower``
    :param x: scalar or array
    :return: W(x), same shape as x
    """
    if branch not in BRANCHES:
        raise DomainError(f'Unknown Lambert W branch "{branch}". Supported: {BRANCHES}')
    x, scalar = _as_array(x)
    x = np.atleast_1d(x)
    if np.any(np.isnan(x)) or np.any(x < BRANCH_POINT * (1 + 1e-15)):
        raise DomainError(f'The Lambert W function is not real for x < -1/e ({branch} branch)')
    if branch == LOWER and np.any(x >= 0):
        raise DomainError('The lower branch of the Lambert W function requires -1/e <= x < 0')
    x = np.maximum(x, BRANCH_POINT)

    p = np.sqrt(np.maximum(2 * (math.e * x + 1), 0.0))
    if branch == LOWER:
        p = -p
    near = np.abs(p) < 0.5

    with np.errstate(divide='ignore', invalid='ignore'):
        if branch == PRINCIPAL:
            log_x = np.log(np.where(x > 3, x, 3.0))
            far_guess = np.where(x > 3, log_x - np.log(log_x) + np.log(log_x) / log_x, np.log1p(x))
        else:
            log_x = np.log(-x)
            far_guess = log_x - np.log(-log_x) + np.log(-log_x) / log_x
    w = np.where(near, _branch_point_series(p), far_guess)

    exact = np.abs(p) < _SERIES_ONLY
    # rounding noise of w exp(w) - x, divided by the slope exp(w)(w + 1), is the attainable step size
    floor = 8 * _EPS * (1 + np.abs(w)) / np.maximum(np.abs(w + 1), _SERIES_ONLY)
    done = exact.copy()
    for _ in range(_HALLEY_MAX_ITER):
        ew = np.exp(w)
        residual = w * ew - x
        wp1 = w + 1
        with np.errstate(divide='ignore', invalid='ignore'):
            step = residual / (ew * wp1 - (w + 2) * residual / (2 * wp1))
        step = np.where(done | (residual == 0), 0.0, step)
        w = w - step
        done |= np.abs(step) <= np.maximum(1e-14 * (1 + np.abs(w)), floor)
        if np.all(done):
            break
    else:
        raise NumericError('Halley iteration for the Lambert W function did not converge',
                           diagnostics={'branch': branch, 'max_step': float(np.max(np.abs(step)))})

    return float(w[0]) if scalar else w


def t_n_max(N):
    """
    The largest power that level N can receive from the fundamental mode, N^N exp(-N) / N!,
    reached at xi = N.
    """
    if N < 1:
        raise DomainError(f'The maximal cross-talk is defined for N >= 1, got {N}')
    return math.exp(N * math.log(N) - N - special.gammaln(N + 1))


def xi_roots(N, T):
    """
    The two perturbations with xi^N exp(-xi) / N! = T,

        xi = -N W(-(T N!)^(1/N) / N)

    taken from the principal (xi_1 <= N) and the lower (xi_2 >= N) branch.
    The factorial is handled through log-gamma.

    :param N: power level, N >= 1
    :param T: cross-talk in (0, T_Nmax]
    :return: (xi_1, xi_2)
    """
    if N < 1:
        raise DomainError(f'Cross-talk roots are defined for N >= 1, got {N}')
    T, scalar = _as_array(T)
    if np.any(T <= 0):
        raise DomainError('The cross-talk T has to be positive')
    t_max = t_n_max(N)
    if np.any(T > t_max * (1 + 1e-12)):
        raise DomainError(f'T exceeds the maximal cross-talk T_Nmax={t_max:.6g} of level {N}, no real roots')

    argument = -np.exp((np.log(T) + special.gammaln(N + 1)) / N) / N
    argument = np.maximum(argument, BRANCH_POINT)
    xi_1 = -N * lambert_w(PRINCIPAL, argument)
    xi_2 = -N * lambert_w(LOWER, argument)
    if scalar:
        return float(xi_1), float(xi_2)
    return xi_1, xi_2


@dataclass(frozen=True)
class XiPdf:
    """
    Exponential law of the first-order perturbation xi.

    :param scale: the mean w^2 C_a / 2
    """
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ParameterError(f'The scale of the xi law has to be positive, got {self.scale}')

    @classmethod
    def from_variance(cls, c_a, beam):
        return cls(scale=beam.w ** 2 * c_a / 2)

    def pdf(self, xi):
        return pdf_xi(xi, self.scale)

    def cdf(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.where(xi > 0, -np.expm1(-np.maximum(xi, 0) / self.scale), 0.0)

    def to_power_law(self):
        return PowerLawPdf(gamma=1 / self.scale)


@dataclass(frozen=True)
class PowerLawPdf:
    """
    The first-order law of the fundamental mode transmittance, gamma T^(gamma - 1) on (0, 1].

    :param gamma: the exponent 2 / (w^2 C_a)
    """
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError(f'The power-law exponent has to be positive, got {self.gamma}')

    @classmethod
    def from_variance(cls, c_a, beam):
        return cls(gamma=2 / (beam.w ** 2 * c_a))

    def pdf(self, T):
        return pdf_fundamental(self.gamma, T)

    def cdf(self, T):
        return cdf_fundamental(self.gamma, T)

    @property
    def mean(self):
        return mean_fundamental(self.gamma)

    @property
    def median(self):
        return median_fundamental(self.gamma)


def pdf_xi(xi, scale):
    """
    Density (2/(w^2 C_a)) exp(-2 xi/(w^2 C_a)) of the perturbation, with scale = w^2 C_a / 2.
    """
    xi = np.asarray(xi, dtype=float)
    density = np.where(xi >= 0, np.exp(-np.maximum(xi, 0) / scale) / scale, 0.0)
    return density if density.ndim else float(density)


def pdf_fundamental(gamma, T):
    """
    The power-law density gamma T^(gamma - 1) of the fundamental mode transmittance.

    :param gamma: exponent 2 / (w^2 C_a)
    :param T: transmittance in (0, 1]
    """
    if not gamma > 0:
        raise DomainError(f'The power-law exponent has to be positive, got {gamma}')
    T, scalar = _as_array(T)
    if np.any(T <= 0) or np.any(T > 1):
        raise DomainError('The fundamental mode density is defined for 0 < T <= 1')
    density = gamma * T ** (gamma - 1)
    return float(density) if scalar else density


def cdf_fundamental(gamma, T):
    """
    P(transmittance <= T) = T^gamma, clipped to [0, 1].
    """
    T = np.clip(np.asarray(T, dtype=float), 0.0, 1.0)
    cdf = T ** gamma
    return cdf if cdf.ndim else float(cdf)


def mean_fundamental(gamma):
    return gamma / (gamma + 1)


def median_fundamental(gamma):
    return 2 ** (-1 / gamma)


def sample_fundamental(gamma, n, rng):
    """
    Draw synthetic transmittance values with the inverse CDF, T = U^(1/gamma).

    :param rng: numpy random generator
    :type rng: numpy.random.Generator
    """
    uniform = 1.0 - rng.random(n)
    return uniform ** (1 / gamma)


def crosstalk_derivative(N, xi):
    """
    dT_N/dxi = (1 - xi/N) xi^(N-1) exp(-xi) / (N-1)!
    """
    xi = np.asarray(xi, dtype=float)
    derivative = (1 - xi / N) * np.exp(special.xlogy(N - 1, xi) - xi - special.gammaln(N))
    return derivative if derivative.ndim else float(derivative)


def pdf_crosstalk(N, w2_ca, T):
    """
    Density of the power coupled from the fundamental mode into the level N,

        p(T) = 2 / (w^2 C_a T) * sum_i xi_i / |N - xi_i| exp(-2 xi_i / (w^2 C_a))

    over the two roots of xi^N exp(-xi)/N! = T. The density has an integrable singularity at T_Nmax.

    :param N: power level, N >= 1
    :param w2_ca: the product w^2 C_a
    :param T: cross-talk in (0, T_Nmax)
    """
    if not w2_ca > 0:
        raise DomainError(f'w^2 C_a has to be positive, got {w2_ca}')
    T, scalar = _as_array(T)
    if np.any(T >= t_n_max(N)):
        raise DomainError(f'The level {N} density is only defined below T_Nmax={t_n_max(N):.6g}')
    xi_1, xi_2 = xi_roots(N, T)
    density = 2 / (w2_ca * T) * (xi_1 / np.abs(N - xi_1) * np.exp(-2 * xi_1 / w2_ca)
                                 + xi_2 / np.abs(N - xi_2) * np.exp(-2 * xi_2 / w2_ca))
    return float(density) if scalar else density


def cdf_crosstalk(N, w2_ca, T):
    """
    P(T_N <= T) = P(xi <= xi_1) + P(xi >= xi_2), equal to 1 from T_Nmax on.
    """
    T = np.asarray(T, dtype=float)
    scalar = T.ndim == 0
    T = np.atleast_1d(T)
    scale = w2_ca / 2
    t_max = t_n_max(N)
    cdf = np.where(T >= t_max, 1.0, 0.0)
    inside = (T > 0) & (T < t_max)
    if np.any(inside):
        xi_1, xi_2 = xi_roots(N, T[inside])
        cdf[inside] = -np.expm1(-xi_1 / scale) + np.exp(-xi_2 / scale)
    return float(cdf[0]) if scalar else cdf
