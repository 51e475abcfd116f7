"""
Gaussian modes, their power levels and the overlap-integral transmittance.

The closed forms (first-order loss, first-order cross-talk per power level, second-order loss) are
complemented by a numerical grid evaluation of the overlap integral that works for any pair of modes
and any polynomial phase screen.
"""
import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from fsoturb.errors import ParameterError, DomainError, AccuracyError


logger = logging.getLogger(__name__)

HERMITE_GAUSS = 'hermite-gauss'
LAGUERRE_GAUSS = 'laguerre-gauss'
BASES = (HERMITE_GAUSS, LAGUERRE_GAUSS)

FIRST = 'first'
SECOND = 'second'
ORDERS = (FIRST, SECOND)


@dataclass(frozen=True)
class DistortionCoeffs:
    """
    One realisation of the phase screen

        phi(x, y) = phi0 + a x + b y + g x^2/2 + h y^2/2 + s x y

    a, b in rad/m and g, h, s in rad/m^2. Fields may also hold equally shaped arrays,
    one entry per realisation.
    """
    a: float = 0.0
    b: float = 0.0
    g: float = 0.0
    h: float = 0.0
    s: float = 0.0
    phi0: float = 0.0

    def __post_init__(self):
        for name in ('a', 'b', 'g', 'h', 's', 'phi0'):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ParameterError(f'The distortion coefficient {name} is not finite')

    def conjugate(self):
        return DistortionCoeffs(a=-self.a, b=-self.b, g=-self.g, h=-self.h, s=-self.s, phi0=-self.phi0)


@dataclass(frozen=True)
class ModeIndex:
    """
    A Hermite-Gaussian mode HG(m, n) or a Laguerre-Gaussian mode LG(p, l).
    """
    basis: str
    indices: tuple

    def __post_init__(self):
        object.__setattr__(self, 'indices', tuple(self.indices))
        if self.basis not in BASES:
            raise ParameterError(f'Unknown mode basis "{self.basis}". Supported: {BASES}')
        if len(self.indices) != 2 or any(int(i) != i for i in self.indices):
            raise ParameterError(f'A mode needs two integer indices, got {self.indices}')
        first, second = self.indices
        if first < 0 or (self.basis == HERMITE_GAUSS and second < 0):
            raise ParameterError(f'Negative mode index in {self}')

    @classmethod
    def hg(cls, m, n):
        return cls(HERMITE_GAUSS, (m, n))

    @classmethod
    def lg(cls, p, l):
        return cls(LAGUERRE_GAUSS, (p, l))

    def __repr__(self):
        prefix = 'HG' if self.basis == HERMITE_GAUSS else 'LG'
        return f'{prefix}{self.indices[0]},{self.indices[1]}'


FUNDAMENTAL = ModeIndex.hg(0, 0)


@dataclass(frozen=True)
class PhaseScreen:
    """
    The random phase mask that stands in for the whole channel.
    A first-order screen carries tilts only.
    """
    coeffs: DistortionCoeffs
    order: str = SECOND

    def __post_init__(self):
        if self.order not in ORDERS:
            raise ParameterError(f'Unknown screen order "{self.order}". Supported: {ORDERS}')
        if self.order == FIRST and any(np.any(getattr(self.coeffs, c) != 0) for c in ('g', 'h', 's')):
            raise ParameterError('A first-order phase screen cannot have curvature terms (g, h, s)')

    def conjugate(self):
        return PhaseScreen(self.coeffs.conjugate(), self.order)


@dataclass(frozen=True)
class GridSpec:
    """
    Square midpoint grid for the overlap integrals.

    :param extent: half width of the grid in units of the beam waist
    :param points: number of points along each axis
    :param max_phase_step: the largest phase increment (rad) allowed between neighbouring points
    """
    extent: float = 5.0
    points: int = 512
    max_phase_step: float = 1.0

    def __post_init__(self):
        if self.extent < 5:
            raise AccuracyError(f'The grid has to extend to at least 5 beam waists, got {self.extent}',
                                diagnostics={'extent': self.extent})
        if self.points < 256:
            raise AccuracyError(f'The grid needs at least 256x256 points, got {self.points}',
                                diagnostics={'points': self.points})

    def step(self, beam):
        return 2 * self.extent * beam.w / self.points


def power_level(mode):
    """
    The power level N = m + n (HG) or N = 2p + |l| (LG). Level N holds N + 1 modes.
    """
    first, second = mode.indices
    if mode.basis == HERMITE_GAUSS:
        return first + second
    return 2 * first + abs(second)


def modes_in_level(N, basis=HERMITE_GAUSS):
    """
    :return: the N + 1 modes of the power level N
    :rtype: list of :class:`ModeIndex`
    """
    if N < 0:
        raise DomainError(f'Power levels start at 0, got {N}')
    if basis == HERMITE_GAUSS:
        return [ModeIndex.hg(m, N - m) for m in range(N, -1, -1)]
    return [ModeIndex.lg((N - abs(l)) // 2, l) for l in range(-N, N + 1, 2)]


def xi(beam, coeffs):
    """
    The dimensionless first-order perturbation (w^2/4)(a^2 + b^2).
    """
    return beam.w ** 2 / 4 * (np.square(coeffs.a) + np.square(coeffs.b))


def t00_first_order(beam, a, b):
    """
    Fundamental mode transmittance under tilts only, exp(-(w^2/4)(a^2 + b^2)).
    """
    return np.exp(-beam.w ** 2 / 4 * (np.square(a) + np.square(b)))


def crosstalk_first_order(N, xi_value):
    """
    Power coupled from the fundamental mode into the whole power level N,

        T_N = xi^N exp(-xi) / N!

    evaluated in log space. The series over N sums to 1.
    """
    if N < 0:
        raise DomainError(f'Power levels start at 0, got {N}')
    xi_value = np.asarray(xi_value, dtype=float)
    if np.any(xi_value < 0):
        raise DomainError('xi has to be non-negative')
    t_n = np.exp(special.xlogy(N, xi_value) - xi_value - special.gammaln(N + 1))
    return t_n if t_n.ndim else float(t_n)


def t00_second_order(beam, coeffs):
    """
    Fundamental mode transmittance with tilts and curvatures,

        T = D^(-1/2) exp(-(w^2/16) [4(a^2+b^2) + (w^4/4)(s^2 a^2 + s^2 b^2 + a^2 h^2 + b^2 g^2
                                     - 2 a b s g - 2 a b s h)] / D)

    with D = 1 + (w^4/16)(g^2 + h^2 + 2 s^2) + (w^8/256)(s^2 - g h)^2 >= 1.
    """
    w2 = beam.w ** 2
    a, b, g, h, s = coeffs.a, coeffs.b, coeffs.g, coeffs.h, coeffs.s
    denominator = (1 + w2 ** 2 / 16 * (g * g + h * h + 2 * s * s)
                   + w2 ** 4 / 256 * (s * s - g * h) ** 2)
    numerator = (4 * (a * a + b * b)
                 + w2 ** 2 / 4 * (s * s * a * a + s * s * b * b + a * a * h * h + b * b * g * g
                                  - 2 * a * b * s * g - 2 * a * b * s * h))
    return denominator ** -0.5 * np.exp(-w2 / 16 * numerator / denominator)


@functools.lru_cache(maxsize=8)
def _grid_coordinates(w, extent, points):
    step = 2 * extent * w / points
    axis = (np.arange(points) + 0.5) * step - extent * w
    x, y = np.meshgrid(axis, axis, indexing='xy')
    x.setflags(write=False)
    y.setflags(write=False)
    return x, y, step * step


@functools.lru_cache(maxsize=64)
def _mode_field(mode, w, extent, points):
    x, y, area = _grid_coordinates(w, extent, points)
    if mode.basis == HERMITE_GAUSS:
        m, n = mode.indices
        field = (special.eval_hermite(m, math.sqrt(2) * x / w)
                 * special.eval_hermite(n, math.sqrt(2) * y / w)
                 * np.exp(-(x ** 2 + y ** 2) / w ** 2)).astype(complex)
    else:
        p, l = mode.indices
        rho2 = 2 * (x ** 2 + y ** 2) / w ** 2
        field = (rho2 ** (abs(l) / 2) * special.eval_genlaguerre(p, abs(l), rho2)
                 * np.exp(-rho2 / 2) * np.exp(1j * l * np.arctan2(y, x)))
    field = field / math.sqrt(np.sum(np.abs(field) ** 2) * area)
    field.setflags(write=False)
    return field


def mode_field(mode, beam, grid):
    """
    The field of a mode sampled on the grid, normalised to unit power.

    :rtype: numpy.ndarray (complex, points x points)
    """
    return _mode_field(mode, beam.w, grid.extent, grid.points)


def phase_map(screen, beam, grid):
    """
    The phase of the screen on the grid in rad.
    """
    x, y, _ = _grid_coordinates(beam.w, grid.extent, grid.points)
    c = screen.coeffs
    return c.phi0 + c.a * x + c.b * y + c.g * x ** 2 / 2 + c.h * y ** 2 / 2 + c.s * x * y


def check_phase_sampling(screen, beam, grid):
    """
    Raise :class:`AccuracyError` when the phase changes by more than ``grid.max_phase_step``
    between neighbouring grid points. The gradient is linear in x and y so its extremes are at the corners.
    """
    c = screen.coeffs
    half = grid.extent * beam.w
    corners = [(sx * half, sy * half) for sx in (-1, 1) for sy in (-1, 1)]
    gradient = max(max(abs(c.a + c.g * x + c.s * y), abs(c.b + c.h * y + c.s * x)) for x, y in corners)
    phase_step = gradient * grid.step(beam)
    if phase_step > grid.max_phase_step:
        raise AccuracyError('The grid is too coarse for the phase screen',
                            diagnostics={'phase_step': f'{phase_step:.3g}',
                                         'max_phase_step': grid.max_phase_step,
                                         'points': grid.points})


def grid_overlaps(tx_mode, rx_modes, beam, screen, grid=GridSpec()):
    """
    The coupling |<E_rx| e^{i phi} |E_tx>|^2 / (<E_tx|E_tx> <E_rx|E_rx>) from one transmitted mode
    into several received modes, evaluated with the midpoint rule.

    :rtype: numpy.ndarray with one transmittance per receive mode
    """
    check_phase_sampling(screen, beam, grid)
    _, _, area = _grid_coordinates(beam.w, grid.extent, grid.points)
    tx_field = mode_field(tx_mode, beam, grid)
    distorted = tx_field * np.exp(1j * phase_map(screen, beam, grid))
    tx_norm = np.sum(np.abs(tx_field) ** 2) * area

    couplings = np.empty(len(rx_modes))
    for i, rx_mode in enumerate(rx_modes):
        rx_field = mode_field(rx_mode, beam, grid)
        overlap = np.sum(np.conj(rx_field) * distorted) * area
        rx_norm = np.sum(np.abs(rx_field) ** 2) * area
        couplings[i] = abs(overlap) ** 2 / (tx_norm * rx_norm)
    return np.clip(couplings, 0.0, 1.0)


def grid_overlap(tx_mode, rx_mode, beam, screen, grid=GridSpec()):
    """
    Numerical overlap-integral transmittance between two modes through a phase screen.

    :param tx_mode: transmitted mode
    :type tx_mode: :class:`ModeIndex`
    :param rx_mode: received mode
    :param beam: beam waist
    :param screen: the phase screen
    :type screen: :class:`PhaseScreen`
    :param grid: integration grid
    :type grid: :class:`GridSpec`
    :return: T in [0, 1]
    """
    return float(grid_overlaps(tx_mode, [rx_mode], beam, screen, grid)[0])


def grid_level_crosstalk(beam, screen, n_max, grid=GridSpec(), basis=HERMITE_GAUSS):
    """
    Power coupled from the fundamental mode into each of the levels 0..n_max, summing the
    per-mode grid overlaps of each level.
    """
    modes = [mode for level in range(n_max + 1) for mode in modes_in_level(level, basis)]
    couplings = grid_overlaps(FUNDAMENTAL, modes, beam, screen, grid)
    levels = np.array([power_level(mode) for mode in modes])
    return np.array([couplings[levels == level].sum() for level in range(n_max + 1)])
