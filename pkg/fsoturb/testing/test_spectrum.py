"""
The phase spectrum and the variances of the distortion coefficients.
"""
import math

import numpy as np
import pytest
from scipy import special

from fsoturb.errors import ParameterError, DomainError
from fsoturb.spectrum import (VARTHETA, vartheta_constant, TurbulenceParams, BeamParams, ModeFilter,
                              DistortionVariances, FIELD_SPECTRUM, CORRELATED, phase_psd, mode_filter_value,
                              spectral_moment, compute_variances, variance_kernel, gamma_from_params, QUAD_EPSREL)


def test_vartheta():
    assert VARTHETA == pytest.approx(0.0229, abs=1e-4)
    assert vartheta_constant() == VARTHETA


def test_psd_formula(chamber):
    f = np.array([0.0, 1.0, 19.6, 500.0])
    expected = (VARTHETA * chamber.r0 ** (-5 / 3) * (f ** 2 + chamber.L0 ** -2) ** (-11 / 6)
                * np.exp(-chamber.l0 ** 2 * f ** 2))
    np.testing.assert_allclose(phase_psd(chamber, f), expected, rtol=1e-14)
    assert isinstance(phase_psd(chamber, 10.0), float)


def test_psd_negative_frequency(chamber):
    with pytest.raises(DomainError):
        phase_psd(chamber, -1.0)


def test_psd_decreases(chamber):
    psd = phase_psd(chamber, np.linspace(0, 2000, 200))
    assert np.all(np.diff(psd) < 0)


@pytest.mark.parametrize('r0, l0, L0', [
    (0.0, 1e-3, 1.0),
    (-0.01, 1e-3, 1.0),
    (0.01, 1e-3, 1e-3),
    (0.01, 2e-3, 1e-3),
    (float('nan'), 1e-3, 1.0),
])
def test_invalid_turbulence(r0, l0, L0):
    with pytest.raises(ParameterError):
        TurbulenceParams(r0=r0, l0=l0, L0=L0)


def test_invalid_beam_and_filter():
    with pytest.raises(ParameterError):
        BeamParams(w=0)
    with pytest.raises(ParameterError):
        ModeFilter(kind='aperture')


def test_mode_filter_values():
    intensity = ModeFilter(w=1e-3)
    field = ModeFilter(kind=FIELD_SPECTRUM, w=1e-3)
    assert mode_filter_value(intensity, 0.0) == 1.0
    assert mode_filter_value(intensity, 1 / (math.pi * 1e-3)) == pytest.approx(math.exp(-1), rel=1e-12)
    assert field.gaussian_rate == pytest.approx(2 * intensity.gaussian_rate)
    f = np.linspace(0, 1000, 50)
    assert np.all(np.diff(intensity.value(f)) < 0)
    assert np.all(field.value(f[1:]) < intensity.value(f[1:]))


def test_curvature_ratio(chamber, mode_filter):
    variances = compute_variances(chamber, mode_filter)
    assert variances.c_g == pytest.approx(3 * variances.c_s, rel=1e-12)
    assert variances.c_a > 0 and variances.c_s > 0


def test_r0_scaling(mode_filter):
    reference = compute_variances(TurbulenceParams(r0=0.01, l0=2.7e-3, L0=51e-3), mode_filter)
    for r0 in (0.05, 0.2):
        variances = compute_variances(TurbulenceParams(r0=r0, l0=2.7e-3, L0=51e-3), mode_filter)
        scale = (r0 / 0.01) ** (-5 / 3)
        assert variances.c_a == pytest.approx(reference.c_a * scale, rel=1e-10)
        assert variances.c_s == pytest.approx(reference.c_s * scale, rel=1e-10)


def test_kolmogorov_limit(mode_filter):
    """
    With a huge outer scale and a vanishing inner scale the curvature moment approaches
    1/2 G(7/6) c^(-7/6) and the tilt moment 1/2 G(1/6) c^(-1/6) plus the leading outer-scale term.
    """
    r0, l0, L0 = 0.05, 1e-6, 1e3
    params = TurbulenceParams(r0=r0, l0=l0, L0=L0)
    variances = compute_variances(params, mode_filter)
    rate = mode_filter.gaussian_rate + l0 ** 2
    kappa = 1 / L0
    prefactor = VARTHETA * r0 ** (-5 / 3)

    c_s = 4 * math.pi ** 5 * prefactor * special.gamma(7 / 6) / 2 * rate ** (-7 / 6)
    assert variances.c_s == pytest.approx(c_s, rel=1e-6)

    tilt_moment = (special.gamma(1 / 6) / 2 * rate ** (-1 / 6)
                   + kappa ** (1 / 3) / 2 * special.gamma(-1 / 6) / special.gamma(11 / 6))
    assert variances.c_a == pytest.approx(4 * math.pi ** 3 * prefactor * tilt_moment, rel=1e-6)

    # the pure power law ignores the outer scale which still shifts c_a by about 2% at L0 = 1 km
    pure = 4 * math.pi ** 3 * prefactor * special.gamma(1 / 6) / 2 * rate ** (-1 / 6)
    assert variances.c_a == pytest.approx(pure, rel=0.03)
    assert variances.c_a < pure


def test_confluent_oracle(chamber, mode_filter):
    """
    Both moments have closed forms in terms of the confluent hypergeometric function U.
    """
    rate = mode_filter.gaussian_rate + chamber.l0 ** 2
    kappa = 1 / chamber.L0
    z = rate * kappa ** 2
    prefactor = VARTHETA * chamber.r0 ** (-5 / 3)

    tilt, _ = spectral_moment(chamber, mode_filter, 1)
    curvature, _ = spectral_moment(chamber, mode_filter, 2)
    assert tilt == pytest.approx(prefactor * kappa ** (1 / 3) / 2 * special.hyperu(2, 7 / 6, z), rel=1e-6)
    assert curvature == pytest.approx(prefactor * kappa ** (7 / 3) * special.hyperu(3, 13 / 6, z), rel=1e-6)


def test_moment_error_estimate(chamber, mode_filter):
    value, abserr = spectral_moment(chamber, mode_filter, 1)
    assert 0 <= abserr < 1e-8 * value


@pytest.mark.parametrize('k', [0, 1, 2])
def test_moment_tolerance_halving(chamber, mode_filter, k):
    coarse, abserr = spectral_moment(chamber, mode_filter, k, epsrel=QUAD_EPSREL)
    fine, _ = spectral_moment(chamber, mode_filter, k, epsrel=QUAD_EPSREL / 2)
    assert abs(fine - coarse) <= abserr


def test_moment_order(chamber, mode_filter):
    with pytest.raises(DomainError):
        spectral_moment(chamber, mode_filter, -1)
    with pytest.raises(DomainError):
        spectral_moment(chamber, mode_filter, 1.5)


def test_weak_dependence_on_scales(chamber, mode_filter):
    """
    Doubling r0 changes c_a far more than doubling either of the scales.
    """
    reference = compute_variances(chamber, mode_filter).c_a

    def log_change(params):
        return abs(math.log(compute_variances(params, mode_filter).c_a / reference))

    r0_change = log_change(chamber.with_r0(2 * chamber.r0))
    assert r0_change == pytest.approx(5 / 3 * math.log(2), rel=1e-10)
    assert log_change(TurbulenceParams(chamber.r0, 2 * chamber.l0, chamber.L0)) < r0_change
    assert log_change(TurbulenceParams(chamber.r0, chamber.l0, 2 * chamber.L0)) < r0_change


def test_field_filter_smaller_variance(chamber, beam):
    intensity = compute_variances(chamber, ModeFilter(w=beam.w))
    field = compute_variances(chamber, ModeFilter(kind=FIELD_SPECTRUM, w=beam.w))
    assert field.c_a < intensity.c_a
    assert field.c_s < intensity.c_s


def test_kernel(chamber, mode_filter):
    kernel = variance_kernel(chamber.l0, chamber.L0, mode_filter)
    c_a = compute_variances(chamber, mode_filter).c_a
    assert c_a == pytest.approx(kernel * chamber.r0 ** (-5 / 3), rel=1e-12)


def test_gamma_at_chamber(chamber, beam, mode_filter):
    gamma = gamma_from_params(chamber, beam, mode_filter)
    c_a = compute_variances(chamber, mode_filter).c_a
    assert gamma == pytest.approx(2 / (beam.w ** 2 * c_a), rel=1e-12)
    # a few units with the default chamber settings
    assert 1 < gamma < 10


def test_covariance_gh(chamber_variances):
    independent = chamber_variances.covariance_gh()
    np.testing.assert_array_equal(independent, np.diag([chamber_variances.c_g, chamber_variances.c_g]))

    correlated = chamber_variances.with_coupling(CORRELATED).covariance_gh()
    assert correlated[0, 1] == correlated[1, 0] == chamber_variances.c_s
    # positive definite since c_g = 3 c_s
    assert np.all(np.linalg.eigvalsh(correlated) > 0)


def test_invalid_variances():
    with pytest.raises(ParameterError):
        DistortionVariances(c_a=-1.0, c_g=0.0, c_s=0.0)
    with pytest.raises(ParameterError):
        DistortionVariances(c_a=1.0, c_g=3.0, c_s=1.0, gh_coupling='anti')
