import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bathequil.bath import SpectralDensity, ThermalPoint
from bathequil.matsubara import (
    canonical_variances,
    delta_strong_coupling,
    delta_weak_coupling,
    entropy_ratio,
    log_partition_ratio,
    oscillator_observables,
    p_variance,
    q_variance,
    squeezing_delta,
)
from oracles import (
    canonical_entropy,
    canonical_log_z,
    canonical_q_variance,
    mp_log_z_gamma_derivative,
    mp_matsubara,
)


@pytest.mark.parametrize("theta", [0.05, 0.3, 1.0, 7.0])
def test_undamped_oscillator_is_canonical(theta):
    sd = SpectralDensity(0.0, 10.0)
    tp = ThermalPoint(theta)
    obs = oscillator_observables(sd, tp)
    assert obs.q_var == pytest.approx(canonical_q_variance(theta), rel=1e-13)
    assert obs.p_var == pytest.approx(canonical_q_variance(theta), rel=1e-13)
    assert obs.delta == 0.0
    assert obs.log_z == pytest.approx(canonical_log_z(theta), rel=1e-13, abs=1e-14)
    assert obs.entropy == pytest.approx(canonical_entropy(theta), rel=1e-10)


@pytest.mark.parametrize(
    "gamma,wd,theta,w",
    [(0.1, 10.0, 0.5, 1.0), (0.05, 2.0, 0.1, 1.0), (1.0, 50.0, 2.0, 1.0), (0.1, 10.0, 0.3, math.sqrt(0.9))],
)
def test_against_extended_precision_sums(gamma, wd, theta, w):
    q_ref, d_ref, z_ref = mp_matsubara(gamma, wd, theta, w)
    obs = oscillator_observables(SpectralDensity(gamma, wd), ThermalPoint(theta), frequency=w)
    assert obs.q_var == pytest.approx(q_ref, rel=1e-10)
    assert obs.delta == pytest.approx(d_ref, rel=1e-10)
    assert obs.log_z == pytest.approx(z_ref, rel=1e-10)
    assert obs.p_var == w * w * obs.q_var + obs.delta


def test_delta_equals_gamma_derivative_of_log_z():
    gamma, wd, theta = 0.1, 10.0, 0.5
    delta = squeezing_delta(SpectralDensity(gamma, wd), ThermalPoint(theta))
    assert delta == pytest.approx(mp_log_z_gamma_derivative(gamma, wd, theta), rel=1e-9)


def test_classical_limit_of_position_variance():
    sd = SpectralDensity(0.1, 10.0)
    assert q_variance(sd, ThermalPoint(1e3)) / 1e3 == pytest.approx(1.0, rel=1e-3)


def test_log_partition_ratio_limits():
    assert abs(log_partition_ratio(SpectralDensity(1e-8, 10.0), ThermalPoint(0.5))) < 1e-6
    assert abs(log_partition_ratio(SpectralDensity(0.1, 100.0), ThermalPoint(100.0))) < 1e-3


def test_entropy_ratio_limits():
    assert entropy_ratio(SpectralDensity(0.0, 10.0), ThermalPoint(0.7)) == pytest.approx(0.0, abs=1e-12)
    assert abs(entropy_ratio(SpectralDensity(0.1, 100.0), ThermalPoint(100.0))) < 1e-3


def test_weak_coupling_asymptote():
    sd = SpectralDensity(0.1, 1.0)
    tp = ThermalPoint(1e3)
    assert squeezing_delta(sd, tp) == pytest.approx(delta_weak_coupling(sd, tp), rel=0.02)


def test_strong_coupling_slope_is_constant():
    tp = ThermalPoint(0.1)
    ds = np.geomspace(1e2, 1e4, 5)
    deltas = [squeezing_delta(SpectralDensity(0.1, d), tp) for d in ds]
    slopes = np.diff(deltas) / np.diff(np.log(ds))
    assert np.ptp(slopes) / np.mean(slopes) < 0.05
    # the sum grows like (gamma/pi) ln(wd), a factor pi below the printed asymptote
    assert np.mean(slopes) == pytest.approx(0.1 / math.pi, rel=0.05)
    printed = [delta_strong_coupling(SpectralDensity(0.1, d), tp) for d in ds]
    assert np.diff(printed) / np.diff(np.log(ds)) == pytest.approx(0.1)


def test_delta_vanishes_at_high_temperature():
    sd = SpectralDensity(0.1, 10.0)
    deltas = [squeezing_delta(sd, ThermalPoint(t)) for t in (1.0, 10.0, 100.0, 1000.0)]
    assert all(a > b for a, b in zip(deltas, deltas[1:]))
    assert deltas[-1] < 1e-3


def test_deviation_grows_with_damping_and_cutoff():
    tp = ThermalPoint(0.2)
    by_gamma = [log_partition_ratio(SpectralDensity(g, 10.0), tp) for g in (0.005, 0.01, 0.05, 0.1)]
    assert all(v < 0.0 for v in by_gamma)
    assert all(abs(a) <= abs(b) for a, b in zip(by_gamma, by_gamma[1:]))
    by_d = [log_partition_ratio(SpectralDensity(0.1, d), tp) for d in (1.0, 10.0, 100.0)]
    assert all(abs(a) <= abs(b) for a, b in zip(by_d, by_d[1:]))


def test_public_helpers_consistent():
    sd = SpectralDensity(0.2, 3.0)
    tp = ThermalPoint(0.4)
    obs = oscillator_observables(sd, tp)
    assert q_variance(sd, tp) == obs.q_var
    assert p_variance(sd, tp) == pytest.approx(obs.p_var, rel=1e-15)
    assert log_partition_ratio(sd, tp) == pytest.approx(obs.log_z_ratio, rel=1e-13)
    assert canonical_variances(tp) == pytest.approx((canonical_q_variance(0.4),) * 2)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.0, 2.0),
    st.floats(0.1, 200.0),
    st.floats(0.02, 50.0),
)
def test_heisenberg_and_positive_squeezing(gamma, wd, theta):
    obs = oscillator_observables(SpectralDensity(gamma, wd), ThermalPoint(theta))
    assert obs.delta >= 0.0
    assert obs.q_var * obs.p_var >= 0.25 * (1 - 1e-12)
    assert obs.log_z_ratio <= 1e-12
    assert all(e <= 1e-9 * max(1.0, abs(v)) for e, v in (
        (obs.errors["q_var"], obs.q_var), (obs.errors["log_z"], obs.log_z)))
