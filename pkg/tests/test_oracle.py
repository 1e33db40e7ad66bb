import math

import numpy as np
import pytest
from scipy import linalg

from bathequil.bath import SpectralDensity, ThermalPoint, effective_coupling_closed, spectral_density
from bathequil.errors import DomainError, ModelError, StabilityError
from bathequil.matsubara import oscillator_observables
from bathequil.oracle import (
    DiscretizationRule,
    arrowhead_spectrum,
    check_physical,
    classical_reduced_state,
    discrete_effective_coupling,
    discretize,
    full_covariance,
    partition_ratio,
    quantum_reduced_state,
    reduced_entropy,
    uncertainty_quantities,
)
from oracles import canonical_q_variance, dense_log_z_ratio, dense_reduced_moments, mp_log_z_ratio

SD = SpectralDensity(0.1, 10.0)
TP = ThermalPoint(0.5)


def test_rule_validation():
    with pytest.raises(DomainError):
        DiscretizationRule(0)
    with pytest.raises(DomainError):
        DiscretizationRule(10, omega_max=-1.0)
    with pytest.raises(DomainError):
        DiscretizationRule(10, scheme="uniform")


def test_zero_coupling_gives_empty_bath():
    sm = discretize(SpectralDensity(0.0, 5.0), DiscretizationRule(100))
    assert sm.n_bath == 0
    st = quantum_reduced_state(sm, TP)
    c = canonical_q_variance(0.5)
    assert np.allclose(st.sigma, np.diag([c, c]), rtol=1e-14)
    assert partition_ratio(sm, TP) == 0.0


def test_discrete_weights_reconstruct_spectral_density():
    sm = discretize(SD, DiscretizationRule(500))
    rebuilt = 0.5 * math.pi * sm.bath_masses * sm.bath_frequencies**3 / sm.bin_widths
    assert np.allclose(rebuilt, spectral_density(SD, sm.bath_frequencies), rtol=1e-12)
    assert np.all(np.diff(sm.bath_frequencies) > 0.0)
    assert sm.bath_frequencies[-1] < 1000.0 * SD.omega_d


def test_discrete_friction_matches_effective_coupling():
    sm = discretize(SD, DiscretizationRule(4000))
    z = TP.omega_matsubara
    assert discrete_effective_coupling(sm, z) == pytest.approx(effective_coupling_closed(SD, z), rel=1e-2)


def test_stiffness_counterterm_structure():
    sm = discretize(SD, DiscretizationRule(50))
    k = sm.stiffness(mass_weighted=False)
    # (q_j - q)^2 form: every bath row, and the system row minus its bare part, sums to zero
    assert np.allclose(k[1:].sum(axis=1), 0.0, atol=1e-12 * np.abs(k).max())
    assert k[0].sum() == pytest.approx(1.0, rel=1e-10)
    assert np.all(linalg.eigvalsh(sm.stiffness()) > 0.0)


def test_unstable_pair_rejected():
    with pytest.raises(StabilityError):
        discretize(SD, DiscretizationRule(10), system_count=2, c=1.0)


def test_arrowhead_matches_dense_eigensolver():
    sm = discretize(SD, DiscretizationRule(300))
    spectrum = sm.spectra[0]
    lam, vec = linalg.eigh(sm.stiffness())
    scale = lam[-1]
    assert np.max(np.abs(spectrum.eigenvalues - lam)) <= 1e-12 * scale
    assert np.allclose(spectrum.weights, vec[0] ** 2, atol=1e-10)
    assert spectrum.weights.sum() == pytest.approx(1.0, rel=1e-12)
    assert spectrum.schur == pytest.approx(1.0, rel=1e-12)


def test_arrowhead_small_explicit_case():
    alpha, z, d = 3.0, np.array([0.5, -1.0]), np.array([1.0, 2.0])
    spectrum = arrowhead_spectrum(alpha, z, d)
    mat = np.array([[alpha, *z], [z[0], d[0], 0], [z[1], 0, d[1]]])
    lam, vec = linalg.eigh(mat)
    assert spectrum.eigenvalues == pytest.approx(lam, rel=1e-14)
    assert spectrum.weights == pytest.approx(vec[0] ** 2, rel=1e-12)


def test_arrowhead_rejects_bad_input():
    with pytest.raises(ModelError):
        arrowhead_spectrum(1.0, [1.0, 1.0], [2.0, 1.0])
    with pytest.raises(ModelError):
        arrowhead_spectrum(0.1, [1.0], [1.0])


@pytest.mark.parametrize("theta", [0.2, 1.0, 5.0])
def test_quantum_state_matches_dense(theta):
    sm = discretize(SpectralDensity(0.3, 4.0), DiscretizationRule(250))
    tp = ThermalPoint(theta)
    q_ref, p_ref = dense_reduced_moments(sm.stiffness(), theta)
    st = quantum_reduced_state(sm, tp)
    assert st.sigma[0, 0] == pytest.approx(q_ref, rel=1e-7)
    assert st.sigma[1, 1] == pytest.approx(p_ref, rel=1e-10)
    assert np.allclose(full_covariance(sm, tp)[:2, :2], st.sigma, rtol=1e-7)


def test_pair_sectors_match_full_two_bath_matrix():
    sm = discretize(SD, DiscretizationRule(300), system_count=2, c=0.1)
    st = quantum_reduced_state(sm, TP)
    cov = full_covariance(sm, TP)
    assert np.allclose(cov[:4, :4], st.sigma, rtol=1e-6, atol=1e-9)
    assert st.sigma[0, 0] == st.sigma[2, 2]
    assert st.sigma[1, 1] == st.sigma[3, 3]


def test_pair_without_coupling_is_two_copies():
    single = quantum_reduced_state(discretize(SD, DiscretizationRule(200)), TP).sigma
    pair = quantum_reduced_state(discretize(SD, DiscretizationRule(200), system_count=2), TP).sigma
    assert np.allclose(pair[:2, :2], single, rtol=1e-13)
    assert pair[0, 2] == 0.0 and pair[1, 3] == 0.0


def test_partition_ratio_matches_extended_precision_eigenvalues():
    sm = discretize(SpectralDensity(0.3, 4.0), DiscretizationRule(60, omega_max=50.0))
    for theta in (0.3, 2.0):
        ref = mp_log_z_ratio(sm.stiffness(), sm.bath_frequencies, theta)
        assert partition_ratio(sm, ThermalPoint(theta)) == pytest.approx(ref, rel=1e-12, abs=1e-14)


def test_partition_ratio_close_to_double_precision_eigenvalues():
    # the dense route loses digits to eigenvalue roundoff, hence the looser bound
    sm = discretize(SpectralDensity(0.3, 4.0), DiscretizationRule(150, omega_max=50.0))
    ref = dense_log_z_ratio(sm.stiffness(), sm.bath_frequencies, 0.5)
    assert partition_ratio(sm, ThermalPoint(0.5)) == pytest.approx(ref, abs=1e-7)


def test_pair_partition_ratio_matches_extended_precision():
    sm = discretize(SD, DiscretizationRule(30, omega_max=50.0), system_count=2, c=0.2)
    freqs = np.sqrt([0.8, 1.2])
    ref = mp_log_z_ratio(sm.stiffness(), np.tile(sm.bath_frequencies, 2), 0.7, freqs)
    assert partition_ratio(sm, ThermalPoint(0.7)) == pytest.approx(ref, rel=1e-11)


def test_partition_ratio_high_temperature():
    sm = discretize(SpectralDensity(0.1, 100.0), DiscretizationRule(4000))
    assert abs(partition_ratio(sm, ThermalPoint(100.0))) < 1e-3


@pytest.mark.parametrize("gamma", [0.005, 0.1, 1.0, 10.0])
def test_classical_boltzmann_invariance(gamma):
    sm = discretize(SpectralDensity(gamma, 5.0), DiscretizationRule(500))
    cov = classical_reduced_state(sm, ThermalPoint(1.3))
    assert cov[0, 0] == pytest.approx(1.3, rel=1e-12)
    assert cov[1, 1] == 1.3
    assert cov[1, 1] - cov[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_classical_pair_is_bare_system():
    sm = discretize(SD, DiscretizationRule(300), system_count=2, c=0.2)
    cov = classical_reduced_state(sm, TP)
    expected = 0.5 * np.linalg.inv(np.array([[1.0, -0.2], [-0.2, 1.0]]))
    assert np.allclose(cov[0::2, 0::2], expected, rtol=1e-12)


def test_quantum_error_decreases_with_bath_size():
    ref = oscillator_observables(SD, TP).q_var
    errs = [
        abs(quantum_reduced_state(discretize(SD, DiscretizationRule(n)), TP).sigma[0, 0] - ref)
        for n in (250, 500, 1000, 2000, 4000)
    ]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] / ref < 1e-3


def test_quantum_squeezing_positive_where_classical_vanishes():
    sm = discretize(SD, DiscretizationRule(500))
    tp = ThermalPoint(0.2)
    q = quantum_reduced_state(sm, tp).sigma
    c = classical_reduced_state(sm, tp)
    assert q[1, 1] - q[0, 0] > 1e-2
    assert c[1, 1] - c[0, 0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("theta", [0.05, 0.5, 5.0])
def test_reduced_states_are_physical(theta):
    sm = discretize(SpectralDensity(1.0, 20.0), DiscretizationRule(1000), system_count=2, c=0.3)
    u = check_physical(quantum_reduced_state(sm, ThermalPoint(theta)))
    assert u[0] >= 0.5 - 1e-10
    with pytest.raises(DomainError):
        reduced_entropy(sm, ThermalPoint(theta))


@pytest.mark.parametrize("gamma,wd,theta", [(0.1, 10.0, 0.5), (1.0, 2.0, 0.2), (0.05, 50.0, 3.0)])
def test_uncertainty_relation_and_vanishing_commutator(gamma, wd, theta):
    sm = discretize(SpectralDensity(gamma, wd), DiscretizationRule(150))
    uq = uncertainty_quantities(sm, ThermalPoint(theta))
    assert uq.slack >= -1e-10
    assert uq.commutator_abs < 1e-10
    assert uq.delta_v > 0.0 and uq.delta_hs > 0.0


def test_uncertainty_for_pair_model():
    sm = discretize(SD, DiscretizationRule(100), system_count=2, c=0.1)
    uq = uncertainty_quantities(sm, TP)
    assert uq.commutator_abs < 1e-10
    assert uq.slack >= -1e-10
