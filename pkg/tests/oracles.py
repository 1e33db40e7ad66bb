"""Independent reference implementations used only by the tests.

These avoid the package's own summation and eigen machinery: Matsubara sums
are done in extended precision with mpmath's convergence acceleration,
oscillatory series through the Lerch transcendent, and finite models with
a dense eigensolver.
"""

import math

import mpmath as mp
import numpy as np
from scipy import linalg

DPS = 30


def _g(gamma, wd, nu):
    return gamma * wd * nu / (wd + nu)


def mp_matsubara(gamma, wd, theta, w=1.0):
    """``(<q^2>, Delta, ln Z)`` by direct extended-precision summation."""
    with mp.workdps(DPS):
        gamma, wd, theta, w = (mp.mpf(x) for x in (gamma, wd, theta, w))
        om = 2 * mp.pi * theta

        def nu(n):
            return n * om

        sq = mp.nsum(lambda n: 1 / (w**2 + nu(n) ** 2 + _g(gamma, wd, nu(n))), [1, mp.inf])
        sd = mp.nsum(
            lambda n: _g(gamma, wd, nu(n)) / (w**2 + nu(n) ** 2 + _g(gamma, wd, nu(n))), [1, mp.inf]
        )
        sz = mp.nsum(
            lambda n: mp.log(nu(n) ** 2 / (nu(n) ** 2 + _g(gamma, wd, nu(n)) + w**2)), [1, mp.inf]
        )
        q = theta / w**2 + 2 * theta * sq
        delta = 2 * theta * sd
        log_z = -mp.log(w / theta) + sz
        return float(q), float(delta), float(log_z)


def mp_log_z_gamma_derivative(gamma, wd, theta, w=1.0):
    """``-2 gamma theta d ln Z / d gamma`` by extended-precision differentiation."""
    with mp.workdps(DPS):
        om = 2 * mp.pi * mp.mpf(theta)

        def log_z(g):
            return mp.nsum(
                lambda n: mp.log((n * om) ** 2 / ((n * om) ** 2 + _g(g, wd, n * om) + w**2)),
                [1, mp.inf],
            )

        return float(-2 * gamma * theta * mp.diff(log_z, mp.mpf(gamma)))


def canonical_q_variance(theta, w=1.0):
    return 0.5 / (w * math.tanh(0.5 * w / theta))


def canonical_entropy(theta, w=1.0):
    """Entropy of a thermal oscillator from the Bose occupation."""
    x = w / theta
    n = 1.0 / math.expm1(x)
    return (n + 1.0) * math.log(n + 1.0) - n * math.log(n)


def canonical_log_z(theta, w=1.0):
    return -math.log(2.0 * math.sinh(0.5 * w / theta))


def lerch_cosine_series(x, a):
    """``sum_{l>=1} cos(l x)/(l + a)`` through the Lerch transcendent."""
    with mp.workdps(DPS):
        z = mp.expj(x)
        return float(mp.re(z * mp.lerchphi(z, 1, 1 + a)))


def kernel_by_mpmath_quadrature(gamma, wd, theta, sigma):
    """``K(sigma)`` with tanh-sinh quadrature in extended precision."""
    with mp.workdps(DPS):
        beta = 1 / mp.mpf(theta)
        s = mp.mpf(sigma)

        def f(w):
            if w == 0:
                return 2 * gamma / beta / mp.pi
            jw = gamma * w * wd**2 / (w**2 + wd**2)
            return jw * mp.cosh(w * (beta / 2 - s)) / mp.sinh(w * beta / 2) / mp.pi

        return float(mp.quad(f, [0, wd, 1 / min(s, beta - s), mp.inf]))


def dense_reduced_moments(stiffness, theta, index=0):
    """Quantum ``(<x_i^2>, <p_i^2>)`` of a mass-weighted stiffness via ``eigh``."""
    lam, vec = linalg.eigh(stiffness)
    om = np.sqrt(lam)
    c = 1.0 / np.tanh(0.5 * om / theta)
    w = vec[index] ** 2
    return float(np.sum(w * 0.5 * c / om)), float(np.sum(w * 0.5 * c * om))


def dense_log_z_ratio(stiffness, bath_frequencies, theta, system_frequencies=(1.0,)):
    """``ln Z_total - ln Z_bath - ln Z_can`` from eigenvalues (moderate N only)."""
    om = np.sqrt(linalg.eigvalsh(stiffness))

    def log_z(freqs):
        x = 0.5 * np.asarray(freqs) / theta
        return -float(np.sum(x + np.log(-np.expm1(-2.0 * x))))

    return log_z(om) - log_z(bath_frequencies) - log_z(system_frequencies)


def sample_quadratic_variance(sigma, form, n_samples, rng):
    """Monte-Carlo variance of ``x^T A x / 2`` for classical ``x ~ N(0, sigma)``."""
    x = rng.multivariate_normal(np.zeros(sigma.shape[0]), sigma, size=n_samples)
    q = 0.5 * np.einsum("ij,jk,ik->i", x, form, x)
    return float(np.var(q))


def mp_log_z_ratio(stiffness, bath_frequencies, theta, system_frequencies=(1.0,), dps=40):
    """``dense_log_z_ratio`` with an extended-precision eigensolver (small N only)."""
    with mp.workdps(dps):
        lam, _ = mp.eigsy(mp.matrix(np.asarray(stiffness).tolist()))
        th = mp.mpf(theta)

        def log_z(freqs):
            return -mp.fsum(f / (2 * th) + mp.log(-mp.expm1(-f / th)) for f in freqs)

        total = log_z([mp.sqrt(x) for x in lam])
        bath = log_z([mp.mpf(float(b)) for b in bath_frequencies])
        system = log_z([mp.mpf(float(s)) for s in system_frequencies])
        return float(total - bath - system)
