"""Equilibrium observables of a damped oscillator from Matsubara sums.

For a system oscillator of frequency ``w`` (in units of omega0; ``w = 1`` is
the bare oscillator, other values serve the normal modes of coupled pairs)
with effective coupling ``g(nu) = nu * gamma_eff(nu)``::

    <q^2> = theta/w^2 + 2 theta sum_n 1/(w^2 + nu_n^2 + g_n)
    Delta = 2 theta sum_n g_n/(w^2 + nu_n^2 + g_n)
    <p^2> = w^2 <q^2> + Delta
    ln Z  = -ln(w/theta) + sum_n ln[nu_n^2/(nu_n^2 + g_n + w^2)]

The canonical references are ``Z_can = 1/(2 sinh(w/2 theta))`` and the
entropy of a thermal mode with symplectic eigenvalue ``coth(w/2 theta)/2``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyError, BathEquilError
from .gaussian import mode_entropy
from .series import matsubara_sum, ps_inv_one_plus, ps_log_one_plus, ps_mul

_ORDER = 26
_MARGIN = 8.0
RTOL = 1e-10


class ConsistencyError(BathEquilError):
    """Computed moments violate the Heisenberg bound."""


@dataclass(frozen=True)
class OscillatorObservables:
    q_var: float
    p_var: float
    delta: float
    log_z: float
    log_z_can: float
    entropy: float
    entropy_can: float
    errors: dict = field(default_factory=dict, compare=False)

    @property
    def log_z_ratio(self):
        return self.log_z - self.log_z_can

    @property
    def log_entropy_ratio(self):
        return math.log(self.entropy / self.entropy_can)


def _expansions(sd, w):
    """Large-``nu`` expansions (in ``u = 1/nu``) of the three summands."""
    g = sd.damping_series(_ORDER)
    wser = np.zeros(_ORDER)
    wser[2] = w * w
    wser[2:] += g[: _ORDER - 2]
    inv = ps_inv_one_plus(wser)
    q = np.zeros(_ORDER)
    q[2:] = inv[: _ORDER - 2]
    d = np.zeros(_ORDER)
    d[2:] = ps_mul(g, inv)[: _ORDER - 2]
    z = -ps_log_one_plus(wser)
    return q, d, z


def _damping(sd, nu):
    # nu * gamma_eff(nu) for the Drude bath
    return sd.gamma * sd.omega_d * nu / (sd.omega_d + nu)


def _sum(term, coeffs, sd, tp, w, rtol):
    rho = max(sd.series_radius, math.sqrt(w * w + 2.0 * sd.damping_at_infinity), w)
    nu_min = _MARGIN * rho
    for _ in range(3):
        res = matsubara_sum(term, coeffs, tp.omega_matsubara, nu_min)
        if res.error <= rtol * max(abs(res.value), 1e-300) or res.error < 1e-300:
            return res
        nu_min *= 2.0
    raise AccuracyError(
        f"Matsubara sum missed rtol={rtol} (estimate {res.error:.3g})", res.error
    )


def _log_sinhc(x):
    """``ln(sinh(x)/x)`` for ``x > 0`` without overflow."""
    if x < 1e-4:
        return math.log1p(x * x / 6.0)
    if x < 20.0:
        return math.log(math.sinh(x) / x)
    return x - math.log(2.0 * x) + math.log1p(-math.exp(-2.0 * x))


def _mode_sums(sd, tp, w, rtol):
    q_c, d_c, z_c = _expansions(sd, w)
    w2 = w * w

    def q_term(nu):
        return 1.0 / (w2 + nu * nu + _damping(sd, nu))

    def d_term(nu):
        g = _damping(sd, nu)
        return g / (w2 + nu * nu + g)

    def z_term(nu):
        return -np.log1p((w2 + _damping(sd, nu)) / (nu * nu))

    sq = _sum(q_term, q_c, sd, tp, w, rtol)
    if sd.gamma == 0.0:
        sd_ = None
    else:
        sd_ = _sum(d_term, d_c, sd, tp, w, rtol)
    sz = _sum(z_term, z_c, sd, tp, w, rtol)
    return sq, sd_, sz


def q_variance(sd, tp, frequency=1.0, rtol=RTOL):
    """Position variance ``<q^2>`` of the damped oscillator."""
    sq, _, _ = _mode_sums(sd, tp, frequency, rtol)
    return tp.theta / frequency**2 + 2.0 * tp.theta * sq.value


def squeezing_delta(sd, tp, frequency=1.0, rtol=RTOL):
    """Squeezing parameter ``Delta = <p^2> - w^2 <q^2>``.

    Evaluated from the term-by-term gamma derivative of ``ln Z``,
    ``2 theta sum_n g_n / (w^2 + nu_n^2 + g_n)``.
    """
    _, sdl, _ = _mode_sums(sd, tp, frequency, rtol)
    return 0.0 if sdl is None else 2.0 * tp.theta * sdl.value


def p_variance(sd, tp, frequency=1.0, rtol=RTOL):
    """Momentum variance ``<p^2> = w^2 <q^2> + Delta``."""
    return frequency**2 * q_variance(sd, tp, frequency, rtol) + squeezing_delta(
        sd, tp, frequency, rtol
    )


def log_partition_ratio(sd, tp, frequency=1.0, rtol=RTOL):
    """``ln Z - ln Z_can`` of the reduced oscillator."""
    _, _, sz = _mode_sums(sd, tp, frequency, rtol)
    # -ln(w/theta) + ln(2 sinh(x)) = ln(sinh(x)/x) with x = w/(2 theta)
    return sz.value + _log_sinhc(0.5 * frequency / tp.theta)


def _log_2sinh(x):
    if x < 20.0:
        return math.log(2.0 * math.sinh(x))
    return x + math.log1p(-math.exp(-2.0 * x))


def canonical_variances(tp, frequency=1.0):
    """``(<q^2>, <p^2>)`` of the undamped oscillator at temperature ``theta``."""
    x = 0.5 * frequency / tp.theta
    c = 1.0 / math.tanh(x)
    return 0.5 * c / frequency, 0.5 * c * frequency


def oscillator_observables(sd, tp, frequency=1.0, rtol=RTOL):
    """All single-oscillator observables with their error estimates."""
    theta = tp.theta
    w = frequency
    sq, sdl, sz = _mode_sums(sd, tp, w, rtol)
    q = theta / (w * w) + 2.0 * theta * sq.value
    delta = 0.0 if sdl is None else 2.0 * theta * sdl.value
    p = w * w * q + delta
    x = 0.5 * w / theta
    log_z_can = -_log_2sinh(x)
    log_z = log_z_can + sz.value + _log_sinhc(x)
    u = math.sqrt(q * p)
    if u < 0.5 - 1e-10:
        raise ConsistencyError(f"symplectic eigenvalue {u} below 1/2")
    u_can = 0.5 / math.tanh(x)
    s = mode_entropy(u)
    s_can = mode_entropy(u_can)
    err_q = 2.0 * theta * sq.error
    err_d = 0.0 if sdl is None else 2.0 * theta * sdl.error
    errors = {
        "q_var": err_q,
        "p_var": w * w * err_q + err_d,
        "delta": err_d,
        "log_z": sz.error,
        "entropy": _entropy_error(u, q, p, err_q, w * w * err_q + err_d),
    }
    errors = {k: float(v) for k, v in errors.items()}
    return OscillatorObservables(q, p, delta, log_z, log_z_can, s, s_can, errors)


def _entropy_error(u, q, p, err_q, err_p):
    # dS/du = ln((u+1/2)/(u-1/2)), du = u/2 (dq/q + dp/p)
    du = 0.5 * u * (err_q / q + err_p / p)
    if u - 0.5 <= 0.0:
        return du
    return abs(math.log((u + 0.5) / (u - 0.5))) * du


def entropy_ratio(sd, tp, frequency=1.0, rtol=RTOL):
    """``ln(S/S_can)`` with ``S = -tr rho ln rho`` of the reduced Gaussian state."""
    return oscillator_observables(sd, tp, frequency, rtol).log_entropy_ratio


def delta_weak_coupling(sd, tp):
    """Weak effective-coupling asymptote ``pi gamma m wd / (6 Omega)``."""
    return math.pi * sd.gamma * sd.mass * sd.omega_d / (6.0 * tp.omega_matsubara)


def delta_strong_coupling(sd, tp):
    """Strong effective-coupling asymptote as printed, ``gamma m ln(2 pi wd / Omega)``.

    The direct Matsubara sum grows like ``(gamma m / pi) ln wd``; only the
    logarithmic dependence is reliable, the prefactor is not.
    """
    return sd.gamma * sd.mass * math.log(2.0 * math.pi * sd.omega_d / tp.omega_matsubara)
