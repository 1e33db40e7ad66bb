"""Harmonic-bath models.

Everything is in natural units ``hbar = k_B = m0 = omega0 = 1``; frequencies
are ratios to the system frequency and temperatures are ``k_B T / hbar omega0``.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import exp1

from .errors import AccuracyError, DomainError
from .series import cosine_reciprocal_series


class BathKind(enum.Enum):
    DRUDE = "drude"


@dataclass(frozen=True)
class SpectralDensity:
    """Bath spectral density ``J(omega)``.

    Only the regularised Drude form ``m gamma omega wd**2/(omega**2 + wd**2)``
    is implemented; ``kind`` is the extension point for other families.
    """

    gamma: float
    omega_d: float
    mass: float = 1.0
    kind: BathKind = BathKind.DRUDE

    def __post_init__(self):
        if not self.gamma >= 0.0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if not self.omega_d > 0.0:
            raise DomainError(f"omega_d must be > 0, got {self.omega_d}")
        if not self.mass > 0.0:
            raise DomainError(f"mass must be > 0, got {self.mass}")

    @property
    def damping_at_infinity(self):
        """``lim nu * gamma_eff(nu)`` as ``nu -> inf``; equals ``(2/pi m) int J/omega``."""
        return self.gamma * self.omega_d

    def damping_series(self, order):
        """Coefficients of ``nu * gamma_eff(nu)`` in powers of ``u = 1/nu``."""
        k = np.arange(order)
        return self.gamma * self.omega_d * (-self.omega_d) ** k.astype(float)

    @property
    def series_radius(self):
        """Frequency beyond which :meth:`damping_series` converges."""
        return self.omega_d


@dataclass(frozen=True)
class ThermalPoint:
    """Temperature ``theta = k_B T / hbar omega0``."""

    theta: float

    def __post_init__(self):
        if not (self.theta > 0.0 and math.isfinite(self.theta)):
            raise DomainError(f"theta must be positive and finite, got {self.theta}")

    @property
    def beta(self):
        return 1.0 / self.theta

    @property
    def omega_matsubara(self):
        return 2.0 * math.pi * self.theta

    def matsubara(self, n):
        """The ``n``-th Matsubara frequency ``n * 2 pi theta``."""
        return np.asarray(n) * self.omega_matsubara


def _check_frequency(omega, strict=False):
    omega = np.asarray(omega, dtype=float)
    bad = omega <= 0.0 if strict else omega < 0.0
    if np.any(bad) or np.any(np.isnan(omega)):
        raise DomainError("frequency outside the allowed domain")
    return omega


def _as_output(value, like):
    return float(value) if np.ndim(like) == 0 else value


def spectral_density(sd, omega):
    """``J(omega)`` for ``omega >= 0``."""
    w = _check_frequency(omega)
    wd2 = sd.omega_d**2
    return _as_output(sd.mass * sd.gamma * w * wd2 / (w * w + wd2), omega)


def power_spectrum(sd, tp, omega):
    """Bath power spectrum ``hbar J(omega) coth(hbar beta omega / 2)``.

    At ``omega = 0`` the limit ``2 J'(0) / beta`` is returned.
    """
    w = _check_frequency(omega)
    wd2 = sd.omega_d**2
    # J(w)/w, regular at zero
    j_over_w = sd.mass * sd.gamma * wd2 / (w * w + wd2)
    x = 0.5 * tp.beta * w
    with np.errstate(divide="ignore", invalid="ignore"):
        # w coth(x) = (2/beta) x coth(x)
        x_coth = np.where(x > 0.0, x / np.tanh(np.where(x > 0, x, 1.0)), 1.0)
    return _as_output(j_over_w * (2.0 / tp.beta) * x_coth, omega)


def effective_coupling_closed(sd, nu):
    """Effective coupling ``gamma / (1 + nu/omega_d)`` at frequency ``nu >= 0``."""
    n = _check_frequency(nu)
    return _as_output(sd.gamma / (1.0 + n / sd.omega_d), nu)


def effective_coupling_integral(sd, z, rtol=1e-12):
    """Effective coupling from the Stieltjes-type integral of ``J(omega)/omega``.

    ``(1/m) int_0^inf (d omega/pi) (J/omega) 2z/(omega**2 + z**2)``, by
    adaptive Gauss-Kronrod quadrature.
    """
    z = float(z)
    if not z > 0.0:
        raise DomainError(f"z must be > 0, got {z}")
    if sd.gamma == 0.0:
        return 0.0
    wd = sd.omega_d

    # omega = wd tan(phi) maps the Drude weight wd**2/(omega**2+wd**2) d omega to wd d phi
    def integrand(phi):
        w = wd * math.tan(phi)
        return wd * 2.0 * z / (w * w + z * z) / math.pi

    peak = math.atan(z / wd)
    edges = [0.0, peak, 0.5 * math.pi]
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        val, e = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=rtol, limit=200)
        total += val
        err += e
    if err > 1e3 * rtol * abs(total):
        raise AccuracyError(f"effective-coupling quadrature did not converge at z={z}", err)
    return sd.gamma * total


def _check_sigma(tp, sigma, closed=True):
    s = np.asarray(sigma, dtype=float)
    beta = tp.beta
    if closed:
        bad = (s < 0.0) | (s > beta)
    else:
        bad = (s <= 0.0) | (s >= beta)
    if np.any(bad) or np.any(np.isnan(s)):
        raise DomainError("imaginary time must lie in [0, beta]" if closed else
                          "imaginary time must lie strictly inside (0, beta)")
    return s


def _kernel_weight(w, half, dist, beta):
    """cosh(w (beta/2 - sigma)) / sinh(w beta/2) without overflow; ``dist = |beta/2 - sigma|``."""
    # [exp(-w (half - dist)) + exp(-w (half + dist))] / (1 - exp(-w beta))
    num = np.exp(-w * (half - dist)) + np.exp(-w * (half + dist))
    return num / -np.expm1(-w * beta)


def kernel_quadrature(sd, tp, sigma, rtol=1e-11):
    """Imaginary-time bath correlation ``K(sigma)`` by direct frequency quadrature.

    ``K(sigma) = (1/pi) int_0^inf J(w) cosh(w (beta/2 - sigma)) / sinh(w beta/2) dw``

    The integral diverges logarithmically at ``sigma = 0`` and ``sigma = beta``;
    there an :class:`AccuracyError` is raised.
    """
    s = float(_check_sigma(tp, sigma))
    if sd.gamma == 0.0:
        return 0.0
    beta = tp.beta
    half = 0.5 * beta
    dist = abs(half - s)
    edge = half - dist  # min(sigma, beta - sigma)
    if edge == 0.0:
        raise AccuracyError("bath kernel diverges at the imaginary-time endpoints", math.inf)
    m, g, wd = sd.mass, sd.gamma, sd.omega_d

    def integrand(w):
        if w == 0.0:
            # J(w)/sinh(w beta/2) -> 2 m gamma / beta
            return 2.0 * m * g / beta / math.pi
        jw = m * g * w * wd * wd / (w * w + wd * wd)
        return jw * float(_kernel_weight(w, half, dist, beta)) / math.pi

    # integrand ~ exp(-w * edge) beyond 1/edge; 40 e-folds past the last scale
    scales = sorted({wd, 1.0 / edge, 1.0 / beta})
    w_max = max(scales[-1], 1.0 / edge) * 40.0
    edges = [0.0]
    for sc in scales:
        if sc < w_max:
            edges.append(sc)
    edges.append(w_max)
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=rtol, limit=400)
        total += val
        err += e
    # tail bound: J <= m g wd^2 / w, weight <= 2 exp(-w edge)/(1 - exp(-w_max beta))
    tail_bound = (m * g * wd * wd / math.pi) * 2.0 * exp1(w_max * edge) / -math.expm1(-w_max * beta)
    if tail_bound > 1e-12 * abs(total):
        raise AccuracyError("bath-kernel frequency cutoff too low", tail_bound)
    if err > 1e3 * rtol * abs(total):
        raise AccuracyError(f"bath-kernel quadrature did not converge at sigma={s}", err)
    return total


def kernel_series(sd, tp, sigma, rtol=1e-12, full_output=False):
    """Imaginary-time bath correlation from the Matsubara series of the damping.

    On the open interval ``0 < sigma < beta``::

        K(sigma) = -(2m/beta) sum_{l>=1} nu_l gamma_eff(nu_l) cos(nu_l sigma)

    after discarding the local term ``m * gamma_inf * comb_beta(sigma)`` (a
    periodic delta comb at the endpoints, ``gamma_inf = lim nu gamma_eff``).
    The remaining distribution is the convergent series

        (2m/beta) [gamma_inf/2 + sum_{l>=1} (gamma_inf - nu_l gamma_eff(nu_l)) cos(nu_l sigma)]

    which is what is summed.  For the Drude bath the coefficient is
    ``gamma wd**2 / (wd + nu_l)``.  The result equals :func:`kernel_quadrature`.

    With ``full_output`` a ``(values, errors)`` pair is returned.
    """
    s = _check_sigma(tp, sigma, closed=False)
    flat = np.atleast_1d(s).ravel()
    values = np.empty_like(flat)
    errors = np.empty_like(flat)
    beta = tp.beta
    pref = 2.0 * sd.mass / beta
    g_inf = sd.damping_at_infinity
    a = sd.omega_d / tp.omega_matsubara
    rtols = np.broadcast_to(np.asarray(rtol, dtype=float), np.shape(s)).ravel()
    for i, si in enumerate(flat):
        if sd.gamma == 0.0:
            values[i], errors[i] = 0.0, 0.0
            continue
        res = cosine_reciprocal_series(tp.omega_matsubara * si, a, rtol=float(rtols[i]))
        values[i] = pref * g_inf * (0.5 + a * res.value)
        errors[i] = pref * g_inf * a * res.error
    values = values.reshape(np.shape(s))
    errors = errors.reshape(np.shape(s))
    if np.ndim(s) == 0:
        values, errors = float(values), float(errors)
    if full_output:
        return values, errors
    return values
