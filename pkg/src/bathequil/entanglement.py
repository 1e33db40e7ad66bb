"""Two identical oscillators coupled by ``-c q1 q2``, each with its own bath.

Because the two baths are identical and independent, the normal coordinates
``Q+- = (q1 +- q2)/sqrt(2)`` (with their matching bath combinations) are two
uncoupled damped oscillators of frequencies ``sqrt(1 -+ c)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .bath import SpectralDensity, ThermalPoint
from .errors import DomainError, StabilityError
from .gaussian import GaussianState, logarithmic_negativity, partial_transpose, symplectic_eigenvalues
from .matsubara import RTOL, oscillator_observables

#: Default temperature bracket searched for the entanglement crossing.
THETA_BRACKET = (1e-3, 10.0)


@dataclass(frozen=True)
class CoupledPair:
    c: float
    sd: SpectralDensity

    def __post_init__(self):
        if not 0.0 <= self.c < 1.0:
            if self.c < 0.0:
                raise DomainError("use c >= 0; the sign of c is removed by q2 -> -q2")
            raise StabilityError(f"coupling c={self.c} makes the system unstable (need c < 1)")

    @property
    def omega_plus(self):
        """Frequency of the symmetric mode ``(q1 + q2)/sqrt(2)``."""
        return math.sqrt(1.0 - self.c)

    @property
    def omega_minus(self):
        """Frequency of the antisymmetric mode ``(q1 - q2)/sqrt(2)``."""
        return math.sqrt(1.0 + self.c)


def _assemble(qp, pp, qm, pm):
    qq, qx = 0.5 * (qp + qm), 0.5 * (qp - qm)
    pq, px = 0.5 * (pp + pm), 0.5 * (pp - pm)
    return np.array([[qq, 0, qx, 0], [0, pq, 0, px], [qx, 0, qq, 0], [0, px, 0, pq]])


def pair_covariance(cp, tp, rtol=RTOL, full_output=False):
    """Two-mode reduced covariance in the ordering ``(q1, p1, q2, p2)``.

    With ``full_output`` the elementwise error estimate is returned as well.
    """
    plus = oscillator_observables(cp.sd, tp, cp.omega_plus, rtol)
    minus = oscillator_observables(cp.sd, tp, cp.omega_minus, rtol)
    gs = GaussianState(_assemble(plus.q_var, plus.p_var, minus.q_var, minus.p_var))
    if not full_output:
        return gs
    ep, em = plus.errors, minus.errors
    err = np.abs(_assemble(ep["q_var"], ep["p_var"], em["q_var"], em["p_var"]))
    err[0, 2] = err[2, 0] = err[0, 0]
    err[1, 3] = err[3, 1] = err[1, 1]
    return gs, err


def pair_negativity(cp, tp, rtol=RTOL):
    """Logarithmic negativity between the two oscillators."""
    if cp.c == 0.0:
        return 0.0
    return logarithmic_negativity(pair_covariance(cp, tp, rtol))


def _min_transposed_eigenvalue(cp, theta):
    gs = pair_covariance(cp, ThermalPoint(theta))
    return float(symplectic_eigenvalues(partial_transpose(gs, [1]))[0])


def crossing_temperature(cp, bracket=THETA_BRACKET, tol=1e-4):
    """Temperature where the negativity reaches zero, by bisection.

    The root of ``min nu_pt(theta) - 1/2`` is bracketed in ``bracket``.
    Returns ``None`` when the pair is not entangled at the lower end of the
    bracket; raises :class:`DomainError` if it is still entangled at the upper end.
    """
    lo, hi = bracket
    if cp.c == 0.0:
        return None

    def g(theta):
        return _min_transposed_eigenvalue(cp, theta) - 0.5

    g_lo = g(lo)
    if g_lo >= 0.0:
        return None
    if g(hi) < 0.0:
        raise DomainError(f"still entangled at theta={hi}; widen the bracket")
    return optimize.bisect(g, lo, hi, xtol=tol)


def negativity_surface(cp, grid, rtol=RTOL):
    """Negativity over a temperature x cutoff grid at the pair's ``gamma`` and ``c``.

    ``grid`` needs ``theta_axis`` and ``d_axis``; the cutoff of ``cp.sd`` is
    replaced by each ``d`` in turn.  Returns an array indexed ``[theta, d]``.
    """
    out = np.empty((len(grid.theta_axis), len(grid.d_axis)))
    for j, d in enumerate(grid.d_axis):
        pair = CoupledPair(cp.c, SpectralDensity(cp.sd.gamma, float(d), cp.sd.mass, cp.sd.kind))
        for i, theta in enumerate(grid.theta_axis):
            out[i, j] = pair_negativity(pair, ThermalPoint(float(theta)), rtol)
    return out
