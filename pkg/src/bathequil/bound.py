"""Second-order commutator functional of a system coupled through ``B (x) S``.

For a truncated system Hamiltonian ``H`` and coupling operator ``S`` the
functional is::

    tr{[H, S] exp(-beta H) int_0^beta dsigma S(-i sigma) K(sigma)} / tr exp(-beta H)

with ``S(-i sigma) = exp(sigma H) S exp(-sigma H)`` and ``K`` the imaginary
time bath correlation.  Only the trace expression is returned; any overall
constant multiplying it is left to the caller.

In the eigenbasis of ``H`` the integrand is
``F(sigma) = sum_mn (E_m - E_n) |S_mn|**2 exp(-(beta - sigma) E_n - sigma E_m) / Z``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .bath import ThermalPoint, kernel_series
from .errors import AccuracyError, DomainError

_EPS = np.finfo(float).eps
_HERMITIAN_TOL = 1e-12
# Nodes closer than this fraction of beta to an endpoint get a looser kernel tolerance.
_EDGE = 1e-4


@dataclass(frozen=True, eq=False)
class TruncatedSystem:
    """System Hamiltonian and coupling operator in a finite basis."""

    h_matrix: np.ndarray
    s_matrix: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h_matrix)
        s = np.asarray(self.s_matrix)
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 2:
            raise DomainError(f"h_matrix must be square with dim >= 2, got {h.shape}")
        if s.shape != h.shape:
            raise DomainError("h_matrix and s_matrix must have the same shape")
        for name, m in (("h_matrix", h), ("s_matrix", s)):
            if np.max(np.abs(m - m.conj().T), initial=0.0) > _HERMITIAN_TOL * max(1.0, np.abs(m).max()):
                raise DomainError(f"{name} is not Hermitian")
        object.__setattr__(self, "h_matrix", 0.5 * (h + h.conj().T))
        object.__setattr__(self, "s_matrix", 0.5 * (s + s.conj().T))

    @property
    def dim(self):
        return self.h_matrix.shape[0]


# -- harmonic-oscillator basis -------------------------------------------------

def annihilation(dim):
    """Lowering operator in the number basis, truncated to ``dim`` levels."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def position(dim):
    """``q = (a + a^dagger)/sqrt(2)``."""
    a = annihilation(dim)
    return (a + a.T) / math.sqrt(2.0)


def momentum(dim):
    """``p = i (a^dagger - a)/sqrt(2)``."""
    a = annihilation(dim)
    return 1j * (a.T - a) / math.sqrt(2.0)


def number_hamiltonian(dim, frequency=1.0):
    """``frequency * (n + 1/2)``."""
    return np.diag(frequency * (np.arange(dim) + 0.5))


def position_power(dim, power):
    """``q**power`` restricted to ``dim`` levels (exact within the block)."""
    big = position(dim + power)
    return np.linalg.matrix_power(big, power)[:dim, :dim]


def harmonic_system(dim, coupling="q"):
    """Harmonic oscillator with coupling ``q``, ``q2`` or ``q2+q``."""
    builders = {
        "q": lambda: position(dim),
        "q2": lambda: position_power(dim, 2),
        "q2+q": lambda: position_power(dim, 2) + position(dim),
    }
    if coupling not in builders:
        raise DomainError(f"unknown coupling {coupling!r}; choose from {sorted(builders)}")
    return TruncatedSystem(number_hamiltonian(dim), builders[coupling]())


# -- the functional --------------------------------------------------------------

@dataclass(frozen=True)
class BoundResult:
    value: complex
    error: float
    scale: float
    n_nodes: int

    @property
    def modulus(self):
        return abs(self.value)

    @property
    def significant(self):
        """True when the value is resolved above its error estimate."""
        return self.modulus > self.error


def _integrand(energies, pmat, beta, sigma):
    """``F`` and ``|F|`` bound on an array of imaginary times (energies >= 0)."""
    left = np.exp(-np.outer(sigma, energies))
    right = np.exp(-np.outer(beta - sigma, energies))
    f = np.einsum("im,mn,in->i", left, pmat, right)
    g = np.einsum("im,mn,in->i", left, np.abs(pmat), right)
    return f, g


def _half_nodes(n, beta):
    """Gauss-Legendre nodes for ``[0, beta/2]`` after ``sigma = (beta/2) t**4``."""
    t, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    sigma = 0.5 * beta * t**4
    jac = 2.0 * beta * t**3
    return sigma, w * jac


def bound_functional(ts, sd, tp, rtol=1e-9, max_nodes=4096):
    """Evaluate the commutator functional; returns a :class:`BoundResult`.

    Each half of ``[0, beta]`` is integrated with Gauss-Legendre nodes after
    the substitution ``sigma = (beta/2) t**4`` (mirrored on the upper half),
    which smooths the logarithmic endpoint behaviour of ``K``.  The node
    count starts at 64 per half and doubles until the change is below
    ``rtol`` times the integral of ``|F K|``.
    """
    h = ts.h_matrix
    s = ts.s_matrix
    comm = h @ s - s @ h
    comm_scale = np.abs(h).max() * np.abs(s).max() * ts.dim
    if np.abs(comm).max() <= 16.0 * _EPS * comm_scale or sd.gamma == 0.0:
        return BoundResult(0j, 0.0, 0.0, 0)
    energies, vecs = linalg.eigh(h)
    energies = energies - energies[0]
    s_eig = vecs.conj().T @ s @ vecs
    beta = tp.beta
    weight = np.abs(s_eig) ** 2
    pmat = (energies[:, None] - energies[None, :]) * weight
    z = float(np.sum(np.exp(-beta * energies)))

    def integrate(n):
        sig, w = _half_nodes(n, beta)
        rtols = np.where(sig < _EDGE * beta, 1e-7, 1e-12)
        k = kernel_series(sd, tp, sig, rtol=rtols)
        # K is symmetric about beta/2, so the mirrored node reuses k
        f_lo, g_lo = _integrand(energies, pmat, beta, sig)
        f_hi, g_hi = _integrand(energies, pmat, beta, beta - sig)
        val = float(np.sum(w * k * (f_lo + f_hi)))
        scale = float(np.sum(w * np.abs(k) * (g_lo + g_hi)))
        return val, scale

    n = 64
    prev, scale = integrate(n)
    change = math.inf
    while True:
        n *= 2
        if n > max_nodes:
            raise AccuracyError("commutator functional quadrature did not converge", change)
        cur, scale = integrate(n)
        change = abs(cur - prev)
        if change <= rtol * scale:
            break
        prev = cur
    # rounding in the double sum is of order eps * dim * scale
    err = change + 4.0 * _EPS * ts.dim * scale
    return BoundResult(complex(cur / z), float(err / z), float(scale / z), 2 * n)


def markovian_limit_scan(ts, sd, thetas, full_output=False):
    """Moduli of :func:`bound_functional` along an ascending temperature list."""
    thetas = [float(t) for t in thetas]
    if not thetas or any(t <= 0.0 for t in thetas):
        raise DomainError("temperatures must be positive")
    if any(b <= a for a, b in zip(thetas, thetas[1:])):
        raise DomainError("temperatures must be strictly ascending")
    results = [bound_functional(ts, sd, ThermalPoint(t)) for t in thetas]
    moduli = np.array([r.modulus for r in results])
    return (moduli, results) if full_output else moduli


@dataclass(frozen=True)
class TruncationStudy:
    small: BoundResult
    large: BoundResult

    @property
    def relative_change(self):
        diff = abs(self.large.value - self.small.value)
        if diff == 0.0:
            return 0.0
        ref = self.large.modulus
        return diff / ref if ref > 0.0 else math.inf


def truncation_study(dim, coupling, sd, tp):
    """Evaluate the functional with ``dim`` and ``2 * dim`` harmonic levels."""
    return TruncationStudy(
        bound_functional(harmonic_system(dim, coupling), sd, tp),
        bound_functional(harmonic_system(2 * dim, coupling), sd, tp),
    )
