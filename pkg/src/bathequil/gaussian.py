"""Mean-zero Gaussian states described by their covariance matrix.

Conventions: ``sigma_ij = <{x_i, x_j}>/2`` with ``x = (q1, p1, q2, p2, ...)``
and ``hbar = 1``, so the vacuum has ``sigma = I/2`` and every symplectic
eigenvalue of a physical state is at least ``1/2``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DomainError

_EPS = np.finfo(float).eps

#: Slack allowed below 1/2 for symplectic eigenvalues.
PHYSICAL_SLACK = 1e-12


def symplectic_form(n_modes):
    """Block-diagonal ``J`` with ``[[0, 1], [-1, 0]]`` blocks."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True, eq=False)
class GaussianState:
    sigma: np.ndarray

    def __post_init__(self):
        s = np.array(self.sigma, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise DomainError(f"covariance must be 2n x 2n, got shape {s.shape}")
        if not np.allclose(s, s.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(s).max())):
            raise DomainError("covariance matrix is not symmetric")
        s = 0.5 * (s + s.T)
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)

    @property
    def n_modes(self):
        return self.sigma.shape[0] // 2

    @property
    def omega_form(self):
        return symplectic_form(self.n_modes)

    def is_physical(self, slack=PHYSICAL_SLACK):
        try:
            return bool(symplectic_eigenvalues(self)[0] >= 0.5 - slack)
        except DomainError:
            return False

    def block(self, modes):
        """Reduced state of the listed modes."""
        idx = np.ravel([[2 * m, 2 * m + 1] for m in modes])
        return GaussianState(self.sigma[np.ix_(idx, idx)])


def _symplectic_spectrum(sigma):
    n = sigma.shape[0] // 2
    try:
        chol = linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError:
        raise DomainError("covariance matrix is not positive definite") from None
    # L^T J L is antisymmetric with eigenvalues +-i u_k
    a = chol.T @ symplectic_form(n) @ chol
    a = 0.5 * (a - a.T)
    t, _ = linalg.schur(a, output="real")
    vals = []
    i = 0
    size = t.shape[0]
    while i < size:
        if i + 1 < size and t[i + 1, i] != 0.0:
            vals.append(math.sqrt(abs(t[i, i + 1] * t[i + 1, i])))
            i += 2
        else:
            # a 1x1 block of an antisymmetric matrix is a zero eigenvalue
            vals.append(abs(t[i, i]))
            i += 1
    vals = sorted(vals)
    if len(vals) != n:
        # degenerate zero pairs split into 1x1 blocks; keep the n largest
        vals = vals[-n:]
    return np.array(vals)


def symplectic_eigenvalues(gs):
    """Symplectic eigenvalues of ``gs`` in ascending order."""
    return _symplectic_spectrum(gs.sigma)


def mode_entropy(u):
    """Entropy of one thermal mode with symplectic eigenvalue ``u`` (k_B units)."""
    u = float(u)
    if u < 0.5 - PHYSICAL_SLACK:
        raise DomainError(f"symplectic eigenvalue {u} below 1/2")
    lo = u - 0.5
    hi = u + 0.5
    # the slope diverges at u = 1/2, so a few ulps of rounding would otherwise
    # show up as a spurious entropy of order 1e-15 for pure modes
    if lo <= 8.0 * _EPS * u:
        return 0.0
    return hi * math.log(hi) - lo * math.log(lo)


def von_neumann_entropy(gs):
    """``-tr rho ln rho`` of the state."""
    return float(sum(mode_entropy(u) for u in symplectic_eigenvalues(gs)))


def partial_transpose(gs, modes):
    """Flip the sign of the momenta of ``modes`` (time reversal on that party)."""
    signs = np.ones(2 * gs.n_modes)
    for m in modes:
        signs[2 * m + 1] = -1.0
    return GaussianState(signs[:, None] * gs.sigma * signs[None, :])


def logarithmic_negativity(gs, partition=((0,), (1,))):
    """Logarithmic negativity across a bipartition of single modes."""
    party_a, party_b = (tuple(p) for p in partition)
    all_modes = set(range(gs.n_modes))
    if (
        len(party_a) != 1
        or len(party_b) != 1
        or set(party_a) & set(party_b)
        or not set(party_a) | set(party_b) <= all_modes
    ):
        raise DomainError(f"unsupported bipartition {partition!r}")
    sub = gs.block(party_a + party_b)
    pt = partial_transpose(sub, [1])
    nu = symplectic_eigenvalues(pt)
    small = nu[nu < 0.5]
    return float(max(0.0, -np.sum(np.log(2.0 * small))))


@dataclass(frozen=True)
class QuadraticMoments:
    mean_a: float
    var_a: float
    commutator_expectation: complex


def _check_form(form, dim, name):
    f = np.asarray(form, dtype=float)
    if f.shape != (dim, dim):
        raise DomainError(f"{name} must be {dim} x {dim}, got {f.shape}")
    if not np.allclose(f, f.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(f).max())):
        raise DomainError(f"{name} is not symmetric")
    return 0.5 * (f + f.T)


def quadratic_moments(gs, a_form, c_form, quantum=True):
    """Moments of ``Q_A = x^T A x / 2`` and ``<[Q_C, Q_A]>`` in the state.

    With ``quantum=False`` the ordering term is dropped and the classical
    Gaussian (real Wick) results are returned.
    """
    dim = gs.sigma.shape[0]
    a = _check_form(a_form, dim, "a_form")
    c = _check_form(c_form, dim, "c_form")
    sig = gs.sigma
    j = gs.omega_form
    mean = 0.5 * np.trace(a @ sig)
    a_sig = a @ sig
    var = 0.5 * np.trace(a_sig @ a_sig)
    if not quantum:
        return QuadraticMoments(float(mean), float(var), 0j)
    aj = a @ j
    var += 0.125 * np.trace(aj @ aj)
    # Wick pairing with G = <x x^T> = sigma + (i/2) J
    g = sig + 0.5j * j
    ca = np.trace(c @ g @ a @ g.T)
    ac = np.trace(a @ g @ c @ g.T)
    return QuadraticMoments(float(mean), float(var), complex(0.5 * (ca - ac)))


def commutator_expectation_direct(gs, a_form, c_form):
    """``<[Q_C, Q_A]>`` from the commutator form ``(i/2) x^T (C J A - A J C) x``."""
    a = np.asarray(a_form, dtype=float)
    c = np.asarray(c_form, dtype=float)
    j = gs.omega_form
    m = c @ j @ a - a @ j @ c
    return 0.5j * float(np.trace(m @ gs.sigma))


# -- state builders ------------------------------------------------------------

def thermal_state(theta, frequency=1.0):
    """Single thermal mode of an oscillator of the given frequency."""
    s = 0.5 / math.tanh(0.5 * frequency / theta)
    return GaussianState(np.diag([s / frequency, s * frequency]))


def vacuum(n_modes=1):
    return GaussianState(0.5 * np.eye(2 * n_modes))


def two_mode_squeezed(r):
    """Two-mode squeezed vacuum in standard form."""
    c = math.cosh(2.0 * r)
    s = math.sinh(2.0 * r)
    return GaussianState(
        0.5 * np.array([[c, 0, s, 0], [0, c, 0, -s], [s, 0, c, 0], [0, -s, 0, c]])
    )


def random_symplectic(n_modes, rng, scale=0.5):
    """``exp(J H)`` for a random symmetric ``H``; always symplectic."""
    h = rng.normal(scale=scale, size=(2 * n_modes, 2 * n_modes))
    h = 0.5 * (h + h.T)
    return linalg.expm(symplectic_form(n_modes) @ h)


def random_state(n_modes, rng):
    """Random physical state: thermal modes dressed by a random symplectic map."""
    u = 0.5 + rng.exponential(size=n_modes)
    s = random_symplectic(n_modes, rng)
    return GaussianState(s @ np.diag(np.repeat(u, 2)) @ s.T)
