"""Exact finite-bath reference model.

One or two system oscillators (mass 1, frequency 1) are each coupled to their
own discretised Drude bath through the potential ``sum_j m_j w_j**2 (q_j - q)**2 / 2``.
The two systems, when present, interact through ``-c q1 q2``.

In mass-weighted bath coordinates ``x_j = sqrt(m_j) q_j`` the stiffness of a
single system and its bath is an arrowhead matrix::

    [[alpha, z^T],
     [z,     diag(w_j**2)]],   alpha = 1 + sum m_j w_j**2,  z_j = -sqrt(m_j) w_j**2

whose ``N + 1`` eigenvalues interlace the bath poles ``w_j**2``.  They are
found in O(N**2) from the secular equation rather than by a dense
eigensolver.  Two systems with identical baths split exactly into a
symmetric and an antisymmetric arrowhead problem with ``alpha -/+ c``.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg

from .bath import SpectralDensity, ThermalPoint, spectral_density
from .errors import DomainError, ModelError, StabilityError
from .gaussian import GaussianState, mode_entropy, quadratic_moments, symplectic_eigenvalues

#: Upper limit on the number of modes per bath.
MAX_BATH = 10**4

_EPS = np.finfo(float).eps
_CHUNK = 256
_MAX_ITER = 200


@dataclass(frozen=True)
class DiscretizationRule:
    """Arctan-uniform midpoint rule for the bath spectrum.

    ``omega_max`` is the highest bath frequency in units of the cutoff
    frequency.  Its default keeps the friction weight missed by the
    truncation, ``1 - (2/pi) arctan(omega_max)``, below 1e-3.
    """

    n_bath: int
    omega_max: float = 1000.0
    scheme: str = "arctan-midpoint"

    def __post_init__(self):
        if not (isinstance(self.n_bath, (int, np.integer)) and 1 <= self.n_bath <= MAX_BATH):
            raise DomainError(f"n_bath must be an integer in [1, {MAX_BATH}], got {self.n_bath}")
        if not self.omega_max > 0.0:
            raise DomainError("omega_max must be positive")
        if self.scheme != "arctan-midpoint":
            raise DomainError(f"unknown discretization scheme {self.scheme!r}")


@dataclass(frozen=True, eq=False)
class StarModel:
    """A finite system+bath model; arrays describe one bath (shared layout for pairs)."""

    bath_frequencies: np.ndarray
    bath_masses: np.ndarray
    bin_widths: np.ndarray = field(repr=False)
    system_count: int = 1
    system_frequency: float = 1.0
    system_coupling: float = 0.0

    def __post_init__(self):
        if self.system_count not in (1, 2):
            raise DomainError("system_count must be 1 or 2")
        if self.system_frequency != 1.0:
            raise DomainError("only the unit system frequency is supported")
        c = self.system_coupling
        if self.system_count == 1 and c != 0.0:
            raise DomainError("system_coupling needs two systems")
        if not 0.0 <= c < 1.0:
            raise StabilityError(f"coupling c={c} makes the system unstable (need 0 <= c < 1)")

    @property
    def n_bath(self):
        return len(self.bath_frequencies)

    @property
    def counterterm(self):
        """Stiffness added to each system by its bath, ``sum_j m_j w_j**2``."""
        return float(np.sum(self.bath_masses * self.bath_frequencies**2))

    def system_stiffness(self):
        c = self.system_coupling
        if self.system_count == 1:
            return np.array([[1.0]])
        return np.array([[1.0, -c], [-c, 1.0]])

    def stiffness(self, mass_weighted=True):
        """Full stiffness matrix, ordering ``(systems, bath 1, bath 2)``."""
        s = self.system_count
        n = self.n_bath
        w2 = self.bath_frequencies**2
        m = self.bath_masses
        size = s + s * n
        k = np.zeros((size, size))
        k[:s, :s] = self.system_stiffness() + np.eye(s) * self.counterterm
        for i in range(s):
            sl = slice(s + i * n, s + (i + 1) * n)
            if mass_weighted:
                k[i, sl] = -np.sqrt(m) * w2
                k[sl, sl] = np.diag(w2)
            else:
                k[i, sl] = -m * w2
                k[sl, sl] = np.diag(m * w2)
            k[sl, i] = k[i, sl]
        return k

    @cached_property
    def spectra(self):
        """Normal modes of each arrowhead sector, computed once per model."""
        return _sectors(self)

    def masses(self):
        s = self.system_count
        return np.concatenate([np.ones(s), np.tile(self.bath_masses, s)])


def discretize(sd, rule, system_count=1, c=0.0):
    """Discretise ``sd`` into a :class:`StarModel` with ``rule.n_bath`` modes per bath.

    A bath without coupling (``gamma = 0``) has no modes.
    """
    if sd.gamma == 0.0:
        empty = np.zeros(0)
        return StarModel(empty, empty, empty, system_count, 1.0, c)
    n = rule.n_bath
    wd = sd.omega_d
    phi_max = math.atan(rule.omega_max)
    edges = np.tan(np.linspace(0.0, phi_max, n + 1))
    mids = np.tan(0.5 * (np.arctan(edges[:-1]) + np.arctan(edges[1:])))
    omega = wd * mids
    widths = wd * np.diff(edges)
    masses = (2.0 / math.pi) * spectral_density(sd, omega) * widths / omega**3
    if not np.all(masses > 0.0):
        raise ModelError("non-positive bath mass in discretisation")
    return StarModel(omega, masses, widths, system_count, 1.0, c)


def discrete_effective_coupling(sm, z):
    """Effective coupling of the discrete bath at frequency ``z``.

    The continuum integral of ``J/omega`` against ``2z/(omega**2 + z**2)/pi``
    becomes ``sum_j m_j w_j**2 z / (w_j**2 + z**2)``.
    """
    w2 = sm.bath_frequencies**2
    return float(np.sum(sm.bath_masses * w2 * z / (w2 + z * z)))


# -- arrowhead eigenproblem ----------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    """Normal modes of one arrowhead sector.

    ``eigenvalues = origin + shift`` with the origin a bath pole (or 0); the
    split keeps the distance to the nearest pole accurate.  ``weights`` are the
    squared system components of the normalised eigenvectors.
    """

    origin: np.ndarray
    shift: np.ndarray
    weights: np.ndarray
    poles: np.ndarray
    schur: float

    @property
    def eigenvalues(self):
        return self.origin + self.shift


def _secular_eval(alpha, z2, d, p, tau):
    """``psi`` and ``psi'`` of the secular function with the origin pole removed."""
    dp = np.where(p >= 0, d[np.maximum(p, 0)], 0.0)
    denom = (dp[:, None] - d[None, :]) + tau[:, None]
    rows = np.nonzero(p >= 0)[0]
    denom[rows, p[rows]] = np.inf
    r = z2[None, :] / denom
    psi = (alpha - dp - tau) + r.sum(axis=1)
    dpsi = -1.0 - (r * r / z2[None, :]).sum(axis=1) if z2.size else -np.ones_like(tau)
    # magnitude of the summed terms, the scale of the rounding error in psi
    scale = np.abs(alpha - dp) + np.abs(tau) + np.abs(r).sum(axis=1)
    return psi, dpsi, scale


def _secular_chunk(alpha, z2, d, p, lo, hi):
    z2p = np.where(p >= 0, z2[np.maximum(p, 0)], 0.0)
    side = np.where(hi <= 0.0, -1.0, 1.0)
    tau = 0.5 * (lo + hi)
    done = np.zeros(tau.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        psi, dpsi, scale = _secular_eval(alpha, z2, d, p, tau)
        with np.errstate(divide="ignore", invalid="ignore"):
            pole = np.where(z2p > 0.0, z2p / tau, 0.0)
        f = pole + psi
        resolved = np.abs(f) <= 8.0 * _EPS * (scale + np.abs(pole))
        lo = np.where(f > 0.0, tau, lo)
        hi = np.where(f < 0.0, tau, hi)
        # rational model z2p/t + psi + dpsi (t - tau) = 0
        b = psi - dpsi * tau
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = np.sqrt(b * b - 4.0 * dpsi * z2p)
            q = -0.5 * (b + np.copysign(disc, b))
            r1 = q / dpsi
            r2 = z2p / q
            step = np.where(np.sign(r1) == side, r1, r2)
            step = np.where(z2p > 0.0, step, -b / dpsi)
        inside = (step > lo) & (step < hi) & np.isfinite(step)
        new = np.where(inside, step, 0.5 * (lo + hi))
        converged = (np.abs(new - tau) <= 4.0 * _EPS * np.abs(new)) | (
            hi - lo <= 4.0 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        ) | resolved
        tau = np.where(done | resolved, tau, new)
        done |= converged
        if done.all():
            break
    else:
        raise ModelError("secular equation did not converge")
    psi, dpsi, _ = _secular_eval(alpha, z2, d, p, tau)
    with np.errstate(divide="ignore"):
        pole_part = np.where(z2p > 0.0, z2p / (tau * tau), 0.0)
    weights = 1.0 / (pole_part - dpsi)
    return tau, weights


def arrowhead_spectrum(alpha, z, d):
    """Eigenvalues and system weights of ``[[alpha, z^T], [z, diag(d)]]``.

    ``d`` must be strictly increasing and positive, and the matrix positive
    definite.
    """
    d = np.asarray(d, dtype=float)
    z2 = np.asarray(z, dtype=float) ** 2
    n = d.size
    if n == 0:
        return Spectrum(np.zeros(1), np.array([alpha]), np.ones(1), d, alpha)
    if np.any(np.diff(d) <= 0.0) or d[0] <= 0.0:
        raise ModelError("bath poles must be positive and distinct")
    if np.any(z2 == 0.0):
        raise ModelError("decoupled bath modes must be removed before solving")
    schur = alpha - float(np.sum(z2 / d))
    if not schur > 0.0:
        raise ModelError("stiffness matrix is not positive definite")
    # root k lies in (d[k-1], d[k]) with d[-1] = 0 and d[n] = top
    top = d[-1] + abs(alpha) + math.sqrt(float(np.sum(z2)))
    left = np.concatenate([[0.0], d])
    right = np.concatenate([d, [top]])
    mid = 0.5 * (left + right)
    # f(mid) decides which end is nearer the root
    p_left = np.arange(-1, n)
    f_mid = np.empty(n + 1)
    for s in range(0, n + 1, _CHUNK):
        sl = slice(s, s + _CHUNK)
        half = 0.5 * (right[sl] - left[sl])
        psi, _, _ = _secular_eval(alpha, z2, d, p_left[sl], half)
        pl = p_left[sl]
        with np.errstate(divide="ignore"):
            f_mid[sl] = psi + np.where(pl >= 0, z2[np.maximum(pl, 0)] / half, 0.0)
    upper = (f_mid > 0.0) & (np.arange(n + 1) < n)
    p = np.where(upper, np.arange(n + 1), p_left)
    gap_half = 0.5 * (right - left)
    lo = np.where(upper, -gap_half, 0.0)
    hi = np.where(upper, 0.0, np.where(np.arange(n + 1) < n, gap_half, right - left))
    # a root exactly at the midpoint
    lo = np.where(f_mid == 0.0, gap_half, lo)
    hi = np.where(f_mid == 0.0, gap_half, hi)
    taus = np.empty(n + 1)
    weights = np.empty(n + 1)
    for s in range(0, n + 1, _CHUNK):
        sl = slice(s, s + _CHUNK)
        taus[sl], weights[sl] = _secular_chunk(alpha, z2, d, p[sl], lo[sl], hi[sl])
    origin = np.where(p >= 0, d[np.maximum(p, 0)], 0.0)
    if np.any(origin + taus <= 0.0):
        raise ModelError("non-positive normal-mode frequency")
    return Spectrum(origin, taus, weights, d, schur)


def _sectors(sm):
    """Arrowhead problems making up the model, with their system stiffness."""
    w2 = sm.bath_frequencies**2
    z = -np.sqrt(sm.bath_masses) * w2
    ct = sm.counterterm
    if sm.system_count == 1:
        return [arrowhead_spectrum(1.0 + ct, z, w2)]
    c = sm.system_coupling
    return [arrowhead_spectrum(1.0 - c + ct, z, w2), arrowhead_spectrum(1.0 + c + ct, z, w2)]


def _coth_minus_inv(x):
    """``coth(x) - 1/x``, accurate for small ``x``."""
    x = np.asarray(x, dtype=float)
    small = x < 1e-2
    xs = np.where(small, x, 1.0)
    series = xs / 3.0 - xs**3 / 45.0 + 2.0 * xs**5 / 945.0 - xs**7 / 4725.0
    xl = np.where(small, 1.0, x)
    direct = 1.0 / np.tanh(xl) - 1.0 / xl
    return np.where(small, series, direct)


def _sector_moments(spectrum, tp):
    """Quantum ``(<Q^2>, <P^2>)`` of the system coordinate of one sector."""
    beta = tp.beta
    lam = spectrum.eigenvalues
    om = np.sqrt(lam)
    x = 0.5 * beta * om
    ctm = _coth_minus_inv(x)
    # split off the classical part theta/omega**2, whose weighted sum is theta/schur
    q = tp.theta / spectrum.schur + float(np.sum(spectrum.weights * ctm / (2.0 * om)))
    p = tp.theta * float(np.sum(spectrum.weights)) + float(np.sum(spectrum.weights * x * ctm)) / beta
    return q, p


def quantum_reduced_state(sm, tp):
    """Reduced Gaussian state of the system oscillator(s) in the total Gibbs state."""
    specs = sm.spectra
    if sm.system_count == 1:
        q, p = _sector_moments(specs[0], tp)
        return GaussianState(np.diag([q, p]))
    (qp, pp), (qm, pm) = (_sector_moments(s, tp) for s in specs)
    qq = 0.5 * (qp + qm)
    qx = 0.5 * (qp - qm)
    pq = 0.5 * (pp + pm)
    px = 0.5 * (pp - pm)
    return GaussianState(
        np.array([[qq, 0, qx, 0], [0, pq, 0, px], [qx, 0, qq, 0], [0, px, 0, pq]])
    )


def classical_reduced_state(sm, tp):
    """Classical Boltzmann covariance of the system block.

    Positions: system block of ``theta * K**-1`` from a Cholesky factorisation
    with the bath eliminated first; momenta: ``theta`` times the system mass.
    """
    s = sm.system_count
    k = sm.stiffness()
    order = np.r_[s : k.shape[0], 0:s]
    kk = k[np.ix_(order, order)]
    try:
        factor = linalg.cho_factor(kk, lower=True)
    except linalg.LinAlgError:
        raise ModelError("stiffness matrix is not positive definite") from None
    rhs = np.zeros((kk.shape[0], s))
    rhs[-s:, :] = np.eye(s)
    sol = linalg.cho_solve(factor, rhs)[-s:, :]
    qblock = tp.theta * 0.5 * (sol + sol.T)
    cov = np.zeros((2 * s, 2 * s))
    cov[0::2, 0::2] = qblock
    cov[1::2, 1::2] = tp.theta * np.eye(s)
    return cov


def _log_sinhc(x):
    """``ln(sinh(x)/x)`` elementwise."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-4
    big = x >= 20.0
    mid = ~small & ~big
    out[small] = np.log1p(x[small] ** 2 / 6.0)
    out[mid] = np.log(np.sinh(x[mid]) / x[mid])
    xb = x[big]
    out[big] = xb - np.log(2.0 * xb) + np.log1p(-np.exp(-2.0 * xb))
    return out


def _log_sinhc_diff(x, y, dxy):
    """``ln(sinh x/x) - ln(sinh y/y)`` given ``dxy = x - y`` computed accurately."""
    out = _log_sinhc(x) - _log_sinhc(y)
    big = y > 1.0
    xb, yb, db = x[big], y[big], dxy[big]
    out[big] = (
        db - np.log1p(db / yb) + np.log1p(-np.exp(-2.0 * xb)) - np.log1p(-np.exp(-2.0 * yb))
    )
    return out


def partition_ratio(sm, tp):
    """``ln Z - ln Z_can`` with ``Z = Z_total / Z_bath`` from normal modes.

    Written with ``h(x) = ln(sinh(x)/x)``, ``ln Z_total - ln Z_bath`` is
    ``-ln(beta**s det K_S**(1/2)) - sum_k h(x_k) + sum_j h(y_j)`` where ``K_S``
    is the bare system stiffness; each normal mode is paired with the bath
    pole just below it so the large terms cancel analytically.
    """
    beta = tp.beta
    total = 0.0
    for spectrum in sm.spectra:
        lam = spectrum.eigenvalues
        x = 0.5 * beta * np.sqrt(lam)
        total -= float(_log_sinhc(x[:1])[0])
        if spectrum.poles.size:
            y = 0.5 * beta * np.sqrt(spectrum.poles)
            lower = spectrum.poles
            # lam[k] - poles[k-1], exact when the origin is that pole
            gap = np.where(
                spectrum.origin[1:] == lower, spectrum.shift[1:], (spectrum.origin[1:] - lower) + spectrum.shift[1:]
            )
            dxy = 0.5 * beta * gap / (np.sqrt(lam[1:]) + np.sqrt(lower))
            total -= float(np.sum(_log_sinhc_diff(x[1:], y, dxy)))
        # canonical reference for the normal mode of the bare system stiffness
        total += float(_log_sinhc(np.array([0.5 * beta * math.sqrt(spectrum.schur)]))[0])
    return total


def reduced_entropy(sm, tp):
    """Von Neumann entropy of the single-system reduced state."""
    if sm.system_count != 1:
        raise DomainError("reduced_entropy needs a single system")
    st = quantum_reduced_state(sm, tp)
    return mode_entropy(math.sqrt(st.sigma[0, 0] * st.sigma[1, 1]))


# -- full covariance and uncertainty relations ----------------------------------

def full_covariance(sm, tp):
    """Covariance of all modes in mass-weighted coordinates, ordering ``(q0, p0, x1, p1, ...)``.

    Uses a dense eigensolver; intended for moderate ``N``.
    """
    k = sm.stiffness()
    lam, vec = linalg.eigh(k)
    if lam[0] <= 0.0:
        raise ModelError("non-positive normal-mode frequency")
    om = np.sqrt(lam)
    c = 1.0 / np.tanh(0.5 * tp.beta * om)
    xx = (vec * (0.5 * c / om)) @ vec.T
    pp = (vec * (0.5 * c * om)) @ vec.T
    size = k.shape[0]
    cov = np.zeros((2 * size, 2 * size))
    cov[0::2, 0::2] = 0.5 * (xx + xx.T)
    cov[1::2, 1::2] = 0.5 * (pp + pp.T)
    return cov


def _interleave(qform, pform):
    size = qform.shape[0]
    out = np.zeros((2 * size, 2 * size))
    out[0::2, 0::2] = qform
    out[1::2, 1::2] = pform
    return out


def system_and_coupling_forms(sm):
    """Quadratic forms of ``H_S`` and ``V`` in mass-weighted full coordinates."""
    s = sm.system_count
    k = sm.stiffness()
    size = k.shape[0]
    hq = np.zeros((size, size))
    hq[:s, :s] = sm.system_stiffness()
    hp = np.zeros((size, size))
    hp[:s, :s] = np.eye(s)
    vq = k - hq
    return _interleave(hq, hp), _interleave(vq, np.zeros((size, size)))


@dataclass(frozen=True)
class UncertaintyQuantities:
    delta_hs: float
    delta_v: float
    commutator_abs: float

    @property
    def slack(self):
        """``dH dV - |<[H, V]>|/2``; non-negative by the uncertainty relation."""
        return self.delta_hs * self.delta_v - 0.5 * self.commutator_abs


def uncertainty_quantities(sm, tp):
    """Spreads of ``H_S`` and ``V`` and ``|<[H_S, V]>|`` in the total Gibbs state."""
    cov = full_covariance(sm, tp)
    h_form, v_form = system_and_coupling_forms(sm)
    gs = GaussianState(cov)
    mh = quadratic_moments(gs, h_form, v_form)
    mv = quadratic_moments(gs, v_form, h_form)
    return UncertaintyQuantities(
        math.sqrt(max(mh.var_a, 0.0)),
        math.sqrt(max(mv.var_a, 0.0)),
        abs(mh.commutator_expectation),
    )


def check_physical(state, slack=1e-10):
    """Raise :class:`ModelError` unless every symplectic eigenvalue is >= 1/2 - slack."""
    u = symplectic_eigenvalues(state)
    if u[0] < 0.5 - slack:
        raise ModelError(f"unphysical reduced state, symplectic eigenvalue {u[0]}")
    return u
