"""Series summation with analytic tails.

Two kinds of series occur in the package:

* Matsubara sums ``sum_{n>=1} f(n * spacing)`` whose summand has a convergent
  expansion in ``u = 1/nu`` for large ``nu``.  The head is summed directly and
  the tail is ``sum_k c_k spacing**-k * zeta(k, n0)`` (Hurwitz zeta).
* Oscillatory cosine series ``sum_{l>=1} cos(l x) / (l + a)`` whose terms decay
  only like ``1/l``.  The tail is resummed by repeated summation by parts.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .errors import AccuracyError

EPS = np.finfo(float).eps

#: Hard cap on the number of directly summed terms.
N_MAX = 10**7

_CHUNK = 1 << 18


@dataclass(frozen=True)
class SeriesResult:
    value: float
    error: float
    n_terms: int


# -- truncated power series in u -------------------------------------------

def ps_mul(a, b):
    """Product of two truncated power series of equal order."""
    return np.convolve(a, b)[: len(a)]


def ps_inv_one_plus(w):
    """Series of ``1/(1 + w)`` for ``w`` with zero constant term."""
    order = len(w)
    out = np.zeros(order)
    out[0] = 1.0
    for k in range(1, order):
        out[k] = -np.dot(w[1 : k + 1], out[k - 1 :: -1][:k])
    return out


def ps_log_one_plus(w):
    """Series of ``log(1 + w)`` for ``w`` with zero constant term."""
    order = len(w)
    out = np.zeros(order)
    power = w.copy()
    j = 1
    while j < order and np.any(power):
        out += ((-1) ** (j + 1) / j) * power
        power = ps_mul(power, w)
        j += 1
    return out


# -- Matsubara-type sums -----------------------------------------------------

def _pairwise_sum(values):
    total = 0.0
    abs_total = 0.0
    for i in range(0, len(values), _CHUNK):
        block = values[i : i + _CHUNK]
        total += float(np.sum(block))
        abs_total += float(np.sum(np.abs(block)))
    return total, abs_total


def zeta_tail(coeffs, start, spacing):
    """Sum ``sum_{n>=start} sum_k coeffs[k] * (n*spacing)**-k``.

    ``coeffs[0]`` and ``coeffs[1]`` must vanish (the tail must converge).
    Returns ``(value, error)`` where the error is the size of the last two
    retained orders.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs[0] != 0.0 or coeffs[1] != 0.0:
        raise ValueError("tail expansion must start at order u**2")
    k = np.arange(2, len(coeffs))
    terms = coeffs[2:] * spacing ** (-k.astype(float)) * zeta(k.astype(float), float(start))
    return float(np.sum(terms[::-1])), float(np.sum(np.abs(terms[-2:])))


def matsubara_sum(term, coeffs, spacing, nu_min, n_max=N_MAX):
    """Sum ``term(nu_n)`` over ``nu_n = n*spacing`` for ``n >= 1``.

    Parameters
    ----------
    term : callable
        Vectorised summand as a function of the frequency ``nu``.
    coeffs : array_like
        Expansion coefficients of ``term`` in powers of ``1/nu``, valid for
        ``nu >= nu_min``.
    spacing : float
        Frequency step (the fundamental Matsubara frequency).
    nu_min : float
        Frequency beyond which the expansion is trusted.
    """
    n_cut = max(0, math.ceil(nu_min / spacing) - 1)
    if n_cut > n_max:
        raise AccuracyError(
            f"Matsubara series needs {n_cut} direct terms (cap {n_max})", float("inf")
        )
    head, head_abs = 0.0, 0.0
    for lo in range(1, n_cut + 1, _CHUNK):
        hi = min(n_cut, lo + _CHUNK - 1)
        nu = spacing * np.arange(lo, hi + 1, dtype=float)
        s, a = _pairwise_sum(term(nu))
        head += s
        head_abs += a
    tail, tail_err = zeta_tail(coeffs, n_cut + 1, spacing)
    rounding = EPS * (head_abs + abs(tail)) * max(1.0, math.log2(n_cut + 1))
    return SeriesResult(head + tail, tail_err + rounding, n_cut)


# -- oscillatory series ------------------------------------------------------

# Below this reduced angle the log-split route is used.
_SMALL_ANGLE = 1e-3
_EULER_ORDER = 16


def _cos_head(y, a, m):
    """``sum_{l=1}^{m-1} cos(l y)/(l + a)`` for a scalar angle."""
    total = 0.0
    for lo in range(1, m, _CHUNK):
        hi = min(m - 1, lo + _CHUNK - 1)
        l = np.arange(lo, hi + 1, dtype=float)
        total += float(np.sum(np.cos(l * y) / (l + a)))
    return total


def _cos_euler(y, a, rtol, n_max):
    z = complex(math.cos(y), math.sin(y))
    r = z / (1.0 - z)
    r_abs = 1.0 / (2.0 * math.sin(0.5 * y))
    order = _EULER_ORDER
    # (M + a) >= r_abs * ((K-1)!/tol)**(1/K) with tol relative to an O(1) value
    scale = (math.factorial(order - 1) / (0.1 * rtol)) ** (1.0 / order)
    m = max(32, math.ceil(r_abs * scale - a))
    while True:
        if m > n_max:
            raise AccuracyError(f"cosine series needs {m} terms (cap {n_max})", float("inf"))
        head = _cos_head(y, a, m)
        tail = 0j
        prod = m + a
        fact = 1.0
        rk = 1.0 + 0j
        for k in range(order):
            # Delta^k f(M) for f(l) = 1/(l + a)
            delta = (-1) ** k * fact / prod
            tail += rk * delta
            rk *= r
            fact *= k + 1
            prod *= m + a + k + 1
        tail *= z**m / (1.0 - z)
        # |r|^K (K-1)!/prod_{j<K}(M+a+j)
        prod_k = math.prod(m + a + j for j in range(order))
        bound = r_abs**order * math.factorial(order - 1) / prod_k
        value = head + tail.real
        err = bound + EPS * m * (1.0 / (1.0 + a))
        if bound <= rtol * max(abs(value), 1e-300):
            return value, err, m
        m *= 2


def _cos_logsplit(y, a, rtol, n_max):
    # 1/(l+a) = 1/l - a/l**2 + a**2/(l**2 (l+a)); the first two sums are closed.
    log_part = -math.log(2.0 * math.sin(0.5 * y))
    quad_part = math.pi**2 / 6.0 - 0.5 * math.pi * y + 0.25 * y * y
    base = log_part - a * quad_part
    a2 = a * a
    m = 1 << 14
    while True:
        total = 0.0
        for lo in range(1, m, _CHUNK):
            hi = min(m - 1, lo + _CHUNK - 1)
            l = np.arange(lo, hi + 1, dtype=float)
            total += float(np.sum(np.cos(l * y) / (l * l * (l + a))))
        value = base + a2 * total
        bound = a2 / (2.0 * (m - 1) ** 2)
        if bound <= rtol * max(abs(value), 1e-300):
            return value, bound + EPS * (abs(log_part) + a * quad_part), m
        need = 1 + math.ceil(a * math.sqrt(1.0 / (2.0 * rtol * max(abs(value), 1e-300))))
        m = max(2 * m, need)
        if m > n_max:
            raise AccuracyError(f"cosine series needs {m} terms (cap {n_max})", bound)


def cosine_reciprocal_series(x, a, rtol=1e-12, n_max=N_MAX):
    """Evaluate ``sum_{l>=1} cos(l x) / (l + a)`` for ``0 < x < 2 pi``, ``a >= 0``.

    Returns a :class:`SeriesResult`.  The series diverges logarithmically
    as ``x -> 0`` or ``x -> 2 pi``.
    """
    x = float(x)
    if not 0.0 < x < 2.0 * math.pi:
        raise ValueError("angle must lie strictly inside (0, 2 pi)")
    y = min(x, 2.0 * math.pi - x)
    if y >= _SMALL_ANGLE:
        value, err, m = _cos_euler(y, a, rtol, n_max)
    else:
        value, err, m = _cos_logsplit(y, a, rtol, n_max)
    return SeriesResult(value, err, m)
