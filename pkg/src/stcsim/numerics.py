"""Dense linear-algebra kernels and the special functions used by the rate bounds.

Everything here is deliberately small: Gram matrices, a Cholesky-backed
log-determinant, singular values, the upper incomplete gamma function at
non-positive integer order, and the integer digamma. The incomplete gamma
is evaluated through the exponential integral E_m; the ergodic bounds only
ever need the exponentially scaled product e^x * E_m(x), which is exposed
directly so callers never have to form overflowing intermediates.
"""

import numpy as np
from scipy.special import exp1

from .errors import DomainError, NonPositiveDefiniteError, ShapeError

EULER_GAMMA = float(np.euler_gamma)

_LENTZ_EPS = 1e-15
_LENTZ_TINY = 1e-300
_LENTZ_MAXIT = 400


def _check_matrix(a, name="matrix"):
    a = np.asarray(a)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-d, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name} must be non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise DomainError(f"{name} has non-finite entries")
    return a


def hermitian_gram(a):
    """Return A^H A, symmetrized so the result is exactly Hermitian.

    :param a: complex or real matrix, shape (m, n)
    :return: Hermitian positive semidefinite matrix, shape (n, n)
    """
    a = _check_matrix(a, "a")
    g = a.conj().T @ a
    return 0.5 * (g + g.conj().T)


def logdet_hermitian_psd(g):
    """Natural log-determinant of a Hermitian positive definite matrix.

    Uses a Cholesky factorization (log det = 2 sum log diag L) rather than LU,
    so near-singular inputs fail loudly instead of returning a noisy value.

    :raises NonPositiveDefiniteError: if any Cholesky pivot is <= 0.
    """
    g = _check_matrix(g, "g")
    if g.shape[0] != g.shape[1]:
        raise ShapeError(f"g must be square, got shape {g.shape}")
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefiniteError(str(exc)) from exc
    diag = np.real(np.diag(chol))
    if np.any(diag <= 0.0):
        raise NonPositiveDefiniteError("non-positive Cholesky pivot")
    return 2.0 * float(np.sum(np.log(diag)))


def singular_values(a):
    """Singular values of a matrix, descending, as a 1-d float array."""
    a = _check_matrix(a, "a")
    return np.linalg.svd(a, compute_uv=False)


def _expint_scaled_recurrence(m, x):
    # e^x E_1, then upward. Error amplification from the seed is
    # x^(k-1)/(k-1)! <= e^x, so this is only used for small x.
    f = np.exp(x) * float(exp1(x))
    for k in range(1, m):
        f = (1.0 - x * f) / k
    return f


def _expint_scaled_lentz(m, x):
    # Modified Lentz evaluation of the continued fraction for e^x E_m(x).
    b = x + m
    c = 1.0 / _LENTZ_TINY
    d = 1.0 / b
    h = d
    for i in range(1, _LENTZ_MAXIT + 1):
        a = -i * (m - 1 + i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _LENTZ_EPS:
            return h
    raise DomainError(f"continued fraction for E_{m}({x}) did not converge")


def expint_scaled(m, x):
    """Exponentially scaled exponential integral e^x * E_m(x).

    Stable for the whole range the rate bounds need: the upward recurrence
    from E_1 is used where it is provably safe (x <= 1.5) and a Lentz
    continued fraction elsewhere. Never overflows, since e^x is folded in.

    :param m: integer order >= 1
    :param x: argument > 0
    """
    m = int(m)
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}")
    if not np.isfinite(x) or x <= 0.0:
        raise DomainError(f"argument must be finite and > 0, got {x}")
    x = float(x)
    if x <= 1.5:
        return _expint_scaled_recurrence(m, x)
    return _expint_scaled_lentz(m, x)


def gamma_upper(a, x):
    """Upper incomplete gamma Gamma(a, x) for integer a <= 1 and x > 0.

    Evaluated through the identity Gamma(1 - m, x) = x^(1 - m) E_m(x) with
    m = 1 - a. For a = 1 this reduces to e^{-x}.
    """
    a = int(a)
    if a > 1:
        raise DomainError(f"only integer orders a <= 1 are supported, got a={a}")
    if not np.isfinite(x) or x <= 0.0:
        raise DomainError(f"argument must be finite and > 0, got {x}")
    x = float(x)
    if a == 1:
        return float(np.exp(-x))
    m = 1 - a
    # x^(1-m) e^{-x} * (e^x E_m(x)); grouped to keep every factor in range.
    return float(x ** (1 - m) * np.exp(-x) * expint_scaled(m, x))


def digamma_integer(x):
    """Digamma at a positive integer: psi(x) = -gamma + sum_{p=1}^{x-1} 1/p."""
    x = int(x)
    if x < 1:
        raise DomainError(f"digamma_integer needs x >= 1, got {x}")
    if x == 1:
        return -EULER_GAMMA
    return float(np.sum(1.0 / np.arange(1, x)) - EULER_GAMMA)


def harmonic(n):
    """H_n = sum_{p=1}^{n} 1/p, with H_0 = 0."""
    n = int(n)
    if n < 0:
        raise DomainError(f"harmonic needs n >= 0, got {n}")
    if n == 0:
        return 0.0
    return float(np.sum(1.0 / np.arange(1, n + 1)))
