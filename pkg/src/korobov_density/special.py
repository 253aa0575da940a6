"""
Special functions

Bernoulli polynomials of even degree with exact rational coefficients and
the Riemann zeta values used by the Korobov kernels and the lattice search.
"""
import math
from fractions import Fraction

import numpy as np
from scipy import special as sp_special

from korobov_density.constants import SUPPORTED_DEGREES
from korobov_density.exceptions import ConfigurationError, DomainError

F = Fraction

# monomial coefficients, ascending powers of x
_BERNOULLI_COEFFS = {
    2: (F(1, 6), F(-1), F(1)),
    4: (F(-1, 30), F(0), F(1), F(-2), F(1)),
    6: (F(1, 42), F(0), F(-1, 2), F(0), F(5, 2), F(-3), F(1)),
    8: (F(-1, 30), F(0), F(2, 3), F(0), F(-7, 3), F(0), F(14, 3), F(-4), F(1)),
}

# descending float coefficients for Horner evaluation (np.polyval)
_HORNER = {
    deg: np.array([float(c) for c in reversed(coeffs)])
    for deg, coeffs in _BERNOULLI_COEFFS.items()
}


def _check_degree(degree):
    if degree not in SUPPORTED_DEGREES:
        raise ConfigurationError(
            f"Unsupported Bernoulli degree {degree}! Supported: {SUPPORTED_DEGREES}"
        )


def bernoulli_polynomial(degree):
    """Exact coefficients of B_degree, ascending powers of x."""

    _check_degree(degree)
    return _BERNOULLI_COEFFS[degree]


def bernoulli_antiderivative(degree):
    """
    Exact coefficients of x -> int_0^x B_degree(t) dt, ascending powers.

    For degree 4 this is B_5(x) / 5, the piece needed by the sampler CDF.
    """

    coeffs = bernoulli_polynomial(degree)
    return (F(0),) + tuple(c / (k + 1) for k, c in enumerate(coeffs))


def polynomial_eval(coeffs, x):
    """Horner evaluation of an ascending rational coefficient tuple."""

    descending = np.array([float(c) for c in reversed(coeffs)])
    return np.polyval(descending, np.asarray(x, dtype=float))


def bernoulli_eval(degree, x):
    """
    Evaluate the Bernoulli polynomial B_degree on [0, 1].

    Parameters
    ----------
    degree : int
        One of 2, 4, 6, 8.
    x : float or array_like
        Points in [0, 1]. Callers reduce periodic arguments first.

    Returns
    -------
    float or np.ndarray
        B_degree(x), same shape as ``x``.
    """

    _check_degree(degree)
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise DomainError(
            "Bernoulli polynomials are evaluated on [0, 1] only; "
            "reduce the argument to its fractional part first"
        )
    res = np.polyval(_HORNER[degree], x)
    return float(res) if res.ndim == 0 else res


def fourier_scale(degree):
    """The constant s with B_degree(x) = s * sum_{h != 0} e^{2 pi i h x} / |h|^degree."""

    _check_degree(degree)
    sign = (-1) ** (degree // 2 + 1)
    return sign * math.factorial(degree) / (2 * np.pi) ** degree


def bernoulli_fourier(degree, x, terms=64):
    """Truncated Fourier synthesis of B_degree (oracle for the closed form)."""

    x = np.asarray(x, dtype=float)
    h = np.arange(1, terms + 1, dtype=float)
    series = np.cos(2 * np.pi * np.multiply.outer(x, h)) / h**degree
    return 2 * fourier_scale(degree) * series.sum(axis=-1)


def zeta_value(s):
    """
    Riemann zeta function for real s > 1.

    The even values used by the kernels (2 and 4) come from their closed
    forms; everything else is delegated to ``scipy.special.zeta``.
    """

    if s <= 1:
        raise DomainError(f"zeta(s) diverges for s={s} <= 1")
    if s == 2:
        return np.pi**2 / 6
    if s == 4:
        return np.pi**4 / 90
    return float(sp_special.zeta(s, 1))
