"""Hermite and Laguerre polynomials, Hermite functions and Gauss-Hermite rules.

Physicists' convention throughout: ``H_n`` is orthogonal under ``exp(-x**2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ParameterError

__all__ = [
    "QuadratureRule",
    "hermite",
    "hermite_scaled",
    "hermite_function_parts",
    "laguerre",
    "gauss_hermite",
    "log_factorial",
]

MAX_ORDER = 200

# Rescaling threshold for the running-exponent recurrence.
_BIG = 1e150
_LOG_BIG = math.log(_BIG)


def _check_degree(n):
    if int(n) != n or n < 0:
        raise ParameterError(f"degree must be a non-negative integer, got {n!r}")
    return int(n)


def hermite(n: int, x):
    """Physicists' Hermite polynomial ``H_n(x)`` by three-term recurrence.

    Accepts scalars or arrays; returns a float for scalar input.
    """
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    h_prev = np.zeros_like(x)
    h = np.ones_like(x)
    for k in range(n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def hermite_function_parts(n: int, x):
    """Normalized Hermite functions of degree ``n`` and ``n - 1`` in split form.

    Returns ``(m_n, m_nm1, log_scale)`` such that
    ``psi_k(x) = m_k * exp(log_scale)`` with
    ``psi_k(x) = exp(-x**2/2) H_k(x) / sqrt(2**k k! sqrt(pi))``.
    The Gaussian factor lives in ``log_scale`` so nothing overflows or
    underflows inside the recurrence. For ``n == 0`` the second mantissa is 0.
    """
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    log_scale = -0.5 * x * x
    m_prev = np.zeros_like(x)
    m = np.full_like(x, math.pi ** -0.25)
    for k in range(n):
        m_prev, m = m, math.sqrt(2.0 / (k + 1)) * x * m - math.sqrt(k / (k + 1)) * m_prev
        big = np.abs(m) > _BIG
        if np.any(big):
            m = np.where(big, m / _BIG, m)
            m_prev = np.where(big, m_prev / _BIG, m_prev)
            log_scale = np.where(big, log_scale + _LOG_BIG, log_scale)
    return m, m_prev, log_scale


def hermite_scaled(n: int, x):
    """Normalized Hermite function ``exp(-x**2/2) H_n(x) / sqrt(2**n n! sqrt(pi))``.

    This is the harmonic-oscillator eigenfunction in dimensionless units.
    Safe against overflow for ``n <= 200`` and ``|x| <= 50``; values below the
    double-precision range come back as 0.
    """
    m, _, log_scale = hermite_function_parts(n, x)
    with np.errstate(under="ignore"):
        out = m * np.exp(log_scale)
    return out if out.ndim else float(out)


def laguerre(n: int, x):
    """Laguerre polynomial ``L_n(x)`` via ``(k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}``."""
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    l_prev = np.zeros_like(x)
    l = np.ones_like(x)
    for k in range(n):
        l_prev, l = l, ((2 * k + 1 - x) * l - k * l_prev) / (k + 1)
    return l if l.ndim else float(l)


def log_factorial(n: int) -> float:
    """``ln(n!)``."""
    n = _check_degree(n)
    if n < 2:
        return 0.0
    return math.lgamma(n + 1.0)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes and weights for the weight function ``exp(-x**2)``."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def integrate(self, f):
        """Approximate ``int f(x) exp(-x**2) dx`` over the real line."""
        return np.sum(self.weights * f(self.nodes), axis=-1)

    def scaled(self, alpha: float):
        """Nodes and weights for ``int g(x) exp(-alpha**2 x**2) dx``.

        Returns plain arrays ``(x, w)`` with ``x = nodes / alpha`` and
        ``w = weights / alpha``.
        """
        return self.nodes / alpha, self.weights / alpha


def gauss_hermite(order: int) -> QuadratureRule:
    """Gauss-Hermite rule of the given order (1 to 200).

    Nodes come from the Golub-Welsch eigenproblem and are polished by Newton
    steps on the normalized Hermite function. Weights use
    ``w_i = exp(-x_i**2) / (n psi_{n-1}(x_i)**2)`` evaluated in split form,
    which keeps the tiny outer weights positive and accurate at high order.
    """
    if int(order) != order or not 1 <= order <= MAX_ORDER:
        raise ParameterError(f"order must be an integer in [1, {MAX_ORDER}], got {order!r}")
    order = int(order)
    if order == 1:
        return QuadratureRule(np.array([0.0]), np.array([math.sqrt(math.pi)]), 1)

    off_diag = np.sqrt(np.arange(1, order) / 2.0)
    x = eigh_tridiagonal(np.zeros(order), off_diag, eigvals_only=True)
    for _ in range(3):
        m, m_prev, _ = hermite_function_parts(order, x)
        x = x - m / (math.sqrt(2.0 * order) * m_prev - x * m)
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])
    if order % 2:
        x[order // 2] = 0.0

    _, m_prev, log_scale = hermite_function_parts(order, x)
    # exp(-x^2) / psi_{n-1}^2 with psi = m * exp(-x^2/2 + s) collapses to exp(-2 s) / m^2
    extra = log_scale + 0.5 * x * x
    w = np.exp(-2.0 * extra) / (order * m_prev**2)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w, order)
