"""Scalar special functions and the error-integral ``zeta(beta, a)``.

``zeta(beta, a) = int_0^inf Q(sqrt(beta x)) / (x + a)^2 dx`` is evaluated two
ways: a closed form built on the scaled complementary error function, and an
adaptive quadrature used as an independent oracle.
"""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

from scipy import integrate

__all__ = [
    "ZetaArgs",
    "QuadratureError",
    "q_function",
    "erfcx_scaled",
    "erfc_cf_complement",
    "zeta_closed",
    "zeta_quadrature",
    "semi_infinite_quad",
]

_SQRT_PI = math.sqrt(math.pi)
_SQRT2 = math.sqrt(2.0)
# below this the power series is used, above it the continued fraction
_SERIES_CUTOFF = 1.0


class QuadratureError(ArithmeticError):
    """Adaptive quadrature could not reach the requested tolerance."""


class ZetaArgs(NamedTuple):
    beta: float
    a: float

    def validate(self) -> None:
        if not (self.beta >= 0.0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta!r}")
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError(f"a must be finite and > 0, got {self.a!r}")


def q_function(x: float) -> float:
    """Gaussian tail probability ``Q(x) = P(N(0,1) > x)``."""
    return 0.5 * math.erfc(x / _SQRT2)


def _cf_tail(x: float) -> float:
    """Tail ``K(x)`` of the Laplace continued fraction.

    ``erfcx(x) = 1 / (sqrt(pi) (x + K))`` with
    ``K = (1/2) / (x + 1 / (x + (3/2) / (x + ...)))``, evaluated bottom-up.
    Depth is chosen so the truncation error is below 1e-16 for ``x >= 1``.
    """
    if x < 2.0:
        depth = 250
    elif x < 8.0:
        depth = 60
    elif x < 50.0:
        depth = 30
    else:
        depth = 8
    k = 0.0
    for j in range(depth, 0, -1):
        k = 0.5 * j / (x + k)
    return k


def _erfcx_series(x: float) -> float:
    # e^{x^2} erf(x) = 2/sqrt(pi) * sum_n 2^n x^{2n+1} / (2n+1)!!, all terms positive
    x2 = x * x
    term = x
    total = x
    n = 0
    while term > 1e-17 * total:
        n += 1
        term *= 2.0 * x2 / (2 * n + 1)
        total += term
    return math.exp(x2) - 2.0 / _SQRT_PI * total


def erfcx_scaled(x: float) -> float:
    """Scaled complementary error function ``exp(x**2) * erfc(x)`` for ``x >= 0``.

    Never overflows; behaves like ``1 / (x sqrt(pi))`` for large ``x``.
    """
    if not x >= 0.0:
        raise ValueError(f"erfcx_scaled requires x >= 0, got {x!r}")
    if math.isinf(x):
        return 0.0
    if x < _SERIES_CUTOFF:
        return _erfcx_series(x)
    return 1.0 / (_SQRT_PI * (x + _cf_tail(x)))


def erfc_cf_complement(x: float) -> float:
    """Return ``1 - sqrt(pi) x erfcx(x)`` without cancellation, ``x >= 0``.

    The quantity decays like ``1 / (2 x^2)``; for large ``x`` it is formed as
    ``K / (x + K)`` from the continued-fraction tail.
    """
    if not x >= 0.0:
        raise ValueError(f"x must be >= 0, got {x!r}")
    if math.isinf(x):
        return 0.0
    if x < _SERIES_CUTOFF:
        return 1.0 - _SQRT_PI * x * _erfcx_series(x)
    k = _cf_tail(x)
    return k / (x + k)


def zeta_closed(beta: float, a: float) -> float:
    """Closed-form ``zeta(beta, a)``.

    With ``x = sqrt(beta a / 2)`` the integral equals
    ``(1 / 2a) * (1 - sqrt(pi) x erfcx(x))``, which stays finite for any
    ``beta a`` and lies in ``[0, 1 / 2a]``.
    """
    ZetaArgs(beta, a).validate()
    x = math.sqrt(0.5 * beta * a)
    return erfc_cf_complement(x) / (2.0 * a)


def semi_infinite_quad(
    f: Callable[[float], float],
    scales: list[float],
    tail_bound: Callable[[float], float],
    rtol: float = 1e-12,
    tail_rtol: float = 1e-12,
) -> tuple[float, float]:
    """Integrate ``f(x)`` over ``[0, inf)`` by piecewise adaptive quadrature.

    The integration variable is substituted ``x = t**2`` so square-root
    behaviour at the origin becomes smooth. Pieces are geometrically spaced in
    ``t`` around the characteristic ``scales`` of the integrand. The range is
    truncated at the first ``T`` where ``tail_bound(T)`` (a rigorous bound on
    ``int_T^inf |f|``) falls below ``tail_rtol`` times the accumulated value.

    Returns ``(value, abserr)``; raises :class:`QuadratureError` when the
    accumulated error estimate exceeds ``rtol`` relative.
    """
    lo = min(scales)
    t = math.sqrt(lo) * 1e-4
    g = lambda s: 2.0 * s * f(s * s)  # noqa: E731
    pieces: list[float] = []
    errs: list[float] = []
    val, err, *_ = integrate.quad(g, 0.0, t, epsabs=0.0, epsrel=rtol, limit=200, full_output=1)
    pieces.append(val)
    errs.append(err)
    for _ in range(200):
        t_next = 2.0 * t
        val, err, *_ = integrate.quad(
            g, t, t_next, epsabs=0.0, epsrel=rtol, limit=200, full_output=1
        )
        pieces.append(val)
        errs.append(err)
        t = t_next
        total = math.fsum(pieces)
        if t * t > 4.0 * max(scales) and tail_bound(t * t) <= tail_rtol * abs(total):
            break
    else:
        raise QuadratureError("truncation point not reached within 200 pieces")
    total = math.fsum(pieces)
    abserr = math.fsum(errs) + tail_bound(t * t)
    if abserr > max(rtol, tail_rtol) * 10.0 * abs(total):
        raise QuadratureError(
            f"quadrature error {abserr:.3g} exceeds tolerance for value {total:.6g}"
        )
    return total, abserr


def zeta_quadrature(beta: float, a: float, rtol: float = 1e-12) -> float:
    """``zeta(beta, a)`` by direct numerical integration of its definition.

    The discarded tail beyond the truncation point ``T`` is bounded with
    ``Q(sqrt(beta x)) <= exp(-beta x / 2) / 2``, which integrates to at most
    ``exp(-beta T / 2) / (2 (T + a))``.
    """
    return zeta_quadrature_with_error(beta, a, rtol)[0]


def zeta_quadrature_with_error(beta: float, a: float, rtol: float = 1e-12) -> tuple[float, float]:
    ZetaArgs(beta, a).validate()
    if beta == 0.0:
        val, err = integrate.quad(lambda x: 0.5 / (x + a) ** 2, 0.0, math.inf, epsabs=0.0, epsrel=rtol)
        return val, err

    def f(x: float) -> float:
        return q_function(math.sqrt(beta * x)) / (x + a) ** 2

    def tail(T: float) -> float:
        return 0.5 * math.exp(-0.5 * beta * T) / (T + a)

    return semi_infinite_quad(f, [a, 1.0 / beta], tail, rtol=rtol)
