"""Tanh-sinh (double-exponential) quadrature with endpoint-singularity support.

The substitution x = tanh((pi/2) sinh t) maps (-1, 1) to the real line and
turns the trapezoid rule into a rule whose error decays double-exponentially
in 1/h for analytic integrands, including integrands with integrable endpoint
singularities such as 1/sqrt(x - a).  Refinement halves the step h; previously
computed nodes are reused, so level l costs about as much as all earlier
levels combined.

Abscissae are always constructed from the nearer interval endpoint, so the
rule never evaluates the integrand exactly at a singular endpoint.  For
integrands that blow up at an endpoint the limiting factor in double
precision is the rounding of ``a + delta``: once delta drops below
eps*|endpoint| the integrand cannot recover its true distance to the
endpoint from x alone.  Two ways around this, both supported here:

* place the singular endpoint at 0 (offsets from 0 are exact floats), or
* accept the abscissa and its signed distance to the nearer endpoint as two
  arguments ``f(x, xc)`` with ``xc = x - a >= 0`` on the left half and
  ``xc = x - b <= 0`` on the right half.

Integrands are evaluated in batches: ``f`` receives a 1-D ndarray and must
return an ndarray of the same shape (wrap scalar-only callables with
``numpy.vectorize``).
"""

from __future__ import annotations

import enum
import inspect
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "IntegrandClass",
    "QuadratureResult",
    "NonConvergenceError",
    "NonFiniteSampleError",
    "integrate",
    "integrate_extended",
]

# Beyond t ~ 6.11 the offset 1 - tanh((pi/2) sinh t) underflows to zero in
# double precision; nodes out there carry weights below ~1e-300.
_T_MAX = 6.115

# Per-level cache of (offset, weight) arrays for t >= 0.  Offsets and weights
# depend only on t, never on the interval, so they are computed once.
_LEVELS: list[tuple[np.ndarray, np.ndarray]] = []


class IntegrandClass(enum.Enum):
    """Endpoint behaviour of the integrand on [a, b]."""

    SMOOTH = "smooth"
    INVERSE_SQRT_LEFT = "inverse_sqrt_left"
    INVERSE_SQRT_RIGHT = "inverse_sqrt_right"
    INVERSE_SQRT_BOTH = "inverse_sqrt_both"


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    levels: int


class NonConvergenceError(RuntimeError):
    """Error estimate stalled above tol after the maximum refinement level.

    The partial result is available as the ``result`` attribute.
    """

    def __init__(self, msg: str, result: QuadratureResult):
        super().__init__(msg)
        self.result = result


class NonFiniteSampleError(RuntimeError):
    """The integrand returned NaN or +-inf at an interior node."""


def _nodes(level: int) -> tuple[np.ndarray, np.ndarray]:
    while len(_LEVELS) <= level:
        lev = len(_LEVELS)
        h = 0.5 ** lev
        if lev == 0:
            t = np.arange(0, int(_T_MAX) + 1, dtype=float)
        else:
            t = np.arange(1, int(_T_MAX / h) + 1, 2, dtype=float) * h
        y = 0.5 * np.pi * np.sinh(t)
        # 1 - tanh(y), computed without cancellation
        offs = 2.0 / (np.expm1(2.0 * y) + 2.0)
        w = 0.5 * np.pi * np.cosh(t) / np.cosh(y) ** 2
        keep = offs > 0.0
        _LEVELS.append((offs[keep], w[keep]))
    return _LEVELS[level]


def _accepts_offset(f: Callable) -> bool:
    try:
        params = inspect.signature(f).parameters.values()
    except (TypeError, ValueError):
        return False
    count = 0
    for p in params:
        if p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD):
            count += 1
        elif p.kind == p.VAR_POSITIONAL:
            return True
    return count >= 2


def integrate(
    f: Callable,
    a: float,
    b: float,
    integrand_class: IntegrandClass = IntegrandClass.SMOOTH,
    tol: float = 1e-12,
    max_level: int = 11,
) -> QuadratureResult:
    """Integrate f over [a, b] by adaptive tanh-sinh quadrature.

    Parameters
    ----------
    f : callable
        Vectorized integrand.  Either ``f(x)`` or ``f(x, xc)`` where ``xc``
        is the signed distance of each abscissa to the nearer endpoint
        (``x - a`` on the left half, ``x - b`` on the right half), exact to
        one rounding.  Integrands singular at an endpoint should use ``xc``.
    a, b : float
        Integration bounds, a <= b.
    integrand_class : IntegrandClass
        Declares which endpoints are (inverse-square-root) singular.  The
        rule never evaluates f exactly at a singular endpoint; abscissae
        that round onto one are dropped together with their (negligible)
        weight.
    tol : float
        Convergence target for the level-to-level error estimate, measured
        relative to max(1, |value|).
    max_level : int
        Maximum number of halvings of the base step h = 1.

    Returns
    -------
    QuadratureResult
        value, error_estimate, number of integrand evaluations, levels used.

    Raises
    ------
    NonConvergenceError
        If the estimate stalls above tol after max_level refinements.  The
        partial result is attached to the exception.
    NonFiniteSampleError
        If f returns a non-finite value at any retained node.
    """
    if not math.isfinite(a) or not math.isfinite(b):
        raise ValueError("bounds must be finite")
    if b < a:
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    if b == a:
        return QuadratureResult(0.0, 0.0, 0, 0)
    if tol < 0:
        raise ValueError("tol must be >= 0")

    two_arg = _accepts_offset(f)
    halfspan = 0.5 * (b - a)
    sing_left = integrand_class in (
        IntegrandClass.INVERSE_SQRT_LEFT,
        IntegrandClass.INVERSE_SQRT_BOTH,
    )
    sing_right = integrand_class in (
        IntegrandClass.INVERSE_SQRT_RIGHT,
        IntegrandClass.INVERSE_SQRT_BOTH,
    )

    total = 0.0
    prev_diff = None
    est = math.inf
    neval = 0

    for level in range(max_level + 1):
        offs, w = _nodes(level)
        h = 0.5 ** level
        dist = halfspan * offs
        x_right = b - dist
        x_left = a + dist
        if level == 0:
            # t = 0 appears once; attach it to the left-hand group.
            xs = np.concatenate([x_left, x_right[1:]])
            xc = np.concatenate([dist, -dist[1:]])
            ww = np.concatenate([w, w[1:]])
        else:
            xs = np.concatenate([x_left, x_right])
            xc = np.concatenate([dist, -dist])
            ww = np.concatenate([w, w])

        keep = (xs > a) & (xs < b)
        if sing_left or sing_right:
            xs, xc, ww = xs[keep], xc[keep], ww[keep]
        elif not keep.all():
            # Smooth integrands may be evaluated at the endpoints; nothing
            # to drop, but guard against zero-width rounding artifacts.
            xs = np.clip(xs, a, b)

        fx = np.asarray(f(xs, xc) if two_arg else f(xs), dtype=float)
        if fx.shape != xs.shape:
            raise TypeError(
                "integrand must be vectorized: expected output shape "
                f"{xs.shape}, got {fx.shape}"
            )
        if not np.all(np.isfinite(fx)):
            bad = xs[~np.isfinite(fx)][:3]
            raise NonFiniteSampleError(
                f"integrand returned non-finite values near x={bad!r}"
            )
        neval += xs.size

        piece = halfspan * h * float(np.dot(ww, fx))
        total = piece if level == 0 else 0.5 * total + piece

        if level >= 1:
            diff = abs(total - prev_total)
            floor = 8.0 * np.finfo(float).eps * abs(total)
            if diff == 0.0:
                est = floor
            elif prev_diff is None or prev_diff <= 0.0:
                est = diff
            else:
                est = max(min(diff, diff * diff / prev_diff), floor)
            if level >= 2 and est <= tol * max(1.0, abs(total)):
                return QuadratureResult(total, est, neval, level)
            prev_diff = diff
        prev_total = total

    result = QuadratureResult(total, est, neval, max_level)
    raise NonConvergenceError(
        f"tanh-sinh estimate stalled at {est:.3e} (tol {tol:.3e}) "
        f"after level {max_level}",
        result,
    )


def integrate_extended(
    f: Callable,
    a,
    b,
    integrand_class: IntegrandClass = IntegrandClass.SMOOTH,
    dps: int = 40,
):
    """Tanh-sinh integration in mpmath arbitrary precision.

    Same contract as :func:`integrate` but the integrand receives mpmath
    scalars one at a time and the result is an ``mpf``.  Used for the
    extended-precision refinement of nearly coincident critical parameters;
    much slower than the double-precision path.

    Singular endpoints are handled by mpmath's own tanh-sinh rule; the
    interval is split at the midpoint when both endpoints are singular.
    """
    import mpmath

    with mpmath.workdps(dps):
        a = mpmath.mpf(a)
        b = mpmath.mpf(b)
        if integrand_class is IntegrandClass.INVERSE_SQRT_BOTH:
            points = [a, (a + b) / 2, b]
        else:
            points = [a, b]
        value = mpmath.quad(f, points, method="tanh-sinh")
    return value
