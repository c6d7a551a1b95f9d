"""Half-period unduloid profiles between two parallel hyperplanes.

A hypersurface of revolution in R^(n+2) with profile h(z) > 0 has constant
mean curvature H exactly when

    h^n / sqrt(1 + h_z^2) + H h^(n+1) = c

holds along the profile (first integral of the CMC equation; H < 0 with the
outward normal, c > 0).  A half-period unduloid rises monotonically from a
neck of radius r_neck (h_z = 0) to a bulge of radius r_bulge (h_z = 0) and
meets both bounding hyperplanes orthogonally.

Radial scaling by a factor t maps a solution to a solution with
H -> H/t and c -> c t^n, so every computation is reduced to the unit-bulge
reference shape with rho = r_neck / r_bulge = 1 - s.  The quantity

    g(h) = h^n + H h^(n+1) - c

vanishes simply at rho and 1 and factors exactly as

    g(h) = (1 - h)(h - rho) v(h),    v_j = rho^(n-1-j) (1 - rho^(j+1)) / D,

D = 1 - rho^(n+1).  All coefficients of v are positive, so the radicand
h^(2n) - (c - H h^(n+1))^2 = g(h) (h^n + c - H h^(n+1)) is evaluated without
cancellation all the way to the endpoints.  Integrals in h are taken in the
endpoint-local variable u (distance to the nearer turning radius), which
keeps tanh-sinh quadrature accurate to machine precision.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .quadrature import IntegrandClass, integrate

__all__ = [
    "S_MIN",
    "S_MAX",
    "SlabConfig",
    "UnduloidShape",
    "ProfileCurve",
    "DegenerateRadiiError",
    "OutOfDomainError",
    "ResidualTooLargeError",
    "first_integral_constants",
    "half_period",
    "solve_shape",
    "sample_profile",
    "cylinder_shape",
    "profile_to_csv",
]

# Non-uniformness domain: s = 1 - r_neck/r_bulge, cylinder at 0, hemisphere
# at 1; both limits are degenerate and excluded.
S_MIN = 1e-3
S_MAX = 1.0 - 1e-3


class DegenerateRadiiError(ValueError):
    """Radii do not satisfy 0 < r_neck < r_bulge by a safe margin."""


class OutOfDomainError(ValueError):
    """Parameter outside the supported open domain."""


class ResidualTooLargeError(RuntimeError):
    """Sampled profile violates the first integral beyond tolerance."""


@dataclass(frozen=True)
class SlabConfig:
    """Dimension and bounding hyperplanes {z = z1}, {z = z2}."""

    n: int
    z1: float = 0.0
    z2: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise OutOfDomainError(f"n must be an integer >= 1, got {self.n!r}")
        if not (math.isfinite(self.z1) and math.isfinite(self.z2)):
            raise OutOfDomainError("slab faces must be finite")
        if not self.z2 > self.z1:
            raise OutOfDomainError(f"need z2 > z1, got [{self.z1}, {self.z2}]")

    @property
    def L(self) -> float:
        return self.z2 - self.z1


@dataclass(frozen=True)
class UnduloidShape:
    """A half-period unduloid fitted to a slab.

    H < 0 is the constant mean curvature, c > 0 the first-integral constant.
    A cylinder is represented degenerately by r_neck == r_bulge.
    """

    slab: SlabConfig
    s: float
    r_neck: float
    r_bulge: float
    H: float
    c: float

    def __post_init__(self):
        if not (0.0 < self.r_neck <= self.r_bulge):
            raise DegenerateRadiiError(
                f"need 0 < r_neck <= r_bulge, got ({self.r_neck}, {self.r_bulge})"
            )

    @property
    def is_cylinder(self) -> bool:
        return self.r_neck == self.r_bulge


@dataclass(frozen=True)
class ProfileCurve:
    """Sampled profile nodes (z, h, h_z) with the certified residual.

    residual_max is the largest measured value of
    |h^n/sqrt(1+h_z^2) + H h^(n+1) - c| over the sample nodes and a denser
    interior check set.
    """

    shape: UnduloidShape
    z: np.ndarray
    h: np.ndarray
    h_z: np.ndarray
    residual_max: float
    _dense: object = field(default=None, repr=False, compare=False)

    @property
    def nodes(self):
        return list(zip(self.z.tolist(), self.h.tolist(), self.h_z.tolist()))


def first_integral_constants(n: int, r_neck: float, r_bulge: float) -> tuple[float, float]:
    """Mean curvature H and first-integral constant c from the two radii.

    Solves r^n + H r^(n+1) = c at both turning radii:

        H = -(r_bulge^n - r_neck^n) / (r_bulge^(n+1) - r_neck^(n+1)) < 0
        c = r_neck^n + H r_neck^(n+1) > 0
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise OutOfDomainError(f"n must be an integer >= 1, got {n!r}")
    if not (r_neck > 0.0 and math.isfinite(r_neck) and math.isfinite(r_bulge)):
        raise DegenerateRadiiError(f"radii must be finite and positive, got ({r_neck}, {r_bulge})")
    if r_bulge - r_neck <= 1e-14 * r_bulge:
        raise DegenerateRadiiError(
            f"radii too close for an unduloid: r_neck={r_neck}, r_bulge={r_bulge}"
        )
    rho = r_neck / r_bulge
    ref = _Reference(int(n), 1.0 - rho)
    return ref.H / r_bulge, ref.c * r_bulge ** n


class _Reference:
    """Unit-bulge reference shape: constants and the singular integrals.

    Exposes H, c, the positive coefficients of v (low degree first), and the
    three integrals over h in [rho, 1]:

        period():  integral of Q / W
        area():    integral of h^(2n) / W
        volume():  integral of h^(n+1) Q / W  (divided by n+1)

    with Q = c - H h^(n+1) and W = sqrt(h^(2n) - Q^2) evaluated through the
    factorization W^2 = (h - rho)(1 - h) v(h) (h^n + Q).
    """

    def __init__(self, n: int, s: float):
        if not (0.0 < s < 1.0):
            raise OutOfDomainError(f"need 0 < s < 1, got s={s}")
        self.n = n
        self.s = float(s)
        self.rho = 1.0 - self.s
        lg = math.log1p(-self.s)  # log rho
        D = -math.expm1((n + 1) * lg)
        self.H = math.expm1(n * lg) / D
        self.c = math.exp(n * lg) * self.s / D
        j = np.arange(n, dtype=float)
        self.v_coeffs = np.exp((n - 1 - j) * lg) * (-np.expm1((j + 1) * lg)) / D

    def _piece(self, weight: str, from_neck: bool, tol: float) -> float:
        n, s, rho, H, c, vj = self.n, self.s, self.rho, self.H, self.c, self.v_coeffs

        def f(u):
            h = rho + u if from_neck else 1.0 - u
            Q = c - H * h ** (n + 1)
            G = np.polynomial.polynomial.polyval(h, vj) * (h ** n + Q)
            W = np.sqrt(u * (s - u) * G)
            if weight == "period":
                return Q / W
            if weight == "area":
                return h ** (2 * n) / W
            return h ** (n + 1) * Q / W

        return integrate(f, 0.0, 0.5 * s, IntegrandClass.INVERSE_SQRT_LEFT, tol=tol).value

    def period(self, tol: float = 2e-14) -> float:
        return self._piece("period", True, tol) + self._piece("period", False, tol)

    def area(self, tol: float = 2e-14) -> float:
        return self._piece("area", True, tol) + self._piece("area", False, tol)

    def volume(self, tol: float = 2e-14) -> float:
        raw = self._piece("volume", True, tol) + self._piece("volume", False, tol)
        return raw / (self.n + 1)


def half_period(n: int, r_neck: float, r_bulge: float, tol: float = 2e-14) -> float:
    """Neck-to-bulge extent in z of the unduloid with the given radii.

        P = integral over h in [r_neck, r_bulge] of
            (c - H h^(n+1)) / sqrt(h^(2n) - (c - H h^(n+1))^2) dh

    The integrand has inverse-square-root singularities at both radii; both
    are handled at machine precision.  Tends to pi r / sqrt(n) as the radii
    coalesce at r and to r_bulge in the hemisphere limit r_neck -> 0.
    """
    first_integral_constants(n, r_neck, r_bulge)  # validation
    rho = r_neck / r_bulge
    return r_bulge * _Reference(int(n), 1.0 - rho).period(tol)


def solve_shape(slab: SlabConfig, s: float, tol: float = 2e-14) -> UnduloidShape:
    """Unduloid whose half period exactly spans the slab.

    Computes the unit-bulge reference with rho = 1 - s and rescales it
    radially by t = L / P_ref, which maps H -> H/t and c -> c t^n.  As
    s -> 0 the bulge radius tends to the critical cylinder radius
    sqrt(n) L / pi; as s -> 1 the shape approaches a hemisphere of radius L.
    """
    if not (S_MIN <= s <= S_MAX):
        raise OutOfDomainError(
            f"s must lie in [{S_MIN}, {S_MAX}], got s={s}"
        )
    ref = _Reference(slab.n, float(s))
    t = slab.L / ref.period(tol)
    return UnduloidShape(
        slab=slab,
        s=float(s),
        r_neck=(1.0 - s) * t,
        r_bulge=t,
        H=ref.H / t,
        c=ref.c * t ** slab.n,
    )


def cylinder_shape(slab: SlabConfig, r: float) -> UnduloidShape:
    """Degenerate cylinder h == r in the slab (s = 0 endpoint of the family)."""
    if not (r > 0.0 and math.isfinite(r)):
        raise OutOfDomainError(f"need r > 0, got {r}")
    n = slab.n
    return UnduloidShape(
        slab=slab,
        s=0.0,
        r_neck=r,
        r_bulge=r,
        H=-n / ((n + 1.0) * r),
        c=r ** n / (n + 1.0),
    )


def _profile_rhs(n: int, H: float):
    def rhs(z, y):
        h, hz = y
        s2 = 1.0 + hz * hz
        return (hz, (n + 1) * H * s2 ** 1.5 + n * s2 / h)

    return rhs


def _residual(shape: UnduloidShape, h: np.ndarray, h_z: np.ndarray) -> np.ndarray:
    n = shape.slab.n
    return h ** n / np.sqrt(1.0 + h_z ** 2) + shape.H * h ** (n + 1) - shape.c


def sample_profile(
    shape: UnduloidShape,
    m: int = 512,
    residual_tol: float | None = None,
) -> ProfileCurve:
    """Sample the profile h(z) on m+1 uniform nodes across the slab.

    Integrates the curvature equation

        h_zz = (n+1) H (1 + h_z^2)^(3/2) + n (1 + h_z^2) / h

    from the neck (h, h_z)(z1) = (r_neck, 0) with an adaptive 8th-order
    Runge-Kutta scheme and dense output, then certifies the result against
    the first integral.  The default certification threshold is 1e-10 * c;
    note that in double precision the residual cannot fall below roughly
    (4n) * eps * r_bulge^n, which for strongly pinched shapes (large n and
    s) exceeds 1e-10 * c.  Callers probing that regime must pass an explicit
    residual_tol; the measured residual_max is always recorded.

    Raises ResidualTooLarge if the certification fails after one retry at
    the tightest tolerance the integrator supports.
    """
    if m < 2:
        raise OutOfDomainError(f"need m >= 2 sample intervals, got {m}")
    slab = shape.slab
    z = np.linspace(slab.z1, slab.z2, m + 1)

    if shape.is_cylinder:
        h = np.full(m + 1, shape.r_neck)
        h_z = np.zeros(m + 1)
        res = float(np.max(np.abs(_residual(shape, h, h_z))))
        return ProfileCurve(shape, z, h, h_z, res)

    threshold = 1e-10 * shape.c if residual_tol is None else float(residual_tol)
    rhs = _profile_rhs(slab.n, shape.H)
    zc = np.linspace(slab.z1, slab.z2, 4 * m + 1)  # denser certification set
    sol = None
    for rtol in (1e-13, 2.3e-14):
        sol = solve_ivp(
            rhs,
            (slab.z1, slab.z2),
            (shape.r_neck, 0.0),
            method="DOP853",
            rtol=rtol,
            atol=1e-16 * max(shape.r_bulge, 1.0),
            dense_output=True,
        )
        if not sol.success:  # pragma: no cover - DOP853 does not fail here
            raise ResidualTooLargeError(f"profile integration failed: {sol.message}")
        hc, hzc = sol.sol(zc)
        res = float(np.max(np.abs(_residual(shape, hc, hzc))))
        if res <= threshold:
            break
    if res > threshold:
        raise ResidualTooLargeError(
            f"first-integral residual {res:.3e} exceeds {threshold:.3e} "
            f"(n={slab.n}, s={shape.s}); in double precision the attainable "
            f"floor is about {6 * slab.n * 2.2e-16 * shape.r_bulge ** slab.n:.1e}"
        )
    h, h_z = sol.sol(z)
    return ProfileCurve(shape, z, h.copy(), h_z.copy(), res, _dense=sol.sol)


def profile_to_csv(profile: ProfileCurve, target) -> None:
    """Write nodes as CSV (columns z,h,h_z; 17 significant digits).

    target may be a path or a writable text file object.  Output is
    deterministic: identical inputs give byte-identical files.
    """
    if hasattr(target, "write"):
        _write_profile(profile, target)
    else:
        with open(target, "w", encoding="ascii", newline="\n") as fh:
            _write_profile(profile, fh)


def _write_profile(profile: ProfileCurve, fh: io.TextIOBase) -> None:
    fh.write("z,h,h_z\n")
    for zi, hi, gi in zip(profile.z, profile.h, profile.h_z):
        fh.write(f"{zi:.17g},{hi:.17g},{gi:.17g}\n")
