"""Truncated Laurent and Puiseux series at marked points of the Riemann sphere.

A series lives at a marked point (infinity, zero, or a movable finite point)
and is written in the local parameter there: ``p`` at infinity (descending
powers), ``p`` at zero and ``p - v`` at a finite point ``v``.

Every series knows exactly which exponents it knows.  The leading side of a
Laurent series is always finite, so coefficients beyond the leading exponent
are known zeros.  On the other side the series is either exact (a Laurent
polynomial, all further coefficients are zero) or truncated, in which case
coefficients past the window are *unknown* and reading them raises
:class:`InsufficientWindow`.

Internally coefficients are stored against the local order
``z = sigma * e`` where ``sigma = -1`` at infinity and ``+1`` at finite
points, so that every operation is written once: known for
``zlo <= z < prec`` and zero for ``z < zlo``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

DEFAULT_RTOL = 1e-10
DEFAULT_DEPTH = 12

# Working precision of all coefficient arrays.  Extended precision keeps the
# cancellations between large local coefficients (transfers between distant
# marked points) below double-precision round-off.
WORK_DTYPE = np.clongdouble


def work(x) -> np.clongdouble:
    """A scalar in working precision."""
    return WORK_DTYPE(x)


class SeriesError(ValueError):
    """Base class for series errors."""


class MixedPoints(SeriesError):
    pass


class EmptyWindow(SeriesError):
    pass


class InsufficientWindow(SeriesError):
    pass


class ZeroLeadingTerm(SeriesError):
    pass


class NonUnitInput(SeriesError):
    pass


class FractionalLeakage(SeriesError):
    pass


@dataclass(frozen=True)
class MarkedPoint:
    """A point of the Riemann sphere carrying local expansions.

    ``kind`` is ``"inf"``, ``"zero"`` or ``"finite"``; finite points carry the
    pole index ``k`` and the current location ``value``.
    """

    kind: str
    value: complex = 0j
    index: int = 0

    @staticmethod
    def infinity() -> "MarkedPoint":
        return MarkedPoint("inf", 0j, 0)

    @staticmethod
    def zero() -> "MarkedPoint":
        return MarkedPoint("zero", 0j, 0)

    @staticmethod
    def finite(index: int, value: complex) -> "MarkedPoint":
        return MarkedPoint("finite", complex(value), int(index))

    @property
    def is_infinity(self) -> bool:
        return self.kind == "inf"

    @property
    def sigma(self) -> int:
        return -1 if self.kind == "inf" else 1

    @property
    def location(self) -> complex:
        if self.kind == "inf":
            raise ValueError("infinity has no finite location")
        return 0j if self.kind == "zero" else self.value

    def label(self) -> str:
        if self.kind == "inf":
            return "inf"
        if self.kind == "zero":
            return "0"
        return f"v{self.index}"

    def __repr__(self) -> str:
        if self.kind == "finite":
            return f"MarkedPoint(v{self.index}={self.value!r})"
        return f"MarkedPoint({self.label()})"


INF = MarkedPoint.infinity()
ZERO = MarkedPoint.zero()


def _as_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=WORK_DTYPE)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise SeriesError("series coefficients must be finite")
    return arr


class LaurentSeries:
    """Truncated Laurent series with an explicit window of known exponents.

    Use :meth:`from_coeffs` to build from a mapping ``exponent -> value``
    together with a window, or :meth:`polynomial` for an exact Laurent
    polynomial.
    """

    __slots__ = ("point", "_zlo", "_c", "_prec")

    def __init__(self, point: MarkedPoint, zlo: int, coeffs, prec: float):
        c = _as_array(coeffs)
        if prec != math.inf:
            prec = int(prec)
            # keep only the known part
            c = c[: max(0, prec - zlo)]
        self.point = point
        self._zlo = int(zlo)
        self._c = c
        self._prec = prec
        if prec != math.inf and prec <= zlo:
            raise EmptyWindow("no coefficient of the series is known")
        self._c.setflags(write=False)

    # construction -------------------------------------------------------
    @classmethod
    def from_coeffs(cls, point: MarkedPoint, coeffs: Mapping[int, complex],
                    window: tuple[int, int], exact: bool = False) -> "LaurentSeries":
        """Series with the given coefficients, known on ``window = (lo, hi)``.

        Exponents are powers of the local parameter.  Every stored exponent
        must lie in the window.  On the leading side (above ``hi`` at
        infinity, below ``lo`` at finite points) coefficients are zero.
        """
        lo, hi = int(window[0]), int(window[1])
        if hi < lo:
            raise EmptyWindow(f"empty window [{lo}, {hi}]")
        for e in coeffs:
            if not lo <= e <= hi:
                raise SeriesError(f"exponent {e} outside window [{lo}, {hi}]")
        s = point.sigma
        zlo, zhi = sorted((s * lo, s * hi))
        arr = np.zeros(zhi - zlo + 1, dtype=WORK_DTYPE)
        for e, v in coeffs.items():
            arr[s * e - zlo] = v
        prec = math.inf if exact else zhi + 1
        return cls(point, zlo, arr, prec)

    @classmethod
    def polynomial(cls, point: MarkedPoint, coeffs: Mapping[int, complex]) -> "LaurentSeries":
        """Exact Laurent polynomial in the local parameter."""
        if not coeffs:
            return cls.zero(point)
        lo, hi = min(coeffs), max(coeffs)
        return cls.from_coeffs(point, coeffs, (lo, hi), exact=True)

    @classmethod
    def zero(cls, point: MarkedPoint) -> "LaurentSeries":
        return cls(point, 0, np.zeros(1, dtype=WORK_DTYPE), math.inf)

    @classmethod
    def constant(cls, point: MarkedPoint, c: complex) -> "LaurentSeries":
        return cls(point, 0, np.array([c], dtype=WORK_DTYPE), math.inf)

    @classmethod
    def monomial(cls, point: MarkedPoint, e: int, c: complex = 1.0) -> "LaurentSeries":
        return cls.polynomial(point, {int(e): c})

    # inspection ---------------------------------------------------------
    @property
    def exact(self) -> bool:
        return self._prec == math.inf

    @property
    def zlo(self) -> int:
        return self._zlo

    @property
    def prec(self) -> float:
        return self._prec

    @property
    def _ztop(self) -> int:
        """Last stored local order (inclusive)."""
        return self._zlo + len(self._c) - 1

    @property
    def window(self) -> tuple[int, int]:
        """Known exponent range ``(lo, hi)`` in powers of the local parameter.

        For exact series this is the stored range; everything outside it is
        a known zero.
        """
        top = self._ztop if self.exact else int(self._prec) - 1
        a, b = self.point.sigma * self._zlo, self.point.sigma * top
        return (min(a, b), max(a, b))

    @property
    def leading_exponent(self) -> int:
        """Exponent of the first nonzero coefficient on the leading side."""
        nz = np.flatnonzero(self._c)
        if len(nz) == 0:
            raise ZeroLeadingTerm("series has no nonzero known coefficient")
        return self.point.sigma * (self._zlo + int(nz[0]))

    def known(self, e: int) -> bool:
        z = self.point.sigma * e
        return z < self._prec

    def coeff(self, e: int) -> complex:
        z = self.point.sigma * int(e)
        if z < self._zlo:
            return 0j
        if z >= self._prec:
            raise InsufficientWindow(
                f"exponent {e} is outside the known window {self.window} at {self.point.label()}")
        i = z - self._zlo
        if i >= len(self._c):
            return 0j
        return self._c[i]

    def __getitem__(self, e: int) -> complex:
        return self.coeff(e)

    def items(self):
        """Yield ``(exponent, coefficient)`` over the stored window."""
        s = self.point.sigma
        for i, v in enumerate(self._c):
            yield s * (self._zlo + i), v

    def to_dict(self, tol: float = 0.0) -> dict[int, complex]:
        return {e: v for e, v in self.items() if abs(v) > tol}

    def zarray(self, zmin: int, zmax: int) -> np.ndarray:
        """Coefficients at local orders ``zmin..zmax`` (inclusive)."""
        if zmax >= self._prec:
            raise InsufficientWindow(
                f"local order {zmax} not known (precision {self._prec})")
        out = np.zeros(zmax - zmin + 1, dtype=WORK_DTYPE)
        a = max(zmin, self._zlo)
        b = min(zmax, self._ztop)
        if a <= b:
            out[a - zmin:b - zmin + 1] = self._c[a - self._zlo:b - self._zlo + 1]
        return out

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._c))) if len(self._c) else 0.0

    def __repr__(self) -> str:
        terms = ", ".join(f"{e}: {v:.6g}" for e, v in self.items() if v != 0)
        tag = "exact" if self.exact else f"window={self.window}"
        return f"LaurentSeries({self.point.label()}, {{{terms}}}, {tag})"

    # algebra ------------------------------------------------------------
    def _check_point(self, other: "LaurentSeries") -> None:
        if self.point != other.point:
            raise MixedPoints(f"{self.point} vs {other.point}")

    def truncate(self, prec: float) -> "LaurentSeries":
        """Forget everything at local order ``>= prec``."""
        prec = min(prec, self._prec)
        if prec == math.inf:
            return self
        return LaurentSeries(self.point, self._zlo, self._c, prec)

    def __add__(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            other = LaurentSeries.constant(self.point, work(other))
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries(self.point, self._zlo, -self._c, self._prec)

    def __sub__(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            other = LaurentSeries.constant(self.point, work(other))
        return add(self, -other)

    def __rsub__(self, other) -> "LaurentSeries":
        return (-self) + other

    def __mul__(self, other) -> "LaurentSeries":
        if isinstance(other, LaurentSeries):
            return mul(self, other)
        return self.scale(work(other))

    __rmul__ = __mul__

    def scale(self, c: complex) -> "LaurentSeries":
        return LaurentSeries(self.point, self._zlo, self._c * c, self._prec)

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by the k-th power of the local parameter."""
        dz = self.point.sigma * int(k)
        prec = self._prec + dz if self._prec != math.inf else math.inf
        return LaurentSeries(self.point, self._zlo + dz, self._c, prec)

    def max_diff(self, other: "LaurentSeries") -> float:
        """Max coefficient difference over the common known window."""
        self._check_point(other)
        prec = min(self._prec, other._prec)
        zmin = min(self._zlo, other._zlo)
        if prec == math.inf:
            zmax = max(self._ztop, other._ztop)
        else:
            zmax = int(prec) - 1
        if zmax < zmin:
            return 0.0
        d = self.zarray(zmin, zmax) - other.zarray(zmin, zmax)
        return float(np.max(np.abs(d))) if len(d) else 0.0


def add(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    """Coefficientwise sum on the common known window."""
    f._check_point(g)
    zlo = min(f.zlo, g.zlo)
    prec = min(f.prec, g.prec)
    if prec == math.inf:
        ztop = max(f._ztop, g._ztop)
    else:
        ztop = int(prec) - 1
    if ztop < zlo:
        raise EmptyWindow("sum has no known coefficient")
    arr = f.zarray(zlo, ztop) + g.zarray(zlo, ztop)
    return LaurentSeries(f.point, zlo, arr, prec)


def mul(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    """Cauchy product with the largest sound window.

    Writing each factor as known on ``[zlo, prec)`` (and zero below), the
    product is known on ``[zlo_f + zlo_g, min(zlo_f + prec_g, zlo_g + prec_f))``.
    Exact factors have infinite precision.
    """
    f._check_point(g)
    zlo = f.zlo + g.zlo
    prec = min(f.zlo + g.prec, g.zlo + f.prec)
    if prec != math.inf and prec <= zlo:
        raise EmptyWindow("product has no sound coefficient")
    a = f._c if f.exact else f._c[: int(prec - g.zlo - f.zlo)]
    b = g._c if g.exact else g._c[: int(prec - f.zlo - g.zlo)]
    if len(a) == 0 or len(b) == 0:
        raise EmptyWindow("product has no sound coefficient")
    arr = np.convolve(a, b)
    return LaurentSeries(f.point, zlo, arr, prec)


def project(f: LaurentSeries, k: int, side: str) -> LaurentSeries:
    """Projection ``[f]_{>=k}`` (``side="geq"``) or ``[f]_{<k}`` (``side="lt"``).

    Exponents are powers of the local parameter.  The finite part of ``f``
    on the leading side of the cut must be fully known.  Discarded
    coefficients become zeros on the same window; a projection onto the
    finite part is exact.
    """
    if side not in ("geq", "lt"):
        raise ValueError("side must be 'geq' or 'lt'")
    s = f.point.sigma
    # local-order cut: the finite piece is z <= zc
    if s < 0:
        zc = -k                      # e >= k  <=>  z <= -k
        finite_is_kept = side == "geq"
    else:
        zc = k - 1                   # e < k   <=>  z <= k-1
        finite_is_kept = side == "lt"
    if zc >= f.prec:
        raise InsufficientWindow(
            f"projection at {k} needs exponents up to the cut; window is {f.window}")
    zmax = f._ztop if f.exact else int(f.prec) - 1
    zmax = max(zmax, zc, f.zlo)
    arr = f.zarray(f.zlo, zmax)
    idx = np.arange(len(arr)) + f.zlo
    if finite_is_kept:
        arr = np.where(idx <= zc, arr, 0)
        return LaurentSeries(f.point, f.zlo, arr, math.inf)
    arr = np.where(idx <= zc, 0, arr)
    return LaurentSeries(f.point, f.zlo, arr, f.prec)


def part(f: LaurentSeries, e: int) -> complex:
    """Single coefficient ``[f]_e``."""
    return f.coeff(e)


def derive(f: LaurentSeries, s: int) -> LaurentSeries:
    """The derivation ``p^s d/dp`` applied termwise."""
    if s not in (0, 1):
        raise ValueError("s must be 0 or 1")
    pt = f.point
    sig = pt.sigma
    # d/dp in the local parameter: exponent e -> e * c, exponent e - 1
    n = len(f._c)
    es = sig * (f.zlo + np.arange(n))
    dc = f._c * es
    if sig < 0:
        # p^e -> e p^{e-1}: local order z = -e becomes z + 1
        zlo = f.zlo + 1
        prec = f.prec + 1 if f.prec != math.inf else math.inf
    else:
        zlo = f.zlo - 1
        prec = f.prec - 1 if f.prec != math.inf else math.inf
    d = LaurentSeries(pt, zlo, dc, prec)
    if s == 0:
        return d
    if pt.kind in ("inf", "zero"):
        return d.shift(1)
    return d * local_p(pt)


def local_p(point: MarkedPoint) -> LaurentSeries:
    """The coordinate function ``p`` expanded at ``point`` (exact)."""
    if point.kind in ("inf", "zero"):
        return LaurentSeries.monomial(point, 1)
    return LaurentSeries.polynomial(point, {0: point.value, 1: 1.0})


def local_p_inverse(point: MarkedPoint, depth: int) -> LaurentSeries:
    """``1/p`` expanded at ``point``; a geometric series at ``v != 0``."""
    if point.kind in ("inf", "zero"):
        return LaurentSeries.monomial(point, -1)
    v = work(point.value)
    if v == 0:
        raise ZeroLeadingTerm("finite point coincides with zero")
    depth = max(1, int(depth))
    k = np.arange(depth)
    arr = (-1.0) ** k / v ** (k + 1)
    return LaurentSeries(point, 0, arr, depth)


def local_p_power(point: MarkedPoint, s: int, depth: int) -> LaurentSeries:
    """``p^s`` for ``s`` in ``{-1, 0, 1}`` at ``point``."""
    if s == 0:
        return LaurentSeries.constant(point, 1.0)
    if s == 1:
        return local_p(point)
    if s == -1:
        return local_p_inverse(point, depth)
    raise ValueError("unsupported power of p")


def residue(f: LaurentSeries) -> complex:
    """``res_{p=inf} f = -a_{-1}`` and ``res_{p=nu} f = a_{-1}``."""
    a = f.coeff(-1)
    return -a if f.point.is_infinity else a


def trace(f: LaurentSeries, s: int) -> complex:
    """``Tr_nu f = eps * res_{p=nu}(p^{-s} f)`` with ``eps = -1`` at infinity."""
    if s not in (0, 1):
        raise ValueError("s must be 0 or 1")
    pt = f.point
    if s == 0:
        g = f
    elif pt.kind in ("inf", "zero"):
        g = f.shift(-1)
    else:
        # the geometric series must reach exponent -1 - (lowest exponent of f)
        need = max(1, -1 - f.zlo + 1)
        g = f * local_p_inverse(pt, need)
    eps = -1.0 if pt.is_infinity else 1.0
    return eps * residue(g)


def inverse(f: LaurentSeries, depth: int | None = None) -> LaurentSeries:
    """Multiplicative inverse by Newton iteration ``g <- g (2 - f g)``.

    The relative precision doubles each step.  For exact input the result
    carries ``depth`` known coefficients.
    """
    z0, c0 = _leading(f)
    rel = (int(f.prec) - z0) if not f.exact else int(depth or DEFAULT_DEPTH)
    unit = LaurentSeries(f.point, 0, f._c[z0 - f.zlo:], rel)
    g = LaurentSeries(f.point, 0, [1.0 / c0], 1)
    have = 1
    two = LaurentSeries.constant(f.point, 2.0)
    while have < rel:
        have = min(2 * have, rel)
        u = unit.truncate(have)
        g = LaurentSeries(g.point, 0, g._c, have)
        g = (g * (two - u * g)).truncate(have)
    out = LaurentSeries(f.point, -z0, g._c, rel - z0)
    return out


def _leading(f: LaurentSeries) -> tuple[int, complex]:
    nz = np.flatnonzero(f._c)
    if len(nz) == 0:
        raise ZeroLeadingTerm("series has no nonzero known coefficient")
    i = int(nz[0])
    return f.zlo + i, f._c[i]


def _power_unit(u: np.ndarray, q, n: int) -> np.ndarray:
    """Coefficients of ``u^q`` for ``u[0] = 1`` (J.C.P. Miller recurrence)."""
    q = np.longdouble(q.numerator) / q.denominator if isinstance(q, Fraction) else work(q)
    up = np.zeros(n, dtype=WORK_DTYPE)
    m = min(n, len(u))
    up[:m] = u[:m]
    h = np.zeros(n, dtype=WORK_DTYPE)
    h[0] = 1.0
    for k in range(1, n):
        j = np.arange(1, min(k, m - 1) + 1)
        if len(j):
            h[k] = np.dot(((q + 1) * j - k) * up[j], h[k - j]) / k
    return h


def _log_unit(u: np.ndarray, n: int) -> np.ndarray:
    """Coefficients of ``log u`` for ``u[0] = 1``."""
    up = np.zeros(n, dtype=WORK_DTYPE)
    m = min(n, len(u))
    up[:m] = u[:m]
    g = np.zeros(n, dtype=WORK_DTYPE)
    jg = np.zeros(n, dtype=WORK_DTYPE)
    for k in range(1, n):
        g[k] = up[k] - np.dot(jg[1:k], up[k - 1:0:-1]) / k
        jg[k] = k * g[k]
    return g


def principal_power(c: complex, q) -> complex:
    """``c**q`` on the principal branch, ``exp(q Log c)``."""
    if c == 0:
        raise ZeroLeadingTerm("zero leading coefficient")
    q = Fraction(q)
    return np.exp(np.longdouble(q.numerator) / q.denominator * np.log(work(c)))


class PuiseuxSeries:
    """Laurent series in ``w = (local parameter)^(1/r)``.

    ``body`` is a :class:`LaurentSeries` whose exponents count powers of
    ``w``.  ``branch`` records the principal-branch root of the leading
    coefficient that was used.
    """

    __slots__ = ("ramification", "body", "branch")

    def __init__(self, ramification: int, body: LaurentSeries, branch: complex = 1.0):
        if ramification < 1:
            raise ValueError("ramification must be positive")
        self.ramification = int(ramification)
        self.body = body
        self.branch = work(branch)

    @property
    def point(self) -> MarkedPoint:
        return self.body.point

    def coeff(self, e: Fraction | int) -> complex:
        """Coefficient of ``(local parameter)^e`` for rational ``e``."""
        e = Fraction(e)
        w = e * self.ramification
        if w.denominator != 1:
            return 0j
        return self.body.coeff(int(w))

    def to_laurent(self, tol: float = 0.0) -> LaurentSeries:
        """Restrict to integer exponents; fractional ones must vanish."""
        r = self.ramification
        if r == 1:
            return self.body
        b = self.body
        s = b.point.sigma
        coeffs = {}
        for e, v in b.items():
            if e % r:
                if abs(v) > tol:
                    raise FractionalLeakage(
                        f"fractional exponent {Fraction(e, r)} has coefficient {v}")
                continue
            coeffs[e // r] = v
        lo_w, hi_w = b.window
        lo = -((-lo_w) // r)
        hi = hi_w // r
        if b.exact:
            return LaurentSeries.polynomial(b.point, coeffs) if coeffs else LaurentSeries.zero(b.point)
        coeffs = {e: v for e, v in coeffs.items() if lo <= e <= hi}
        return LaurentSeries.from_coeffs(b.point, coeffs, (lo, hi))

    def __mul__(self, other: "PuiseuxSeries") -> "PuiseuxSeries":
        if self.ramification != other.ramification:
            r = math.lcm(self.ramification, other.ramification)
            return self.refine(r) * other.refine(r)
        return PuiseuxSeries(self.ramification, self.body * other.body, self.branch * other.branch)

    def refine(self, r: int) -> "PuiseuxSeries":
        """Same series written with ramification ``r`` (a multiple)."""
        if r % self.ramification:
            raise ValueError("new ramification must be a multiple")
        k = r // self.ramification
        if k == 1:
            return self
        b = self.body
        lo, hi = b.window
        coeffs = {e * k: v for e, v in b.items()}
        if b.exact:
            body = LaurentSeries.polynomial(b.point, coeffs)
        else:
            body = LaurentSeries.from_coeffs(b.point, coeffs, (lo * k, hi * k))
        return PuiseuxSeries(r, body, self.branch)

    def __repr__(self) -> str:
        return f"PuiseuxSeries(r={self.ramification}, {self.body!r})"


def pow_rational(f: LaurentSeries, q, depth: int | None = None) -> PuiseuxSeries:
    """Principal-branch power ``f^q`` for rational ``q``.

    The leading monomial ``c t^a`` is factored out and ``(1 + x)^q`` is
    expanded to the precision of ``f`` (or ``depth`` terms for exact input).
    The ramification is the denominator of ``q``.
    """
    q = Fraction(q)
    pt = f.point
    r = q.denominator
    if q == 0:
        return PuiseuxSeries(1, LaurentSeries.constant(pt, 1.0))
    z0, c0 = _leading(f)
    if f.exact and q.denominator == 1 and q > 0:
        g = LaurentSeries.constant(pt, 1.0)
        for _ in range(int(q)):
            g = g * f
        return PuiseuxSeries(1, g, 1.0)
    rel = (int(f.prec) - z0) if not f.exact else int(depth or DEFAULT_DEPTH)
    if not f.exact and depth is not None:
        rel = min(rel, int(depth))
    u = f._c[z0 - f.zlo:] / c0
    h = _power_unit(u, q, rel)
    branch = principal_power(c0, q)
    # leading local order in w: r * q * z0, each power of z is r powers of w
    zw0 = q * z0 * r
    if zw0.denominator != 1:
        raise FractionalLeakage("leading exponent times q is not a multiple of 1/r")
    arr = np.zeros(r * rel, dtype=WORK_DTYPE)
    arr[::r] = h * branch
    body = LaurentSeries(pt, int(zw0), arr, int(zw0) + r * rel)
    return PuiseuxSeries(r, body, branch)


def power(f: LaurentSeries, q, depth: int | None = None, tol: float = 0.0) -> LaurentSeries:
    """``f^q`` when the result has integer exponents only."""
    return pow_rational(f, q, depth).to_laurent(tol)


def log_unit(f: LaurentSeries, depth: int | None = None) -> LaurentSeries:
    """Logarithm of a unit ``c (1 + x)``: ``log c + sum (-1)^(j+1) x^j / j``.

    The leading exponent of ``f`` must be zero.  ``log c`` uses the
    principal branch.
    """
    z0, c0 = _leading(f)
    if z0 != 0:
        raise NonUnitInput(f"leading exponent is {f.point.sigma * z0}, expected 0")
    rel = int(f.prec) if not f.exact else int(depth or DEFAULT_DEPTH)
    if not f.exact and depth is not None:
        rel = min(rel, int(depth))
    u = f._c[-f.zlo:] / c0 if f.zlo < 0 else f._c / c0
    g = _log_unit(u, rel)
    g[0] = np.log(work(c0))
    return LaurentSeries(f.point, 0, g, rel)


def exp_series(f: LaurentSeries, depth: int | None = None) -> LaurentSeries:
    """``exp f`` for ``f`` with nonnegative local order."""
    if f.zlo < 0 and np.any(f._c[: -f.zlo]):
        raise NonUnitInput("exp needs a series without polar part")
    rel = int(f.prec) if not f.exact else int(depth or DEFAULT_DEPTH)
    a = f.zarray(0, rel - 1)
    e = np.zeros(rel, dtype=WORK_DTYPE)
    e[0] = np.exp(a[0])
    for k in range(1, rel):
        j = np.arange(1, k + 1)
        e[k] = np.sum(j * a[j] * e[k - j]) / k
    return LaurentSeries(f.point, 0, e, rel)


def evaluate(f: LaurentSeries, p: complex) -> complex:
    """Sum the known terms of ``f`` at the value ``p`` of the coordinate."""
    pt = f.point
    if pt.is_infinity:
        t = p
    else:
        t = p - pt.location
    return complex(sum(v * t ** e for e, v in f.items()))
