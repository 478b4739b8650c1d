"""Rational superpotentials on the Riemann sphere.

The family is

    lambda(p) = prod_i (p - a_i) / (p^{m0} prod_j (p - v_j)^{m_j})

with ``n = L - m0 - sum m_j >= 1``.  For ``s = 0`` we need ``m0 = 0`` and the
normalization ``sum a_i = sum m_j v_j``, which removes the ``p^{n-1}`` term;
the last zero is then the dependent coordinate.  For ``s = 1`` we need
``m0 >= 1`` or ``m0 = -1`` (a simple zero at the origin).

Rational functions are stored as a numerator polynomial in ``p`` over a
product of powers ``(p - nu)`` at marked points.  Expansions at any marked
point are exact on the polynomial side and truncated binomial series on the
denominator side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .series_core import (INF, WORK_DTYPE, ZERO, LaurentSeries, MarkedPoint,
                          SeriesError, work)

COINCIDENCE_TOL = 1e-6
POLISH_TOL = 1e-12


class SpecError(ValueError):
    """Invalid superpotential data."""


class NormalizationViolated(SpecError):
    pass


class CoincidentPoints(SpecError):
    pass


class ExpansionAtRegularPoint(SeriesError):
    pass


# ---------------------------------------------------------------------------
# specs and coordinates


@dataclass(frozen=True)
class SuperpotentialSpec:
    """Combinatorial data of the family: ``s``, zero count, pole orders."""

    s: int
    L: int
    m0: int = 0
    poles: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple(int(m) for m in self.poles))

    @property
    def K(self) -> int:
        return len(self.poles)

    @property
    def n(self) -> int:
        return self.L - self.m0 - sum(self.poles)

    @property
    def N(self) -> int:
        return self.K + self.L + self.s - 1

    @property
    def nonflat_unit(self) -> bool:
        return self.s == 1 and self.m0 == -1

    def coordinate_names(self) -> list[str]:
        nz = self.L - 1 if self.s == 0 else self.L
        return [f"a{i + 1}" for i in range(nz)] + [f"v{j + 1}" for j in range(self.K)]

    def to_dict(self) -> dict:
        return {"s": self.s, "L": self.L, "m0": self.m0, "poles": list(self.poles)}


@dataclass
class AdmissibilityReport:
    status: str
    N: int
    n: int
    reasons: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return self.status != "inadmissible"

    def to_dict(self) -> dict:
        return {"status": self.status, "N": self.N, "n": self.n,
                "reasons": list(self.reasons), "warnings": list(self.warnings)}


def validate(spec: SuperpotentialSpec) -> AdmissibilityReport:
    """Classify a spec as flat-unit, nonflat-unit or inadmissible."""
    reasons = []
    if spec.s not in (0, 1):
        reasons.append(f"s must be 0 or 1, got {spec.s}")
    if spec.L < 0:
        reasons.append("zero count L must be nonnegative")
    for k, m in enumerate(spec.poles, 1):
        if m < 1:
            reasons.append(f"pole order m{k} = {m} must be >= 1")
    if spec.n < 1:
        reasons.append(f"degree at infinity n = {spec.n} must be >= 1")
    if spec.s == 0 and spec.m0 != 0:
        reasons.append(f"s = 0 requires m0 = 0 (deg_0 lambda = 0), got m0 = {spec.m0}")
    if spec.s == 1 and not (spec.m0 >= 1 or spec.m0 == -1):
        reasons.append(f"s = 1 requires m0 >= 1 or m0 = -1, got m0 = {spec.m0}")
    if not reasons and spec.N < 1:
        reasons.append("the family is zero-dimensional (N = 0)")
    if reasons:
        return AdmissibilityReport("inadmissible", spec.N, spec.n, reasons)
    if spec.nonflat_unit:
        return AdmissibilityReport(
            "admissible-nonflat-unit", spec.N, spec.n,
            warnings=["s = 1 with m0 = -1: the unit vector field is not flat"])
    return AdmissibilityReport("admissible-flat-unit", spec.N, spec.n)


@dataclass(frozen=True)
class RawCoordinates:
    """Zeros ``a_i`` and poles ``v_j`` of lambda."""

    zeros: tuple[complex, ...]
    poles: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "zeros", tuple(complex(a) for a in self.zeros))
        object.__setattr__(self, "poles", tuple(complex(v) for v in self.poles))

    @classmethod
    def from_vector(cls, spec: SuperpotentialSpec, x: Sequence[complex]) -> "RawCoordinates":
        x = [complex(t) for t in x]
        if len(x) != spec.N:
            raise SpecError(f"expected {spec.N} coordinates, got {len(x)}")
        if spec.s == 0:
            free = x[: spec.L - 1]
            poles = x[spec.L - 1:]
            last = sum(m * v for m, v in zip(spec.poles, poles)) - sum(free)
            return cls(tuple(free) + (last,), tuple(poles))
        return cls(tuple(x[: spec.L]), tuple(x[spec.L:]))

    def vector(self, spec: SuperpotentialSpec) -> np.ndarray:
        zs = list(self.zeros[: spec.L - 1]) if spec.s == 0 else list(self.zeros)
        return np.array(zs + list(self.poles), dtype=complex)


def check_raw(spec: SuperpotentialSpec, x: RawCoordinates, tol: float = COINCIDENCE_TOL) -> None:
    if len(x.zeros) != spec.L or len(x.poles) != spec.K:
        raise SpecError("coordinate counts do not match the spec")
    if spec.s == 0:
        lhs = sum(x.zeros)
        rhs = sum(m * v for m, v in zip(spec.poles, x.poles))
        if abs(lhs - rhs) > 1e-9 * max(1.0, abs(lhs), abs(rhs)):
            raise NormalizationViolated(
                f"sum of zeros {lhs} differs from sum m_j v_j = {rhs}")
    pts = list(x.zeros) + list(x.poles)
    if spec.s == 1:
        pts.append(0j)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if abs(pts[i] - pts[j]) < tol:
                raise CoincidentPoints(
                    f"points {pts[i]} and {pts[j]} are closer than {tol}")


# ---------------------------------------------------------------------------
# rational functions


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=WORK_DTYPE)
    k = len(c)
    while k > 1 and c[k - 1] == 0:
        k -= 1
    return c[:k]


def taylor_shift(c: np.ndarray, mu: complex) -> np.ndarray:
    """Coefficients of ``P(mu + t)`` in ``t`` for ``P`` with coefficients ``c``."""
    c = np.asarray(c, dtype=WORK_DTYPE)
    mu = work(mu)
    n = len(c)
    out = np.zeros(n, dtype=WORK_DTYPE)
    for j in range(n):
        k = np.arange(j, n)
        binom = np.array([math.comb(int(kk), j) for kk in k], dtype=float)
        out[j] = np.sum(c[k] * binom * mu ** (k - j))
    return out


def _binomial_neg(e: int, x: complex, depth: int) -> np.ndarray:
    """Coefficients of ``(1 + x t)^(-e)`` up to ``t^(depth-1)``."""
    k = np.arange(depth)
    coef = np.array([math.comb(e + int(kk) - 1, int(kk)) for kk in k], dtype=np.longdouble)
    return coef * (-work(x)) ** k


class RationalFunction:
    """``numer(p) / prod_nu (p - nu)^{e_nu}`` with marked poles ``nu``."""

    __slots__ = ("numer", "denom")

    def __init__(self, numer, denom: dict[MarkedPoint, int] | None = None):
        self.numer = _trim(np.atleast_1d(np.asarray(numer, dtype=WORK_DTYPE)))
        d = {}
        for pt, e in (denom or {}).items():
            if pt.is_infinity:
                raise SpecError("infinity cannot appear in a denominator")
            if e:
                d[pt] = int(e)
        self.denom = d

    @classmethod
    def constant(cls, c: complex) -> "RationalFunction":
        return cls([c])

    @classmethod
    def p_power(cls, k: int) -> "RationalFunction":
        if k >= 0:
            c = np.zeros(k + 1, dtype=WORK_DTYPE)
            c[k] = 1
            return cls(c)
        return cls([1.0], {ZERO: -k})

    def _normalized(self) -> "RationalFunction":
        """Move nonpositive denominator powers to the numerator."""
        num = self.numer
        d = {}
        for pt, e in self.denom.items():
            if e > 0:
                d[pt] = e
            elif e < 0:
                for _ in range(-e):
                    num = npoly.polymul(num, [-pt.location, 1.0])
        return RationalFunction(num, d)

    def __mul__(self, other) -> "RationalFunction":
        if not isinstance(other, RationalFunction):
            return RationalFunction(self.numer * work(other), self.denom)
        d = dict(self.denom)
        for pt, e in other.denom.items():
            d[pt] = d.get(pt, 0) + e
        return RationalFunction(npoly.polymul(self.numer, other.numer), d)

    __rmul__ = __mul__

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.numer, self.denom)

    def __add__(self, other) -> "RationalFunction":
        if not isinstance(other, RationalFunction):
            other = RationalFunction.constant(work(other))
        d = dict(self.denom)
        for pt, e in other.denom.items():
            d[pt] = max(d.get(pt, 0), e)
        na = self.numer
        for pt, e in d.items():
            for _ in range(e - self.denom.get(pt, 0)):
                na = npoly.polymul(na, [-pt.location, 1.0])
        nb = other.numer
        for pt, e in d.items():
            for _ in range(e - other.denom.get(pt, 0)):
                nb = npoly.polymul(nb, [-pt.location, 1.0])
        return RationalFunction(npoly.polyadd(na, nb), d)

    __radd__ = __add__

    def __sub__(self, other) -> "RationalFunction":
        return self + (-other if isinstance(other, RationalFunction) else -work(other))

    def __rsub__(self, other) -> "RationalFunction":
        return (-self) + other

    def derivative(self) -> "RationalFunction":
        """Exact ``d/dp``."""
        pts = list(self.denom)
        # P / D with D = prod (p - nu)^e:  (P' Q - P sum e_nu Q / (p - nu)) / (D Q)
        # where Q = prod (p - nu)
        q = np.array([1.0], dtype=WORK_DTYPE)
        for pt in pts:
            q = npoly.polymul(q, [-pt.location, 1.0])
        dp = npoly.polyder(self.numer) if len(self.numer) > 1 else np.array([0j])
        num = npoly.polymul(dp, q)
        for pt in pts:
            qi = np.array([1.0], dtype=WORK_DTYPE)
            for other in pts:
                if other != pt:
                    qi = npoly.polymul(qi, [-other.location, 1.0])
            num = npoly.polysub(num, self.denom[pt] * npoly.polymul(self.numer, qi))
        d = {pt: e + 1 for pt, e in self.denom.items()}
        return RationalFunction(num, d)

    def evaluate(self, p: complex) -> complex:
        val = npoly.polyval(p, self.numer)
        for pt, e in self.denom.items():
            val /= (p - pt.location) ** e
        return complex(val)

    __call__ = evaluate

    def degree_at(self, point: MarkedPoint) -> int:
        """Formal pole order at ``point`` (negative for zeros of the factor)."""
        if point.is_infinity:
            return (len(self.numer) - 1) - sum(self.denom.values())
        return self.denom.get(point, 0)

    def expand_at(self, point: MarkedPoint, depth: int) -> LaurentSeries:
        """Laurent expansion with ``depth`` known terms from the formal leading exponent."""
        depth = max(1, int(depth))
        if point.is_infinity:
            num = LaurentSeries.polynomial(point, {k: c for k, c in enumerate(self.numer)})
            out = num
            for pt, e in self.denom.items():
                # (p - nu)^(-e) = p^(-e) (1 - nu/p)^(-e)
                arr = _binomial_neg(e, -pt.location, depth)
                fac = LaurentSeries(point, e, arr, e + depth)
                out = out * fac
            return out
        mu = work(point.location)
        num_c = taylor_shift(self.numer, mu)
        out = LaurentSeries.polynomial(point, {k: c for k, c in enumerate(num_c)})
        for pt, e in self.denom.items():
            if _same_point(pt, point):
                out = out.shift(-e)
                continue
            d = mu - work(pt.location)
            if d == 0:
                raise SeriesError("denominator factor vanishes at the expansion point")
            # (d + t)^(-e) = d^(-e) (1 + t/d)^(-e)
            arr = _binomial_neg(e, 1 / d, depth) / d ** e
            out = out * LaurentSeries(point, 0, arr, depth)
        return out

    def __repr__(self) -> str:
        den = " ".join(f"(p-{pt.label()})^{e}" for pt, e in self.denom.items())
        return f"RationalFunction(numer={np.round(self.numer, 12).tolist()}, denom='{den}')"


def _same_point(a: MarkedPoint, b: MarkedPoint) -> bool:
    if a.is_infinity or b.is_infinity:
        return a.is_infinity and b.is_infinity
    return a == b or (a.location == b.location)


def build_lambda(spec: SuperpotentialSpec, x: RawCoordinates, check: bool = True) -> RationalFunction:
    """The superpotential of the family at raw coordinates ``x``."""
    if check:
        check_raw(spec, x)
    num = np.array([1.0], dtype=WORK_DTYPE)
    for a in x.zeros:
        num = npoly.polymul(num, [-a, 1.0])
    denom = {}
    if spec.m0 > 0:
        denom[ZERO] = spec.m0
    elif spec.m0 < 0:
        for _ in range(-spec.m0):
            num = npoly.polymul(num, [0.0, 1.0])
    for k, (v, m) in enumerate(zip(x.poles, spec.poles), 1):
        denom[MarkedPoint.finite(k, v)] = m
    return RationalFunction(num, denom)


def lambda_p(lam: RationalFunction) -> RationalFunction:
    return lam.derivative()


def expand_at(lam: RationalFunction, point: MarkedPoint, depth: int) -> LaurentSeries:
    return lam.expand_at(point, depth)


def marked_points(spec: SuperpotentialSpec, x: RawCoordinates) -> list[MarkedPoint]:
    """``Gamma``: infinity, zero when ``s = 1``, then the movable poles."""
    pts = [INF]
    if spec.s == 1:
        pts.append(ZERO)
    pts += [MarkedPoint.finite(k, v) for k, v in enumerate(x.poles, 1)]
    return pts


def degree_at(spec: SuperpotentialSpec, point: MarkedPoint) -> int:
    if point.is_infinity:
        return spec.n
    if point.kind == "zero":
        return spec.m0
    return spec.poles[point.index - 1]


def tangent_basis(spec: SuperpotentialSpec, x: RawCoordinates) -> list[RationalFunction]:
    """``d lambda / d x_j`` for the raw coordinates, dependent zero eliminated."""
    lam = build_lambda(spec, x, check=False)
    zero_terms = []
    for i in range(spec.L):
        # d lambda / d a_i = -lambda / (p - a_i)
        num = np.array([-1.0], dtype=WORK_DTYPE)
        for l, a in enumerate(x.zeros):
            if l != i:
                num = npoly.polymul(num, [-a, 1.0])
        if spec.m0 < 0:
            for _ in range(-spec.m0):
                num = npoly.polymul(num, [0.0, 1.0])
        zero_terms.append(RationalFunction(num, lam.denom))
    pole_terms = []
    for k, (v, m) in enumerate(zip(x.poles, spec.poles), 1):
        pt = MarkedPoint.finite(k, v)
        d = dict(lam.denom)
        d[pt] = d[pt] + 1
        pole_terms.append(RationalFunction(m * lam.numer, d))
    if spec.s == 0:
        last = zero_terms[-1]
        basis = [z - last for z in zero_terms[:-1]]
        basis += [pt + m * last for pt, m in zip(pole_terms, spec.poles)]
        return basis
    return zero_terms + pole_terms


def factor(spec: SuperpotentialSpec, x: RawCoordinates) -> RationalFunction:
    """``p^{m0} prod (p - v_j)^{m_j + 1}``; tangent vectors are ``poly / factor``."""
    num = np.array([1.0], dtype=WORK_DTYPE)
    denom = {}
    if spec.m0 >= 0:
        for _ in range(spec.m0):
            num = npoly.polymul(num, [0.0, 1.0])
    else:
        denom[ZERO] = -spec.m0
    for v, m in zip(x.poles, spec.poles):
        for _ in range(m + 1):
            num = npoly.polymul(num, [-v, 1.0])
    return RationalFunction(num, denom)


def residue_sum(lam: RationalFunction, spec: SuperpotentialSpec, x: RawCoordinates,
                depth: int = 8) -> complex:
    """Sum of residues of ``lambda dp`` over every pole including infinity."""
    from .series_core import residue
    total = 0j
    pts = marked_points(spec, x)
    if spec.s == 0 or spec.m0 <= 0:
        pts = [p for p in pts if p.kind != "zero"]
    for pt in pts:
        total += residue(lam.expand_at(pt, depth + spec.n + 2))
    return total


# ---------------------------------------------------------------------------
# partial-fraction input chart


@dataclass
class PartialFractions:
    """``lambda = sum_k c_k p^k + sum_nu sum_j d_{nu,j} (p - nu)^(-j)``.

    ``polynomial`` holds ascending coefficients; ``principal`` maps a pole
    location to the list ``[d_1, d_2, ...]``.  A pole at ``0`` is the fixed
    marked point; all other poles are the movable ``v_j`` in the given order.
    """

    polynomial: list[complex]
    principal: list[tuple[complex, list[complex]]]

    def rational(self) -> RationalFunction:
        out = RationalFunction(np.asarray(self.polynomial, dtype=complex))
        k = 0
        for loc, coeffs in self.principal:
            if loc == 0:
                pt = ZERO
            else:
                k += 1
                pt = MarkedPoint.finite(k, loc)
            for j, d in enumerate(coeffs, 1):
                if d != 0:
                    out = out + RationalFunction([d], {pt: j})
        return out


def polish_roots(coeffs: np.ndarray, tol: float = POLISH_TOL, maxiter: int = 60) -> np.ndarray:
    """Roots of a polynomial (ascending coefficients) with Newton polishing."""
    c = _trim(coeffs).astype(complex)
    if len(c) == 1:
        return np.zeros(0, dtype=complex)
    roots = np.roots(c[::-1]).astype(complex)
    dc = npoly.polyder(c)
    scale = np.max(np.abs(c))
    for i, r in enumerate(roots):
        for _ in range(maxiter):
            f = npoly.polyval(r, c)
            if abs(f) <= tol * scale:
                break
            df = npoly.polyval(r, dc)
            if df == 0:
                break
            r = r - f / df
        roots[i] = r
    return roots


def raw_from_partial_fractions(spec: SuperpotentialSpec, pf: PartialFractions,
                               tol: float = 1e-9) -> RawCoordinates:
    """Factor a partial-fraction superpotential into zeros and poles."""
    poly = _trim(np.asarray(pf.polynomial, dtype=complex))
    n = len(poly) - 1
    if n != spec.n or abs(poly[-1] - 1) > tol:
        raise SpecError(f"polynomial part must be monic of degree n = {spec.n}")
    locs = [loc for loc, _ in pf.principal if loc != 0]
    if len(locs) != spec.K:
        raise SpecError(f"expected {spec.K} movable poles, got {len(locs)}")
    for (loc, coeffs) in pf.principal:
        if loc == 0:
            if spec.m0 < 1 or len(coeffs) != spec.m0:
                raise SpecError("principal part at 0 does not match m0")
    for loc, m in zip(locs, spec.poles):
        coeffs = [c for l, c in pf.principal if l == loc][0]
        if len(coeffs) != m or abs(coeffs[-1]) == 0:
            raise SpecError(f"principal part at {loc} must have exact order {m}")
    lam = pf.rational()
    roots = polish_roots(lam.numer)
    if spec.m0 == -1:
        i = int(np.argmin(np.abs(roots)))
        if abs(roots[i]) > tol * max(1.0, np.max(np.abs(roots))):
            raise SpecError("m0 = -1 requires lambda(0) = 0")
        roots = np.delete(roots, i)
    if len(roots) != spec.L:
        raise SpecError(f"found {len(roots)} zeros, expected L = {spec.L}")
    raw = RawCoordinates(tuple(roots), tuple(locs))
    check_raw(spec, raw)
    return raw


# ---------------------------------------------------------------------------
# a point of the manifold with cached expansions


def default_depth(spec: SuperpotentialSpec) -> int:
    """Known terms per expansion; generous relative to ``N`` and pole orders."""
    M = max([abs(spec.m0)] + list(spec.poles) + [1])
    return 2 * (spec.N + spec.n + M) + 16


class ManifoldPoint:
    """``lambda`` at raw coordinates ``x`` with cached local expansions."""

    def __init__(self, spec: SuperpotentialSpec, x: RawCoordinates, depth: int | None = None):
        rep = validate(spec)
        if not rep.admissible:
            raise SpecError("; ".join(rep.reasons))
        check_raw(spec, x)
        self.spec = spec
        self.x = x
        self.depth = int(depth or default_depth(spec))
        self.lam = build_lambda(spec, x, check=False)
        self.lam_p = self.lam.derivative()
        self.tangent = tangent_basis(spec, x)
        self.points = marked_points(spec, x)
        self._exp: dict = {}

    @classmethod
    def from_vector(cls, spec: SuperpotentialSpec, x, depth: int | None = None) -> "ManifoldPoint":
        return cls(spec, RawCoordinates.from_vector(spec, x), depth)

    def point(self, label: str) -> MarkedPoint:
        for pt in self.points:
            if pt.label() == label:
                return pt
        raise KeyError(label)

    def rational(self, key) -> RationalFunction:
        if key == "lam":
            return self.lam
        if key == "lam_p":
            return self.lam_p
        if isinstance(key, tuple) and key[0] == "tangent":
            return self.tangent[key[1]]
        raise KeyError(key)

    def expansion(self, key, point: MarkedPoint) -> LaurentSeries:
        k = (key, point)
        if k not in self._exp:
            self._exp[k] = self.rational(key).expand_at(point, self.depth)
        return self._exp[k]
