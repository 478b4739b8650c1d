"""Rota-Baxter operators, the cotangent multiplication and metrics.

All operators act on :class:`~frob.series_core.LaurentSeries` at one marked
point ``nu``.  The derivation is ``f' = p^s df/dp`` and the trace is
``Tr_nu f = eps res_nu(p^{-s} f)``.

``ell`` and ``ell_star`` only depend on ``(nu, s)``.  Everything involving
``lambda`` needs a :class:`~frob.meromorphic.ManifoldPoint`, which carries the
expansions of ``lambda``, ``lambda_p`` and the tangent basis at each point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .meromorphic import ManifoldPoint, RationalFunction, degree_at
from .series_core import (WORK_DTYPE, LaurentSeries, MarkedPoint, derive,
                          local_p, local_p_inverse, project, trace, work)

KAPPA = 0.25
SHARP_RTOL = 1e-8


class DegeneratePoint(ValueError):
    """The metric or the trace pairing is singular at this point."""


class InadmissibleCase(ValueError):
    pass


# ---------------------------------------------------------------------------
# context


@dataclass(frozen=True)
class OperatorContext:
    """A marked point ``nu`` with the derivation weight ``s``.

    ``manifold`` is optional; the pure operators ``ell``/``ell_star`` do
    not need it.
    """

    point: MarkedPoint
    s: int
    manifold: ManifoldPoint | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def at(cls, manifold: ManifoldPoint, point: MarkedPoint) -> "OperatorContext":
        if manifold.spec.s == 0 and point.kind == "zero":
            raise InadmissibleCase("nu = 0 is not a marked point for s = 0")
        return cls(point, manifold.spec.s, manifold)

    @property
    def kappa(self) -> float:
        return KAPPA

    def _need(self) -> ManifoldPoint:
        if self.manifold is None:
            raise ValueError("this operation needs a context built from a ManifoldPoint")
        return self.manifold

    @property
    def lam(self) -> LaurentSeries:
        return self._need().expansion("lam", self.point)

    @property
    def lam_p(self) -> LaurentSeries:
        return self._need().expansion("lam_p", self.point)

    def tangent(self) -> list[LaurentSeries]:
        mp = self._need()
        return [mp.expansion(("tangent", j), self.point) for j in range(mp.spec.N)]

    def expand(self, f: RationalFunction) -> LaurentSeries:
        return f.expand_at(self.point, self._need().depth)

    def p_s(self) -> LaurentSeries:
        return local_p(self.point) if self.s == 1 else LaurentSeries.constant(self.point, 1.0)

    def prime(self, f: LaurentSeries) -> LaurentSeries:
        return derive(f, self.s)

    def tr(self, f: LaurentSeries) -> complex:
        return trace(f, self.s)

    # -- canonical cotangent window ------------------------------------------

    @property
    def window(self) -> tuple[int, int]:
        mp = self._need()
        N = mp.spec.N
        if self.point.is_infinity:
            n = mp.spec.n
            return 1 - n, N - n
        m = degree_at(mp.spec, self.point)
        return m - N + 1, m

    def basis(self) -> list[LaurentSeries]:
        lo, hi = self.window
        return [LaurentSeries.monomial(self.point, e) for e in range(lo, hi + 1)]

    def gram(self) -> np.ndarray:
        """``G[j, k] = Tr(X_j e_k)`` for tangent ``X_j`` and window monomials ``e_k``."""
        if "gram" not in self._cache:
            X = self.tangent()
            E = self.basis()
            G = np.array([[self.tr(x * e) for e in E] for x in X], dtype=WORK_DTYPE)
            cond = linalg.cond(G)
            if not np.isfinite(cond) or cond > 1e12:
                raise DegeneratePoint(f"trace pairing is singular at {self.point} (cond {cond:.3g})")
            self._cache["gram"] = G
        return self._cache["gram"]

    def pairings(self, f: LaurentSeries) -> np.ndarray:
        """``(Tr(X_j f))_j``."""
        return np.array([self.tr(x * f) for x in self.tangent()], dtype=WORK_DTYPE)

    def from_pairings(self, b: np.ndarray) -> "CotangentVector":
        c = linalg.solve(self.gram(), b)
        return CotangentVector(self.point, self.window[0], c)

    def reduce(self, f: LaurentSeries) -> "CotangentVector":
        """Representative in the canonical window with the same pairings."""
        return self.from_pairings(self.pairings(f))

    def cotangent(self, coeffs) -> "CotangentVector":
        c = np.asarray(coeffs, dtype=WORK_DTYPE)
        lo, hi = self.window
        if len(c) != hi - lo + 1:
            raise ValueError("coefficient count does not match the canonical window")
        return CotangentVector(self.point, lo, c)

    def dual_basis(self) -> list["CotangentVector"]:
        """``theta^j`` with ``Tr(X_k theta^j) = delta_jk``."""
        Ginv = linalg.inv(self.gram())
        lo = self.window[0]
        return [CotangentVector(self.point, lo, Ginv[:, j]) for j in range(Ginv.shape[0])]


@dataclass(frozen=True)
class CotangentVector:
    """A 1-form represented by a Laurent polynomial in the canonical window."""

    point: MarkedPoint
    lo: int
    coeffs: np.ndarray

    @property
    def series(self) -> LaurentSeries:
        return LaurentSeries.polynomial(
            self.point, {self.lo + k: c for k, c in enumerate(self.coeffs)})

    def __add__(self, other: "CotangentVector") -> "CotangentVector":
        return CotangentVector(self.point, self.lo, self.coeffs + other.coeffs)

    def __mul__(self, c: complex) -> "CotangentVector":
        return CotangentVector(self.point, self.lo, self.coeffs * c)

    __rmul__ = __mul__


def _series(a) -> LaurentSeries:
    return a.series if isinstance(a, CotangentVector) else a


# ---------------------------------------------------------------------------
# the Rota-Baxter operator and its adjoint


def ell(f: LaurentSeries, ctx: OperatorContext) -> LaurentSeries:
    """``ell(f) = 1/2 f - p^s [p^{-s} f]_{<0}``.

    This is the second of the two equal forms; only the principal part of
    ``p^{-s} f`` is needed, so the correction term is exact.
    """
    if ctx.s == 0:
        low = project(f, 0, "lt")
    elif ctx.point.kind in ("inf", "zero"):
        low = project(f.shift(-1), 0, "lt").shift(1)
    else:
        depth = max(1, -f.zlo)
        low = project(f * local_p_inverse(ctx.point, depth), 0, "lt")
        low = low * local_p(ctx.point)
    return f * 0.5 - low


def ell_first_form(f: LaurentSeries, ctx: OperatorContext) -> LaurentSeries:
    """``ell(f) = p^s [p^{-s} f]_{>=0} - 1/2 f`` computed literally."""
    if ctx.s == 0:
        high = project(f, 0, "geq")
    elif ctx.point.kind in ("inf", "zero"):
        high = project(f.shift(-1), 0, "geq").shift(1)
    else:
        depth = (f._ztop - f.zlo + 1) if f.exact else int(f.prec - f.zlo)
        g = f * local_p_inverse(ctx.point, max(1, depth))
        high = project(g, 0, "geq") * local_p(ctx.point)
    return high - f * 0.5


def ell_shifted_form(f: LaurentSeries, ctx: OperatorContext) -> LaurentSeries:
    """``[f]_{>=1} - 1/2 f + v [p^{-1} f]_0`` at a finite point with ``s = 1``."""
    if not (ctx.s == 1 and ctx.point.kind == "finite"):
        raise ValueError("the shifted form applies at a finite movable point with s = 1")
    v = ctx.point.value
    depth = max(1, 1 - f.zlo)
    c0 = (f * local_p_inverse(ctx.point, depth)).coeff(0)
    return project(f, 1, "geq") - f * 0.5 + v * c0


def ell_star(f: LaurentSeries, ctx: OperatorContext) -> LaurentSeries:
    """``ell*(f) = [f]_{<0} - 1/2 f``."""
    return project(f, 0, "lt") - f * 0.5


# ---------------------------------------------------------------------------
# multiplication, sharp and metrics


def circ_full(alpha, beta, ctx: OperatorContext, form: str = "auto") -> LaurentSeries:
    """The unprojected product ``ell(l' a) b + a ell(l' b)`` as a series.

    ``form="geq"`` uses ``p^s[l_p a]_{>=0} b + p^s a [l_p b]_{>=0} - p^s l_p a b``,
    ``form="lt"`` uses ``p^s l_p a b - p^s[l_p a]_{<0} b - p^s a [l_p b]_{<0}``.
    The default picks the form whose projections are finite at ``nu``.
    """
    a, b = _series(alpha), _series(beta)
    if form == "auto":
        form = "geq" if ctx.point.is_infinity else "lt"
    lp = ctx.lam_p
    ps = ctx.p_s()
    la, lb = lp * a, lp * b
    if form == "geq":
        out = project(la, 0, "geq") * b + a * project(lb, 0, "geq") - la * b
    elif form == "lt":
        out = la * b - project(la, 0, "lt") * b - a * project(lb, 0, "lt")
    else:
        raise ValueError("form must be 'geq', 'lt' or 'auto'")
    return ps * out


def circ_projected(alpha, beta, ctx: OperatorContext) -> LaurentSeries:
    """The product projected onto the formal cotangent space at ``nu``."""
    full = circ_full(alpha, beta, ctx)
    mp = ctx._need()
    if ctx.point.is_infinity:
        return project(full, 1 - mp.spec.n, "geq")
    m = degree_at(mp.spec, ctx.point)
    if ctx.point.kind == "zero":
        return project(full, m + ctx.s, "lt")
    return project(full, m + 1, "lt")


def circ(alpha, beta, ctx: OperatorContext, route: str = "full") -> CotangentVector:
    """Product of two cotangent vectors, reduced to the canonical window.

    ``route="full"`` reduces the unprojected product; ``route="projected"``
    projects first.  Both must agree.
    """
    if route == "full":
        return ctx.reduce(circ_full(alpha, beta, ctx))
    if route == "projected":
        return ctx.reduce(circ_projected(alpha, beta, ctx))
    raise ValueError("route must be 'full' or 'projected'")


def sharp_series(alpha, ctx: OperatorContext, form: str = "auto") -> LaurentSeries:
    """``alpha^sharp`` as a series at ``nu``."""
    a = _series(alpha)
    if form == "auto":
        form = "geq" if ctx.point.is_infinity else "lt"
    lp = ctx.lam_p
    la = lp * a
    if form == "geq":
        out = project(la, 0, "geq") - lp * project(a, 0, "geq")
    elif form == "lt":
        out = lp * project(a, 0, "lt") - project(la, 0, "lt")
    else:
        raise ValueError("form must be 'geq', 'lt' or 'auto'")
    return ctx.p_s() * out


def sharp_from_ell(f: LaurentSeries, ctx: OperatorContext) -> LaurentSeries:
    """``ell(l' f) + l' ell*(f)``; agrees with :func:`sharp_series`."""
    lprime = ctx.p_s() * ctx.lam_p
    return ell(lprime * f, ctx) + lprime * ell_star(f, ctx)


def match_tangent(S: LaurentSeries, ctx: OperatorContext, rtol: float = SHARP_RTOL) -> np.ndarray:
    """Coefficients ``c`` with ``sum c_j X_j = S`` as series at ``nu``."""
    X = ctx.tangent()
    series = X + [S]
    zlo = min(f.zlo for f in series)
    prec = min(f.prec for f in series)
    if prec == math.inf:
        ztop = max(f._ztop for f in series)
    else:
        ztop = int(prec) - 1
    A = np.array([f.zarray(zlo, ztop) for f in X]).T
    y = S.zarray(zlo, ztop)
    c = linalg.lstsq(A, y)
    sv = np.linalg.svd(np.asarray(A).astype(complex), compute_uv=False)
    if len(sv) < len(X) or sv[-1] <= 1e-12 * sv[0]:
        raise DegeneratePoint("tangent basis expansions are rank deficient")
    resid = np.max(np.abs(A @ c - y)) if len(y) else 0.0
    scale = max(np.max(np.abs(y)) if len(y) else 0.0, 1e-300)
    if resid > rtol * max(scale, np.max(np.abs(A)) * np.max(np.abs(c))):
        raise DegeneratePoint(f"series is not tangent (residual {resid:.3g})")
    return c


@dataclass(frozen=True)
class TangentVector:
    """Coefficients of a tangent vector in the raw tangent basis."""

    coeffs: np.ndarray

    def rational(self, manifold: ManifoldPoint) -> RationalFunction:
        out = RationalFunction.constant(0.0)
        for c, X in zip(self.coeffs, manifold.tangent):
            out = out + X * work(c)
        return out


def sharp(alpha, ctx: OperatorContext) -> TangentVector:
    return TangentVector(match_tangent(sharp_series(alpha, ctx), ctx))


def metric_eta(alpha, beta, ctx: OperatorContext) -> complex:
    """``eta*(alpha, beta) = Tr_nu(alpha^sharp beta)``."""
    return ctx.tr(sharp_series(alpha, ctx) * _series(beta))


def metric_eta_circ(alpha, beta, ctx: OperatorContext) -> complex:
    """``eta*(alpha, beta) = Tr_nu(alpha o beta)`` with the unprojected product."""
    return ctx.tr(circ_full(alpha, beta, ctx))


def euler_rational(manifold: ManifoldPoint) -> RationalFunction:
    """``E = lambda - (1/n) p lambda_p``."""
    n = manifold.spec.n
    return manifold.lam - RationalFunction.p_power(1) * manifold.lam_p * (1.0 / n)


def intersection_g(alpha, beta, ctx: OperatorContext) -> complex:
    """``g*(alpha, beta) = <E, alpha o beta>`` with the Euler field ``E``."""
    E = ctx.expand(euler_rational(ctx._need()))
    return ctx.tr(E * circ(alpha, beta, ctx).series)


def transfer(alpha: CotangentVector, src: OperatorContext, dst: OperatorContext) -> CotangentVector:
    """The same 1-form represented at another marked point."""
    return dst.from_pairings(src.pairings(alpha.series))


def raw_metric(ctx: OperatorContext) -> np.ndarray:
    """``eta^{jk}`` in the dual basis of the raw tangent basis."""
    theta = ctx.dual_basis()
    return np.array([[metric_eta(a, b, ctx) for b in theta] for a in theta])


def raw_structure(ctx: OperatorContext) -> np.ndarray:
    """``c^{jkl} = eta*(theta^j o theta^k, theta^l)`` in the raw dual basis."""
    theta = ctx.dual_basis()
    N = len(theta)
    sh = [sharp_series(t, ctx) for t in theta]
    c = np.zeros((N, N, N), dtype=WORK_DTYPE)
    for j in range(N):
        for k in range(j, N):
            prod = circ_full(theta[j], theta[k], ctx)
            for l in range(N):
                val = ctx.tr(prod * sh[l])
                c[j, k, l] = c[k, j, l] = val
    return c


# ---------------------------------------------------------------------------
# residual verifiers


@dataclass
class ResidualReport:
    name: str
    max_residual: float
    samples: int
    seed: int | None
    point: str
    s: int

    def passed(self, tol: float) -> bool:
        return self.max_residual < tol

    def to_dict(self) -> dict:
        return {"name": self.name, "max_residual": self.max_residual,
                "samples": self.samples, "seed": self.seed,
                "point": self.point, "s": self.s}

    def merge(self, other: "ResidualReport") -> "ResidualReport":
        return ResidualReport(self.name, max(self.max_residual, other.max_residual),
                              self.samples + other.samples, self.seed, self.point, self.s)


def random_laurent(rng: np.random.Generator, point: MarkedPoint, lo: int, hi: int) -> LaurentSeries:
    """Exponents ``lo..hi`` with coefficients uniform on the unit disc."""
    k = hi - lo + 1
    r = np.sqrt(rng.random(k))
    th = 2 * np.pi * rng.random(k)
    c = r * np.exp(1j * th)
    return LaurentSeries.polynomial(point, {lo + i: c[i] for i in range(k)})


def _resid(f: LaurentSeries, scale: float) -> float:
    return f.max_abs() / max(scale, 1e-300)


def _scale(*fs: LaurentSeries) -> float:
    return max(max(f.max_abs() for f in fs), 1.0) ** 2


def _sweep(name, ctx, samples, seed, lo, hi, fn, pairs=None):
    rng = np.random.default_rng(seed)
    worst = 0.0
    pairs = list(pairs or [])
    for a, b in pairs:
        worst = max(worst, _resid(fn(a, b), _scale(a, b)))
    for _ in range(samples):
        a = random_laurent(rng, ctx.point, lo, hi)
        b = random_laurent(rng, ctx.point, lo, hi)
        worst = max(worst, _resid(fn(a, b), _scale(a, b)))
    return ResidualReport(name, worst, samples + len(pairs), seed, ctx.point.label(), ctx.s)


def rb_defect(a, b, ctx):
    """``ell(ell(a) b) + ell(a ell(b)) - ell(a) ell(b) - kappa a b``."""
    la, lb = ell(a, ctx), ell(b, ctx)
    return ell(la * b, ctx) + ell(a * lb, ctx) - la * lb - (a * b) * ctx.kappa


def frel_defect(a, b, ctx):
    """``ell(a') + ell*(a)'``; ``b`` is ignored."""
    return ell(ctx.prime(a), ctx) + ctx.prime(ell_star(a, ctx))


def rel_defect(a, b, ctx):
    """The endomorphism relation with ``r = ell*``."""
    bp = ctx.prime(b)
    ra = ell_star(a, ctx)
    rbp = ctx.prime(ell_star(b, ctx))
    return ell_star(ra * bp, ctx) + ell_star(a * rbp, ctx) - ra * rbp - (a * bp) * ctx.kappa


def rel3_defect(a, b, ctx):
    """``ell(ell*(a) b') - ell(a ell(b)') - ell*(a) ell(b)' + kappa a b'``.

    The companion identity holds with ``-kappa a b'`` on the right-hand side.
    """
    bp = ctx.prime(b)
    lbp = ctx.prime(ell(b, ctx))
    ra = ell_star(a, ctx)
    return ell(ra * bp, ctx) - ell(a * lbp, ctx) - ra * lbp + (a * bp) * ctx.kappa


def drb_defect(a, b, ctx):
    ra = ell_star(a, ctx)
    lb = ell(b, ctx)
    return ell_star(ra * b, ctx) - ell_star(a * lb, ctx) + ra * lb - (a * b) * ctx.kappa


def verify_rota_baxter(ctx: OperatorContext, samples: int = 100, seed: int = 0,
                       lo: int = -2, hi: int = 2) -> ResidualReport:
    return _sweep("rota_baxter", ctx, samples, seed, lo, hi, lambda a, b: rb_defect(a, b, ctx))


def verify_frel(ctx: OperatorContext, samples: int = 100, seed: int = 0,
                lo: int = -2, hi: int = 2) -> ResidualReport:
    return _sweep("frel", ctx, samples, seed, lo, hi, lambda a, b: frel_defect(a, b, ctx))


def verify_rel(ctx: OperatorContext, samples: int = 100, seed: int = 0,
               lo: int = -2, hi: int = 2) -> dict[str, ResidualReport]:
    """Residuals of the endomorphism relation, its companion and the dual identity."""
    return {
        "rel": _sweep("rel", ctx, samples, seed, lo, hi, lambda a, b: rel_defect(a, b, ctx)),
        "rel3": _sweep("rel3", ctx, samples, seed, lo, hi, lambda a, b: rel3_defect(a, b, ctx)),
        "dRB": _sweep("dRB", ctx, samples, seed, lo, hi, lambda a, b: drb_defect(a, b, ctx)),
    }


def arel_defect(alpha, beta, ctx: OperatorContext) -> LaurentSeries:
    """``(a o b)^sharp - a^sharp ell(l' b) - l' ell*(a^sharp b)`` on the full algebra."""
    a, b = _series(alpha), _series(beta)
    lprime = ctx.p_s() * ctx.lam_p
    ash = sharp_from_ell(a, ctx)
    lhs = sharp_from_ell(circ_full(a, b, ctx), ctx)
    return lhs - ash * ell(lprime * b, ctx) - lprime * ell_star(ash * b, ctx)


def verify_arel(ctx: OperatorContext, samples: int = 20, seed: int = 0) -> ResidualReport:
    lo, hi = ctx.window
    # every term carries one factor of l', whose tail can be large at infinity
    inv = 1.0 / max(1.0, (ctx.p_s() * ctx.lam_p).max_abs())
    return _sweep("arel", ctx, samples, seed, lo, hi, lambda a, b: arel_defect(a, b, ctx) * inv)


def random_cotangent(rng: np.random.Generator, ctx: OperatorContext) -> CotangentVector:
    lo, hi = ctx.window
    k = hi - lo + 1
    c = np.sqrt(rng.random(k)) * np.exp(2j * np.pi * rng.random(k))
    return CotangentVector(ctx.point, lo, c)
