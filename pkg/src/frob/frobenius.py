"""Flat coordinates, Euler and unit fields, structure constants, prepotential.

Labels follow the marked points: ``t^i_inf`` for ``1 <= i <= n-1`` and
``t^j_nu`` for ``0 <= j <= m`` at each finite pole ``nu`` (``0`` when
``s = 1`` and ``m0 >= 1``, then ``v_1..v_K``).  ``j = m`` is the logarithmic
coordinate.

Tensors are first computed in the frame dual to the raw tangent basis
``X_j = d lambda / d x_j`` at one marked point and then pushed to the flat
frame with the Jacobian ``J[a, j] = Tr(X_j dt^a)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .meromorphic import (ManifoldPoint, RationalFunction, RawCoordinates,
                          SuperpotentialSpec, degree_at)
from .rota_baxter import (CotangentVector, DegeneratePoint, OperatorContext,
                          circ, circ_full, euler_rational, metric_eta,
                          raw_metric, raw_structure, sharp_series, transfer)
from . import linalg
from .series_core import (INF, WORK_DTYPE, ZERO, LaurentSeries, MarkedPoint,
                          log_unit, pow_rational, trace, work)

COND_LIMIT = 1e10
JAC_FD_STEP = 1e-6
JAC_FD_RTOL = 1e-6


class JacobianMismatch(ValueError):
    pass


class EulerMismatch(ValueError):
    pass


class WeightThree(ValueError):
    pass


class UnsupportedLevel(ValueError):
    pass


class BranchAmbiguity(ValueError):
    pass


class InversionFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# labels


@dataclass(frozen=True, order=True)
class FlatLabel:
    """``t^index`` at the marked point ``kind`` (pole number ``k`` if finite)."""

    kind: str
    k: int
    index: int

    @property
    def name(self) -> str:
        where = {"inf": "inf", "zero": "0"}.get(self.kind, f"v{self.k}")
        return f"t^{self.index}_{where}"

    def degree(self, spec: SuperpotentialSpec) -> int:
        if self.kind == "inf":
            return spec.n
        if self.kind == "zero":
            return spec.m0
        return spec.poles[self.k - 1]

    def is_log(self, spec: SuperpotentialSpec) -> bool:
        return self.kind != "inf" and self.index == self.degree(spec)

    def point(self, mp: ManifoldPoint) -> MarkedPoint:
        if self.kind == "inf":
            return INF
        if self.kind == "zero":
            return ZERO
        return MarkedPoint.finite(self.k, mp.x.poles[self.k - 1])


def base_labels(spec: SuperpotentialSpec) -> list[FlatLabel]:
    """All labels ordered by point (inf, 0, v_1..v_K); index descending at inf."""
    out = [FlatLabel("inf", 0, i) for i in range(spec.n - 1, 0, -1)]
    if spec.s == 1 and spec.m0 >= 1:
        out += [FlatLabel("zero", 0, j) for j in range(spec.m0 + 1)]
    for k, m in enumerate(spec.poles, 1):
        out += [FlatLabel("finite", k, j) for j in range(m + 1)]
    if len(out) != spec.N:
        raise AssertionError("label count differs from the dimension")
    return out


def label_by_name(spec: SuperpotentialSpec, name: str) -> FlatLabel:
    for lab in base_labels(spec):
        if lab.name == name:
            return lab
    raise KeyError(name)


# ---------------------------------------------------------------------------
# exact Euler data


@dataclass(frozen=True)
class EulerData:
    """``E^a = weights[a] t^a + shifts[a]`` and the charge ``d``."""

    weights: tuple[Fraction, ...]
    shifts: tuple[Fraction, ...]
    d: Fraction

    def components(self, t: Sequence[complex]) -> np.ndarray:
        return np.array([float(w) * ti + float(r) for w, r, ti in
                         zip(self.weights, self.shifts, t)], dtype=complex)

    def to_dict(self) -> dict:
        return {"weights": [str(w) for w in self.weights],
                "shifts": [str(r) for r in self.shifts], "d": str(self.d)}


def charge(spec: SuperpotentialSpec) -> Fraction:
    return 1 + Fraction(2 * (spec.s - 1), spec.n)


def label_euler(spec: SuperpotentialSpec, lab: FlatLabel) -> tuple[Fraction, Fraction]:
    """Weight and shift of ``E^label`` for ``E = lambda - (1/n) p lambda_p``."""
    n, s = spec.n, spec.s
    base = Fraction(1 - s, n)
    if lab.kind == "inf":
        return base + Fraction(n - lab.index, n), Fraction(0)
    m = lab.degree(spec)
    j = lab.index
    if j < m or s == 0:
        return base + Fraction(m - j, m), Fraction(0)
    if lab.kind == "zero":
        return Fraction(0), Fraction(spec.m0, n) + 1
    return Fraction(0), Fraction(m, n)


def euler_data(spec: SuperpotentialSpec, labels: Sequence[FlatLabel]) -> EulerData:
    ws, rs = zip(*(label_euler(spec, lab) for lab in labels)) if labels else ((), ())
    return EulerData(tuple(ws), tuple(rs), charge(spec))


# ---------------------------------------------------------------------------
# traces of powers and logarithms


def _power_trace(ser: LaurentSeries, q: Fraction, s: int) -> complex:
    P = pow_rational(ser, q)
    return trace(P.to_laurent(tol=0.0), s)


def _power_series(ser: LaurentSeries, q: Fraction) -> LaurentSeries:
    return pow_rational(ser, q).to_laurent(tol=0.0)


def _rf_power(f: RationalFunction, k: int) -> RationalFunction:
    out = RationalFunction.constant(1.0)
    for _ in range(k):
        out = out * f
    return out


class LogTraces:
    """The log-trace combination at one finite pole ``nu_k``.

    ``I(f) = Tr_k(f log lambda) + (m_k/n) Tr_inf(f log lambda)`` for a
    rational ``f`` with poles in the marked set, evaluated by splitting
    ``log lambda`` into unit-part logarithms and ``log(p - v_k)`` pieces
    traced at the other finite poles.  All logs use the principal branch.
    """

    def __init__(self, mp: ManifoldPoint, lab: FlatLabel):
        self.mp = mp
        self.spec = mp.spec
        self.pt = lab.point(mp)
        self.m = lab.degree(mp.spec)
        D = mp.depth
        lam_k = mp.expansion("lam", self.pt)
        self.log_k = log_unit(lam_k.shift(self.m))
        # (p - v_k)^{-n} lambda at infinity is a unit with leading coefficient 1
        n = self.spec.n
        shift = RationalFunction([1.0], {self.pt: n}).expand_at(INF, D)
        self.log_inf = log_unit(mp.expansion("lam", INF) * shift)
        self.others = []
        vk = self.pt.location
        for q in mp.points:
            if q.is_infinity or q == self.pt:
                continue
            base = LaurentSeries.polynomial(q, {0: q.location - vk, 1: 1.0})
            if base.coeff(0) == 0:
                raise BranchAmbiguity("two finite marked points coincide")
            self.others.append((q, log_unit(base, D)))

    def I(self, f: RationalFunction) -> complex:
        mp, s, m, n = self.mp, self.spec.s, self.m, self.spec.n
        D = mp.depth
        total = trace(f.expand_at(self.pt, D) * self.log_k, s)
        total += (m / n) * trace(f.expand_at(INF, D) * self.log_inf, s)
        for q, lg in self.others:
            total += m * trace(f.expand_at(q, D) * lg, s)
        return complex(total)

    def P(self, f: RationalFunction) -> complex:
        """``Tr_k f + (m_k/n) Tr_inf f`` for the non-log part."""
        D = self.mp.depth
        return complex(trace(f.expand_at(self.pt, D), self.spec.s)
                       + (self.m / self.spec.n) * trace(f.expand_at(INF, D), self.spec.s))


def _harmonic(L: int) -> float:
    return float(sum(Fraction(1, r) for r in range(1, L + 1)))


def h_density(mp: ManifoldPoint, lab: FlatLabel, level: int) -> complex:
    """``H^{label}_{(level)}``; level 0 is the flat coordinate."""
    if level not in (0, 1, 2, 3):
        raise UnsupportedLevel(f"level {level} is not supported (0..3)")
    spec = mp.spec
    if lab.is_log(spec):
        lt = LogTraces(mp, lab)
        if level == 0:
            return lt.I(RationalFunction.constant(1.0))
        g = _rf_power(mp.lam, level)
        return (lt.I(g) - _harmonic(level) * lt.P(g)) / math.factorial(level)
    pt = lab.point(mp)
    q = Fraction(lab.index, lab.degree(spec))
    denom = 1.0
    for r in range(1, level + 2):
        denom *= float(r - q)
    ser = mp.expansion("lam", pt)
    return _power_trace(ser, level + 1 - q, spec.s) / denom


def h_gradient(mp: ManifoldPoint, lab: FlatLabel, level: int) -> np.ndarray:
    """``dH_{(level)}`` paired with the raw tangent basis, from the level-1 density."""
    if level not in (1, 2, 3):
        raise UnsupportedLevel("gradient needs level 1..3")
    spec = mp.spec
    L = level - 1
    out = []
    if lab.is_log(spec):
        lt = LogTraces(mp, lab)
        g = _rf_power(mp.lam, L)
        for X in mp.tangent:
            out.append((lt.I(X * g) - _harmonic(L) * lt.P(X * g)) / math.factorial(L))
        return np.array(out)
    pt = lab.point(mp)
    q = Fraction(lab.index, lab.degree(spec))
    denom = 1.0
    for r in range(1, L + 2):
        denom *= float(r - q)
    pw = _power_series(mp.expansion("lam", pt), L - q)
    for j in range(spec.N):
        Xs = mp.expansion(("tangent", j), pt)
        out.append(trace(Xs * pw, spec.s) / denom)
    return np.array(out)


# ---------------------------------------------------------------------------
# the structure at a point


@dataclass
class FlatChart:
    labels: list[FlatLabel]
    values: np.ndarray
    jacobian: np.ndarray
    point: RawCoordinates

    @property
    def names(self) -> list[str]:
        return [lab.name for lab in self.labels]


def _differential(mp: ManifoldPoint, lab: FlatLabel, ctx: OperatorContext) -> CotangentVector:
    spec = mp.spec
    ser = mp.expansion("lam", ctx.point)
    q = Fraction(lab.index, lab.degree(spec))
    g = _power_series(ser, -q)
    lo, hi = ctx.window
    coeffs = np.array([g.coeff(e) if g.known(e) else _missing(e, g) for e in range(lo, hi + 1)])
    return CotangentVector(ctx.point, lo, coeffs)


def _missing(e, g):
    raise DegeneratePoint(f"differential coefficient {e} outside the known window {g.window}")


class FrobeniusPoint:
    """Everything the construction produces at one raw point.

    ``nu`` picks the marked point used for the raw-frame tensors.
    """

    def __init__(self, mp: ManifoldPoint, nu: MarkedPoint | None = None):
        self.mp = mp
        self.spec = mp.spec
        self.nu = nu or INF
        self.base = base_labels(self.spec)
        self._ctx: dict = {}

    @classmethod
    def at(cls, spec: SuperpotentialSpec, x, depth: int | None = None, nu=None) -> "FrobeniusPoint":
        if not isinstance(x, RawCoordinates):
            x = RawCoordinates.from_vector(spec, x)
        return cls(ManifoldPoint(spec, x, depth), nu)

    def ctx(self, point: MarkedPoint) -> OperatorContext:
        key = point
        if key not in self._ctx:
            self._ctx[key] = OperatorContext.at(self.mp, point)
        return self._ctx[key]

    def label_ctx(self, lab: FlatLabel) -> OperatorContext:
        return self.ctx(lab.point(self.mp))

    # -- coordinates ---------------------------------------------------------

    @cached_property
    def coordinates(self) -> np.ndarray:
        return np.array([h_density(self.mp, lab, 0) for lab in self.base], dtype=complex)

    @cached_property
    def differentials(self) -> list[CotangentVector]:
        return [_differential(self.mp, lab, self.label_ctx(lab)) for lab in self.base]

    @cached_property
    def jacobian(self) -> np.ndarray:
        """``J[a, j] = Tr_{nu_a}(X_j dt^a)`` in base label order."""
        J = np.array([self.label_ctx(lab).pairings(dt.series)
                      for lab, dt in zip(self.base, self.differentials)])
        cond = linalg.cond(J)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise DegeneratePoint(f"flat-coordinate Jacobian is singular (cond {cond:.3g})")
        return J.astype(complex)

    # -- raw-frame tensors ---------------------------------------------------

    def raw_eta(self, nu: MarkedPoint | None = None) -> np.ndarray:
        return raw_metric(self.ctx(nu or self.nu))

    def raw_c(self, nu: MarkedPoint | None = None) -> np.ndarray:
        return raw_structure(self.ctx(nu or self.nu))

    def flat_forms(self, nu: MarkedPoint | None = None) -> list[CotangentVector]:
        """The differentials ``dt^a`` all represented at ``nu``."""
        ctx = self.ctx(nu or self.nu)
        key = ("forms", ctx.point)
        if key not in self._ctx:
            out = []
            for lab, dt in zip(self.base, self.differentials):
                src = self.label_ctx(lab)
                out.append(dt if src.point == ctx.point else transfer(dt, src, ctx))
            self._ctx[key] = out
        return self._ctx[key]

    def _eta_work(self, nu: MarkedPoint | None = None) -> np.ndarray:
        ctx = self.ctx(nu or self.nu)
        key = ("eta", ctx.point)
        if key not in self._ctx:
            forms = self.flat_forms(ctx.point)
            sh = [sharp_series(f, ctx) for f in forms]
            self._ctx[key] = np.array([[ctx.tr(f.series * s) for s in sh] for f in forms],
                                      dtype=WORK_DTYPE)
        return self._ctx[key]

    def eta_flat(self, nu: MarkedPoint | None = None) -> np.ndarray:
        """``eta^{ab} = eta*(dt^a, dt^b)`` evaluated at ``nu`` (base order)."""
        return self._eta_work(nu).astype(complex)

    def eta_direct(self) -> np.ndarray:
        """``eta*(dt^a, dt^b)`` by the sharp map, transferring to ``nu_a``."""
        N = self.spec.N
        out = np.zeros((N, N), dtype=complex)
        for a, (la, da) in enumerate(zip(self.base, self.differentials)):
            ca = self.label_ctx(la)
            for b, (lb, db) in enumerate(zip(self.base, self.differentials)):
                cb = self.label_ctx(lb)
                dbb = db if cb.point == ca.point else transfer(db, cb, ca)
                out[a, b] = metric_eta(da, dbb, ca)
        return out

    def c_upper(self, nu: MarkedPoint | None = None) -> np.ndarray:
        """``c^{abc} = eta*(dt^a o dt^b, dt^c)`` evaluated at ``nu``."""
        ctx = self.ctx(nu or self.nu)
        key = ("c_upper", ctx.point)
        if key not in self._ctx:
            forms = self.flat_forms(ctx.point)
            sh = [sharp_series(f, ctx) for f in forms]
            N = len(forms)
            c = np.zeros((N, N, N), dtype=WORK_DTYPE)
            for a in range(N):
                for b in range(a, N):
                    prod = circ_full(forms[a], forms[b], ctx)
                    for d in range(N):
                        c[a, b, d] = c[b, a, d] = ctx.tr(prod * sh[d])
            self._ctx[key] = c
        return self._ctx[key]

    def c_lower(self, nu: MarkedPoint | None = None) -> np.ndarray:
        """``c_{abc} = d^3 F / dt^a dt^b dt^c`` in base order."""
        eta_lo = linalg.inv(self._eta_work(nu))
        c = np.einsum("ai,bj,ck,ijk->abc", eta_lo, eta_lo, eta_lo, self.c_upper(nu))
        return c.astype(complex)

    def raw_route(self, nu: MarkedPoint | None = None) -> tuple[np.ndarray, np.ndarray]:
        """``(eta^{ab}, c^{abc})`` via the raw dual frame and the Jacobian."""
        J = self.jacobian
        return (J @ self.raw_eta(nu) @ J.T,
                np.einsum("ai,bj,ck,ijk->abc", J, J, J, self.raw_c(nu)))

    # -- Euler and unit ------------------------------------------------------

    @cached_property
    def euler(self) -> EulerData:
        return euler_data(self.spec, self.base)

    def euler_numeric(self) -> np.ndarray:
        """``E^a = Tr_{nu_a}(E dt^a)`` with ``E = lambda - (1/n) p lambda_p``."""
        E = euler_rational(self.mp)
        out = []
        for lab, dt in zip(self.base, self.differentials):
            ctx = self.label_ctx(lab)
            out.append(ctx.tr(ctx.expand(E) * dt.series))
        return np.array(out)

    def counity_flat(self, nu: MarkedPoint | None = None) -> np.ndarray:
        """Components ``eps_a`` of the unit 1-form: ``eps o dt^b = dt^b``.

        Solved from ``sum_a eps_a c^{abc} = eta^{bc}``; the system is
        overdetermined and its residual is checked.
        """
        c = self.c_upper(nu)
        eta = self._eta_work(nu)
        N = self.spec.N
        M = c.reshape(N, N * N).T
        eps = linalg.lstsq(M, eta.reshape(N * N))
        res = np.max(np.abs(M @ eps - eta.reshape(N * N))) / max(1.0, np.max(np.abs(eta)))
        if res > 1e-8:
            raise DegeneratePoint(f"the multiplication has no unit (residual {res:.3g})")
        return eps.astype(complex)

    def unit_flat(self, nu: MarkedPoint | None = None) -> np.ndarray:
        """Flat components ``e^a`` of ``e = eps^sharp``."""
        return (self._eta_work(nu) @ self.counity_flat(nu).astype(WORK_DTYPE)).astype(complex)

    def unit_raw(self, nu: MarkedPoint | None = None) -> np.ndarray:
        return linalg.solve(self.jacobian, self.unit_flat(nu)).astype(complex)

    def unit_rational(self) -> RationalFunction:
        out = RationalFunction.constant(0.0)
        for c, X in zip(self.unit_raw(), self.mp.tangent):
            out = out + X * work(c)
        return out

    def counity(self, nu: MarkedPoint | None = None) -> CotangentVector:
        """The unit 1-form ``epsilon`` in the canonical window at ``nu``."""
        nu = nu or self.nu
        out = None
        for c, f in zip(self.counity_flat(nu), self.flat_forms(nu)):
            out = f * c if out is None else out + f * c
        return out

    def trace_defect(self, nu: MarkedPoint | None = None) -> float:
        """``max_k |eps(theta_k^sharp) - Tr theta_k|`` over window monomials."""
        ctx = self.ctx(nu or self.nu)
        eps = self.counity(ctx.point)
        worst = 0.0
        for b in ctx.basis():
            beta = ctx.reduce(b)
            worst = max(worst, abs(metric_eta(eps, beta, ctx) - ctx.tr(beta.series)))
        return worst

    def unit_defect(self, beta: CotangentVector, nu: MarkedPoint | None = None) -> float:
        """``max |epsilon o beta - beta|`` in the canonical window."""
        ctx = self.ctx(nu or self.nu)
        prod = circ(self.counity(ctx.point), beta, ctx)
        scale = max(1.0, float(np.max(np.abs(beta.coeffs))))
        return float(np.max(np.abs(prod.coeffs - beta.coeffs))) / scale

    # -- prepotential --------------------------------------------------------

    def prepotential(self) -> complex:
        spec = self.spec
        d = charge(spec)
        if d == 3:
            raise WeightThree("the prepotential formula needs d != 3")
        t = self.coordinates
        E = self.euler.components(t)
        idx = {lab: a for a, lab in enumerate(self.base)}
        total = 0j
        n = spec.n
        for i in range(1, n):
            a = idx[FlatLabel("inf", 0, i)]
            H = h_density(self.mp, FlatLabel("inf", 0, n - i), 1)
            total += E[a] * H / n
        groups = []
        if spec.s == 1 and spec.m0 >= 1:
            groups.append(("zero", 0, spec.m0))
        groups += [("finite", k, m) for k, m in enumerate(spec.poles, 1)]
        for kind, k, m in groups:
            for j in range(m + 1):
                a = idx[FlatLabel(kind, k, j)]
                H = h_density(self.mp, FlatLabel(kind, k, m - j), 1)
                total += E[a] * H / m
        return complex(total / float(3 - d))


# ---------------------------------------------------------------------------
# public operations


def flat_coordinates(spec: SuperpotentialSpec, x: RawCoordinates, depth: int | None = None) -> FlatChart:
    """Flat coordinates in library order (the unit label first when one exists)."""
    fp = FrobeniusPoint.at(spec, x, depth)
    order = library_order(fp)
    labels = [fp.base[a] for a in order]
    return FlatChart(labels, fp.coordinates[order], fp.jacobian[order], fp.mp.x)


def library_order(fp: FrobeniusPoint, tol: float = 1e-8) -> list[int]:
    """Base order with the label carrying ``e = d/dt`` moved first."""
    N = fp.spec.N
    order = list(range(N))
    if fp.spec.nonflat_unit:
        return order
    e = fp.unit_flat()
    for a in range(N):
        others = np.delete(e, a)
        if abs(e[a] - 1) < tol and (len(others) == 0 or np.max(np.abs(others)) < tol):
            order.remove(a)
            return [a] + order
    return order


def library_chart(fp: FrobeniusPoint, tol: float = 1e-8) -> "LinearChart":
    """Library order as a linear chart with ``e = d/dt_1`` exactly.

    Write ``e = sum r_b d/dt^b`` with rational ``r_b`` and let ``a`` be the
    first label in library order with ``r_a != 0``.  The chart is
    ``t_1 = t^a / r_a`` and ``t^b - (r_b / r_a) t^a`` for the other labels
    (a double pole gives ``r_a = 2``; two simple poles give a shear).
    """
    order = library_order(fp, tol)
    chart = LinearChart.identity(fp.spec, order)
    if fp.spec.nonflat_unit:
        return chart
    e = fp.unit_flat()
    r = [Fraction(float(x.real)).limit_denominator(64) for x in e]
    if any(abs(x - float(q)) > tol for x, q in zip(e, r)):
        return chart
    nz = [b for b in order if r[b] != 0]
    if not nz or (nz == [order[0]] and r[order[0]] == 1):
        return chart
    base = base_labels(fp.spec)
    a = nz[0]
    name_a = base[a].name
    rows = [{name_a: 1 / r[a]}]
    names = [name_a if r[a] == 1 else f"({1 / r[a]})*{name_a}"]
    for b in order:
        if b == a:
            continue
        q = r[b] / r[a]
        if q == 0:
            rows.append({base[b].name: 1})
            names.append(base[b].name)
        else:
            rows.append({base[b].name: 1, name_a: -q})
            names.append(f"{base[b].name}-{name_a}" if q == 1 else f"{base[b].name}-({q})*{name_a}")
    return LinearChart.from_rows(fp.spec, names, rows)


def flat_differentials(spec: SuperpotentialSpec, x: RawCoordinates) -> list[CotangentVector]:
    return FrobeniusPoint.at(spec, x).differentials


def raw_flat_values(spec: SuperpotentialSpec, xv: np.ndarray, depth: int | None = None) -> np.ndarray:
    return FrobeniusPoint.at(spec, xv, depth).coordinates


def jacobian(spec: SuperpotentialSpec, x: RawCoordinates, chart: FlatChart | None = None,
             check: bool = True, step: float = JAC_FD_STEP, rtol: float = JAC_FD_RTOL) -> np.ndarray:
    """Analytic Jacobian, optionally cross-checked by central differences."""
    fp = FrobeniusPoint.at(spec, x)
    J = fp.jacobian
    if check:
        Jfd = fd_jacobian(spec, x.vector(spec), step)
        err = np.max(np.abs(J - Jfd)) / max(1.0, np.max(np.abs(J)))
        if err > rtol:
            raise JacobianMismatch(f"analytic and finite-difference Jacobians differ by {err:.3g}")
    if chart is not None:
        pos = {lab: a for a, lab in enumerate(fp.base)}
        J = J[[pos[lab] for lab in chart.labels]]
    return J


def fd_jacobian(spec: SuperpotentialSpec, xv: np.ndarray, step: float = JAC_FD_STEP) -> np.ndarray:
    N = spec.N
    J = np.zeros((N, N), dtype=complex)
    for j in range(N):
        e = np.zeros(N, dtype=complex)
        e[j] = step
        J[:, j] = (raw_flat_values(spec, xv + e) - raw_flat_values(spec, xv - e)) / (2 * step)
    return J


def euler_components(spec: SuperpotentialSpec, chart: FlatChart, check: bool = True,
                     tol: float = 1e-9) -> EulerData:
    data = euler_data(spec, chart.labels)
    if check:
        fp = FrobeniusPoint.at(spec, chart.point)
        pos = {lab: a for a, lab in enumerate(fp.base)}
        num = fp.euler_numeric()[[pos[lab] for lab in chart.labels]]
        formula = data.components(chart.values)
        err = np.max(np.abs(num - formula)) / max(1.0, np.max(np.abs(formula)))
        if err > tol:
            raise EulerMismatch(f"Euler components disagree with the closed form ({err:.3g})")
    return data


@dataclass
class UnitField:
    components: np.ndarray
    flat: bool
    lemma_defect: float
    names: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"components": [[float(c.real), float(c.imag)] for c in self.components],
                "flat": self.flat, "lemma_defect": self.lemma_defect, "labels": self.names}


def lemma_unit(mp: ManifoldPoint) -> RationalFunction:
    """The closed-form unit: ``1``, ``1 - lambda_p`` or ``1 - lambda_p / u_1``."""
    spec = mp.spec
    one = RationalFunction.constant(1.0)
    if spec.s == 0 and spec.n == 1:
        return one - mp.lam_p
    if spec.nonflat_unit:
        u1 = mp.lam.expand_at(ZERO, 4).coeff(1)
        return one - mp.lam_p * (1.0 / u1)
    return one


def unit_field(spec: SuperpotentialSpec, x: RawCoordinates, chart: FlatChart | None = None,
               samples: Sequence[complex] = (0.37 + 1.3j, -1.1 + 0.6j, 2.2 - 0.9j)) -> UnitField:
    """``e`` in the flat chart, with the closed-form unit compared pointwise in ``p``."""
    fp = FrobeniusPoint.at(spec, x)
    e = fp.unit_flat()
    names = [lab.name for lab in fp.base]
    if chart is not None:
        pos = {lab: a for a, lab in enumerate(fp.base)}
        e = e[[pos[lab] for lab in chart.labels]]
        names = chart.names
    er = fp.unit_rational()
    lem = lemma_unit(fp.mp)
    defect = max(abs(er(p) - lem(p)) for p in samples)
    return UnitField(e, not spec.nonflat_unit, float(defect), names)


def prepotential(spec: SuperpotentialSpec, x: RawCoordinates) -> complex:
    return FrobeniusPoint.at(spec, x).prepotential()


def structure_constants(spec: SuperpotentialSpec, x: RawCoordinates,
                        chart: FlatChart | None = None, nu: MarkedPoint | None = None) -> np.ndarray:
    """``c_{abc}`` in the flat chart (library order if ``chart`` is given)."""
    fp = FrobeniusPoint.at(spec, x, nu=nu)
    c = fp.c_lower()
    if chart is not None:
        pos = {lab: a for a, lab in enumerate(fp.base)}
        o = [pos[lab] for lab in chart.labels]
        c = c[np.ix_(o, o, o)]
    return c


def block_metric(spec: SuperpotentialSpec, labels: Sequence[FlatLabel]) -> np.ndarray:
    """``eta*(dt^i_nu, dt^j_nu) = m delta_{i, m-j}`` and zero across points."""
    N = len(labels)
    out = np.zeros((N, N))
    for a, la in enumerate(labels):
        for b, lb in enumerate(labels):
            if (la.kind, la.k) == (lb.kind, lb.k):
                m = la.degree(spec)
                if la.index == m - lb.index:
                    out[a, b] = m
    return out


# ---------------------------------------------------------------------------
# linear charts and inversion


@dataclass(frozen=True)
class LinearChart:
    """``t_chart = A t_lib`` for labels in base order; ``A`` exact rationals."""

    names: tuple[str, ...]
    A: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def identity(cls, spec: SuperpotentialSpec, order: Sequence[int] | None = None) -> "LinearChart":
        base = base_labels(spec)
        order = list(order) if order is not None else list(range(len(base)))
        N = len(base)
        rows = tuple(tuple(Fraction(int(j == order[i])) for j in range(N)) for i in range(N))
        return cls(tuple(base[o].name for o in order), rows)

    @classmethod
    def from_rows(cls, spec: SuperpotentialSpec, names: Sequence[str],
                  rows: Sequence[dict[str, Fraction]]) -> "LinearChart":
        base = base_labels(spec)
        pos = {lab.name: a for a, lab in enumerate(base)}
        A = []
        for r in rows:
            row = [Fraction(0)] * len(base)
            for key, val in r.items():
                row[pos[key]] = Fraction(val)
            A.append(tuple(row))
        return cls(tuple(names), tuple(A))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[float(a) for a in row] for row in self.A])

    def apply(self, t_lib: np.ndarray) -> np.ndarray:
        return self.matrix @ t_lib

    def euler(self, data: EulerData) -> EulerData:
        """Transform Euler data; the weights must stay diagonal."""
        N = len(self.A)
        A = [list(r) for r in self.A]
        Ainv = _frac_inverse(A)
        W = [[data.weights[i] if i == j else Fraction(0) for j in range(N)] for i in range(N)]
        M = _frac_mul(_frac_mul(A, W), Ainv)
        for i in range(N):
            for j in range(N):
                if i != j and M[i][j] != 0:
                    raise EulerMismatch("linear chart mixes labels of different weight")
        shifts = [sum(A[i][j] * data.shifts[j] for j in range(N)) for i in range(N)]
        return EulerData(tuple(M[i][i] for i in range(N)), tuple(shifts), data.d)


def _frac_mul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))]
            for i in range(len(A))]


def _frac_inverse(A):
    N = len(A)
    M = [list(A[i]) + [Fraction(int(i == j)) for j in range(N)] for i in range(N)]
    for c in range(N):
        p = next(r for r in range(c, N) if M[r][c] != 0)
        M[c], M[p] = M[p], M[c]
        piv = M[c][c]
        M[c] = [v / piv for v in M[c]]
        for r in range(N):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return [row[N:] for row in M]


class ChartMap:
    """Raw point to chart coordinates ``t = A t_lib(x)`` and back by Newton."""

    def __init__(self, spec: SuperpotentialSpec, chart: LinearChart | None = None,
                 depth: int | None = None):
        self.spec = spec
        self.chart = chart or LinearChart.identity(spec)
        self.A = self.chart.matrix
        self.depth = depth

    def point(self, xv) -> FrobeniusPoint:
        return FrobeniusPoint.at(self.spec, np.asarray(xv, dtype=complex), self.depth)

    def t_and_jac(self, xv) -> tuple[np.ndarray, np.ndarray, FrobeniusPoint]:
        fp = self.point(xv)
        return self.A @ fp.coordinates, self.A @ fp.jacobian, fp

    def invert(self, t_target, x0, tol: float = 1e-12, maxiter: int = 50) -> tuple[np.ndarray, FrobeniusPoint]:
        """Raw point with chart value ``t_target``; damped Newton from ``x0``.

        The Jacobian is reused while the residual contracts quickly, and the
        iteration runs on to roundoff once ``tol`` is met so that functions
        of the result are accurate enough for high-order differencing.
        """
        t_target = np.asarray(t_target, dtype=complex)
        scale = max(1.0, float(np.max(np.abs(t_target))))
        x = np.asarray(x0, dtype=complex).copy()
        fp = self.point(x)
        r = self.A @ fp.coordinates - t_target
        J = self.A @ fp.jacobian
        rn = float(np.max(np.abs(r)))
        for _ in range(maxiter):
            dx = np.linalg.solve(J, r)
            step = 1.0
            while True:
                try:
                    fp2 = self.point(x - step * dx)
                    r2 = self.A @ fp2.coordinates - t_target
                    rn2 = float(np.max(np.abs(r2)))
                    if rn2 < rn or step < 1e-3:
                        break
                except (ValueError, ArithmeticError):
                    if step < 1e-3:
                        raise InversionFailure("Newton step left the admissible region")
                step /= 2
            if rn2 >= rn:
                if rn <= tol * scale:
                    return x, fp
                raise InversionFailure(f"chart inversion stalled (residual {rn:.3g})")
            x, fp, r = x - step * dx, fp2, r2
            if rn2 <= 1e-15 * scale:
                return x, fp
            if rn2 > 0.05 * rn:
                J = self.A @ fp.jacobian
            rn = rn2
        if rn <= tol * scale:
            return x, fp
        raise InversionFailure(f"chart inversion did not converge (residual {rn:.3g})")
