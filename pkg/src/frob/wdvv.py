"""Finite-difference engine and verdicts on the Frobenius structure.

Derivatives are taken in flat coordinates through chart inversion; the raw
chain rule is never used here, so Jacobian errors and differentiation
errors stay separate.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .frobenius import (ChartMap, EulerData, FrobeniusPoint, InversionFailure,
                        LinearChart)
from .meromorphic import RawCoordinates, SuperpotentialSpec

H_REL = 1e-2
H_FLOOR = 0.25
STEP_SEPARATION = 0.05
TOL_THIRD = 1e-6
TOL_FOURTH = 1e-4


@dataclass
class VerdictReport:
    name: str
    max_residual: float
    tolerance: float
    points: list = field(default_factory=list)
    seed: int | None = None
    skipped: str | None = None

    @property
    def passed(self) -> bool:
        if self.skipped:
            return True
        return bool(np.isfinite(self.max_residual) and self.max_residual < self.tolerance)

    def merge(self, other: "VerdictReport") -> "VerdictReport":
        return VerdictReport(self.name, max(self.max_residual, other.max_residual),
                             self.tolerance, self.points + other.points, self.seed,
                             self.skipped or other.skipped)

    def to_dict(self) -> dict:
        return {"name": self.name, "max_residual": float(self.max_residual),
                "tolerance": self.tolerance, "passed": self.passed,
                "skipped": self.skipped, "seed": self.seed}


# ---------------------------------------------------------------------------
# stencils


def steps(t0: Sequence[complex], rel: float = H_REL) -> np.ndarray:
    """Per-coordinate steps ``rel * clip(|t_i|, H_FLOOR, 1)``.

    Steps shrink with the coordinate so that logarithmic singularities at
    ``t_i = 0`` stay well outside the stencil; the floor keeps roundoff in
    third differences near 1e-7 at worst, and the cap keeps exponential
    coordinates resolved.
    """
    return rel * np.clip(np.abs(np.asarray(t0)), H_FLOOR, 1.0)


@dataclass
class ThirdDerivativeStencil:
    """Third derivatives with Richardson error bars from the ``(h, h/2)`` pair."""

    values: np.ndarray
    error: np.ndarray
    h: np.ndarray


def _mixed(f: Callable, t0: np.ndarray, h: np.ndarray, idx: tuple[int, ...], cache: dict) -> complex:
    """Product of central differences ``D_i D_j ...`` applied to ``f``."""
    total = 0j
    for signs in itertools.product((1, -1), repeat=len(idx)):
        off = np.zeros(len(t0), dtype=int)
        for sg, i in zip(signs, idx):
            off[i] += sg
        key = tuple(off)
        if key not in cache:
            cache[key] = f(t0 + off * h)
        total += np.prod(signs) * cache[key]
    return total / np.prod([2 * h[i] for i in idx])


def _symmetric_tensor(f: Callable, t0, h, order: int):
    N = len(t0)
    cache: dict = {}
    out = np.zeros((N,) * order, dtype=complex)
    for idx in itertools.combinations_with_replacement(range(N), order):
        v = _mixed(f, t0, h, idx, cache)
        for perm in set(itertools.permutations(idx)):
            out[perm] = v
    return out


def derivative_tensor(f: Callable, t0, order: int = 3, rel: float = H_REL,
                      h: np.ndarray | None = None) -> ThirdDerivativeStencil:
    """Symmetric ``order``-th derivative tensor of a scalar ``f(t)``, Richardson extrapolated."""
    t0 = np.asarray(t0, dtype=complex)
    h = steps(t0, rel) if h is None else np.asarray(h, dtype=float)
    a = _symmetric_tensor(f, t0, h, order)
    b = _symmetric_tensor(f, t0, h / 2, order)
    return ThirdDerivativeStencil((4 * b - a) / 3, np.abs(b - a) / 3, h)


def gradient_tensor(g: Callable, t0, rel: float = H_REL,
                    h: np.ndarray | None = None) -> np.ndarray:
    """``out[l, ...] = d g / d t^l`` for array-valued ``g``, Richardson extrapolated."""
    t0 = np.asarray(t0, dtype=complex)
    h = steps(t0, rel) if h is None else np.asarray(h, dtype=float)
    cols = []
    for l in range(len(t0)):
        e = np.zeros(len(t0))
        e[l] = 1.0
        d1 = (g(t0 + h[l] * e) - g(t0 - h[l] * e)) / (2 * h[l])
        d2 = (g(t0 + h[l] / 2 * e) - g(t0 - h[l] / 2 * e)) / h[l]
        cols.append((4 * d2 - d1) / 3)
    return np.array(cols)


# ---------------------------------------------------------------------------
# functions of flat coordinates via chart inversion


class FlatFunctions:
    """``F(t)`` and ``c(t)`` on a chart, with a warm-started inverse map."""

    def __init__(self, spec: SuperpotentialSpec, x0, chart: LinearChart | None = None,
                 depth: int | None = None):
        self.cmap = ChartMap(spec, chart, depth)
        self.x0 = np.asarray(x0, dtype=complex)
        t, J, fp = self.cmap.t_and_jac(self.x0)
        self.t0, self.J0 = t, J
        self.spec = spec

    def separation(self) -> float:
        """Smallest distance between the zeros, the poles and (for ``s = 1``) the origin."""
        x = RawCoordinates.from_vector(self.spec, self.x0)
        pts = list(x.zeros) + list(x.poles) + ([0j] if self.spec.s == 1 else [])
        return min(abs(a - b) for a, b in itertools.combinations(pts, 2))

    def steps(self, rel: float = H_REL, frac: float = STEP_SEPARATION) -> np.ndarray:
        """:func:`steps`, capped so that one step moves no zero or pole by more
        than ``frac`` times their separation.

        Near a collision of zeros the inverse chart is strongly curved and a
        step that is small in ``t`` can still leave its region of smoothness.
        """
        h = steps(self.t0, rel)
        dx = np.max(np.abs(np.linalg.inv(self.J0)), axis=0)
        return np.minimum(h, frac * self.separation() / np.maximum(dx, 1e-300))

    def point(self, t) -> FrobeniusPoint:
        guess = self.x0 + np.linalg.solve(self.J0, np.asarray(t) - self.t0)
        try:
            _, fp = self.cmap.invert(t, guess)
        except (InversionFailure, ValueError, ArithmeticError):
            _, fp = self.cmap.invert(t, self.x0)
        return fp

    def F(self, t) -> complex:
        return self.point(t).prepotential()

    def c(self, t) -> np.ndarray:
        """``c_{abc}`` in the chart coordinates."""
        fp = self.point(t)
        Ainv = np.linalg.inv(self.cmap.A)
        return np.einsum("ai,bj,ck,ijk->abc", Ainv.T, Ainv.T, Ainv.T, fp.c_lower())


def third_derivatives(spec: SuperpotentialSpec, t0, x0=None, chart: LinearChart | None = None,
                      F: Callable | None = None, rel: float = H_REL) -> ThirdDerivativeStencil:
    """``d^3 F`` at ``t0``; ``F`` defaults to the prepotential through chart inversion."""
    if F is None:
        if x0 is None:
            raise ValueError("a raw starting point x0 is needed for chart inversion")
        F = FlatFunctions(spec, x0, chart).F
    return derivative_tensor(F, t0, 3, rel)


# ---------------------------------------------------------------------------
# verdicts


def wdvv_residual(c: np.ndarray, eta: np.ndarray) -> float:
    """``max |c_{ijr} eta^{rs} c_{skl} - c_{ljr} eta^{rs} c_{ski}|``."""
    eta_up = np.linalg.inv(eta)
    lhs = np.einsum("ijr,rs,skl->ijkl", c, eta_up, c)
    rhs = np.einsum("ljr,rs,ski->ijkl", c, eta_up, c)
    return float(np.max(np.abs(lhs - rhs))) if c.size else 0.0


def check_wdvv(c: np.ndarray, eta: np.ndarray, tol: float = TOL_THIRD) -> VerdictReport:
    return VerdictReport("wdvv", wdvv_residual(np.asarray(c), np.asarray(eta)), tol)


def symmetry_residual(T: np.ndarray) -> float:
    r = T.ndim
    worst = 0.0
    for perm in itertools.permutations(range(r)):
        worst = max(worst, float(np.max(np.abs(T - np.transpose(T, perm)))))
    return worst


def check_c_symmetry(c: np.ndarray, tol: float = 1e-9) -> VerdictReport:
    return VerdictReport("c_symmetry", symmetry_residual(np.asarray(c)), tol)


def check_nabla_c_symmetry(spec: SuperpotentialSpec, t0, x0=None, chart=None,
                           F: Callable | None = None, tol: float = TOL_FOURTH) -> VerdictReport:
    """Total symmetry of ``d_l c_{ijk}``.

    With ``F`` the fourth derivatives of ``F`` are taken directly; otherwise
    the pipeline's ``c`` is differentiated once, which makes the symmetry in
    ``l`` a genuine potentiality check.
    """
    if F is not None:
        T = derivative_tensor(F, t0, 4).values
    else:
        T = gradient_tensor(FlatFunctions(spec, x0, chart).c, t0)
    return VerdictReport("nabla_c_symmetry", symmetry_residual(T), tol)


def quasi_homogeneity_residual(c: np.ndarray, dc: np.ndarray, E: EulerData, t0,
                               d: float | None = None) -> float:
    """``max |E^l d_l c_{ijk} + (w_i + w_j + w_k - (3 - d)) c_{ijk}|``."""
    dd = float(E.d if d is None else d)
    Ev = E.components(t0)
    w = np.array([float(x) for x in E.weights])
    res = np.einsum("l,lijk->ijk", Ev, dc)
    res += (w[:, None, None] + w[None, :, None] + w[None, None, :] - (3 - dd)) * c
    return float(np.max(np.abs(res)))


def check_quasi_homogeneity(spec: SuperpotentialSpec, t0, E: EulerData, d=None, x0=None,
                            chart=None, c: np.ndarray | None = None,
                            dc: np.ndarray | None = None, tol: float = 1e-5) -> VerdictReport:
    if c is None or dc is None:
        ff = FlatFunctions(spec, x0, chart)
        c = ff.c(t0) if c is None else c
        dc = gradient_tensor(ff.c, t0) if dc is None else dc
    return VerdictReport("quasi_homogeneity", quasi_homogeneity_residual(c, dc, E, t0, d), tol)


def check_eta_from_F(spec: SuperpotentialSpec, c: np.ndarray, eta: np.ndarray,
                     unit: int = 0, tol: float = 1e-5, scale: float = 1.0) -> VerdictReport:
    """``eta_{ij} = d^3 F / dt^unit dt^i dt^j`` with ``eta`` the lowered metric.

    ``scale`` divides the residual; pass the size of ``c`` when ``c`` comes
    from finite differences.
    """
    if spec.nonflat_unit:
        return VerdictReport("eta_from_F", 0.0, tol,
                             skipped="unit field is not flat (s = 1, m0 = -1)")
    return VerdictReport("eta_from_F", float(np.max(np.abs(c[unit] - eta))) / scale, tol)
