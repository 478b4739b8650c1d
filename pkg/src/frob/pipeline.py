"""Per-point evaluation: chart, metric, Euler and unit data, all verdicts.

A :class:`Target` is a spec plus a linear chart (and optionally a catalog
example with its oracle).  :func:`evaluate` runs the whole construction at
one generic point and returns a :class:`PointReport`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .catalog import Example
from .frobenius import (ChartMap, EulerData, FrobeniusPoint, InversionFailure,
                        JacobianMismatch, LinearChart, WeightThree, base_labels,
                        block_metric, euler_data, fd_jacobian, lemma_unit,
                        library_chart)
from .meromorphic import (CoincidentPoints, RawCoordinates, SpecError,
                          SuperpotentialSpec, check_raw)
from .rota_baxter import DegeneratePoint, random_cotangent
from .series_core import INF
from .wdvv import (FlatFunctions, VerdictReport, check_c_symmetry, check_eta_from_F,
                   check_wdvv, derivative_tensor, gradient_tensor,
                   quasi_homogeneity_residual, symmetry_residual)

DEFAULT_TOLERANCES: dict[str, float] = {
    "jacobian_fd": 1e-6,
    "eta_block": 1e-9,
    "nu_equivalence": 1e-10,
    "euler_closed_form": 1e-9,
    "euler_linearity": 1e-7,
    "c_symmetry": 1e-9,
    "unit_row": 1e-8,
    "unit_field": 1e-8,
    "unit_lemma": 1e-8,
    "counity_unit": 1e-10,
    "counity_closed": 1e-6,
    "wdvv": 1e-6,
    "c_vs_fd": 1e-5,
    "c_vs_oracle": 1e-5,
    "nabla_c_symmetry": 1e-4,
    "quasi_homogeneity": 1e-5,
    "eta_from_F": 1e-5,
}

LOG_GUARD = 0.1
SEPARATION = 0.3
MAX_RESAMPLES = 10

# raised at points that are not generic enough; the caller resamples
REJECTIONS = (DegeneratePoint, CoincidentPoints, InversionFailure, JacobianMismatch,
              SpecError, ArithmeticError)


class Rejected(ValueError):
    pass


@dataclass
class Sample:
    raw: np.ndarray
    seed: list | None = None


@dataclass
class Target:
    """A spec, its chart and (for catalog entries) the closed-form oracle."""

    spec: SuperpotentialSpec
    example: Example | None = None
    _chart: LinearChart | None = None

    @classmethod
    def from_example(cls, ex: Example) -> "Target":
        return cls(ex.spec, ex, ex.chart)

    @property
    def name(self) -> str:
        return self.example.name if self.example else "custom"

    def chart(self, fp: FrobeniusPoint | None = None) -> LinearChart:
        """Example chart, or library order fixed at the first point seen."""
        if self._chart is None:
            if fp is None:
                raise ValueError("the library chart is fixed at the first sampled point")
            self._chart = library_chart(fp)
        return self._chart

    def euler(self, fp: FrobeniusPoint | None = None) -> EulerData:
        return self.chart(fp).euler(euler_data(self.spec, base_labels(self.spec)))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.example is not None:
            return self.example.raw(self.example.sample(rng)).vector(self.spec)
        return random_raw(self.spec, rng)

    def from_chart(self, t: Sequence[complex]) -> np.ndarray:
        if self.example is None:
            raise SpecError("chart coordinates as input need a built-in example")
        return self.example.raw(list(t)).vector(self.spec)


def random_raw(spec: SuperpotentialSpec, rng: np.random.Generator) -> np.ndarray:
    """Zeros and poles with modulus in [0.5, 2], pairwise separated."""
    for _ in range(1000):
        r = rng.uniform(0.5, 2.0, spec.N)
        phi = rng.uniform(0, 2 * np.pi, spec.N)
        xv = r * np.exp(1j * phi)
        try:
            check_raw(spec, RawCoordinates.from_vector(spec, xv), SEPARATION)
        except SpecError:
            continue
        return xv
    raise Rejected("could not place separated zeros and poles")


# ---------------------------------------------------------------------------
# reports


@dataclass
class PointReport:
    t: np.ndarray
    raw: np.ndarray
    labels: list[str]
    eta: np.ndarray
    eta_block: np.ndarray
    euler: EulerData
    unit: np.ndarray
    unit_flat: bool
    c: np.ndarray
    verdicts: list[VerdictReport]
    seed: list | None = None
    timing: dict | None = None
    # finite-difference tensors, kept for callers but not serialized
    c_fd: np.ndarray | None = field(default=None, repr=False)
    dc_fd: np.ndarray | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self, full: bool = True) -> dict:
        out = {"seed": self.seed, "t": cplx(self.t), "raw": cplx(self.raw)}
        if full:
            out.update({
                "chart": {"names": self.labels, "values": cplx(self.t)},
                "eta": cplx(self.eta),
                "eta_block": self.eta_block.tolist(),
                "euler": self.euler.to_dict(),
                "unit": {"components": cplx(self.unit), "flat": self.unit_flat},
                "c": cplx(self.c),
            })
        out["verdicts"] = [v.to_dict() for v in self.verdicts]
        out["passed"] = self.passed
        if self.timing is not None:
            out["timing"] = self.timing
        return out


def cplx(a) -> list:
    """Nested ``[re, im]`` pairs for JSON."""
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [cplx(x) for x in a]


def _max(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _rel(a, b) -> float:
    return _max(np.asarray(a) - np.asarray(b)) / max(1.0, _max(b))


# ---------------------------------------------------------------------------
# evaluation


def check_generic(spec: SuperpotentialSpec, fp: FrobeniusPoint) -> None:
    """Reject points where a logarithmic coordinate is near its branch point."""
    for lab, t in zip(fp.base, fp.coordinates):
        if lab.is_log(spec) and abs(t) < LOG_GUARD:
            raise Rejected(f"log coordinate {lab.name} = {t:.3g} is within {LOG_GUARD} of 0")


def evaluate(target: Target, xv: np.ndarray, tolerances: dict[str, float] | None = None,
             seed=None, timing: bool = False) -> PointReport:
    """Run the full pipeline at the raw point ``xv``.

    Raises one of ``REJECTIONS`` or :class:`Rejected` when the point is not
    generic; verdict failures are recorded, not raised.
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    clock: dict[str, float] = {}
    t_start = time.perf_counter()

    def lap(name):
        nonlocal t_start
        now = time.perf_counter()
        clock[name] = round(now - t_start, 6)
        t_start = now

    spec = target.spec
    xv = np.asarray(xv, dtype=complex)
    fp = FrobeniusPoint.at(spec, xv)
    check_generic(spec, fp)
    chart = target.chart(fp)
    A = chart.matrix
    Ainv = np.linalg.inv(A)
    t = A @ fp.coordinates
    N = spec.N
    verdicts: list[VerdictReport] = []

    def verdict(name, residual, skipped=None):
        verdicts.append(VerdictReport(name, float(residual), tol[name], seed=None, skipped=skipped))

    # chart and metric
    J = fp.jacobian
    verdict("jacobian_fd", _rel(J, fd_jacobian(spec, xv)))
    eta_up = fp.eta_flat()
    verdict("eta_block", _max(fp.eta_direct() - block_metric(spec, fp.base)))
    c_base = fp.c_lower()
    others = [q for q in fp.mp.points if q != INF]
    if others:
        worst = max(max(_rel(fp.eta_flat(q), eta_up), _rel(fp.c_lower(q), c_base)) for q in others)
        verdict("nu_equivalence", worst)
    else:
        verdict("nu_equivalence", 0.0, skipped="only one marked point")
    lap("metric")

    def lower(c):
        return np.einsum("ai,bj,ck,ijk->abc", Ainv.T, Ainv.T, Ainv.T, c)

    c = lower(c_base)
    eta = Ainv.T @ np.linalg.inv(eta_up) @ Ainv
    E = target.euler(fp)

    # Euler field
    num = A @ fp.euler_numeric()
    verdict("euler_closed_form", _rel(num, E.components(t)))
    ff = FlatFunctions(spec, xv, chart)
    # first derivatives use steps capped by the separation of zeros and poles
    hg = ff.steps()
    gE = gradient_tensor(lambda s: A @ ff.point(s).euler_numeric(), t, h=hg)
    verdict("euler_linearity", _max(gE - np.diag([complex(w) for w in E.weights])))
    lap("euler")

    # unit and counity
    unit = A @ fp.unit_flat()
    verdict("unit_row", _max(np.einsum("l,lij->ij", unit, c) - eta))
    if target.example is not None:
        verdict("unit_field", _max(unit - target.example.unit_oracle(t)))
    elif not spec.nonflat_unit:
        verdict("unit_field", _max(unit - np.eye(N)[0]))
    else:
        verdict("unit_field", 0.0, skipped="no closed form for a nonflat unit")
    er = fp.unit_rational()
    lem = lemma_unit(fp.mp)
    pts = (0.37 + 1.3j, -1.1 + 0.6j, 2.2 - 0.9j)
    verdict("unit_lemma", max(abs(er(p) - lem(p)) for p in pts))
    ctx = fp.ctx(INF)
    rng = np.random.default_rng(0)
    verdict("counity_unit", max(fp.unit_defect(random_cotangent(rng, ctx)) for _ in range(3)))
    eps = lambda s: Ainv.T @ ff.point(s).counity_flat()
    g = gradient_tensor(eps, t, h=hg)
    verdict("counity_closed", _max(g - g.T) / max(1.0, _max(g)))
    lap("unit")

    # structure constants and verdicts on them
    verdicts.append(check_c_symmetry(c, tol["c_symmetry"]))
    verdicts.append(check_wdvv(c, eta, tol["wdvv"]))
    if target.example is not None:
        verdict("c_vs_oracle", _max(c - target.example.c_oracle(t)))
    try:
        fd = derivative_tensor(ff.F, t, 3).values
    except WeightThree:
        fd = None
        verdict("c_vs_fd", 0.0, skipped="prepotential needs d != 3")
    else:
        verdict("c_vs_fd", _rel(fd, c))
    lap("prepotential")
    dc = gradient_tensor(ff.c, t, h=hg)
    cscale = max(1.0, _max(c))
    verdict("nabla_c_symmetry", symmetry_residual(dc) / max(1.0, _max(dc)))
    verdict("quasi_homogeneity", quasi_homogeneity_residual(c, dc, E, t) / cscale)
    if fd is None:
        verdict("eta_from_F", 0.0, skipped="prepotential needs d != 3")
    else:
        v = check_eta_from_F(spec, fd, eta, 0, tol["eta_from_F"], scale=cscale)
        verdicts.append(v)
    lap("derivatives")
    for v in verdicts:
        v.seed = seed
        v.tolerance = tol[v.name]

    return PointReport(t, xv, list(chart.names), eta, block_metric(spec, fp.base), E,
                       unit, not spec.nonflat_unit, c, verdicts, seed,
                       clock if timing else None, fd, dc)


@dataclass
class Run:
    points: list[PointReport] = field(default_factory=list)
    rejections: list[dict] = field(default_factory=list)


def sample_and_evaluate(target: Target, seed: int, index: int,
                        tolerances: dict | None = None, timing: bool = False) -> tuple[PointReport | None, list[dict]]:
    """One generic point from seed ``[seed, index, attempt]``, resampling on degeneracy."""
    rejections = []
    for attempt in range(MAX_RESAMPLES + 1):
        key = [int(seed), int(index), attempt]
        rng = np.random.default_rng(key)
        try:
            xv = target.sample(rng)
            return evaluate(target, xv, tolerances, key, timing), rejections
        except Rejected as exc:
            rejections.append({"seed": key, "reason": str(exc)})
        except REJECTIONS as exc:
            rejections.append({"seed": key, "reason": f"{type(exc).__name__}: {exc}"})
    return None, rejections


def aggregate(points: Sequence[PointReport]) -> list[dict]:
    """Max residual per verdict over all points."""
    merged: dict[str, VerdictReport] = {}
    for p in points:
        for v in p.verdicts:
            if v.name in merged:
                merged[v.name] = merged[v.name].merge(v)
            else:
                merged[v.name] = VerdictReport(v.name, v.max_residual, v.tolerance,
                                               skipped=v.skipped)
    out = []
    for v in merged.values():
        d = v.to_dict()
        d.pop("seed")
        out.append(d)
    return out
