"""Built-in worked examples with closed-form prepotentials as oracles.

Each example samples points in its own chart ``t``, builds ``lambda`` in
partial fractions and factors it into raw coordinates.  The chart is linear
in the library flat coordinates: ``t = A t_lib``.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction as Fr
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from .frobenius import EulerData, LinearChart
from .meromorphic import (PartialFractions, RawCoordinates, SuperpotentialSpec,
                          raw_from_partial_fractions)

exp = cmath.exp


@dataclass(frozen=True)
class Example:
    name: str
    title: str
    spec: SuperpotentialSpec
    rows: tuple[dict, ...]
    build: Callable[[Sequence[complex]], PartialFractions]
    F_source: str
    weights: tuple[Fr, ...]
    shifts: tuple[Fr, ...]
    d: Fr
    unit_source: tuple[str, ...] | None = None
    constraint: Callable[[np.ndarray], bool] | None = None

    @property
    def N(self) -> int:
        return self.spec.N

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f"t{i}" for i in range(1, self.N + 1))

    @cached_property
    def chart(self) -> LinearChart:
        return LinearChart.from_rows(self.spec, self.names, self.rows)

    @property
    def euler(self) -> EulerData:
        return EulerData(self.weights, self.shifts, self.d)

    @cached_property
    def symbols(self):
        return sp.symbols(" ".join(self.names))

    @cached_property
    def F_expr(self):
        ns = {n: s for n, s in zip(self.names, self.symbols)}
        ns.update(exp=sp.exp, log=sp.log, Rational=sp.Rational)
        return sp.sympify(self.F_source, locals=ns)

    @cached_property
    def _c_func(self):
        t = self.symbols
        N = self.N
        entries = [[[sp.diff(self.F_expr, t[i], t[j], t[k]) for k in range(N)]
                    for j in range(N)] for i in range(N)]
        return sp.lambdify(t, entries, "numpy")

    def c_oracle(self, t: Sequence[complex]) -> np.ndarray:
        """Third derivatives of the closed-form ``F``."""
        return np.array(self._c_func(*t), dtype=complex)

    def F_oracle(self, t: Sequence[complex]) -> complex:
        return complex(sp.lambdify(self.symbols, self.F_expr, "cmath")(*t))

    def unit_oracle(self, t: Sequence[complex]) -> np.ndarray:
        """Unit field components; ``d/dt1`` unless a closed form is registered."""
        if self.unit_source is None:
            e = np.zeros(self.N, dtype=complex)
            e[0] = 1
            return e
        ns = {n: s for n, s in zip(self.names, self.symbols)}
        ns.update(exp=sp.exp)
        f = sp.lambdify(self.symbols, [sp.sympify(u, locals=ns) for u in self.unit_source], "cmath")
        return np.array(f(*t), dtype=complex)

    def raw(self, t: Sequence[complex]) -> RawCoordinates:
        return raw_from_partial_fractions(self.spec, self.build(list(t)))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """A generic chart point: components with real part in [0.4, 1.2], |imag| <= 0.3."""
        while True:
            t = rng.uniform(0.4, 1.2, self.N) + 1j * rng.uniform(-0.3, 0.3, self.N)
            if self.constraint is None or self.constraint(t):
                return t

    def to_dict(self) -> dict:
        return {"name": self.name, "title": self.title, "spec": self.spec.to_dict(),
                "N": self.N, "F": self.F_source,
                "euler": self.euler.to_dict()}


def _a3(t):
    t1, t2, t3 = t
    return PartialFractions([t1 + t3 ** 2 / 8, t2, t3, 0, 1], [])


def _two_poles(t):
    t1, t2, t3, t4 = t
    return PartialFractions([0, 1], [(t1 + t2, [t3]), (t1 - t2, [t4])])


def _toda3(t):
    t1, t2, t3, t4 = t
    return PartialFractions([t1 + t3, 1], [(0, [exp(t2)]), (-exp(t4), [-t3 * exp(t4)])])


def _p1(t):
    t1, t2 = t
    return PartialFractions([t1, 1], [(0, [exp(t2)])])


def _nonflat(t):
    t1, t2 = t
    return PartialFractions([t1, 1], [(-exp(t2), [-t1 * exp(t2)])])


def _double_pole(t):
    t1, t2, t3 = t
    return PartialFractions([0, 1], [(t1, [t3, t2 ** 2])])


def _six_dim(t):
    t1, t2, t3, t4, t5, t6 = t
    return PartialFractions([t1 + t5, t4, 1],
                            [(0, [t2 * exp(t3 / 2), exp(t3)]), (-exp(t6), [-t5 * exp(t6)])])


H = Fr(1, 2)

EXAMPLES: dict[str, Example] = {
    ex.name: ex for ex in [
        Example(
            "a3", "polynomial superpotential of degree 4",
            SuperpotentialSpec(s=0, L=4),
            ({"t^1_inf": 1}, {"t^2_inf": 1}, {"t^3_inf": 1}),
            _a3,
            "t1*t2**2/8 + t1**2*t3/8 - t2**2*t3**2/64 + t3**5/3840",
            (Fr(1), Fr(3, 4), H), (Fr(0),) * 3, H),
        Example(
            "two-poles", "two simple poles, s = 0",
            SuperpotentialSpec(s=0, L=3, poles=(1, 1)),
            ({"t^1_v1": H, "t^1_v2": H}, {"t^1_v1": H, "t^1_v2": -H},
             {"t^0_v1": 1}, {"t^0_v2": 1}),
            _two_poles,
            "t1*t2*(t3 - t4) + (t1**2 + t2**2)*(t3 + t4)/4 + t3**2*log(t3)/2"
            " + t3*t4*log(t2) + t4**2*log(t4)/2",
            (Fr(1), Fr(1), Fr(2), Fr(2)), (Fr(0),) * 4, Fr(-1),
            constraint=lambda t: abs(t[1]) > 0.1),
        Example(
            "toda3", "extended Toda type, s = 1 with one movable pole",
            SuperpotentialSpec(s=1, L=3, m0=1, poles=(1,)),
            ({"t^0_0": 1}, {"t^1_0": 1}, {"t^0_v1": 1}, {"t^1_v1": 1}),
            _toda3,
            "t1**2*t2/2 + t1*t3*t4 + t3**2*t4/2 + exp(t2) + t3*exp(t2 - t4)"
            " - t3*exp(t4) + t3**2*log(t3)/2",
            (Fr(1), Fr(0), Fr(1), Fr(0)), (Fr(0), Fr(2), Fr(0), Fr(1)), Fr(1)),
        Example(
            "p1", "CP^1 model, s = 1",
            SuperpotentialSpec(s=1, L=2, m0=1),
            ({"t^0_0": 1}, {"t^1_0": 1}),
            _p1,
            "t1**2*t2/2 + exp(t2)",
            (Fr(1), Fr(0)), (Fr(0), Fr(2)), Fr(1)),
        Example(
            "nonflat", "s = 1 with a simple zero at 0 (nonflat unit)",
            SuperpotentialSpec(s=1, L=1, m0=-1, poles=(1,)),
            ({"t^0_v1": 1}, {"t^1_v1": 1}),
            _nonflat,
            "t1**2*t2/2 - t1*exp(t2) + t1**2*log(t1)/2",
            (Fr(1), Fr(0)), (Fr(0), Fr(1)), Fr(1),
            unit_source=("t1/(t1 + exp(t2))", "-1/(t1 + exp(t2))")),
        Example(
            "double-pole", "one double pole, s = 0",
            SuperpotentialSpec(s=0, L=3, poles=(2,)),
            ({"t^2_v1": H}, {"t^1_v1": H}, {"t^0_v1": 1}),
            _double_pole,
            "t1*t2**2 + t1**2*t3/2 + t3**2*log(t2)/2",
            (Fr(1), Fr(3, 2), Fr(2)), (Fr(0),) * 3, Fr(-1)),
        Example(
            "six-dim", "six-dimensional, s = 1, n = m0 = 2 with one movable pole",
            SuperpotentialSpec(s=1, L=5, m0=2, poles=(1,)),
            ({"t^0_0": 1}, {"t^1_0": 1}, {"t^2_0": 1}, {"t^1_inf": 1},
             {"t^0_v1": 1}, {"t^1_v1": 1}),
            _six_dim,
            "-t2**4/96 + t1*t2**2/4 - t4**4/96 + t1*t4**2/4 + t1**2*t3/4 + t4**2*t5/4"
            " + t5**2*t6/2 + t1*t5*t6 + t2*t4*exp(t3/2) + exp(t3)/2 + t5*exp(2*t6)/2"
            " - t4*t5*exp(t6) + t2*t5*exp(t3/2 - t6) - t5*exp(t3 - 2*t6)/2 + t5**2*log(t5)/2",
            (Fr(1), H, Fr(0), H, Fr(1), Fr(0)), (Fr(0), Fr(0), Fr(2), Fr(0), Fr(0), H), Fr(1)),
    ]
}


def get(name: str) -> Example:
    try:
        return EXAMPLES[name]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; known: {', '.join(EXAMPLES)}") from None
