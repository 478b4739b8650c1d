import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from frob.meromorphic import (CoincidentPoints, ManifoldPoint, NormalizationViolated,
                              PartialFractions, RawCoordinates, SpecError, SuperpotentialSpec,
                              build_lambda, check_raw, raw_from_partial_fractions, residue_sum,
                              tangent_basis, validate)
from frob.series_core import INF, ZERO, MarkedPoint

S = SuperpotentialSpec


@pytest.mark.parametrize("spec, status, N", [
    (S(0, 4), "admissible-flat-unit", 3),
    (S(0, 3, 0, (1, 1)), "admissible-flat-unit", 4),
    (S(1, 2, 1), "admissible-flat-unit", 2),
    (S(1, 1, -1, (1,)), "admissible-nonflat-unit", 2),
    (S(1, 5, 2, (1,)), "admissible-flat-unit", 6),
    (S(0, 3, 1), "inadmissible", 2),
    (S(1, 2, 0), "inadmissible", 2),
    (S(1, 1, -2), "inadmissible", 1),
    (S(0, 1, 0, (1,)), "inadmissible", 1),
    (S(0, 2, 0, (0,)), "inadmissible", 2),
    (S(2, 3), "inadmissible", 4),
    (S(0, 1), "inadmissible", 0),
])
def test_validate(spec, status, N):
    rep = validate(spec)
    assert rep.status == status
    assert rep.N == N
    assert bool(rep.reasons) == (status == "inadmissible")
    assert bool(rep.warnings) == (status == "admissible-nonflat-unit")


def test_dimension_formula():
    spec = S(1, 5, 2, (1,))
    assert (spec.K, spec.n, spec.N) == (1, 2, 6)


def test_dependent_zero_for_s0():
    spec = S(0, 3, 0, (2,))
    x = RawCoordinates.from_vector(spec, [0.3, -0.5j, 1.1])
    assert sum(x.zeros) == pytest.approx(2 * 1.1)
    assert np.allclose(x.vector(spec), [0.3, -0.5j, 1.1])


def test_normalization_violation():
    spec = S(0, 3, 0, (1,))
    with pytest.raises(NormalizationViolated):
        check_raw(spec, RawCoordinates((0.1, 0.2, 0.3), (1.0,)))


def test_coincident_points():
    spec = S(1, 2, 1)
    with pytest.raises(CoincidentPoints):
        check_raw(spec, RawCoordinates((0.5, 0.5), ()))
    with pytest.raises(CoincidentPoints):
        check_raw(spec, RawCoordinates((0.0, 0.5), ()))


def test_wrong_coordinate_count():
    with pytest.raises(SpecError):
        RawCoordinates.from_vector(S(1, 2, 1), [1.0])


def _sym_lambda(spec, x):
    p = sp.Symbol("p")
    num = sp.Mul(*[p - complex(a) for a in x.zeros])
    den = p ** spec.m0 * sp.Mul(*[(p - complex(v)) ** m for v, m in zip(x.poles, spec.poles)])
    return p, num / den


SPECS = [S(0, 4), S(0, 3, 0, (1, 1)), S(1, 3, 1, (1,)), S(1, 1, -1, (1,)), S(0, 3, 0, (2,))]
RAWS = [
    [0.3, 0.2 - 0.4j, -0.7],
    [0.2, 0.9j, 1.3, -0.8 + 0.1j],
    [0.4, -0.6j, 1.2, -1.5 + 0.5j],
    [0.6 + 0.2j, -1.1],
    [0.5, -0.9 + 0.3j, 0.8j],
]
CASES = list(zip(SPECS, RAWS))


@pytest.mark.parametrize("spec, xv", CASES)
def test_lambda_matches_symbolic(spec, xv):
    x = RawCoordinates.from_vector(spec, xv)
    lam = build_lambda(spec, x)
    p, expr = _sym_lambda(spec, x)
    for q in (0.37 + 0.11j, -1.9 + 2.2j, 3.1j):
        assert abs(lam.evaluate(q) - complex(expr.subs(p, q))) < 1e-12 * max(1, abs(lam.evaluate(q)))
        d = complex(sp.diff(expr, p).subs(p, q))
        assert abs(lam.derivative().evaluate(q) - d) < 1e-11 * max(1, abs(d))


@pytest.mark.parametrize("spec, xv", CASES)
def test_expansions_match_sympy(spec, xv):
    mp = ManifoldPoint.from_vector(spec, xv)
    p, expr = _sym_lambda(spec, mp.x)
    z = sp.Symbol("z")
    for pt in mp.points:
        f = mp.expansion("lam", pt)
        if pt.is_infinity:
            local, sign = expr.subs(p, 1 / z), -1
        else:
            local, sign = expr.subs(p, pt.value + z), 1
        ser = sp.series(local, z, 0, 3).removeO().expand()
        for k in range(-6, 3):
            want = complex(ser.coeff(z, k))
            assert abs(f[sign * k] - want) < 1e-10 * max(1, abs(want)), (pt, k)


@pytest.mark.parametrize("spec, xv", CASES)
def test_tangent_basis_by_finite_differences(spec, xv):
    x = RawCoordinates.from_vector(spec, xv)
    basis = tangent_basis(spec, x)
    q, h = 0.41 - 0.73j, 1e-6
    for j in range(spec.N):
        dx = np.zeros(spec.N, dtype=complex)
        dx[j] = h
        lp = build_lambda(spec, RawCoordinates.from_vector(spec, np.array(xv) + dx)).evaluate(q)
        lm = build_lambda(spec, RawCoordinates.from_vector(spec, np.array(xv) - dx)).evaluate(q)
        fd = (lp - lm) / (2 * h)
        assert abs(basis[j].evaluate(q) - fd) < 1e-7 * max(1, abs(fd))


@pytest.mark.parametrize("spec, xv", CASES)
def test_global_residue_theorem(spec, xv):
    x = RawCoordinates.from_vector(spec, xv)
    lam = build_lambda(spec, x)
    assert abs(residue_sum(lam, spec, x)) < 1e-10
    assert abs(residue_sum(lam.derivative(), spec, x)) < 1e-10


def test_marked_points():
    mp = ManifoldPoint.from_vector(S(1, 3, 1, (1,)), RAWS[2])
    assert mp.points[0] is INF and mp.points[1] is ZERO
    assert isinstance(mp.points[2], MarkedPoint) and mp.points[2].value == RAWS[2][3]


def test_partial_fractions_roundtrip():
    spec = S(1, 3, 1, (1,))
    pf = PartialFractions([0.4 + 0.1j, 1], [(0, [0.7]), (-1.3, [0.5 - 0.2j])])
    x = raw_from_partial_fractions(spec, pf)
    lam = build_lambda(spec, x)
    for q in (0.3 + 0.4j, 2.0):
        assert abs(lam.evaluate(q) - pf.rational().evaluate(q)) < 1e-12


def test_partial_fractions_rejects_wrong_degree():
    with pytest.raises(SpecError):
        raw_from_partial_fractions(S(1, 2, 1), PartialFractions([0, 0, 1], [(0, [1.0])]))


def test_inadmissible_manifold_point():
    with pytest.raises(SpecError):
        ManifoldPoint.from_vector(S(0, 3, 1), [0.1, 0.2])


coord = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


@given(st.lists(coord, min_size=4, max_size=4))
def test_residue_theorem_property(xv):
    spec = S(1, 2, 1, (2,))
    try:
        x = RawCoordinates.from_vector(spec, xv)
        check_raw(spec, x, 0.05)
    except SpecError:
        return
    lam = build_lambda(spec, x)
    scale = max(1.0, max(abs(v) for v in xv)) ** 6
    assert abs(residue_sum(lam, spec, x)) < 1e-9 * scale
