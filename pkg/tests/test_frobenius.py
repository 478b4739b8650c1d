from fractions import Fraction as Fr

import numpy as np
import pytest

from frob import catalog
from frob.frobenius import (ChartMap, EulerMismatch, FrobeniusPoint, LinearChart, base_labels,
                            block_metric, charge, euler_data, fd_jacobian, lemma_unit,
                            library_chart)
from frob.meromorphic import SuperpotentialSpec as S
from frob.series_core import INF

EXAMPLES = list(catalog.EXAMPLES.values())
IDS = [ex.name for ex in EXAMPLES]


def _point(ex, seed=1):
    t = ex.sample(np.random.default_rng(seed))
    return t, FrobeniusPoint.at(ex.spec, ex.raw(t))


def test_base_labels():
    names = [lab.name for lab in base_labels(S(1, 5, 2, (1,)))]
    assert names == ["t^1_inf", "t^0_0", "t^1_0", "t^2_0", "t^0_v1", "t^1_v1"]
    logs = [lab.name for lab in base_labels(S(1, 5, 2, (1,))) if lab.is_log(S(1, 5, 2, (1,)))]
    assert logs == ["t^2_0", "t^1_v1"]


@pytest.mark.parametrize("spec, d", [(S(0, 4), Fr(1, 2)), (S(0, 3, 0, (2,)), Fr(-1)),
                                     (S(1, 2, 1), Fr(1)), (S(0, 4, 0, (1,)), Fr(1, 3))])
def test_charge(spec, d):
    assert charge(spec) == d


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_catalog_chart_reproduces_example_coordinates(ex):
    t, fp = _point(ex)
    assert np.abs(ex.chart.matrix @ fp.coordinates - t).max() < 1e-10


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_exact_euler_data(ex):
    E = ex.chart.euler(euler_data(ex.spec, base_labels(ex.spec)))
    assert E.weights == ex.weights
    assert E.shifts == ex.shifts
    assert E.d == ex.d == charge(ex.spec)


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_euler_numeric_matches_closed_form(ex):
    t, fp = _point(ex)
    E = ex.chart.euler(fp.euler)
    assert np.abs(ex.chart.matrix @ fp.euler_numeric() - E.components(t)).max() < 1e-9


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_jacobian_against_finite_differences(ex):
    t, fp = _point(ex)
    J = fp.jacobian
    err = np.abs(J - fd_jacobian(ex.spec, fp.mp.x.vector(ex.spec))).max()
    assert err < 1e-6 * max(1, np.abs(J).max())


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_metric_is_constant_block(ex):
    t, fp = _point(ex)
    G = block_metric(ex.spec, fp.base)
    assert np.abs(fp.eta_direct() - G).max() < 1e-9
    assert np.abs(fp.eta_flat() - G).max() < 1e-9


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_point_independence_and_raw_route(ex):
    t, fp = _point(ex)
    c = fp.c_upper()
    for q in fp.mp.points[1:]:
        assert np.abs(fp.c_upper(q) - c).max() < 1e-10 * max(1, np.abs(c).max())
    eta_raw, c_raw = fp.raw_route()
    assert np.abs(eta_raw - fp.eta_flat()).max() < 1e-9
    assert np.abs(c_raw - c).max() < 1e-9 * max(1, np.abs(c).max())


@pytest.mark.parametrize("ex", [e for e in EXAMPLES if e.name != "two-poles"],
                         ids=[e.name for e in EXAMPLES if e.name != "two-poles"])
def test_structure_constants_against_closed_form(ex):
    t, fp = _point(ex)
    Ainv = np.linalg.inv(ex.chart.matrix)
    c = np.einsum("ai,bj,ck,ijk->abc", Ainv.T, Ainv.T, Ainv.T, fp.c_lower())
    assert np.abs(c - ex.c_oracle(t)).max() < 1e-8


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_unit(ex):
    t, fp = _point(ex)
    e = ex.chart.matrix @ fp.unit_flat()
    assert np.abs(e - ex.unit_oracle(t)).max() < 1e-8
    er, lem = fp.unit_rational(), lemma_unit(fp.mp)
    for p in (0.37 + 1.3j, -1.1 + 0.6j):
        assert abs(er(p) - lem(p)) < 1e-8


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_counity_acts_as_identity(ex):
    from frob.rota_baxter import random_cotangent
    t, fp = _point(ex)
    rng = np.random.default_rng(4)
    for _ in range(3):
        assert fp.unit_defect(random_cotangent(rng, fp.ctx(INF))) < 1e-10


def test_library_chart_rescales_double_pole():
    spec = S(0, 3, 0, (2,))
    fp = FrobeniusPoint.at(spec, [0.5, -0.9 + 0.3j, 0.8j])
    chart = library_chart(fp)
    assert chart.names[0] == "(1/2)*t^2_v1"
    assert np.abs(chart.matrix @ fp.unit_flat() - np.eye(3)[0]).max() < 1e-10


def test_library_chart_shears_two_poles():
    spec = S(0, 3, 0, (1, 1))
    fp = FrobeniusPoint.at(spec, [0.2, 0.9j, 1.3, -0.8 + 0.1j])
    chart = library_chart(fp)
    assert "t^1_v2-t^1_v1" in chart.names
    assert np.abs(chart.matrix @ fp.unit_flat() - np.eye(4)[0]).max() < 1e-10
    E = chart.euler(euler_data(spec, base_labels(spec)))
    assert all(isinstance(w, Fr) for w in E.weights)


def test_chart_mixing_weights_is_rejected():
    spec = S(0, 4)
    chart = LinearChart.from_rows(spec, ["a", "b", "c"],
                                  [{"t^3_inf": 1, "t^2_inf": 1}, {"t^2_inf": 1}, {"t^1_inf": 1}])
    with pytest.raises(EulerMismatch):
        chart.euler(euler_data(spec, base_labels(spec)))


@pytest.mark.parametrize("name", ["p1", "toda3", "double-pole"])
def test_chart_inversion_round_trip(name):
    ex = catalog.get(name)
    t, fp = _point(ex)
    cm = ChartMap(ex.spec, ex.chart)
    t2 = t + 0.05 * (1 + 1j)
    x, fp2 = cm.invert(t2, fp.mp.x.vector(ex.spec))
    assert np.abs(ex.chart.matrix @ fp2.coordinates - t2).max() < 1e-12
    # the inverse agrees with the example's own parametrization
    assert np.abs(x - ex.raw(t2).vector(ex.spec)).max() < 1e-9


def test_prepotential_is_quasi_homogeneous():
    ex = catalog.get("a3")
    t, fp = _point(ex)
    # for polynomial Frobenius manifolds E F = (3 - d) F exactly (no quadratic terms)
    cm = ChartMap(ex.spec, ex.chart)
    h = 1e-5
    E = ex.chart.euler(fp.euler).components(t)
    x0 = fp.mp.x.vector(ex.spec)
    Fp = cm.invert(t + h * E, x0)[1].prepotential()
    Fm = cm.invert(t - h * E, x0)[1].prepotential()
    assert abs((Fp - Fm) / (2 * h) - (3 - float(ex.d)) * fp.prepotential()) < 1e-7
