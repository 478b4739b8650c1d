import numpy as np
import pytest
import sympy as sp

from frob import catalog
from frob.frobenius import FrobeniusPoint
from frob.meromorphic import validate
from frob.wdvv import wdvv_residual

EXAMPLES = list(catalog.EXAMPLES.values())
IDS = [ex.name for ex in EXAMPLES]


def test_catalog_contents():
    assert [(ex.name, ex.N) for ex in EXAMPLES] == [
        ("a3", 3), ("two-poles", 4), ("toda3", 4), ("p1", 2), ("nonflat", 2),
        ("double-pole", 3), ("six-dim", 6)]


def test_unknown_example():
    with pytest.raises(KeyError, match="unknown example"):
        catalog.get("a4")


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_example_is_admissible(ex):
    rep = validate(ex.spec)
    assert rep.admissible
    assert (rep.status == "admissible-nonflat-unit") == (ex.name == "nonflat")


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_oracle_is_symmetric(ex):
    c = ex.c_oracle(ex.sample(np.random.default_rng(0)))
    assert np.abs(c - c.transpose(1, 0, 2)).max() == 0
    assert np.abs(c - c.transpose(0, 2, 1)).max() == 0


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_sampler_respects_constraints(ex):
    rng = np.random.default_rng(1)
    for _ in range(20):
        t = ex.sample(rng)
        assert np.all(t.real >= 0.4) and np.all(t.real <= 1.2)
        assert ex.constraint is None or ex.constraint(t)


@pytest.mark.parametrize("ex", EXAMPLES, ids=IDS)
def test_to_dict(ex):
    d = ex.to_dict()
    assert d["name"] == ex.name and d["N"] == ex.N and d["F"] == ex.F_source
    assert set(d["euler"]) == {"weights", "shifts", "d"}


def _two_poles_point(seed):
    ex = catalog.get("two-poles")
    t = ex.sample(np.random.default_rng(seed))
    fp = FrobeniusPoint.at(ex.spec, ex.raw(t))
    Ainv = np.linalg.inv(ex.chart.matrix)
    c = np.einsum("ai,bj,ck,ijk->abc", Ainv.T, Ainv.T, Ainv.T, fp.c_lower())
    eta = Ainv.T @ np.linalg.inv(fp.eta_flat()) @ Ainv
    return ex, t, c, eta


def _third(ex, F, t):
    s = ex.symbols
    f = sp.lambdify(s, [[[sp.diff(F, a, b, c) for c in s] for b in s] for a in s], "numpy")
    return np.array(f(*t), dtype=complex)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_two_poles_printed_coefficient(seed):
    """The printed 1/4 (t1^2 + t2^2)(t3 + t4) term must read 1/2.

    With 1/2 the closed form matches the construction and satisfies WDVV in
    the metric c_1ij; the printed 1/4 satisfies neither.
    """
    ex, t, c, eta = _two_poles_point(seed)
    t1, t2, t3, t4 = ex.symbols
    corrected = ex.F_expr + (t1 ** 2 + t2 ** 2) * (t3 + t4) / 4
    c_fix = _third(ex, corrected, t)
    assert np.abs(c - c_fix).max() < 1e-9
    assert wdvv_residual(c_fix, c_fix[0]) < 1e-9
    c_printed = ex.c_oracle(t)
    assert np.abs(c - c_printed).max() > 0.1
    assert wdvv_residual(c_printed, c_printed[0]) > 0.1
