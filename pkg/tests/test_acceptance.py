"""Acceptance suite: one test per criterion, each printing one PASS/FAIL line."""
import time
from fractions import Fraction as Fr
from functools import lru_cache

import numpy as np
import pytest

from frob import catalog
from frob.cli import main
from frob.frobenius import FrobeniusPoint, base_labels, block_metric, euler_data
from frob.meromorphic import validate
from frob.pipeline import Target, sample_and_evaluate
from frob.rota_baxter import (OperatorContext, random_cotangent, verify_frel, verify_rel,
                              verify_rota_baxter)
from frob.series_core import INF, ZERO, MarkedPoint
from frob.wdvv import quasi_homogeneity_residual, wdvv_residual

SEED = 20240607
POINTS = 5
EXAMPLES = list(catalog.EXAMPLES.values())
V = MarkedPoint.finite(1, 0.7 + 0.2j)
CONTEXTS = [OperatorContext(pt, s) for pt in (INF, ZERO, V) for s in (0, 1)]


@pytest.fixture
def say(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {criterion:>2}] {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def _fmt(d):
    return ", ".join(f"{k}={v:.1e}" for k, v in d.items())


def _chart_points(ex):
    """Five generic chart points per example, the same for every criterion."""
    rng = np.random.default_rng([SEED, len(ex.name)])
    return [ex.sample(rng) for _ in range(POINTS)]


def _lower(ex, fp):
    Ainv = np.linalg.inv(ex.chart.matrix)
    c = np.einsum("ai,bj,ck,ijk->abc", Ainv.T, Ainv.T, Ainv.T, fp.c_lower())
    eta = Ainv.T @ np.linalg.inv(fp.eta_flat()) @ Ainv
    return c, eta


@lru_cache(maxsize=None)
def _reports(name):
    """Full pipeline reports (with finite-difference tensors) at seeded points."""
    target = Target.from_example(catalog.get(name))
    out = []
    for i in range(POINTS):
        rep, _ = sample_and_evaluate(target, SEED, i)
        assert rep is not None, f"no generic point for {name}"
        out.append(rep)
    return out


def test_criterion_01_rota_baxter(say):
    start = time.perf_counter()
    worst = max(verify_rota_baxter(ctx, samples=100, seed=SEED).max_residual for ctx in CONTEXTS)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and elapsed < 5
    say(1, ok, f"max residual {worst:.1e} over {len(CONTEXTS)} contexts, {elapsed:.2f} s")
    assert ok


def test_criterion_02_relations(say):
    worst = {"frel": 0.0, "rel": 0.0, "rel3": 0.0, "dRB": 0.0}
    for ctx in CONTEXTS:
        worst["frel"] = max(worst["frel"], verify_frel(ctx, 100, SEED).max_residual)
        for k, rep in verify_rel(ctx, 100, SEED).items():
            worst[k] = max(worst[k], rep.max_residual)
    ok = max(worst.values()) < 1e-12
    say(2, ok, _fmt(worst))
    assert ok


def test_criterion_03_metric_block(say):
    block, spread = {}, {}
    for ex in EXAMPLES:
        b = s = 0.0
        for t in _chart_points(ex):
            fp = FrobeniusPoint.at(ex.spec, ex.raw(t))
            G = block_metric(ex.spec, fp.base)
            b = max(b, np.abs(fp.eta_direct() - G).max())
            for q in fp.mp.points:
                s = max(s, np.abs(fp.eta_flat(q) - G).max())
        block[ex.name], spread[ex.name] = b, s
    ok = max(block.values()) < 1e-9 and max(spread.values()) < 1e-9
    say(3, ok, f"block {max(block.values()):.1e}, across points {max(spread.values()):.1e}")
    assert ok


def test_criterion_04_closed_form_prepotentials(say):
    errs, times = {}, {}
    for ex in EXAMPLES:
        start = time.perf_counter()
        e = 0.0
        for t in _chart_points(ex):
            c, _ = _lower(ex, FrobeniusPoint.at(ex.spec, ex.raw(t)))
            e = max(e, np.abs(c - ex.c_oracle(t)).max())
        errs[ex.name], times[ex.name] = e, time.perf_counter() - start
    bad = [k for k in errs if not (errs[k] < 1e-5 and times[k] < 30)]
    ok = not bad
    say(4, ok, _fmt(errs) + (f"; failing: {', '.join(bad)}" if bad else ""))
    assert ok


def test_criterion_05_fd_prepotential(say):
    errs = {}
    for ex in EXAMPLES:
        errs[ex.name] = max(np.abs(r.c - r.c_fd).max() for r in _reports(ex.name))
    ok = max(errs.values()) < 1e-5
    say(5, ok, _fmt(errs))
    assert ok


def test_criterion_06_wdvv(say):
    worst, control = 0.0, np.inf
    for ex in EXAMPLES:
        for r in _reports(ex.name):
            worst = max(worst, wdvv_residual(r.c, r.eta))
            if ex.N < 3:
                # with two coordinates and a flat unit associativity holds for any symmetric c
                continue
            bad = r.c.copy()
            i = ex.N - 1
            bad[i, i, i] += 1e-2
            control = min(control, wdvv_residual(bad, r.eta))
    ok = worst < 1e-6 and control >= 1e-6
    say(6, ok, f"max WDVV residual {worst:.1e}; perturbed control min {control:.1e} (N >= 3)")
    assert ok


def test_criterion_07_euler(say):
    exact = True
    for ex in EXAMPLES:
        E = ex.chart.euler(euler_data(ex.spec, base_labels(ex.spec)))
        exact &= E.weights == ex.weights and E.shifts == ex.shifts and E.d == ex.d
    a3 = catalog.get("a3")
    E1 = a3.chart.euler(euler_data(a3.spec, base_labels(a3.spec)))
    exact &= E1.d == Fr(1, 2) and E1.weights == (Fr(1), Fr(3, 4), Fr(1, 2))
    qh = max(quasi_homogeneity_residual(r.c, r.dc_fd, r.euler, r.t)
             for ex in EXAMPLES for r in _reports(ex.name))
    ok = exact and qh < 1e-5
    say(7, ok, f"exact rational Euler data {exact}; quasi-homogeneity {qh:.1e}")
    assert ok


def test_criterion_08_unit(say):
    unit_err = defect = nonflat_err = 0.0
    for ex in EXAMPLES:
        for t in _chart_points(ex):
            fp = FrobeniusPoint.at(ex.spec, ex.raw(t))
            e = ex.chart.matrix @ fp.unit_flat()
            want = ex.unit_oracle(t)
            if ex.name == "nonflat":
                nonflat_err = max(nonflat_err, np.abs(e - want).max())
                continue
            unit_err = max(unit_err, np.abs(e - np.eye(ex.N)[0]).max())
            rng = np.random.default_rng(SEED)
            for _ in range(3):
                defect = max(defect, fp.unit_defect(random_cotangent(rng, fp.ctx(INF))))
    flagged = validate(catalog.get("nonflat").spec).status == "admissible-nonflat-unit"
    flagged &= not _reports("nonflat")[0].unit_flat
    ok = unit_err < 1e-8 and defect < 1e-10 and nonflat_err < 1e-8 and flagged
    say(8, ok, f"e - d/dt1 {unit_err:.1e}; eps o beta - beta {defect:.1e}; "
               f"nonflat unit {nonflat_err:.1e}, flagged {flagged}")
    assert ok


def test_criterion_09_nu_equivalence(say):
    errs = {}
    for name in ("two-poles", "p1", "six-dim"):
        ex = catalog.get(name)
        e = 0.0
        for t in _chart_points(ex):
            fp = FrobeniusPoint.at(ex.spec, ex.raw(t))
            eta, c = fp.eta_flat(INF), fp.c_upper(INF)
            for q in fp.mp.points[1:]:
                e = max(e, np.abs(fp.eta_flat(q) - eta).max(), np.abs(fp.c_upper(q) - c).max())
        errs[name] = e
    ok = max(errs.values()) < 1e-10
    say(9, ok, _fmt(errs))
    assert ok


def test_criterion_10_determinism(say, tmp_path, capsys):
    files = []
    for k in range(2):
        for cmd in ("report", "sweep"):
            out = tmp_path / f"{cmd}{k}.json"
            assert main([cmd, "--example", "toda3", "--seed", "99", "--points", "2",
                         "--out", str(out)]) == 0
            files.append(out.read_bytes())
    capsys.readouterr()
    ok = files[0] == files[2] and files[1] == files[3]
    say(10, ok, "report and sweep byte-identical across runs" if ok else "reports differ")
    assert ok
