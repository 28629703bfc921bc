"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run alone with ``python -m pytest tests/test_acceptance.py -v`` (lines are
printed even under output capture) or ``python tests/test_acceptance.py``.
"""

import sys

import pytest

from qtoroidal.bosons import check_boson_algebra
from qtoroidal.coproduct import coproduct_cross_check
from qtoroidal.fock import FockBasis
from qtoroidal.highest_weight import check_highest_weight
from qtoroidal.iom import DualitySettings, duality_bound, verify_duality
from qtoroidal.params import sample_params
from qtoroidal.relations import (check_affine_commutativity, check_defining_relations,
                                 check_pointwise_cancellation)
from qtoroidal.tables import check_contraction_tables

TAU = 1e-8
SEED = 0


@pytest.fixture
def say(capsys):
    def emit(n, ok, what, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {n} {'PASS' if ok else 'FAIL'}: {what}" + (f" [{detail}]" if detail else ""))
    return emit


@pytest.fixture
def note(capsys):
    def emit(text):
        with capsys.disabled():
            print(f"\n    {text}")
    return emit


def worst(recs, kind="identity"):
    return max((r.residual for r in recs if r.kind == kind), default=0.0)


def failed(recs):
    return [(r.check, r.case, r.residual, r.tol) for r in recs if not r.passed]


def test_criterion_1_boson_algebra(say):
    recs = []
    for m, n in [(2, 2), (2, 3), (3, 2)]:
        recs += check_boson_algebra(sample_params(m, n, seed=SEED), r_max=6, tol=TAU)
    bad = failed(recs)
    say(1, not bad, "boson algebra, r<=6, (m,n) in (2,2), (2,3), (3,2)",
        f"{len(recs)} records, worst {worst(recs):.1e} vs {TAU:.0e}")
    assert not bad


def test_criterion_2_contraction_tables(say):
    recs = []
    for m, n in [(2, 2), (2, 3), (3, 2)]:
        recs += check_contraction_tables(sample_params(m, n, seed=SEED), order=8, tol=TAU)
    bad = failed(recs)
    say(2, not bad, "all contraction tables to order 8, (m,n) in (2,2), (2,3), (3,2)",
        f"{len(recs)} records, worst {worst(recs):.1e} vs {TAU:.0e}")
    assert not bad


def test_criterion_3_defining_relations(say):
    params = sample_params(2, 2, seed=SEED)
    basis = FockBasis(2, 2, 3, 1)
    recs = []
    for dual in (False, True):
        recs += check_defining_relations(params, basis, dual, window=3, r_max=3, tol=1e-7)
    double = [r for r in recs if r.check == "EF" and r.meta.get("double_support")]
    vacuous = sum(r.vacuous for r in recs)
    # cells whose degree shift exceeds D_max = 3 are re-run on a deeper space
    deep = check_defining_relations(params, FockBasis(2, 2, 4, 1), False, window=2, r_max=3,
                                    tol=1e-7, which=("EF", "EE"))
    bad = failed(recs) + failed(deep)
    ok = not bad and double and all(r.exact_cols for r in double)
    say(3, ok, "defining relations, D_max=3, L_max=1, |k|<=3, both actions",
        f"{len(recs)} records ({vacuous} without exact columns), worst {worst(recs):.1e}; "
        f"{len(double)} double-support E-F cases all exact; D_max=4 |k|<=2 run "
        f"{len(deep)} records, worst {worst(deep):.1e}")
    assert ok, bad


def test_criterion_4_coproduct(say):
    recs = []
    for m in (2, 3):
        recs += coproduct_cross_check(sample_params(m, 2, seed=SEED), D_max=2, L_max=1, tol=1e-10)
    bad = failed(recs)
    say(4, not bad, "level-2 formulas vs coproduct, m in (2, 3), D_max=2, L_max=1",
        f"{len(recs)} records, worst {worst(recs):.1e} vs 1e-10")
    assert not bad


def test_criterion_5_affine_commutativity(say):
    params = sample_params(2, 2, seed=SEED)
    recs = check_affine_commutativity(params, FockBasis(2, 2, 3, 1), tol=1e-7)
    wit = [r for r in recs if r.kind == "witness"]
    ok = not failed(recs) and wit and max(r.residual for r in wit) >= 1e-4
    say(5, ok, "vertical affine subalgebras commute",
        f"worst {worst(recs):.1e} vs 1e-7; out-of-range witness {max(r.residual for r in wit):.2f}")
    assert ok


def test_criterion_6_pointwise_cancellation(say):
    params = sample_params(2, 2, seed=SEED)
    basis = FockBasis(2, 2, 2, 1)
    recs = (check_pointwise_cancellation(params, basis, False, tol=1e-7)
            + check_pointwise_cancellation(params, basis, True, tol=1e-7))
    names = {r.check for r in recs if r.kind == "identity"}
    wit = [r for r in recs if r.kind == "witness"]
    ok = (not failed(recs) and {"relUU", "relVV", "relUV", "EbEb", "FbFb", "EbFb"} <= names
          and min(r.residual for r in wit) > 1e-3)
    say(6, ok, "pointwise cancellations",
        f"worst {worst(recs):.1e} vs 1e-7; generic-point controls >= "
        f"{min(r.residual for r in wit):.2f}")
    assert ok


def test_criterion_7_highest_weight(say):
    recs = check_highest_weight(sample_params(2, 2, seed=SEED), s_max=3, tol=1e-8)
    bad = failed(recs)
    say(7, not bad, "highest-weight degrees, central scalars, theta^-1(H_1) eigenvalues, |s|<=3",
        f"{len(recs)} records, worst {worst(recs):.1e}")
    assert not bad


@pytest.fixture(scope="module")
def duality():
    params = sample_params(2, 2, seed=SEED)
    return params, verify_duality(params, DualitySettings(D_max=2, L_max=1, ladder=(1, 2, 3, 4)))


def test_criterion_8_duality(duality, say, note):
    params, recs = duality
    bound = duality_bound(params, 4)
    small = abs(params.p) <= 0.1 and abs(params.pc) <= 0.1
    ok = small
    for r in recs:
        if r.check == "iom-duality":
            lad = ", ".join(f"{v:.1e}" for v in r.meta["ladder"].values())
            good = r.residual <= bound and r.meta["monotone"]
            ok &= good
            note(f"{'ok  ' if good else 'FAIL'} {r.case['pair']}: K=1..4: {lad}; bound {bound:.1e}; "
                 f"monotone {r.meta['monotone']}; bound from the operators' own nomes "
                 f"{r.meta['operator_nome_bound']:.1e}")
        elif r.check == "iom-control":
            ok &= r.passed
            note(f"{'ok  ' if r.passed else 'FAIL'} control {r.case['pair']}: "
                 f"inflation x{r.residual:.0f} (need >= 1e2)")
        elif r.check in ("iom-block", "iom-vacuum"):
            ok &= r.passed
    say(8, ok, "duality, (m,n)=(2,2), D_max=2, L_max=1, ladder K=1..4",
        f"|p|={abs(params.p):.3f}, |pc|={abs(params.pc):.3f}")
    assert ok


def test_criterion_9_self_commutativity(duality, say):
    params, recs = duality
    bound = duality_bound(params, 4)
    self_recs = [r for r in recs if r.check == "iom-self"]
    ok = bool(self_recs) and all(r.residual <= bound for r in self_recs)
    say(9, ok, "self-commutativity of each family",
        ", ".join(f"{r.case['pair']} {r.residual:.1e}" for r in self_recs) + f"; bound {bound:.1e}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
