"""The integral inequalities, the pointwise Chern-Lu residual and the equality chain."""

import math

import numpy as np
import pytest

from holocurv import derivatives
from holocurv.charts import ChartPoints
from holocurv.errors import ConstantMapRejected, DegenerateMapRejected, DimensionMismatch, NotEinstein
from holocurv.inequalities import (
    LinkStatus, Verdict, chern_lu_batch, chern_lu_residual, dominated_convergence, schwarz_bound,
    verdict_for, verify_cpn_bound, verify_degeneracy_inequality, verify_equality_case_ke,
    verify_main_inequality, verify_schwarz_integral,
)
from holocurv.maps import energy_batch, resolve_map
from holocurv.models import resolve

FOUR_PI = 4 * math.pi


def _map(src, tgt, name):
    X, om = resolve(src)
    Y, eta = resolve(tgt)
    return resolve_map(name, X, Y), om, eta


@pytest.mark.parametrize("margin,tol,loose,verdict", [
    (1.0, 1e-8, False, Verdict.HOLDS),
    (0.0, 1e-8, False, Verdict.HOLDS_WITH_EQUALITY),
    (-5e-9, 1e-8, False, Verdict.HOLDS_WITH_EQUALITY),
    (-5e-9, 1e-8, True, Verdict.FAILS_WITHIN_TOLERANCE),
    (-1.0, 1e-8, False, Verdict.FAILS),
])
def test_verdict_for(margin, tol, loose, verdict):
    assert verdict_for(margin, tol, loose) is verdict


@pytest.mark.parametrize("src,tgt,name,lhs,rhs,verdict", [
    ("cp1_fs", "cp1_fs", "identity", FOUR_PI, FOUR_PI, Verdict.HOLDS_WITH_EQUALITY),
    ("cp1_fs", "cp1_fs", "power:d=2", FOUR_PI, 2 * FOUR_PI, Verdict.HOLDS),
    ("cp1_fs", "cpn_fs:2", "veronese", FOUR_PI, 2 * FOUR_PI, Verdict.HOLDS),
    ("cpn_fs:2", "cpn_fs:2", "identity", 6 * math.pi, 8 * math.pi, Verdict.HOLDS),
    ("cp1_fs*cp1_fs", "cp1_fs*cp1_fs", "identity", 2 * FOUR_PI, 4 * FOUR_PI, Verdict.HOLDS),
])
def test_main_inequality_closed_forms(src, tgt, name, lhs, rhs, verdict):
    rep = verify_main_inequality(*_map(src, tgt, name))
    assert rep.lhs == pytest.approx(lhs, rel=1e-5)
    assert rep.rhs == pytest.approx(rhs, rel=1e-5)
    assert rep.verdict is verdict
    assert rep.tolerance >= 1e-8


def test_main_inequality_on_hopf():
    rep = verify_main_inequality(*_map("hopf_std", "hopf_std", "identity"))
    vol = 16 * math.pi**2 * math.log(2)
    # lambda = 1 and kappa = 1 with Lambda = 2
    assert rep.lhs == pytest.approx(vol, rel=1e-6)
    assert rep.rhs == pytest.approx(2 * vol, rel=1e-6)
    assert rep.verdict is Verdict.HOLDS


def test_main_inequality_rejects_constant_maps():
    with pytest.raises(ConstantMapRejected):
        verify_main_inequality(*_map("cp1_fs", "cp1_fs", "constant"))


def test_main_inequality_weight_changes_nothing_in_dimension_one():
    f, om, eta = _map("cp1_fs", "cp1_fs", "power:d=2")
    a = verify_main_inequality(f, om, eta)
    b = verify_main_inequality(f, om, eta, weight=lambda p: np.full(len(p), 3.0))
    assert a.lhs == b.lhs and a.rhs == b.rhs


@pytest.mark.criterion(10)
@pytest.mark.parametrize("c", [0.5, 2.0])
@pytest.mark.parametrize("case", [("cp1_fs", "cp1_fs", "power:d=2"), ("cpn_fs:2", "cpn_fs:2", "identity")])
def test_main_inequality_verdict_is_scale_invariant(case, c):
    f, om, eta = _map(*case)
    base = verify_main_inequality(f, om, eta)
    n = f.source.dim
    for o, e, factor in ((om.scaled(c), eta, c ** (n - 1)), (om, eta.scaled(c), 1.0)):
        rep = verify_main_inequality(f, o, e)
        assert rep.verdict is base.verdict
        assert rep.lhs == pytest.approx(factor * base.lhs, rel=1e-6)
        assert rep.rhs == pytest.approx(factor * base.rhs, rel=1e-6)


@pytest.mark.criterion(10)
@pytest.mark.parametrize("case", [("cp1_fs", "cp1_fs", "power:d=3"), ("cp1_fs", "cpn_fs:2", "veronese"),
                                  ("cpn_fs:2", "cpn_fs:2", "identity")])
def test_main_inequality_stable_across_resolutions(case):
    f, om, eta = _map(*case)
    X = f.source
    fine = verify_main_inequality(f, om, eta, resolution=X.lab_resolution)
    coarse = verify_main_inequality(f, om, eta, resolution=X.coarser(X.lab_resolution))
    assert fine.verdict is coarse.verdict
    assert abs(fine.margin - coarse.margin) <= 1e-3 * abs(fine.margin)


def test_cpn_bound_margins():
    rep = verify_cpn_bound(*_map("cpn_fs:2", "cpn_fs:2", "identity")[::2])
    assert rep.lhs == pytest.approx(3 * math.pi) and rep.rhs == pytest.approx(FOUR_PI, rel=1e-6)
    assert any("sup" in note for note in rep.notes)
    rep = verify_cpn_bound(*_map("cp1_fs", "cp1_fs", "identity")[::2])
    assert rep.margin == pytest.approx(0.0, abs=1e-8) and rep.verdict is Verdict.HOLDS_WITH_EQUALITY


def test_cpn_bound_needs_projective_source():
    f, _, eta = _map("torus_flat", "torus_flat", "identity")
    with pytest.raises(DimensionMismatch):
        verify_cpn_bound(f, eta)


@pytest.mark.parametrize("case,value", [
    (("cp1_fs", "cp1_fs", "identity"), FOUR_PI),
    (("cp1_fs", "cp1_fs", "power:d=2"), None),
    (("cpn_fs:2", "cpn_fs:2", "identity"), 12 * math.pi),
    (("torus_flat:n=2", "torus_flat:n=2", "isogeny:k=2"), 0.0),
])
def test_degeneracy_inequality(case, value):
    rep = verify_degeneracy_inequality(*_map(*case))
    assert rep.passing
    if value is not None:
        assert rep.lhs == pytest.approx(value, rel=1e-6, abs=1e-12)
        assert rep.rhs == pytest.approx(value, rel=1e-6, abs=1e-12)
    else:
        # degree-d maps pull back d times the Ricci class
        assert rep.rhs == pytest.approx(2 * rep.lhs, rel=1e-5)


def test_degeneracy_rejects_degenerate_maps():
    with pytest.raises(DegenerateMapRejected):
        verify_degeneracy_inequality(*_map("cp1_fs*cp1_fs", "cp1_fs*cp1_fs", "graph_power:d=2"))
    with pytest.raises(DimensionMismatch):
        verify_degeneracy_inequality(*_map("cp1_fs", "cpn_fs:2", "veronese"))


def _grad_norm2(f, om, eta, pts):
    n_pts = len(pts)
    out = np.empty(n_pts)
    for k in range(n_pts):
        c = int(pts.chart[k])
        fn = lambda w, c=c: energy_batch(f, om, eta, ChartPoints(c, w))
        d = derivatives.dz(fn, pts.coords[k:k + 1])[0]
        ginv = np.linalg.inv(om.matrix(pts[k:k + 1])[0])
        out[k] = np.real(np.conj(d) @ ginv.T @ d)
    return out


@pytest.mark.parametrize("case", [("cp1_fs", "cp1_fs", "power:d=2"), ("cp1_fs", "cp1_fs", "power:d=3"),
                                  ("cp1_fs", "cp1_fs_conformal:seed=2,eps=0.3", "identity"),
                                  ("cp1_fs_conformal:seed=1,eps=0.2", "cp1_fs", "power:d=2")])
@pytest.mark.parametrize("eps", [0.01, 0.1, 1.0])
def test_chern_lu_matches_one_dimensional_oracle(case, eps):
    f, om, eta = _map(*case)
    pts = f.source.random_points(10, seed=6)
    res = chern_lu_batch(f, om, eta, pts, eps)
    lam = res.energy
    # in dimension one Delta log Lambda = lambda - kappa Lambda exactly, hence this closed form
    oracle = eps * _grad_norm2(f, om, eta, pts) / (lam * (lam + eps) ** 2)
    assert np.all(np.abs(res.residual - oracle) <= 1e-5 * (1 + np.abs(res.lhs)))
    assert np.all(res.residual >= -1e-6)


@pytest.mark.criterion(10)
def test_chern_lu_rhs_magnitude_non_increasing_in_eps():
    f, om, eta = _map("cp1_fs", "cp1_fs", "power:d=2")
    pts = f.source.random_points(10, seed=1)
    mags = [np.abs(chern_lu_batch(f, om, eta, pts, e).rhs) for e in (0.01, 0.1, 1.0, 10.0)]
    for a, b in zip(mags, mags[1:]):
        assert np.all(b <= a + 1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_chern_lu_identity_closed_form(n):
    f, om, eta = _map(f"cpn_fs:{n}", f"cpn_fs:{n}", "identity")
    p = f.source.random_points(1, seed=2)[0]
    # Lambda = n is constant, so the residual is (kappa n^2 - lambda n) / (n + eps)
    expected = 2 * math.pi * n * (n - 1) / (n + 0.1)
    assert chern_lu_residual(f, om, eta, p, 0.1) == pytest.approx(expected, abs=1e-5)


def test_schwarz_helper_and_applicability():
    lhs, rhs = schwarz_bound(2.0, -1.0, 3.0, 1.5, 1)
    assert (lhs, rhs) == (2.0, -2.0)
    rep = verify_schwarz_integral(*_map("cp1_fs", "cp1_fs", "identity"))
    assert rep.verdict is Verdict.NOT_APPLICABLE
    rep = verify_schwarz_integral(*_map("torus_flat", "torus_flat", "identity"))
    assert rep.verdict is Verdict.NOT_APPLICABLE and "boundary" in rep.notes[0]


@pytest.mark.parametrize("name,first", [("cp1_fs", LinkStatus.EQUAL), ("cpn_fs:2", LinkStatus.STRICT),
                                        ("cpn_fs:3", LinkStatus.STRICT), ("torus_flat:n=2", LinkStatus.EQUAL)])
def test_equality_chain(name, first):
    X, eta = resolve(name)
    rep = verify_equality_case_ke(X, eta)
    assert rep.passing
    assert rep.statuses[0] is first
    assert rep.statuses[1] is LinkStatus.EQUAL and rep.statuses[2] is LinkStatus.EQUAL


def test_equality_chain_needs_einstein():
    X, eta = resolve("cp1_fs*cpn_fs:2")
    with pytest.raises(NotEinstein):
        verify_equality_case_ke(X, eta)


@pytest.mark.criterion(10)
@pytest.mark.parametrize("case", [("cp1_fs", "cp1_fs", "identity"), ("cp1_fs", "cp1_fs", "power:d=2"),
                                  ("cp1_fs", "cpn_fs:2", "veronese")])
def test_dominated_convergence(case):
    dc = dominated_convergence(*_map(*case))
    assert dc.monotone and dc.converged
    assert dc.gaps[-1] <= dc.gaps[0]
