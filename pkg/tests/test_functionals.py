"""Curvature functionals: eigenvalues, directional sups, kappa and the Berger average."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holocurv.errors import NonKahlerMetric, ZeroVector
from holocurv.functionals import (
    KappaBranch, berger_average, bisectional, hsc, kappa, kappa_from_hsup, lambda_field,
    lambda_first_eigenvalue, rho, sphere_samples, sup_bisectional, sup_hsc,
)
from holocurv.geometry import chern_curvature
from holocurv.models import resolve

KAHLER = ["cp1_fs", "cpn_fs:2", "cpn_fs:3", "cp1_fs*cp1_fs", "cp1_fs_conformal:seed=2,eps=0.3",
          "torus_conformal:seed=1", "cp1_fs*torus_flat"]


def _point(name, seed=0):
    X, g = resolve(name)
    return g, X.random_points(1, seed=seed)[0]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_projective_constants(n):
    g, p = _point(f"cpn_fs:{n}", seed=n)
    assert lambda_first_eigenvalue(g, p).lambda_min == pytest.approx(2 * math.pi * (n + 1), rel=1e-10)
    assert sup_hsc(g, p).value == pytest.approx(4 * math.pi, rel=1e-8)
    k = kappa(g, p)
    assert k.branch is KappaBranch.KAHLER_RHO and k.value == pytest.approx(4 * math.pi, rel=1e-8)


def test_hopf_values():
    g, p = _point("hopf_std", seed=3)
    assert lambda_first_eigenvalue(g, p).lambda_min == pytest.approx(1.0, abs=1e-8)
    k = kappa(g, p)
    assert k.branch is KappaBranch.NON_KAHLER_BK and k.value == pytest.approx(1.0, abs=1e-6)


def test_flat_torus_is_boundary_case():
    g, p = _point("torus_flat:n=2")
    k = kappa(g, p)
    assert k.value == 0.0 and k.boundary


def test_product_of_spheres():
    g, p = _point("cp1_fs*cp1_fs", seed=4)
    # H ranges over [2 pi, 4 pi] and mixed bisectional curvature reaches 4 pi only along a factor
    assert sup_hsc(g, p).value == pytest.approx(4 * math.pi, rel=1e-6)
    assert lambda_first_eigenvalue(g, p).lambda_min == pytest.approx(4 * math.pi, rel=1e-8)


@pytest.mark.criterion(10)
@pytest.mark.parametrize("c", [0.25, 4.0])
@pytest.mark.parametrize("name", ["cpn_fs:2", "hopf_std", "cp1_fs*cp1_fs", "torus_conformal:seed=1"])
def test_scaling_by_inverse_c(name, c):
    g, p = _point(name, seed=7)
    gc = g.scaled(c)
    assert lambda_first_eigenvalue(gc, p).lambda_min == pytest.approx(
        lambda_first_eigenvalue(g, p).lambda_min / c, rel=1e-8, abs=1e-12)
    assert sup_bisectional(gc, p).value == pytest.approx(sup_bisectional(g, p).value / c, rel=1e-6, abs=1e-12)
    k, kc = kappa(g, p), kappa(gc, p)
    assert kc.value == pytest.approx(k.value / c, rel=1e-6, abs=1e-12)
    assert kc.branch is k.branch
    if k.h_sup is not None:
        assert kc.h_sup == pytest.approx(k.h_sup / c, rel=1e-6, abs=1e-12)
        assert np.sign(kc.h_sup) == np.sign(k.h_sup)


@pytest.mark.parametrize("name", KAHLER)
def test_hsc_never_exceeds_bisectional(name):
    g, p = _point(name, seed=2)
    assert sup_hsc(g, p).value <= sup_bisectional(g, p).value + 1e-6 * (1 + abs(sup_hsc(g, p).value))


@pytest.mark.parametrize("name", KAHLER + ["hopf_std"])
def test_lambda_witness_is_psd_lower_bound(name):
    g, p = _point(name, seed=5)
    eig = lambda_first_eigenvalue(g, p)
    cp = chern_curvature(g, p)
    gap = cp.second_ricci - eig.lambda_min * cp.metric
    assert np.min(np.linalg.eigvalsh(gap)) >= -1e-9 * max(1.0, abs(eig.lambda_min))
    v = eig.eigvec
    assert np.real(v @ cp.metric @ np.conj(v)) == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["cpn_fs:2", "cp1_fs*cp1_fs", "hopf_std"])
def test_witnesses_attain_the_sup(name):
    g, p = _point(name, seed=6)
    h = sup_hsc(g, p)
    assert hsc(g, p, h.witness[0]) == pytest.approx(h.value, rel=1e-9, abs=1e-12)
    assert h.sweep_max <= h.value + 1e-6 * (1 + abs(h.value))
    b = sup_bisectional(g, p)
    assert bisectional(g, p, *b.witness) == pytest.approx(b.value, rel=1e-9, abs=1e-12)


@pytest.mark.criterion(10)
@pytest.mark.parametrize("name", ["cp1_fs*cp1_fs", "hopf_std"])
def test_seed_determinism(name):
    g, p = _point(name, seed=1)
    a, b = sup_hsc(g, p, seed=3), sup_hsc(g, p, seed=3)
    assert a.value == b.value and np.array_equal(a.witness[0], b.witness[0])
    assert sup_hsc(g, p, seed=4).value == pytest.approx(a.value, rel=1e-6)


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False), min_size=2, max_size=2)
       .filter(lambda w: max(abs(z) for z in w) > 1e-3))
def test_hsc_is_projectively_invariant(w):
    g, p = _point("cp1_fs*cp1_fs", seed=8)
    W = np.array(w)
    assert hsc(g, p, (2.0 - 1.5j) * W) == pytest.approx(hsc(g, p, W), rel=1e-9)
    assert 2 * math.pi - 1e-9 <= hsc(g, p, W) <= 4 * math.pi + 1e-9


def test_zero_direction_rejected():
    g, p = _point("cpn_fs:2")
    with pytest.raises(ZeroVector):
        hsc(g, p, np.zeros(2))
    with pytest.raises(ZeroVector):
        bisectional(g, p, np.ones(2), np.zeros(2))


def test_rho_and_boundary():
    assert rho(-1.0, 2) == pytest.approx(0.75)
    assert rho(1.0, 2) == 1.0
    vals, boundary = kappa_from_hsup(np.array([-2.0, 1e-10, 3.0]), 3)
    assert np.allclose(vals, [-2.0 * 4 / 6, 0.0, 3.0]) and boundary.tolist() == [False, True, False]


def test_sphere_samples_are_unit_and_seeded():
    v = sphere_samples(100, 3, seed=1, quasi=True)
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0)
    assert np.array_equal(v, sphere_samples(100, 3, seed=1, quasi=True))


def test_lambda_field_matches_single_point():
    X, g = resolve("cp1_fs*cp1_fs")
    pts = X.random_points(5, seed=2)
    batched = lambda_field(g, pts)
    single = [lambda_first_eigenvalue(g, p).lambda_min for p in pts]
    assert np.allclose(batched, single, rtol=1e-10)


@pytest.mark.parametrize("name", ["cpn_fs:2", "cpn_fs:3", "cp1_fs*cp1_fs", "cp1_fs_conformal:seed=2,eps=0.3"])
def test_berger_average(name):
    X, g = resolve(name)
    for k, p in enumerate(X.random_points(10, seed=3)):
        assert berger_average(g, p, num_samples=10_000, seed=k).agrees()


def test_berger_requires_kahler_and_samples():
    g, p = _point("hopf_std")
    with pytest.raises(NonKahlerMetric):
        berger_average(g, p)
    g, p = _point("cpn_fs:2")
    with pytest.raises(ValueError):
        berger_average(g, p, num_samples=10)


def _royden_points():
    for name in ["cp1_fs", "cpn_fs:2", "cp1_fs*cp1_fs", "cp1_fs_conformal:seed=2,eps=0.3",
                 "torus_conformal:seed=1", "torus_conformal:seed=3,eps=0.3"]:
        X, g = resolve(name)
        for p in X.random_points(2, seed=4):
            yield name, g, p


@pytest.mark.parametrize("name,eta,q", list(_royden_points()), ids=lambda x: x if isinstance(x, str) else "")
def test_royden_bound(name, eta, q):
    cp = chern_curvature(eta, q)
    k = kappa(eta, q).value
    m = eta.dim
    rng = np.random.default_rng(0)
    worst = -np.inf
    for n in (1, 2, 3):
        # random source metric at the point and 400 random Jacobians per source dimension
        B = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        gx = B @ B.conj().T + n * np.eye(n)
        ginvT = np.linalg.inv(gx).T
        J = rng.normal(size=(400, m, n)) + 1j * rng.normal(size=(400, m, n))
        A = np.einsum("sai,ij,sbj->sab", J, ginvT, np.conj(J))
        lhs = np.einsum("abcd,sab,scd->s", cp.tensor, A, A).real
        tr = np.einsum("ab,sab->s", cp.metric, A).real
        worst = max(worst, float(np.max((lhs - k * tr**2) / tr**2)))
    assert worst <= 1e-6 * max(1.0, abs(k))
