"""Catalog models: names, charts and class metadata."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holocurv.errors import UnknownName
from holocurv.models import ProductManifold, parse_name, resolve
from holocurv.quadrature import integrate_top


@pytest.mark.parametrize("name,dim,kahler,nef", [
    ("cp1_fs", 1, True, False), ("cpn_fs:3", 3, True, False), ("torus_flat:n=2", 2, True, True),
    ("hopf_std", 2, False, None), ("torus_flat*torus_flat", 2, True, True), ("torus_flat*cp1_fs", 2, True, False),
])
def test_catalog_metadata(name, dim, kahler, nef):
    X, g = resolve(name)
    assert X.dim == g.dim == dim
    assert g.kahler_known is kahler and X.topo.kahler is kahler
    assert X.topo.canonical_nef is nef


def test_parse_name():
    assert parse_name("cpn_fs:3") == ("cpn_fs", {"_": "3"})
    assert parse_name(" power : d=2, k = 1") == ("power", {"d": "2", "k": "1"})


@pytest.mark.parametrize("name", ["cp0_fs", "cpn_fs:n=0", "cpn_fs:n=two", "torus_flat:n=-1"])
def test_unknown_names(name):
    with pytest.raises(UnknownName):
        resolve(name)


@given(st.integers(0, 1000))
def test_projective_transitions_round_trip(seed):
    X, _ = resolve("cpn_fs:2")
    pts = X.random_points(5, seed=seed)
    for c in range(3):
        back = X.transition(X.transition(pts, c), pts.chart[0])
        assert np.allclose(back.coords, X.transition(pts, pts.chart[0]).coords, rtol=1e-10, atol=1e-12)


def test_random_points_are_well_conditioned_and_seeded():
    X, _ = resolve("cpn_fs:3")
    pts = X.random_points(200, seed=1)
    assert np.all(np.abs(pts.coords) <= 1.0 + 1e-12)
    assert np.array_equal(pts.coords, X.random_points(200, seed=1).coords)


def test_product_encoding():
    X, g = resolve("cp1_fs*cpn_fs:2")
    assert isinstance(X, ProductManifold) and X.dim == 3 and X.n_charts == 6
    pts = X.random_points(4, seed=2)
    a, b = X.split(pts)
    assert np.array_equal(X.join(a, b).coords, pts.coords)
    # (omega_1 + omega_2)^3 = 3 omega_1 ^ omega_2^2
    assert X.topo.euler == 2 * 3 and X.topo.volume == pytest.approx(3.0)
    vol = integrate_top(X, g, lambda p: np.ones(len(p)))
    assert vol == pytest.approx(3.0, rel=1e-3)


def test_hopf_domain():
    X, _ = resolve("hopf_std")
    r = np.linalg.norm(X.random_points(100, seed=0).coords, axis=1)
    assert np.all((r >= 1) & (r <= 2))
    assert X.topo.volume == pytest.approx(16 * math.pi**2 * math.log(2))
