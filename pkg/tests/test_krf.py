"""Class-level flow bounds and the singularity-type classifier."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holocurv import krf
from holocurv.errors import InvalidClassData, NonPositiveDenominator, NonPositivePairing, TargetNotNef
from holocurv.krf import FlowClassData, SingularityType
from holocurv.maps import resolve_map
from holocurv.models import resolve

positive = st.floats(1e-6, 1e6, allow_nan=False)
lam = st.one_of(st.just(0.0), st.floats(-1e6, 1e6, allow_nan=False))
ky = st.one_of(st.just(0.0), positive)
dims = st.integers(1, 4)


def _oracle(lam, ky):
    return "TypeIIbForced" if lam > 0 and ky == 0 else ("TypeIIbOrIIIaForced" if lam > 0 else "Inconclusive")


@given(lam, positive, ky, dims)
def test_classifier_truth_table(l, e, k, n):
    assert krf.classify_flow(FlowClassData(l, e, k, n)).classification.value == _oracle(l, k)


@pytest.mark.criterion(10)
@given(lam, positive, ky, dims, st.floats(1e-3, 1e3))
def test_classifier_scale_invariant(l, e, k, n, c):
    d = FlowClassData(l, e, k, n)
    assert krf.classify_flow(d).classification is krf.classify_flow(d.scaled(c)).classification


@pytest.mark.criterion(10)
@given(st.floats(1e-3, 1e3), positive, positive, dims)
def test_flow_bound_strictly_decreasing_with_positive_canonical_pairing(l, e, k, n):
    t = np.linspace(0, 100, 50)
    b = krf.flow_bound(FlowClassData(l, e, k, n), t)
    assert np.all(np.diff(b) < 0)


@given(lam, positive, dims)
def test_flow_bound_constant_without_canonical_pairing(l, e, n):
    b = krf.flow_bound(FlowClassData(l, e, 0.0, n), np.linspace(0, 1e6, 20))
    assert np.all(b == b[0])


@given(st.floats(-1e3, 1e3), st.floats(1e-2, 1e2), st.floats(1e-2, 1e2), dims)
def test_limsup_formula(l, e, k, n):
    d = FlowClassData(l, e, k, n)
    closed = krf.limsup_t_bound(d)
    assert closed == pytest.approx(l / (2 * math.pi * n * k), rel=1e-12, abs=1e-300)
    # t * bound(t) = L * 2 pi t k / (e + 2 pi t k): the large-t extrapolation of the displayed limit
    t = 1e9
    assert t * krf.flow_bound(d, t) == pytest.approx(closed, rel=1e-12 + e / (2 * math.pi * t * k))


def test_limsup_without_canonical_pairing():
    assert krf.limsup_t_bound(FlowClassData(1.0, 1.0, 0.0, 1)) == math.inf
    assert krf.limsup_t_bound(FlowClassData(0.0, 1.0, 0.0, 1)) == 0.0
    assert krf.limsup_t_bound(FlowClassData(-1.0, 1.0, 0.0, 1)) == -math.inf


@pytest.mark.parametrize("data", [
    FlowClassData(1.0, 0.0, 1.0, 1), FlowClassData(1.0, 1.0, -1.0, 1), FlowClassData(math.nan, 1.0, 1.0, 1),
    FlowClassData(1.0, 1.0, 1.0, 0),
])
def test_invalid_class_data(data):
    with pytest.raises(InvalidClassData):
        krf.classify_flow(data)


def test_non_positive_denominator():
    with pytest.raises(NonPositiveDenominator):
        krf.flow_bound(FlowClassData(1.0, -1.0, 0.0, 1), 0.0)
    with pytest.raises(ValueError):
        krf.flow_bound(FlowClassData(1.0, 1.0, 0.0, 1), -1.0)


def test_mu_nu_bounds():
    # CP^2 identity: int lambda = 6 pi, pairing of the FS class = 1
    assert krf.mu_lower_bound(6 * math.pi, 1.0, 2) == pytest.approx(3 * math.pi)
    assert krf.nu_lower_bound(12 * math.pi, 1.0, 2) == pytest.approx(6 * math.pi)
    with pytest.raises(NonPositivePairing):
        krf.mu_lower_bound(1.0, 0.0, 1)


def _scenario(src, tgt, name, **kw):
    X, om = resolve(src)
    Y, eta = resolve(tgt)
    return krf.end_to_end_flow_scenario(resolve_map(name, X, Y), om, eta, **kw)


def test_torus_fibre_gives_inconclusive():
    v = _scenario("torus_flat", "torus_flat*torus_flat", "embed:factor=0")
    assert v.classification is SingularityType.INCONCLUSIVE
    assert v.data.lambda_total == 0.0 and v.data.ky_pairing == 0.0
    assert krf.WORDING_NOTE in v.notes


def test_ruled_target_is_not_nef():
    with pytest.raises(TargetNotNef):
        _scenario("torus_flat", "torus_flat*cp1_fs", "embed:factor=0")


@pytest.mark.parametrize("ky,kind,limsup", [(0.0, SingularityType.TYPE_IIB_FORCED, math.inf),
                                            (0.5, SingularityType.TYPE_IIB_OR_IIIA_FORCED, 4.0)])
def test_declared_target_scenarios(ky, kind, limsup):
    X, om = resolve("cp1_fs_conformal:seed=1,eps=0.2")
    v = krf.end_to_end_flow_scenario(None, om, source=X, eta0_pairing=1.0, ky_pairing=ky, target_nef=True)
    assert v.classification is kind
    assert v.data.lambda_total == pytest.approx(4 * math.pi, rel=1e-8)
    assert v.limsup_t_times_bound == pytest.approx(limsup)


def test_declared_target_needs_full_data():
    X, om = resolve("cp1_fs")
    with pytest.raises(InvalidClassData):
        krf.end_to_end_flow_scenario(None, om, source=X, eta0_pairing=1.0)


def test_metric_canonical_pairing_cross_check():
    X, om = resolve("torus_flat")
    Y, eta = resolve("torus_flat")
    f = resolve_map("isogeny:k=2", X, Y)
    assert krf.canonical_pairing_from_metric(f, om, eta, X.quadrature()) == 0.0
    X, om = resolve("cp1_fs")
    f = resolve_map("power:d=2", X, X)
    # c1(K) of CP^1 has degree -2, pulled back by a degree-2 map
    assert krf.canonical_pairing_from_metric(f, om, om, X.quadrature()) == pytest.approx(-4.0, rel=1e-8)


def test_lambda_total_on_catalog():
    X, om = resolve("cpn_fs:2")
    val, err, mass = krf.lambda_total(X, om, resolution=4096)
    assert val == pytest.approx(6 * math.pi, rel=1e-9) and mass == pytest.approx(val)
