"""Wirtinger finite differences against closed-form derivatives."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holocurv import derivatives
from holocurv.errors import DerivativeUnavailable

coords = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


@given(st.lists(coords, min_size=2, max_size=2))
def test_dz_of_holomorphic_polynomial(z):
    z = np.array([z])
    fn = lambda w: w[:, 0] ** 3 + w[:, 0] * w[:, 1]
    d = derivatives.dz(fn, z)
    exact = np.array([[3 * z[0, 0] ** 2 + z[0, 1], z[0, 0]]])
    assert np.allclose(d, exact, rtol=1e-8, atol=1e-8)
    assert np.allclose(derivatives.dzbar(fn, z), 0, atol=1e-8)


@given(st.lists(coords, min_size=2, max_size=2))
def test_dz_dzbar_of_log_norm(z):
    z = np.array([z]) + 0.5
    fn = lambda w: np.log(1 + np.sum(np.abs(w) ** 2, axis=1))
    s = 1 + np.sum(np.abs(z) ** 2)
    exact = np.eye(2) / s - np.conj(z[0])[:, None] * z[0][None, :] / s**2
    assert np.allclose(derivatives.dz_dzbar(fn, z)[0], exact, atol=1e-7)


def test_tensor_valued_output_keeps_trailing_axes():
    z = np.array([[0.2 + 0.1j, -0.3j]])
    fn = lambda w: np.stack([w, np.conj(w)], axis=1)  # (N, 2, n)
    d = derivatives.dz(fn, z)
    assert d.shape == (1, 2, 2, 2)
    assert np.allclose(d[0, :, 0, :], np.eye(2), atol=1e-9)
    assert np.allclose(d[0, :, 1, :], 0, atol=1e-9)


def test_non_finite_stencil_is_reported():
    with pytest.raises(DerivativeUnavailable):
        with np.errstate(divide="ignore", invalid="ignore"):
            derivatives.dz(lambda w: np.log(w[:, 0].real), np.array([[0.0 + 0.0j]]))


def test_richardson_beats_plain_central_difference():
    z = np.array([[0.7 + 0.2j]])
    fn = lambda w: np.exp(w[:, 0]) * np.conj(w[:, 0])
    err = abs(derivatives.dz(fn, z)[0, 0] - np.exp(z[0, 0]) * np.conj(z[0, 0]))
    assert err < 1e-10
