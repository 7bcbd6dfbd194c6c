"""Quadrature on the compact catalog manifolds.

Weights are coordinate volumes (Lebesgue measure in the chart), so the same
scheme integrates against any metric: ``integral of h omega^n`` is
``sum w_i h(p_i) rho(p_i)`` with ``rho = n! 2^n det g``.

Projective spaces are parametrized through the moment map
``p_k = |Z_k|^2 / |Z|^2``: the Fubini-Study volume pushes forward to the
uniform measure on the simplex times the uniform measure on the angle torus,
which is what both the CP^1 product grid and the CP^n quasi-Monte-Carlo rule
exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import roots_legendre
from scipy.stats import qmc

from .charts import ChartPoints
from .errors import QuadratureUnavailable
from .geometry import volume_density


class SchemeKind(str, Enum):
    PERIODIC_GRID = "PeriodicGrid"
    SPHERE_CHART = "SphereChart"
    AFFINE_QMC = "AffineQMC"
    ANNULUS_GRID = "AnnulusGrid"
    PRODUCT = "Product"


@dataclass(frozen=True)
class QuadratureScheme:
    nodes: ChartPoints
    weights: np.ndarray
    resolution: int
    kind: SchemeKind
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.weights) != len(self.nodes):
            raise ValueError("one weight per node required")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    def __len__(self):
        return len(self.weights)


def _gauss_unit(n):
    """Gauss-Legendre nodes and weights on (0, 1)."""
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _fs_density(z):
    n = z.shape[-1]
    s = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)
    return math.factorial(n) * 2.0**n * (2.0 * np.pi) ** (-n) * s ** (-(n + 1))


def _moment_to_chart(p, phase):
    """Homogeneous data (|Z_k|^2 = p_k, arg Z_k = phase_k) to the best affine chart.

    ``p`` and ``phase`` have shape ``(N, n+1)``; the chart is the index of the
    largest coordinate so every affine coordinate has modulus at most one.
    """
    zh = np.sqrt(p) * np.exp(1j * phase)
    chart = np.argmax(p, axis=1)
    idx = np.arange(len(p))
    zk = zh[idx, chart]
    aff = zh / zk[:, None]
    keep = np.ones_like(p, dtype=bool)
    keep[idx, chart] = False
    coords = aff[keep].reshape(len(p), p.shape[1] - 1)
    return ChartPoints(chart, coords)


def sphere_chart_scheme(resolution=48):
    """CP^1: Gauss-Legendre in ``p = |z|^2/(1+|z|^2)`` times a uniform angle grid."""
    n_p, n_phi = resolution, 2 * resolution
    p, wp = _gauss_unit(n_p)
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    pp, ph = np.meshgrid(p, phi, indexing="ij")
    ww = np.broadcast_to(wp[:, None] / n_phi, pp.shape)
    moments = np.stack([1.0 - pp.ravel(), pp.ravel()], axis=1)
    phases = np.stack([np.zeros(pp.size), ph.ravel()], axis=1)
    nodes = _moment_to_chart(moments, phases)
    weights = ww.ravel() / _fs_density(nodes.coords)
    return QuadratureScheme(nodes, weights, resolution, SchemeKind.SPHERE_CHART)


def _uniform_simplex(u):
    """Measure-preserving map from the unit cube onto the standard n-simplex."""
    n = u.shape[1]
    p = np.zeros((len(u), n + 1))
    remaining = np.ones(len(u))
    for k in range(n):
        frac = 1.0 - (1.0 - u[:, k]) ** (1.0 / (n - k))
        p[:, k + 1] = remaining * frac
        remaining = remaining - p[:, k + 1]
    p[:, 0] = np.maximum(remaining, 0.0)
    return p


def affine_qmc_scheme(n, resolution=2**18, seed=0):
    """CP^n: scrambled Sobol points pushed to FS-uniform nodes (equal FS mass)."""
    m = max(1, int(math.ceil(math.log2(max(resolution, 2)))))
    sampler = qmc.Sobol(d=2 * n, scramble=True, seed=np.random.default_rng(seed))
    u = sampler.random_base2(m)
    u = np.clip(u, 1e-15, 1.0 - 1e-15)
    p = _uniform_simplex(u[:, :n])
    phases = np.concatenate([np.zeros((len(u), 1)), 2.0 * np.pi * u[:, n:]], axis=1)
    nodes = _moment_to_chart(p, phases)
    weights = 1.0 / (len(u) * _fs_density(nodes.coords))
    return QuadratureScheme(nodes, weights, 2**m, SchemeKind.AFFINE_QMC, seed=seed)


def periodic_grid_scheme(n, resolution=32):
    """Flat torus C^n / (Z^n + iZ^n): uniform trapezoid grid on the unit cube."""
    axis = (np.arange(resolution) + 0.5) / resolution
    grids = np.meshgrid(*([axis] * (2 * n)), indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    coords = flat[:, :n] + 1j * flat[:, n:]
    weights = np.full(len(coords), 1.0 / resolution ** (2 * n))
    return QuadratureScheme(ChartPoints(0, coords), weights, resolution, SchemeKind.PERIODIC_GRID)


def annulus_grid_scheme(resolution=16, ratio=2.0):
    """Hopf surface: fundamental shell ``1 <= |z| <= ratio`` in C^2.

    Coordinates ``z1 = r sqrt(1-q) e^{i a}``, ``z2 = r sqrt(q) e^{i b}`` with
    ``log r`` periodic (period ``log ratio``), Gauss-Legendre in ``q`` and
    uniform angles.  Lebesgue measure is ``r^4 d(log r) dq/2 da db``.
    """
    ns = nq = na = resolution
    span = math.log(ratio)
    s = span * (np.arange(ns) + 0.5) / ns
    q, wq = _gauss_unit(nq)
    ang = 2.0 * np.pi * (np.arange(na) + 0.5) / na
    S, Q, A, B = np.meshgrid(s, q, ang, ang, indexing="ij")
    WQ = np.broadcast_to(wq[None, :, None, None], S.shape)
    r = np.exp(S)
    z1 = r * np.sqrt(1.0 - Q) * np.exp(1j * A)
    z2 = r * np.sqrt(Q) * np.exp(1j * B)
    coords = np.stack([z1.ravel(), z2.ravel()], axis=1)
    weights = (r**4 * (span / ns) * (WQ / 2.0) * (2.0 * np.pi / na) ** 2).ravel()
    return QuadratureScheme(
        ChartPoints(0, coords), weights, resolution, SchemeKind.ANNULUS_GRID, meta={"ratio": ratio}
    )


def product_scheme(first, second, encode):
    """Tensor product of two schemes; ``encode(c1, c2)`` builds the product chart id."""
    i, j = np.meshgrid(np.arange(len(first)), np.arange(len(second)), indexing="ij")
    i, j = i.ravel(), j.ravel()
    chart = encode(first.nodes.chart[i], second.nodes.chart[j])
    coords = np.concatenate([first.nodes.coords[i], second.nodes.coords[j]], axis=1)
    weights = first.weights[i] * second.weights[j]
    return QuadratureScheme(
        ChartPoints(chart, coords), weights, min(first.resolution, second.resolution),
        SchemeKind.PRODUCT, meta={"factors": (first.kind.value, second.kind.value)},
    )


def _values(h, nodes):
    if callable(h):
        return np.asarray(h(nodes))
    return np.asarray(h)


def weighted_sum(terms):
    """Compensated, order-deterministic reduction."""
    return math.fsum(np.asarray(terms, dtype=float).ravel().tolist())


def integrate_top(model, metric, h, scheme=None, weight=None):
    """``integral over X of h * weight * omega^n``.

    ``h`` and ``weight`` are callables on :class:`ChartPoints` (or arrays of
    node values).  ``weight`` defaults to the constant 1.
    """
    if scheme is None:
        if model is None or getattr(model, "quadrature", None) is None:
            raise QuadratureUnavailable("model has no quadrature scheme")
        scheme = model.quadrature()
    vals = _values(h, scheme.nodes)
    if np.iscomplexobj(vals):
        if np.max(np.abs(vals.imag)) > 1e-8 * max(1.0, np.max(np.abs(vals.real))):
            raise ValueError("integrand has a non-negligible imaginary part")
        vals = vals.real
    dens = volume_density(metric, scheme.nodes)
    terms = scheme.weights * vals * dens
    if weight is not None:
        terms = terms * _values(weight, scheme.nodes)
    return weighted_sum(terms)


def pair_form(model, metric, alpha, scheme=None, weight=None, require_psd=True):
    """``integral of alpha ^ omega^{n-1}`` for (1,1)-data ``alpha(pts) -> (N, n, n)``.

    Uses ``alpha ^ omega^{n-1} = (1/n) tr_omega(alpha) omega^n``.  Signed data is
    accepted only when ``require_psd`` is switched off explicitly.
    """
    scheme = model.quadrature() if scheme is None else scheme
    a = _values(alpha, scheme.nodes)
    if require_psd:
        ev = np.linalg.eigvalsh(0.5 * (a + np.conj(np.swapaxes(a, -1, -2))))
        scale = np.maximum(np.max(np.abs(ev), axis=-1), 1e-300)
        if np.any(ev[..., 0] < -1e-9 * scale):
            raise ValueError("(1,1)-form is not positive semidefinite")
    ginv = np.linalg.inv(metric.matrix(scheme.nodes))
    n = a.shape[-1]
    tr = np.einsum("nji,nij->n", ginv, a).real / n
    return integrate_top(model, metric, tr, scheme=scheme, weight=weight)


@dataclass(frozen=True)
class Estimate:
    """A quadrature value with its two-resolution error estimate."""

    value: float
    error: float
    resolutions: tuple

    def stable_digits(self, digits=3):
        """True when the two resolutions agree to ``digits`` significant digits."""
        ref = max(abs(self.value), 1e-300)
        return self.error <= 0.5 * 10.0 ** (1 - digits) * ref or self.error <= 1e-12


def estimate(model, compute, resolution=None, seed=0):
    """Run ``compute(scheme)`` at ``resolution`` and at the model's coarser level."""
    fine_res = model.default_resolution if resolution is None else resolution
    coarse_res = model.coarser(fine_res)
    fine = compute(model.quadrature(fine_res, seed=seed))
    coarse = compute(model.quadrature(coarse_res, seed=seed))
    return Estimate(fine, abs(fine - coarse), (fine_res, coarse_res))
