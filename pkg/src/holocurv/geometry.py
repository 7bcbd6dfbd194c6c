"""Hermitian metric fields on charts and the pointwise Chern curvature engine.

Index conventions
-----------------
A metric is stored as the matrix ``g[k, l] = g_{k lbar}``.  Derivative arrays
put the differentiation indices first:

* ``d1[i, k, l]    = d g_{k lbar} / d z^i``
* ``d2[i, j, k, l] = d^2 g_{k lbar} / d z^i d zbar^j``

The antiholomorphic first derivative is never stored: Hermitian symmetry gives
``d g_{p lbar} / d zbar^j = conj(d1[j, l, p])``.  The curvature tensor array is
``R[i, j, k, l] = R_{i jbar k lbar}``.  With ``ginv = inv(g)`` the contraction
``g^{qbar p}`` is ``ginv[q, p]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import derivatives
from .charts import ChartPoint, ChartPoints, grouped
from .errors import SingularMetric, SymmetryViolation

# Metrics whose conditioning is worse than this are rejected.
CONDITION_FLOOR = 1e-12
# Raw Hermitian-symmetry defect (relative) below which the tensor is averaged.
SYMMETRY_TOL = 1e-6


@dataclass(frozen=True)
class HermitianMetricField:
    """An evaluable Hermitian metric ``g(z)`` with optional derivative callbacks.

    Callbacks take ``(chart, z)`` with ``z`` of shape ``(N, n)`` and return the
    batched arrays described in the module docstring.  Missing derivatives fall
    back to complex central differences with one Richardson step.
    """

    dim: int
    eval: Callable
    first_deriv: Optional[Callable] = None
    second_deriv: Optional[Callable] = None
    kahler_known: bool = False
    gauduchon_known: bool = False
    einstein_known: bool = False
    name: str = ""
    fd_scale: float = 1.0

    @property
    def has_analytic_derivatives(self):
        return self.first_deriv is not None and self.second_deriv is not None

    def matrix(self, pts):
        return grouped(self.eval, pts)

    def d1(self, pts, analytic=True):
        if analytic and self.first_deriv is not None:
            return grouped(self.first_deriv, pts)
        return grouped(self._fd_first, pts)

    def d2(self, pts, analytic=True):
        if analytic and self.second_deriv is not None:
            return grouped(self.second_deriv, pts)
        if analytic and self.first_deriv is not None:
            return grouped(self._fd_second_from_first, pts)
        return grouped(self._fd_second, pts)

    def _fd_first(self, chart, z):
        return derivatives.dz(lambda w: self.eval(chart, w), z, scale=self.fd_scale)

    def _fd_second(self, chart, z):
        return derivatives.dz_dzbar(lambda w: self.eval(chart, w), z, scale=self.fd_scale)

    def _fd_second_from_first(self, chart, z):
        # dzbar puts j first: [N, j, i, k, l]
        res = derivatives.dzbar(lambda w: self.first_deriv(chart, w), z, scale=self.fd_scale)
        return np.swapaxes(res, 1, 2)

    def scaled(self, c):
        """The metric ``c * g`` for a constant ``c > 0``."""
        if c <= 0:
            raise ValueError("scale factor must be positive")
        ev, d1, d2 = self.eval, self.first_deriv, self.second_deriv
        return replace(
            self,
            eval=lambda chart, z: c * ev(chart, z),
            first_deriv=None if d1 is None else (lambda chart, z: c * d1(chart, z)),
            second_deriv=None if d2 is None else (lambda chart, z: c * d2(chart, z)),
            name=f"{c:g}*{self.name}",
        )

    def without_derivatives(self):
        """Same metric, derivatives forced through finite differences."""
        return replace(self, first_deriv=None, second_deriv=None, name=f"fd({self.name})")


@dataclass(frozen=True)
class CurvaturePack:
    """Chern curvature and its contractions, possibly batched on a leading axis."""

    tensor: np.ndarray
    ricci: np.ndarray
    second_ricci: np.ndarray
    scalar: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray

    def __getitem__(self, idx):
        return CurvaturePack(
            self.tensor[idx], self.ricci[idx], self.second_ricci[idx],
            self.scalar[idx], self.metric[idx], self.metric_inv[idx],
        )

    def __len__(self):
        return self.tensor.shape[0]


def _hermitize(a):
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def checked_metric(metric, pts):
    """Metric matrices and inverses at ``pts``; rejects degenerate metrics."""
    g = metric.matrix(pts)
    scale = np.max(np.abs(g), axis=(-1, -2))
    herm_defect = np.max(np.abs(g - np.conj(np.swapaxes(g, -1, -2))), axis=(-1, -2))
    if np.any(herm_defect > 1e-10 * np.maximum(scale, 1e-300)):
        raise SingularMetric("metric matrix is not Hermitian")
    g = _hermitize(g)
    ev = np.linalg.eigvalsh(g)
    if np.any(~np.isfinite(ev)) or np.any(ev[..., 0] <= CONDITION_FLOOR * ev[..., -1]):
        raise SingularMetric("metric is degenerate or not positive definite")
    return g, np.linalg.inv(g)


def curvature_batch(metric, pts, analytic=True):
    """Chern curvature :class:`CurvaturePack` at every point of a batch."""
    pts = ChartPoints.of(pts)
    g, ginv = checked_metric(metric, pts)
    d1 = metric.d1(pts, analytic=analytic)
    d2 = metric.d2(pts, analytic=analytic)
    quad = np.einsum("nqp,nikq,njlp->nijkl", ginv, d1, np.conj(d1))
    raw = -d2 + quad
    swapped = np.conj(np.transpose(raw, (0, 2, 1, 4, 3)))
    defect = np.max(np.abs(raw - swapped).reshape(len(pts), -1), axis=1)
    size = np.maximum(
        np.max(np.abs(d2).reshape(len(pts), -1), axis=1),
        np.max(np.abs(quad).reshape(len(pts), -1), axis=1),
    )
    bad = defect > SYMMETRY_TOL * np.maximum(size, 1e-300)
    if np.any(bad):
        worst = float(np.max(defect[bad] / np.maximum(size[bad], 1e-300)))
        raise SymmetryViolation(f"Hermitian symmetry defect {worst:.3e} exceeds tolerance")
    tensor = 0.5 * (raw + swapped)
    ricci = _hermitize(np.einsum("nlk,nijkl->nij", ginv, tensor))
    second = _hermitize(np.einsum("nji,nijkl->nkl", ginv, tensor))
    scalar = np.einsum("nji,nij->n", ginv, ricci).real
    return CurvaturePack(tensor, ricci, second, scalar, g, ginv)


def chern_curvature(metric, p, analytic=True):
    """Chern curvature at a single :class:`ChartPoint`."""
    return curvature_batch(metric, ChartPoints.of(p), analytic=analytic)[0]


def kahler_defect(metric, p):
    """``max |d_i g_{k jbar} - d_k g_{i jbar}|`` at ``p`` (zero iff locally Kähler)."""
    d1 = metric.d1(ChartPoints.of(p))
    return float(np.max(np.abs(d1 - np.swapaxes(d1, 1, 2))))


def kahler_defect_sampled(metric, pts):
    d1 = metric.d1(ChartPoints.of(pts))
    return np.max(np.abs(d1 - np.swapaxes(d1, 1, 2)).reshape(len(d1), -1), axis=1)


def complex_hessian(fn, pts, scale=1.0, base=derivatives.SECOND_STEP):
    """``d^2 fn / dz^i dzbar^j`` for a scalar field ``fn(ChartPoints) -> (N,)``."""
    pts = ChartPoints.of(pts)

    def per_chart(chart, z):
        return derivatives.dz_dzbar(
            lambda w: fn(ChartPoints(np.full(len(w), chart), w)), z, scale=scale, base=base
        )

    return grouped(per_chart, pts)


def laplacian(metric, fn, pts, scale=1.0, base=derivatives.SECOND_STEP):
    """Complex Laplacian ``tr_omega(sqrt(-1) ddbar fn)`` by finite differences."""
    pts = ChartPoints.of(pts)
    ginv = np.linalg.inv(metric.matrix(pts))
    hess = complex_hessian(fn, pts, scale=scale, base=base)
    return np.einsum("nji,nij->n", ginv, hess).real


def volume_density(metric, pts):
    """Density of ``omega^n`` against Lebesgue measure ``dx^1 dy^1 ... dx^n dy^n``."""
    g = metric.matrix(pts)
    n = g.shape[-1]
    return math.factorial(n) * 2.0**n * np.linalg.det(g).real


def gauduchon_residual(model, metric, u, scheme=None):
    """``|integral of (Laplacian u) omega^n|`` over the model by quadrature.

    ``u`` maps :class:`ChartPoints` to real values.  For Gauduchon metrics the
    exact value is zero, so the return value measures discretization error.
    """
    from .quadrature import integrate_top

    scheme = model.quadrature() if scheme is None else scheme
    return abs(integrate_top(model, metric, lambda pts: laplacian(metric, u, pts), scheme=scheme))
