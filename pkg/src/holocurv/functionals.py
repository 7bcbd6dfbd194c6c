"""Extremal and averaged curvature quantities built on the Chern tensor.

All directional optimizations run in a unitary frame: with ``g = L L^H`` and
``M = L^{-T}`` a unit frame vector ``v`` corresponds to the tangent vector
``W = M v`` of unit g-length, and the frame tensor is
``T[a,b,c,d] = R(M e_a, conj(M e_b), M e_c, conj(M e_d))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg
from scipy.special import ndtri
from scipy.stats import qmc

from .charts import ChartPoints
from .errors import EigenSolverFailure, NonKahlerMetric, OptimizerInconsistent, ZeroVector
from .geometry import curvature_batch

CERTIFY_RTOL = 1e-6
# |H_sup| at or below this is treated as the discontinuity point of rho.
RHO_BOUNDARY = 1e-9


@dataclass(frozen=True)
class EigenResult:
    lambda_min: float
    eigvec: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class SupResult:
    """Maximum of a directional curvature with its witness and certificate."""

    value: float
    witness: tuple
    sweep_max: float
    n_starts: int
    n_sweep: int


class KappaBranch(str, Enum):
    KAHLER_RHO = "KahlerRho"
    NON_KAHLER_BK = "NonKahlerBK"


@dataclass(frozen=True)
class KappaValue:
    value: float
    branch: KappaBranch
    witness_dirs: tuple
    h_sup: float | None = None
    boundary: bool = False


@dataclass(frozen=True)
class BergerResult:
    average: float
    reference: float
    sigma: float
    num_samples: int
    exact: bool

    @property
    def mc_error(self):
        return 3.0 * self.sigma / np.sqrt(self.num_samples)

    def agrees(self, floor=1e-10):
        return abs(self.average - self.reference) <= self.mc_error + floor * max(1.0, abs(self.reference))


def _pack(metric, p):
    return curvature_batch(metric, ChartPoints.of(p))


# -- first eigenvalue of the second Ricci form ---------------------------------

def lambda_first_eigenvalue(metric, p):
    """Smallest generalized eigenvalue of ``(Ric^(2), g)`` with a g-unit eigenvector."""
    cp = _pack(metric, p)[0]
    try:
        vals, vecs = scipy.linalg.eigh(cp.second_ricci, cp.metric)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(vals)):
        raise EigenSolverFailure("non-finite eigenvalues")
    v = vecs[:, 0]
    v = v / np.sqrt(np.real(v @ cp.metric @ np.conj(v)))
    return EigenResult(float(vals[0]), v, vals)


def lambda_from_pack(cp):
    """Batched smallest eigenvalue of ``(Ric^(2), g)`` via a Cholesky frame."""
    L = np.linalg.cholesky(cp.metric)
    Linv = np.linalg.inv(L)
    A = Linv @ cp.second_ricci @ np.conj(np.swapaxes(Linv, -1, -2))
    ev = np.linalg.eigvalsh(0.5 * (A + np.conj(np.swapaxes(A, -1, -2))))
    if not np.all(np.isfinite(ev)):
        raise EigenSolverFailure("non-finite eigenvalues")
    return ev[..., 0]


def lambda_field(metric, pts):
    return lambda_from_pack(curvature_batch(metric, pts))


# -- pointwise directional curvatures --------------------------------------------

def _norm2(g, w):
    return float(np.real(w @ g @ np.conj(w)))


def hsc(metric, p, W):
    """Holomorphic sectional curvature ``R(W, W, W, W) / |W|^4``."""
    W = np.asarray(W, dtype=complex)
    cp = _pack(metric, p)[0]
    nw = _norm2(cp.metric, W)
    if nw <= 0.0:
        raise ZeroVector("direction must be non-zero")
    val = np.einsum("ijkl,i,j,k,l->", cp.tensor, W, np.conj(W), W, np.conj(W))
    return float(val.real) / nw**2


def bisectional(metric, p, W, V):
    """Holomorphic bisectional curvature ``R(W, W, V, V) / (|W|^2 |V|^2)``."""
    W = np.asarray(W, dtype=complex)
    V = np.asarray(V, dtype=complex)
    cp = _pack(metric, p)[0]
    nw, nv = _norm2(cp.metric, W), _norm2(cp.metric, V)
    if nw <= 0.0 or nv <= 0.0:
        raise ZeroVector("directions must be non-zero")
    val = np.einsum("ijkl,i,j,k,l->", cp.tensor, W, np.conj(W), V, np.conj(V))
    return float(val.real) / (nw * nv)


# -- frame machinery ------------------------------------------------------------

def frame(cp):
    """Frame tensors ``T`` (P, n, n, n, n) and frame matrices ``M`` (P, n, n)."""
    L = np.linalg.cholesky(cp.metric)
    M = np.linalg.inv(np.swapaxes(L, -1, -2))
    Mc = np.conj(M)
    T = np.einsum("pijkl,pia,pjb,pkc,pld->pabcd", cp.tensor, M, Mc, M, Mc, optimize=True)
    return T, M


def sphere_samples(k, n, seed, quasi=False):
    """Unitarily invariant unit vectors in C^n (normalized complex Gaussians)."""
    if quasi:
        m = int(np.ceil(np.log2(max(k, 2))))
        u = qmc.Sobol(d=2 * n, scramble=True, seed=np.random.default_rng(seed)).random_base2(m)[:k]
        g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    else:
        g = np.random.default_rng(seed).normal(size=(k, 2 * n))
    v = g[:, :n] + 1j * g[:, n:]
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _quartic_matrix(T):
    P, n = T.shape[0], T.shape[1]
    # Q[(a,c),(b,d)] = T[a,b,c,d]
    return np.transpose(T, (0, 1, 3, 2, 4)).reshape(P, n * n, n * n)


def _quartic(Q, v):
    x = (v[..., :, None] * v[..., None, :]).reshape(v.shape[:-1] + (-1,))
    y = np.matmul(x, Q)
    return np.real(np.sum(y * np.conj(x), axis=-1)), y


def _quartic_grad(y, v):
    n = v.shape[-1]
    Z = y.reshape(v.shape[:-1] + (n, n))
    vb = np.conj(v)
    return 2.0 * (np.einsum("...ed,...d->...e", Z, vb) + np.einsum("...be,...b->...e", Z, vb))


def _normalize(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def maximize_quartic(T, starts, max_iter=400, gtol=1e-7, warmup=3, keep=6):
    """Projected gradient ascent of ``T(v, v, v, v)`` on the unit sphere.

    ``starts`` has shape (P, S, n).  After ``warmup`` steps only the ``keep``
    best starts per point are iterated further (the dense sweep certifies the
    result either way).  The value error is quadratic in the residual
    gradient, so ``gtol`` relative to the tensor scale is ample.  Returns best
    values (P,) and vectors (P, n).
    """
    Q = _quartic_matrix(T)
    scale = np.max(np.abs(Q), axis=(1, 2)) * T.shape[1] ** 2 + 1e-300
    v = _normalize(np.array(starts, dtype=complex))
    F, y = _quartic(Q, v)
    alpha = np.broadcast_to((0.5 / scale)[:, None], F.shape).copy()
    active = np.ones(F.shape, dtype=bool)
    for it in range(max_iter):
        if it == warmup and F.shape[1] > keep:
            top = np.argsort(-F, axis=1, kind="stable")[:, :keep]
            v = np.take_along_axis(v, top[..., None], axis=1)
            y = np.take_along_axis(y, top[..., None], axis=1)
            F, alpha, active = (np.take_along_axis(a, top, axis=1) for a in (F, alpha, active))
        G = _quartic_grad(y, v)
        radial = np.real(np.sum(G * np.conj(v), axis=-1))
        Gt = G - radial[..., None] * v
        gnorm = np.linalg.norm(Gt, axis=-1)
        active &= gnorm > gtol * scale[:, None]
        active &= alpha * scale[:, None] > 1e-14
        if not np.any(active):
            break
        trial = _normalize(v + (alpha * active)[..., None] * Gt)
        Ft, yt = _quartic(Q, trial)
        accept = active & (Ft >= F)
        v = np.where(accept[..., None], trial, v)
        F = np.where(accept, Ft, F)
        y = np.where(accept[..., None], yt, y)
        alpha = np.where(accept, alpha * 1.5, np.where(active, alpha * 0.5, alpha))
    best = np.argmax(F, axis=1)
    idx = np.arange(len(F))
    return F[idx, best], v[idx, best]


def _chunks(total, per_item, budget=2**24):
    size = max(1, int(budget // max(per_item, 1)))
    for start in range(0, total, size):
        yield slice(start, min(total, start + size))


def sweep_quartic(T, samples):
    """max over samples of ``T(v, v, v, v)`` for each point (vectorized BLAS)."""
    n = T.shape[1]
    x = (samples[:, :, None] * samples[:, None, :]).reshape(len(samples), n * n)
    outer = (x[:, :, None] * np.conj(x)[:, None, :]).reshape(len(samples), -1)
    Q = _quartic_matrix(T).reshape(len(T), -1)
    out = np.empty(len(T))
    for sl in _chunks(len(T), len(samples)):
        out[sl] = np.max(np.real(Q[sl] @ outer.T), axis=1)
    return out


def _start_vectors(M, n, n_starts, seed):
    """Quasi-random frame directions plus frame axes and chart coordinate axes."""
    quasi = sphere_samples(n_starts, n, seed, quasi=True)
    axes = np.eye(n, dtype=complex)
    # chart axis e_i is W = e_i, i.e. v = M^{-1} e_i
    Minv = np.linalg.inv(M)
    chart_axes = _normalize(np.swapaxes(Minv, -1, -2))  # (P, n, n): row i is M^{-1} e_i
    base = np.concatenate([quasi, axes])
    starts = np.broadcast_to(base, (len(M),) + base.shape)
    return np.concatenate([starts, chart_axes], axis=1)


def _certify(opt, sweep, what):
    gap = sweep - opt
    tol = CERTIFY_RTOL * (1.0 + np.abs(opt))
    if np.any(gap > tol):
        worst = float(np.max(gap - tol))
        raise OptimizerInconsistent(f"{what}: dense sweep exceeds optimum by {worst:.3e} beyond tolerance")


def sup_hsc_from_pack(cp, seed=0, n_starts=64, certify_samples=10_000):
    """Batched sup of holomorphic sectional curvature; returns (values, witnesses W, sweep)."""
    T, M = frame(cp)
    P, n = T.shape[0], T.shape[1]
    if n == 1:
        vals = T[:, 0, 0, 0, 0].real
        return vals, M[:, :, 0], vals.copy()
    starts = _start_vectors(M, n, n_starts, seed)
    vals, vbest = maximize_quartic(T, starts)
    sweep = sweep_quartic(T, sphere_samples(certify_samples, n, seed + 1))
    _certify(vals, sweep, "sup_hsc")
    W = np.einsum("pia,pa->pi", M, vbest)
    return vals, W, sweep


def sup_hsc(metric, p, seed=0, n_starts=64, certify_samples=10_000):
    vals, W, sweep = sup_hsc_from_pack(_pack(metric, p), seed, n_starts, certify_samples)
    n = metric.dim
    return SupResult(float(vals[0]), (W[0],), float(sweep[0]),
                     n_starts + 2 * n if n > 1 else 1, certify_samples if n > 1 else 0)


def _top_eig(A):
    A = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    ev, vec = np.linalg.eigh(A)
    return ev[..., -1], vec[..., :, -1]


def maximize_biquadratic(T, w0, max_iter=200, tol=1e-14):
    """Alternating maximization of ``T(w, w, v, v)`` over pairs of unit vectors.

    ``w0`` has shape (P, S, n).  Each half-step solves a Hermitian eigenproblem,
    so the value is non-decreasing.
    """
    w = _normalize(np.array(w0, dtype=complex))
    prev = None
    for _ in range(max_iter):
        Qw = np.einsum("pabcd,psa,psb->pscd", T, w, np.conj(w))
        _, v = _top_eig(np.swapaxes(Qw, -1, -2))
        Pv = np.einsum("pabcd,psc,psd->psab", T, v, np.conj(v))
        val, w = _top_eig(np.swapaxes(Pv, -1, -2))
        if prev is not None and np.max(np.abs(val - prev)) <= tol * (1.0 + np.max(np.abs(val))):
            break
        prev = val
    best = np.argmax(val, axis=1)
    idx = np.arange(len(val))
    return val[idx, best], w[idx, best], v[idx, best]


def sweep_biquadratic(T, w, v):
    n = T.shape[1]
    pw = (w[:, :, None] * np.conj(w)[:, None, :]).reshape(len(w), n * n)
    qv = (v[:, :, None] * np.conj(v)[:, None, :]).reshape(len(v), n * n)
    outer = (pw[:, :, None] * qv[:, None, :]).reshape(len(w), -1)
    N = T.reshape(len(T), -1)
    out = np.empty(len(T))
    for sl in _chunks(len(T), len(w)):
        out[sl] = np.max(np.real(N[sl] @ outer.T), axis=1)
    return out


def sup_bisectional_from_pack(cp, seed=0, n_starts=64, certify_samples=10_000):
    T, M = frame(cp)
    P, n = T.shape[0], T.shape[1]
    if n == 1:
        vals = T[:, 0, 0, 0, 0].real
        return vals, M[:, :, 0], M[:, :, 0], vals.copy()
    starts = _start_vectors(M, n, n_starts, seed)
    vals, wb, vb = maximize_biquadratic(T, starts)
    sw = sphere_samples(certify_samples, n, seed + 1)
    sv = sphere_samples(certify_samples, n, seed + 2)
    sweep = sweep_biquadratic(T, sw, sv)
    _certify(vals, sweep, "sup_bisectional")
    W = np.einsum("pia,pa->pi", M, wb)
    V = np.einsum("pia,pa->pi", M, vb)
    return vals, W, V, sweep


def sup_bisectional(metric, p, seed=0, n_starts=64, certify_samples=10_000):
    vals, W, V, sweep = sup_bisectional_from_pack(_pack(metric, p), seed, n_starts, certify_samples)
    n = metric.dim
    return SupResult(float(vals[0]), (W[0], V[0]), float(sweep[0]),
                     n_starts + 2 * n if n > 1 else 1, certify_samples if n > 1 else 0)


# -- kappa ----------------------------------------------------------------------

def rho(s, n):
    """Correction factor: (n+1)/(2n) for non-positive s, 1 for positive s."""
    return np.where(np.asarray(s) > 0, 1.0, (n + 1) / (2.0 * n))


def kappa_from_hsup(h_sup, n):
    """``rho(H) * H`` with the boundary convention ``|H| <= 1e-9 -> 0``."""
    h_sup = np.asarray(h_sup, dtype=float)
    boundary = np.abs(h_sup) <= RHO_BOUNDARY
    return np.where(boundary, 0.0, rho(h_sup, n) * h_sup), boundary


def kappa_from_pack(metric, cp, seed=0, n_starts=64, certify_samples=10_000):
    """Batched kappa: values, boundary flags, branch, sup values."""
    n = metric.dim
    if metric.kahler_known:
        h, _, _ = sup_hsc_from_pack(cp, seed, n_starts, certify_samples)
        vals, boundary = kappa_from_hsup(h, n)
        return vals, boundary, KappaBranch.KAHLER_RHO, h
    b, _, _, _ = sup_bisectional_from_pack(cp, seed, n_starts, certify_samples)
    return b, np.zeros(len(b), dtype=bool), KappaBranch.NON_KAHLER_BK, b


def kappa_field(metric, pts, seed=0, n_starts=64, certify_samples=10_000):
    vals, _, _, _ = kappa_from_pack(metric, curvature_batch(metric, pts), seed, n_starts, certify_samples)
    return vals


def kappa(metric, p, seed=0, n_starts=64, certify_samples=10_000):
    """Target-side curvature bound at a point.

    The branch follows the metric's declared Kähler flag: rho-modified sup of
    holomorphic sectional curvature when Kähler, sup of bisectional curvature
    otherwise.
    """
    n = metric.dim
    if metric.kahler_known:
        res = sup_hsc(metric, p, seed, n_starts, certify_samples)
        val, boundary = kappa_from_hsup(res.value, n)
        return KappaValue(float(val), KappaBranch.KAHLER_RHO, res.witness, res.value, bool(boundary))
    res = sup_bisectional(metric, p, seed, n_starts, certify_samples)
    return KappaValue(res.value, KappaBranch.NON_KAHLER_BK, res.witness, None, False)


# -- Berger average ---------------------------------------------------------------

def berger_average(metric, p, num_samples=10_000, seed=0, quasi=True):
    """Average of H over FS-distributed directions vs ``2 R / (n (n+1))``.

    Directions are scrambled Sobol points pushed to the sphere by default
    (``quasi=False`` gives plain pseudo-random directions).  The reported
    ``mc_error`` is the plain Monte-Carlo bar ``3 sigma / sqrt(N)`` either way.
    """
    if not metric.kahler_known:
        raise NonKahlerMetric("the averaging identity is asserted for Kähler metrics only")
    if num_samples < 1000:
        raise ValueError("num_samples must be at least 1000")
    cp = _pack(metric, p)
    n = metric.dim
    reference = float(2.0 * cp.scalar[0] / (n * (n + 1)))
    T, _ = frame(cp)
    if n == 1:
        h = float(T[0, 0, 0, 0, 0].real)
        return BergerResult(h, reference, 0.0, 1, True)
    v = sphere_samples(num_samples, n, seed, quasi=quasi)
    vals, _ = _quartic(_quartic_matrix(T)[0], v)
    return BergerResult(float(np.mean(vals)), reference, float(np.std(vals, ddof=1)), num_samples, False)
