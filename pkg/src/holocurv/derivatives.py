"""Wirtinger derivatives by central differences on real partials.

Every routine takes a callable ``fn`` mapping complex coordinates of shape
``(N, n)`` to an array of shape ``(N, ...)`` and returns derivatives with the
differentiation index (or indices) inserted right after the batch axis.

One Richardson step is always applied, so the first-derivative error is
O(h^4) and the mixed second-derivative error is O(h^4) as well.
"""

from __future__ import annotations

import numpy as np

from .errors import DerivativeUnavailable

EPS = np.finfo(float).eps
# Optimal steps for Richardson-extrapolated central differences.
FIRST_STEP = EPS ** (1.0 / 3.0)
SECOND_STEP = EPS ** (1.0 / 6.0)


def _steps(z, base, scale):
    mag = np.max(np.abs(z), axis=-1) if z.shape[-1] else np.zeros(len(z))
    h = base * scale * np.maximum(1.0, mag)
    if np.any(~np.isfinite(h)) or np.any(h <= 0.0):
        raise DerivativeUnavailable("non-finite finite-difference step")
    # The step has to survive addition to the coordinates.
    if np.any((np.abs(z).max(axis=-1) + 0.25 * h) == np.abs(z).max(axis=-1)):
        raise DerivativeUnavailable("finite-difference step underflows")
    return h


def _evaluate(fn, z, offsets):
    """Evaluate ``fn`` at ``z + offsets[k]`` for every k in a single call."""
    k, n_pts, n = offsets.shape
    pts = (z[None, :, :] + offsets).reshape(k * n_pts, n)
    vals = np.asarray(fn(pts))
    vals = vals.reshape((k, n_pts) + vals.shape[1:])
    if not np.all(np.isfinite(vals)):
        raise DerivativeUnavailable("function is not finite on the stencil")
    return vals


def _directions(n):
    """Real unit directions in C^n: e_0..e_{n-1} then i*e_0..i*e_{n-1}."""
    eye = np.eye(n, dtype=complex)
    return np.concatenate([eye, 1j * eye], axis=0)


def _real_gradient(fn, z, scale, base):
    """Richardson-extrapolated central differences along each real direction."""
    n_pts, n = z.shape
    h = _steps(z, base, scale)
    dirs = _directions(n)
    offs = []
    for level in (1.0, 0.5):
        for d in dirs:
            step = (level * h)[:, None] * d[None, :]
            offs.append(step)
            offs.append(-step)
    vals = _evaluate(fn, z, np.stack(offs))
    shape_h = (n_pts,) + (1,) * (vals.ndim - 2)
    grads = []
    for a in range(2 * n):
        est = []
        for level_idx, level in enumerate((1.0, 0.5)):
            k = level_idx * 4 * n + 2 * a
            est.append((vals[k] - vals[k + 1]) / (2.0 * level * h.reshape(shape_h)))
        grads.append((4.0 * est[1] - est[0]) / 3.0)
    return grads


def dz(fn, z, scale=1.0, base=FIRST_STEP):
    """Holomorphic derivative ``d fn / d z^i`` stacked on axis 1."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    n = z.shape[1]
    g = _real_gradient(fn, z, scale, base)
    return np.stack([0.5 * (g[i] - 1j * g[n + i]) for i in range(n)], axis=1)


def dzbar(fn, z, scale=1.0, base=FIRST_STEP):
    """Anti-holomorphic derivative ``d fn / d zbar^i`` on axis 1."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    n = z.shape[1]
    g = _real_gradient(fn, z, scale, base)
    return np.stack([0.5 * (g[i] + 1j * g[n + i]) for i in range(n)], axis=1)


def real_hessian(fn, z, scale=1.0, base=SECOND_STEP):
    """Second partials in the real directions of :func:`_directions`.

    Returns shape ``(N, 2n, 2n, ...)``.
    """
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    n_pts, n = z.shape
    h = _steps(z, base, scale)
    dirs = _directions(n)
    m = 2 * n
    pairs = [(a, b) for a in range(m) for b in range(a, m)]
    offs = []
    for level in (1.0, 0.5):
        hl = (level * h)[:, None]
        for a, b in pairs:
            da, db = dirs[a][None, :] * hl, dirs[b][None, :] * hl
            offs.extend([da + db, da - db, -da + db, -da - db])
    vals = _evaluate(fn, z, np.stack(offs))
    extra = vals.ndim - 2
    shape_h = (n_pts,) + (1,) * extra
    hess = np.zeros((n_pts, m, m) + vals.shape[2:], dtype=vals.dtype)
    per_level = 4 * len(pairs)
    for idx, (a, b) in enumerate(pairs):
        est = []
        for level_idx, level in enumerate((1.0, 0.5)):
            k = level_idx * per_level + 4 * idx
            num = vals[k] - vals[k + 1] - vals[k + 2] + vals[k + 3]
            est.append(num / (4.0 * (level * h.reshape(shape_h)) ** 2))
        value = (4.0 * est[1] - est[0]) / 3.0
        hess[:, a, b] = value
        hess[:, b, a] = value
    return hess


def dz_dzbar(fn, z, scale=1.0, base=SECOND_STEP):
    """Mixed derivative ``d^2 fn / dz^i dzbar^j`` on axes (1, 2)."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    n = z.shape[1]
    hr = real_hessian(fn, z, scale=scale, base=base)
    hr = hr.astype(complex)
    xx = hr[:, :n, :n]
    yy = hr[:, n:, n:]
    xy = hr[:, :n, n:]
    yx = hr[:, n:, :n]
    return 0.25 * (xx + yy + 1j * (xy - yx))
