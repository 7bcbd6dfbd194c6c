"""Compact model manifolds, their atlases, quadrature and standard metrics.

Catalog metric names (parameters after a colon, ``key=value`` separated by
commas, a bare value meaning the first parameter)::

    cp1_fs                      Fubini-Study on CP^1, total volume 1
    cpn_fs:n=2                  Fubini-Study on CP^n, total volume 1
    cp1_fs_conformal:seed=0,eps=0.1
                                exp(eps*u) * omega_FS, u a random quadratic on S^2
    torus_flat:n=1              omega = (i/2) sum dz^k ^ dzbar^k on C^n/(Z^n + iZ^n)
    torus_conformal:seed=0,eps=0.1
                                exp(eps*u) * flat metric on the square elliptic curve
    hopf_std                    delta_{ij}/|z|^2 on (C^2 minus 0)/(z ~ 2z)
    A*B                         product of two catalog metrics
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import quadrature as quad
from .charts import ChartPoints
from .errors import ChartMismatch, UnknownName
from .geometry import HermitianMetricField

FS_SCALE = 1.0 / (2.0 * np.pi)


@dataclass(frozen=True)
class Topology:
    euler: int | None
    volume: float
    kahler: bool
    canonical_nef: bool | None
    einstein: bool = False
    notes: str = ""


@dataclass
class ManifoldModel:
    """Base class: an atlas, a quadrature family and topological metadata."""

    name: str
    dim: int
    n_charts: int
    topo: Topology
    metric_catalog: dict = field(default_factory=dict)
    default_resolution: int = 32
    # resolution for integrands that need a certified optimization per node
    lab_resolution: int = 32

    def __post_init__(self):
        self._schemes = {}

    def quadrature(self, resolution=None, seed=0):
        res = self.default_resolution if resolution is None else int(resolution)
        key = (res, seed)
        if key not in self._schemes:
            self._schemes[key] = self._build_scheme(res, seed)
        return self._schemes[key]

    def _build_scheme(self, resolution, seed):
        raise NotImplementedError

    def coarser(self, resolution):
        return max(2, resolution // 2)

    def random_points(self, k, seed=0):
        raise NotImplementedError

    def contains(self, pts):
        pts = ChartPoints.of(pts)
        ok = (pts.chart >= 0) & (pts.chart < self.n_charts)
        return ok & np.all(np.isfinite(pts.coords), axis=1)

    def check(self, pts):
        pts = ChartPoints.of(pts)
        if pts.dim != self.dim:
            raise ChartMismatch(f"{self.name}: expected {self.dim} coordinates, got {pts.dim}")
        if not np.all(self.contains(pts)):
            raise ChartMismatch(f"{self.name}: point outside the registered chart domains")
        return pts

    def transition(self, pts, chart):
        pts = ChartPoints.of(pts)
        if np.any(pts.chart != chart):
            raise ChartMismatch(f"{self.name} has a single chart")
        return pts

    def normalize(self, pts):
        """Re-express points in their best-conditioned chart."""
        return ChartPoints.of(pts)

    @property
    def metric(self):
        return next(iter(self.metric_catalog.values()))


# Fubini-Study ---------------------------------------------------------------

def _fs_parts(z):
    s = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)
    return s, np.conj(z)


def fs_eval(chart, z, c=FS_SCALE):
    s, zb = _fs_parts(z)
    n = z.shape[-1]
    eye = np.eye(n)[None]
    return c * (eye / s[:, None, None] - zb[:, :, None] * z[:, None, :] / (s**2)[:, None, None])


def fs_first(chart, z, c=FS_SCALE):
    s, zb = _fs_parts(z)
    n = z.shape[-1]
    d = np.eye(n)
    s2, s3 = (s**2)[:, None, None, None], (s**3)[:, None, None, None]
    t1 = -d[None, None, :, :] * zb[:, :, None, None] / s2
    t2 = -zb[:, None, :, None] * d[None, :, None, :] / s2
    t3 = 2.0 * zb[:, :, None, None] * zb[:, None, :, None] * z[:, None, None, :] / s3
    return c * (t1 + t2 + t3)


def fs_second(chart, z, c=FS_SCALE):
    s, zb = _fs_parts(z)
    n = z.shape[-1]
    d = np.eye(n)
    sh = (-1, 1, 1, 1, 1)
    s2, s3, s4 = (s**2).reshape(sh), (s**3).reshape(sh), (s**4).reshape(sh)
    # axes: [N, i, j, k, l]
    d_kl = d[None, None, None, :, :]
    d_ij = d[None, :, :, None, None]
    d_il = d[None, :, None, None, :]
    d_kj = d[None, None, :, :, None]
    zb_i = zb[:, :, None, None, None]
    zb_k = zb[:, None, None, :, None]
    z_j = z[:, None, :, None, None]
    z_l = z[:, None, None, None, :]
    out = (
        -d_kl * d_ij / s2
        + 2.0 * d_kl * zb_i * z_j / s3
        - d_il * d_kj / s2
        + 2.0 * d_il * zb_k * z_j / s3
        + 2.0 * d_ij * zb_k * z_l / s3
        + 2.0 * d_kj * zb_i * z_l / s3
        - 6.0 * zb_i * zb_k * z_l * z_j / s4
    )
    return c * out


def fubini_study(n):
    return HermitianMetricField(
        dim=n, eval=fs_eval, first_deriv=fs_first, second_deriv=fs_second,
        kahler_known=True, gauduchon_known=True, einstein_known=True,
        name="cp1_fs" if n == 1 else f"cpn_fs:n={n}",
    )


def sphere_coords(chart, z):
    """Point of the unit sphere S^2 for a CP^1 chart point: (x1 + i x2, x3)."""
    z = z[:, 0]
    zh = np.stack([np.ones_like(z), z], axis=1) if chart == 0 else np.stack([z, np.ones_like(z)], axis=1)
    norm = np.sum(np.abs(zh) ** 2, axis=1)
    x12 = 2.0 * np.conj(zh[:, 0]) * zh[:, 1] / norm
    x3 = (np.abs(zh[:, 1]) ** 2 - np.abs(zh[:, 0]) ** 2) / norm
    return x12, x3


def conformal_profile(seed):
    """Random quadratic ``u(x) = a.x + x^T B x`` on S^2 (B symmetric traceless)."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=3)
    b = rng.normal(size=(3, 3))
    b = 0.5 * (b + b.T)
    b -= np.trace(b) / 3.0 * np.eye(3)

    def u(chart, z):
        x12, x3 = sphere_coords(chart, z)
        x = np.stack([x12.real, x12.imag, x3], axis=1)
        return x @ a + np.einsum("ni,ij,nj->n", x, b, x)

    return u


def conformal_fs(seed=0, eps=0.1):
    u = conformal_profile(seed)

    def ev(chart, z):
        return np.exp(eps * u(chart, z))[:, None, None] * fs_eval(chart, z)

    return HermitianMetricField(
        dim=1, eval=ev, kahler_known=True, gauduchon_known=True,
        einstein_known=(eps == 0.0), name=f"cp1_fs_conformal:seed={seed},eps={eps:g}",
    )


class ProjectiveSpace(ManifoldModel):
    """CP^n with affine charts ``k = 0..n``: coordinates ``Z_j / Z_k`` for ``j != k``."""

    def __init__(self, n, metric_catalog=None):
        topo = Topology(euler=n + 1, volume=1.0, kahler=True, canonical_nef=False, einstein=True,
                        notes="K = O(-(n+1)); FS normalized to unit volume")
        super().__init__(
            name="cp1" if n == 1 else f"cp{n}", dim=n, n_charts=n + 1, topo=topo,
            metric_catalog=metric_catalog or {}, default_resolution=48 if n == 1 else 2**18,
            lab_resolution=48 if n == 1 else 2**12,
        )

    def _build_scheme(self, resolution, seed):
        if self.dim == 1:
            return quad.sphere_chart_scheme(resolution)
        return quad.affine_qmc_scheme(self.dim, resolution, seed=seed)

    def coarser(self, resolution):
        if self.dim == 1:
            return max(4, resolution // 2)
        return max(16, resolution // 4)

    def to_homogeneous(self, pts):
        pts = ChartPoints.of(pts)
        n = self.dim
        out = np.empty((len(pts), n + 1), dtype=complex)
        for c in np.unique(pts.chart):
            m = pts.chart == c
            cols = [j for j in range(n + 1) if j != c]
            out[np.ix_(m, cols)] = pts.coords[m]
            out[m, c] = 1.0
        return out

    def from_homogeneous(self, zh, chart=None):
        zh = np.asarray(zh, dtype=complex)
        if chart is None:
            chart = np.argmax(np.abs(zh), axis=1)
        chart = np.broadcast_to(np.asarray(chart), (len(zh),))
        idx = np.arange(len(zh))
        zk = zh[idx, chart]
        if np.any(zk == 0):
            raise ChartMismatch("point lies outside the requested affine chart")
        aff = zh / zk[:, None]
        keep = np.ones(zh.shape, dtype=bool)
        keep[idx, chart] = False
        return ChartPoints(chart, aff[keep].reshape(len(zh), self.dim))

    def transition(self, pts, chart):
        return self.from_homogeneous(self.to_homogeneous(pts), chart)

    def normalize(self, pts):
        return self.from_homogeneous(self.to_homogeneous(pts))

    def random_points(self, k, seed=0):
        rng = np.random.default_rng(seed)
        zh = rng.normal(size=(k, self.dim + 1)) + 1j * rng.normal(size=(k, self.dim + 1))
        return self.from_homogeneous(zh)


# Flat and conformal tori ------------------------------------------------------

def flat_metric(n):
    def ev(chart, z):
        return np.broadcast_to(0.5 * np.eye(n, dtype=complex), (len(z), n, n)).copy()

    def d1(chart, z):
        return np.zeros((len(z), n, n, n), dtype=complex)

    def d2(chart, z):
        return np.zeros((len(z), n, n, n, n), dtype=complex)

    return HermitianMetricField(
        dim=n, eval=ev, first_deriv=d1, second_deriv=d2, kahler_known=True,
        gauduchon_known=True, einstein_known=True, name=f"torus_flat:n={n}",
    )


def conformal_torus(seed=0, eps=0.1, modes=3):
    rng = np.random.default_rng(seed)
    freqs = rng.integers(-2, 3, size=(modes, 2))
    freqs[np.all(freqs == 0, axis=1)] = (1, 0)
    amps = rng.normal(size=modes)
    phases = rng.uniform(0, 2 * np.pi, size=modes)

    def u(z):
        x, y = z[:, 0].real, z[:, 0].imag
        arg = 2 * np.pi * (np.outer(x, freqs[:, 0]) + np.outer(y, freqs[:, 1])) + phases
        return np.cos(arg) @ amps

    def ev(chart, z):
        return (0.5 * np.exp(eps * u(z)))[:, None, None] + 0j

    return HermitianMetricField(
        dim=1, eval=ev, kahler_known=True, gauduchon_known=True,
        name=f"torus_conformal:seed={seed},eps={eps:g}",
    )


class FlatTorus(ManifoldModel):
    """C^n / (Z^n + i Z^n) in its single periodic chart."""

    def __init__(self, n, metric_catalog=None):
        topo = Topology(euler=0, volume=float(math.factorial(n)), kahler=True, canonical_nef=True,
                        einstein=True, notes="K trivial")
        super().__init__(
            name=f"torus{n}", dim=n, n_charts=1, topo=topo,
            metric_catalog=metric_catalog or {}, default_resolution=32 if n == 1 else 12,
            lab_resolution=32 if n == 1 else 6,
        )

    def _build_scheme(self, resolution, seed):
        return quad.periodic_grid_scheme(self.dim, resolution)

    def random_points(self, k, seed=0):
        rng = np.random.default_rng(seed)
        u = rng.uniform(size=(k, 2 * self.dim))
        return ChartPoints(0, u[:, : self.dim] + 1j * u[:, self.dim:])


# Hopf surface ----------------------------------------------------------------

def _hopf_eval(chart, z):
    rho = np.sum(np.abs(z) ** 2, axis=-1)
    return np.eye(2)[None] / rho[:, None, None] + 0j


def _hopf_first(chart, z):
    rho = np.sum(np.abs(z) ** 2, axis=-1)
    zb = np.conj(z)
    return -np.eye(2)[None, None] * (zb / rho[:, None] ** 2)[:, :, None, None]


def _hopf_second(chart, z):
    rho = np.sum(np.abs(z) ** 2, axis=-1)
    zb = np.conj(z)
    inner = -np.eye(2)[None] / (rho**2)[:, None, None] + 2.0 * zb[:, :, None] * z[:, None, :] / (rho**3)[:, None, None]
    return inner[:, :, :, None, None] * np.eye(2)[None, None, None]


def hopf_metric():
    return HermitianMetricField(
        dim=2, eval=_hopf_eval, first_deriv=_hopf_first, second_deriv=_hopf_second,
        kahler_known=False, gauduchon_known=True, name="hopf_std",
    )


class HopfSurface(ManifoldModel):
    """(C^2 minus 0) / (z ~ 2z), integrated over the shell ``1 <= |z| <= 2``."""

    ratio = 2.0

    def __init__(self, metric_catalog=None):
        topo = Topology(euler=0, volume=16.0 * np.pi**2 * math.log(2.0), kahler=False,
                        canonical_nef=None, notes="non-Kähler; standard metric is Gauduchon")
        super().__init__(name="hopf", dim=2, n_charts=1, topo=topo,
                         metric_catalog=metric_catalog or {}, default_resolution=16, lab_resolution=8)

    def _build_scheme(self, resolution, seed):
        return quad.annulus_grid_scheme(resolution, self.ratio)

    def contains(self, pts):
        pts = ChartPoints.of(pts)
        return super().contains(pts) & (np.sum(np.abs(pts.coords) ** 2, axis=1) > 0)

    def random_points(self, k, seed=0):
        rng = np.random.default_rng(seed)
        r = self.ratio ** rng.uniform(size=k)
        v = rng.normal(size=(k, 2)) + 1j * rng.normal(size=(k, 2))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return ChartPoints(0, r[:, None] * v)


# Products --------------------------------------------------------------------

def product_metric(first, second, n_charts_second):
    """Block-diagonal metric on a product; chart ids as in :class:`ProductManifold`."""
    n1, n2 = first.dim, second.dim
    n = n1 + n2

    def split(chart):
        return chart // n_charts_second, chart % n_charts_second

    def ev(chart, z):
        c1, c2 = split(chart)
        out = np.zeros((len(z), n, n), dtype=complex)
        out[:, :n1, :n1] = first.eval(c1, z[:, :n1])
        out[:, n1:, n1:] = second.eval(c2, z[:, n1:])
        return out

    def block(fa, fb, rank):
        def fn(chart, z):
            c1, c2 = split(chart)
            out = np.zeros((len(z),) + (n,) * rank, dtype=complex)
            out[(slice(None),) + (slice(0, n1),) * rank] = fa(c1, z[:, :n1])
            out[(slice(None),) + (slice(n1, n),) * rank] = fb(c2, z[:, n1:])
            return out
        return fn

    d1 = d2 = None
    if first.first_deriv is not None and second.first_deriv is not None:
        d1 = block(first.first_deriv, second.first_deriv, 3)
    if first.second_deriv is not None and second.second_deriv is not None:
        d2 = block(first.second_deriv, second.second_deriv, 4)
    kahler = first.kahler_known and second.kahler_known
    return HermitianMetricField(
        dim=n, eval=ev, first_deriv=d1, second_deriv=d2, kahler_known=kahler,
        gauduchon_known=kahler, name=f"{first.name}*{second.name}",
    )


class ProductManifold(ManifoldModel):
    """X1 x X2 with chart id ``c1 * n_charts(X2) + c2`` and split coordinates."""

    def __init__(self, first, second, metric_catalog=None):
        n1, n2 = first.dim, second.dim
        t1, t2 = first.topo, second.topo
        euler = None if t1.euler is None or t2.euler is None else t1.euler * t2.euler
        nef = None if t1.canonical_nef is None or t2.canonical_nef is None else (
            t1.canonical_nef and t2.canonical_nef)
        topo = Topology(euler=euler, volume=math.comb(n1 + n2, n1) * t1.volume * t2.volume,
                        kahler=t1.kahler and t2.kahler, canonical_nef=nef,
                        notes=f"product of {first.name} and {second.name}")
        super().__init__(name=f"{first.name}*{second.name}", dim=n1 + n2,
                         n_charts=first.n_charts * second.n_charts, topo=topo,
                         metric_catalog=metric_catalog or {}, default_resolution=16, lab_resolution=8)
        self.factors = (first, second)

    def encode(self, c1, c2):
        return np.asarray(c1) * self.factors[1].n_charts + np.asarray(c2)

    def split(self, pts):
        pts = ChartPoints.of(pts)
        a, b = self.factors
        k2 = b.n_charts
        return (ChartPoints(pts.chart // k2, pts.coords[:, : a.dim]),
                ChartPoints(pts.chart % k2, pts.coords[:, a.dim:]))

    def join(self, p1, p2):
        return ChartPoints(self.encode(p1.chart, p2.chart), np.concatenate([p1.coords, p2.coords], axis=1))

    def _factor_resolution(self, factor, resolution):
        if isinstance(factor, ProjectiveSpace) and factor.dim > 1:
            return 2 ** max(4, int(round(math.log2(max(resolution, 2)))) + 4)
        return resolution

    def _build_scheme(self, resolution, seed):
        a, b = self.factors
        sa = a.quadrature(self._factor_resolution(a, resolution), seed=seed)
        sb = b.quadrature(self._factor_resolution(b, resolution), seed=seed + 1)
        return quad.product_scheme(sa, sb, self.encode)

    def contains(self, pts):
        p1, p2 = self.split(pts)
        return self.factors[0].contains(p1) & self.factors[1].contains(p2)

    def transition(self, pts, chart):
        p1, p2 = self.split(pts)
        k2 = self.factors[1].n_charts
        return self.join(self.factors[0].transition(p1, chart // k2),
                         self.factors[1].transition(p2, chart % k2))

    def normalize(self, pts):
        p1, p2 = self.split(pts)
        return self.join(self.factors[0].normalize(p1), self.factors[1].normalize(p2))

    def random_points(self, k, seed=0):
        return self.join(self.factors[0].random_points(k, seed),
                         self.factors[1].random_points(k, seed + 7919))


# Catalog resolution ------------------------------------------------------------

def parse_name(name):
    """``'base:k=v,k2=v2'`` -> ``('base', {'k': 'v', ...})``; a bare value is ``'_'``."""
    base, _, rest = name.strip().partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" in item:
                k, v = item.split("=", 1)
                params[k.strip()] = v.strip()
            else:
                params["_"] = item
    return base.strip(), params


def _int(params, key, default, positional=False):
    raw = params.get(key, params.get("_") if positional else None)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise UnknownName(f"parameter {key!r} must be an integer, got {raw!r}", key=key) from exc


def _float(params, key, default):
    raw = params.get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise UnknownName(f"parameter {key!r} must be a number, got {raw!r}", key=key) from exc


METRIC_NAMES = ("cp1_fs", "cpn_fs", "cp1_fs_conformal", "torus_flat", "torus_conformal", "hopf_std")


@lru_cache(maxsize=64)
def resolve(name):
    """Catalog metric name -> ``(ManifoldModel, HermitianMetricField)``."""
    if "*" in name:
        left, right = name.split("*", 1)
        m1, g1 = resolve(left)
        m2, g2 = resolve(right)
        model = ProductManifold(m1, m2)
        metric = product_metric(g1, g2, m2.n_charts)
        model.metric_catalog[name] = metric
        return model, metric
    base, params = parse_name(name)
    if base == "cp1_fs":
        model, metric = ProjectiveSpace(1), fubini_study(1)
    elif base == "cpn_fs":
        n = _int(params, "n", 2, positional=True)
        if n < 1:
            raise UnknownName("cpn_fs needs n >= 1", key="n")
        model, metric = ProjectiveSpace(n), fubini_study(n)
    elif base == "cp1_fs_conformal":
        seed = _int(params, "seed", 0, positional=True)
        eps = _float(params, "eps", 0.1)
        model, metric = ProjectiveSpace(1), conformal_fs(seed, eps)
    elif base == "torus_flat":
        n = _int(params, "n", 1, positional=True)
        if n < 1:
            raise UnknownName("torus_flat needs n >= 1", key="n")
        model, metric = FlatTorus(n), flat_metric(n)
    elif base == "torus_conformal":
        seed = _int(params, "seed", 0, positional=True)
        eps = _float(params, "eps", 0.1)
        model, metric = FlatTorus(1), conformal_torus(seed, eps)
    elif base == "hopf_std":
        model, metric = HopfSurface(), hopf_metric()
    else:
        raise UnknownName(f"unknown metric {name!r}; known: {', '.join(METRIC_NAMES)}", key=name)
    model.metric_catalog[name] = metric
    return model, metric


def model_of(name):
    return resolve(name)[0]


def metric_of(name):
    return resolve(name)[1]
