"""Holomorphic maps between catalog models, pullbacks and their densities.

Every map exposes ``apply(pts, target_chart=None) -> (images, J)`` with
``J[:, alpha, i] = d f^alpha / d z^i`` taken between the source chart of each
point and the target chart of its image.  Passing ``target_chart`` forces the
image chart, which is what chart-independence and finite-difference checks use.

Catalog map names::

    identity            the identity of a model
    constant            a fixed target point
    power:d=2           [Z0 : Z1] -> [Z0^d : Z1^d] on CP^1
    veronese            [Z0 : Z1] -> [Z0^2 : sqrt(2) Z0 Z1 : Z1^2], CP^1 -> CP^2
    isogeny:k=2         z -> k z on a flat torus
    embed:factor=0      x -> (x, y0) (factor 0) or (y0, x) (factor 1) into a product
    projection:factor=0 (x, y) -> x or y
    graph_power:d=2     (z1, z2) -> (z1, z1^d) on CP^1 x CP^1
    f*g                 factorwise product of two catalog maps between products
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import derivatives
from .charts import ChartPoints
from .errors import ChartMismatch, DimensionMismatch, UnknownName
from .models import FlatTorus, ProductManifold, ProjectiveSpace, parse_name, _int

ZERO_RTOL = 1e-10


def _charts(target_chart, n):
    if target_chart is None:
        return None
    return np.broadcast_to(np.asarray(target_chart, dtype=np.int64), (n,))


@dataclass
class HolomorphicMapModel:
    """Base class for catalog maps.  ``meta`` carries declared degree and flags."""

    name: str
    source: object
    target: object
    meta: dict = field(default_factory=dict)

    def apply(self, pts, target_chart=None):
        raise NotImplementedError

    def eval(self, pts, target_chart=None):
        return self.apply(pts, target_chart)[0]

    def jacobian(self, pts, target_chart=None):
        return self.apply(pts, target_chart)[1]


class ProjectiveMap(HolomorphicMapModel):
    """Map CP^n -> CP^m given by homogeneous polynomials ``F`` with derivative ``dF``.

    ``F(Z)`` has shape (N, m+1), ``dF(Z)`` has shape (N, m+1, n+1).
    """

    def __init__(self, name, source, target, F, dF, meta=None):
        super().__init__(name, source, target, dict(meta or {}))
        self.F, self.dF = F, dF

    def apply(self, pts, target_chart=None):
        pts = self.source.check(pts)
        Z = self.source.to_homogeneous(pts)
        FZ, dFZ = self.F(Z), self.dF(Z)
        n, m = self.source.dim, self.target.dim
        idx = np.arange(len(pts))
        t = _charts(target_chart, len(pts))
        if t is None:
            t = np.argmax(np.abs(FZ), axis=1)
        Ft = FZ[idx, t]
        if np.any(np.abs(Ft) <= 1e-300):
            raise ChartMismatch("image lies outside the requested target chart")
        images = self.target.from_homogeneous(FZ, t)
        # derivative of F_beta / F_t with respect to the homogeneous coordinate Z_j
        dFt = dFZ[idx, t]
        quot = (dFZ * Ft[:, None, None] - FZ[:, :, None] * dFt[:, None, :]) / (Ft**2)[:, None, None]
        J = np.empty((len(pts), m, n), dtype=complex)
        for c in np.unique(pts.chart):
            src_cols = [j for j in range(n + 1) if j != c]
            mask = pts.chart == c
            for tc in np.unique(t[mask]):
                sel = mask & (t == tc)
                rows = [b for b in range(m + 1) if b != tc]
                J[sel] = quot[np.ix_(sel, rows, src_cols)]
        return images, J


class IdentityMap(HolomorphicMapModel):
    """Identity of a single-chart model."""

    def __init__(self, model):
        super().__init__("identity", model, model, {"degree": 1, "identity": True})

    def apply(self, pts, target_chart=None):
        pts = self.source.check(pts)
        t = _charts(target_chart, len(pts))
        if t is not None:
            pts = self.target.transition(pts, t)
        J = np.broadcast_to(np.eye(self.source.dim, dtype=complex), (len(pts),) + (self.source.dim,) * 2)
        return pts, J.copy()


class ConstantMap(HolomorphicMapModel):
    def __init__(self, source, target, point):
        super().__init__("constant", source, target, {"constant": True, "degree": 0})
        self.point = target.check(point)

    def apply(self, pts, target_chart=None):
        pts = self.source.check(pts)
        img = self.point[np.zeros(len(pts), dtype=np.int64)]
        t = _charts(target_chart, len(pts))
        if t is not None:
            img = self.target.transition(img, t)
        return img, np.zeros((len(pts), self.target.dim, self.source.dim), dtype=complex)


class TorusLinearMap(HolomorphicMapModel):
    """``z -> A z`` with an integer matrix ``A`` (lattice preserving).

    Images are not reduced modulo the lattice: every catalog torus metric is
    periodic, so the unreduced representative is an equally valid chart point
    and keeps the map smooth for finite differences.
    """

    def __init__(self, name, source, target, A, meta=None):
        A = np.asarray(A)
        if A.shape != (target.dim, source.dim) or not np.allclose(A, np.round(A)):
            raise ValueError("torus maps need an integer matrix of matching shape")
        super().__init__(name, source, target, dict(meta or {}))
        self.A = A.astype(complex)

    def apply(self, pts, target_chart=None):
        pts = self.source.check(pts)
        t = _charts(target_chart, len(pts))
        if t is not None and np.any(t != 0):
            raise ChartMismatch("flat tori have a single chart")
        img = ChartPoints(0, pts.coords @ self.A.T)
        return img, np.broadcast_to(self.A, (len(pts),) + self.A.shape).copy()


class Composition(HolomorphicMapModel):
    """``outer o inner``; a forced target chart is passed to ``outer``."""

    def __init__(self, outer, inner, name=None, meta=None):
        super().__init__(name or f"{outer.name}.{inner.name}", inner.source, outer.target, dict(meta or {}))
        self.outer, self.inner = outer, inner

    def apply(self, pts, target_chart=None):
        mid, J1 = self.inner.apply(pts)
        img, J2 = self.outer.apply(mid, target_chart)
        return img, J2 @ J1


class PairMap(HolomorphicMapModel):
    """``x -> (f(x), g(x))`` into a product model."""

    def __init__(self, target, f, g, name=None, meta=None):
        if not isinstance(target, ProductManifold):
            raise DimensionMismatch("pair maps need a product target")
        super().__init__(name or f"({f.name},{g.name})", f.source, target, dict(meta or {}))
        self.f, self.g = f, g

    def apply(self, pts, target_chart=None):
        t = _charts(target_chart, len(ChartPoints.of(pts)))
        k2 = self.target.factors[1].n_charts
        i1, J1 = self.f.apply(pts, None if t is None else t // k2)
        i2, J2 = self.g.apply(pts, None if t is None else t % k2)
        return self.target.join(i1, i2), np.concatenate([J1, J2], axis=1)


class ProjectionMap(HolomorphicMapModel):
    """``(x1, x2) -> x_factor`` on a product model."""

    def __init__(self, source, factor):
        if not isinstance(source, ProductManifold):
            raise DimensionMismatch("projections need a product source")
        target = source.factors[factor]
        super().__init__(f"projection:factor={factor}", source, target, {})
        self.factor = factor
        self._id = identity_map(target)

    def apply(self, pts, target_chart=None):
        pts = self.source.check(pts)
        parts = self.source.split(pts)
        img, Jf = self._id.apply(parts[self.factor], target_chart)
        n1 = self.source.factors[0].dim
        J = np.zeros((len(pts), self.target.dim, self.source.dim), dtype=complex)
        cols = slice(0, n1) if self.factor == 0 else slice(n1, self.source.dim)
        J[:, :, cols] = Jf
        return img, J


# -- constructors ---------------------------------------------------------------

def projective_identity(model):
    n = model.dim
    return ProjectiveMap(
        "identity", model, model, lambda Z: Z,
        lambda Z: np.broadcast_to(np.eye(n + 1, dtype=complex), (len(Z), n + 1, n + 1)),
        meta={"degree": 1, "identity": True},
    )


def identity_map(model):
    if isinstance(model, ProjectiveSpace):
        return projective_identity(model)
    if isinstance(model, ProductManifold):
        a, b = model.factors
        f = Composition(identity_map(a), ProjectionMap(model, 0))
        g = Composition(identity_map(b), ProjectionMap(model, 1))
        return PairMap(model, f, g, name="identity", meta={"degree": 1, "identity": True})
    return IdentityMap(model)


def power_map(source, target, d):
    if not (isinstance(source, ProjectiveSpace) and source.dim == 1 and target.dim == 1):
        raise DimensionMismatch("power maps act on CP^1")
    if d < 1:
        raise UnknownName("power map degree must be >= 1", key="d")

    def F(Z):
        return Z**d

    def dF(Z):
        out = np.zeros((len(Z), 2, 2), dtype=complex)
        out[:, 0, 0] = d * Z[:, 0] ** (d - 1)
        out[:, 1, 1] = d * Z[:, 1] ** (d - 1)
        return out

    return ProjectiveMap(f"power:d={d}", source, target, F, dF, meta={"degree": d})


def veronese_map(source, target):
    if source.dim != 1 or target.dim != 2 or not isinstance(target, ProjectiveSpace):
        raise DimensionMismatch("veronese maps CP^1 to CP^2")
    r2 = np.sqrt(2.0)

    def F(Z):
        return np.stack([Z[:, 0] ** 2, r2 * Z[:, 0] * Z[:, 1], Z[:, 1] ** 2], axis=1)

    def dF(Z):
        out = np.zeros((len(Z), 3, 2), dtype=complex)
        out[:, 0, 0] = 2 * Z[:, 0]
        out[:, 1, 0] = r2 * Z[:, 1]
        out[:, 1, 1] = r2 * Z[:, 0]
        out[:, 2, 1] = 2 * Z[:, 1]
        return out

    # f* omega_FS = 2 omega_FS, so the pulled-back class has twice the volume
    return ProjectiveMap("veronese", source, target, F, dF, meta={"degree": 2})


def isogeny_map(source, target, k):
    if not (isinstance(source, FlatTorus) and isinstance(target, FlatTorus) and source.dim == target.dim):
        raise DimensionMismatch("isogenies act between flat tori of equal dimension")
    if k == 0:
        raise UnknownName("isogeny factor must be non-zero", key="k")
    n = source.dim
    return TorusLinearMap(f"isogeny:k={k}", source, target, k * np.eye(n),
                          meta={"degree": abs(k) ** (2 * n)})


def _base_point(model):
    return model.random_points(1, seed=12345)[0]


def embed_map(source, target, factor):
    if not isinstance(target, ProductManifold):
        raise DimensionMismatch("embed needs a product target")
    this, other = target.factors[factor], target.factors[1 - factor]
    if this.name != source.name:
        raise DimensionMismatch(f"factor {factor} of {target.name} is not {source.name}")
    inc = identity_map(source)
    const = ConstantMap(source, other, _base_point(other))
    f, g = (inc, const) if factor == 0 else (const, inc)
    return PairMap(target, f, g, name=f"embed:factor={factor}", meta={})


def graph_power_map(source, target, d):
    """``(z1, z2) -> (z1, z1^d)`` on CP^1 x CP^1: non-constant with zero Jacobian determinant."""
    if not (isinstance(source, ProductManifold) and source.name == "cp1*cp1" and target.name == "cp1*cp1"):
        raise DimensionMismatch("graph_power acts on cp1*cp1")
    a = source.factors[0]
    first = Composition(identity_map(a), ProjectionMap(source, 0))
    second = Composition(power_map(a, target.factors[1], d), ProjectionMap(source, 0))
    return PairMap(target, first, second, name=f"graph_power:d={d}", meta={"rank_deficient": True})


def product_map(source, target, f_name, g_name):
    if not (isinstance(source, ProductManifold) and isinstance(target, ProductManifold)):
        raise DimensionMismatch("factorwise maps need product source and target")
    f = resolve_map(f_name, source.factors[0], target.factors[0])
    g = resolve_map(g_name, source.factors[1], target.factors[1])
    return PairMap(target, Composition(f, ProjectionMap(source, 0)),
                   Composition(g, ProjectionMap(source, 1)), name=f"{f_name}*{g_name}")


MAP_NAMES = ("identity", "constant", "power", "veronese", "isogeny", "embed", "projection", "graph_power")


def resolve_map(name, source, target):
    """Build a catalog map between two models."""
    if "*" in name:
        left, right = name.split("*", 1)
        return product_map(source, target, left, right)
    base, params = parse_name(name)
    if base == "identity":
        if source.name != target.name:
            raise DimensionMismatch(f"identity needs equal models, got {source.name} and {target.name}")
        return identity_map(source)
    if base == "constant":
        return ConstantMap(source, target, _base_point(target))
    if base == "power":
        return power_map(source, target, _int(params, "d", 2, positional=True))
    if base == "veronese":
        return veronese_map(source, target)
    if base == "isogeny":
        return isogeny_map(source, target, _int(params, "k", 2, positional=True))
    if base == "embed":
        return embed_map(source, target, _factor(params))
    if base == "projection":
        m = ProjectionMap(source, _factor(params))
        if m.target.name != target.name:
            raise DimensionMismatch(f"projection lands in {m.target.name}, not {target.name}")
        return m
    if base == "graph_power":
        return graph_power_map(source, target, _int(params, "d", 2, positional=True))
    raise UnknownName(f"unknown map {name!r}; known: {', '.join(MAP_NAMES)}", key=name)


def _factor(params):
    k = _int(params, "factor", 0, positional=True)
    if k not in (0, 1):
        raise UnknownName("factor must be 0 or 1", key="factor")
    return k


# -- pullbacks and densities ------------------------------------------------------

def pullback_batch(f, eta, pts):
    """``(f* eta)_{i jbar} = eta_{a bbar}(f(p)) f^a_i conj(f^b_j)`` at every point."""
    img, J = f.apply(pts)
    H = eta.matrix(img)
    return np.einsum("nai,nab,nbj->nij", J, H, np.conj(J))


def pullback_metric(f, eta, p):
    return pullback_batch(f, eta, ChartPoints.of(p))[0]


def energy_batch(f, omega, eta, pts):
    """``Lambda = tr_omega f* eta`` at every point."""
    pts = ChartPoints.of(pts)
    ginv = np.linalg.inv(omega.matrix(pts))
    return np.einsum("nji,nij->n", ginv, pullback_batch(f, eta, pts)).real


def energy_density(f, omega, eta, p):
    return float(energy_batch(f, omega, eta, ChartPoints.of(p))[0])


def jacobian_batch(f, omega, eta, pts):
    """``u = det(eta o f) |det J|^2 / det(g)``; needs equal dimensions."""
    if f.source.dim != f.target.dim:
        raise DimensionMismatch(f"u needs equal dimensions, got {f.source.dim} -> {f.target.dim}")
    pts = ChartPoints.of(pts)
    img, J = f.apply(pts)
    num = np.linalg.det(eta.matrix(img)).real * np.abs(np.linalg.det(J)) ** 2
    return num / np.linalg.det(omega.matrix(pts)).real


def jacobian_density(f, omega, eta, p):
    return float(jacobian_batch(f, omega, eta, ChartPoints.of(p))[0])


# -- classification ---------------------------------------------------------------

class MapClass(str, Enum):
    CONSTANT = "Constant"
    NON_CONSTANT = "NonConstant"
    DEGENERATE = "Degenerate"
    NON_DEGENERATE = "NonDegenerate"


@dataclass(frozen=True)
class MapClassification:
    labels: tuple
    max_energy: float
    max_jacobian: float | None
    energy_threshold: float
    jacobian_threshold: float | None
    samples: int

    @property
    def constant(self):
        return MapClass.CONSTANT in self.labels

    @property
    def degenerate(self):
        return MapClass.DEGENERATE in self.labels


def classification_points(model, budget, seed=0):
    """Up to ``budget // 2`` spread quadrature nodes plus quasi-random fill."""
    nodes = model.quadrature(model.coarser(model.default_resolution), seed=seed).nodes
    k = min(len(nodes), max(1, budget // 2))
    take = np.linspace(0, len(nodes) - 1, k).astype(int)
    fill = model.random_points(max(1, budget - k), seed=seed + 101)
    return ChartPoints.concat([nodes[take], fill])


def classify_map(f, omega, eta, sample_budget=256, seed=0):
    """Sampled test for constancy and degeneracy; the observed maxima are reported."""
    pts = classification_points(f.source, sample_budget, seed)
    img, J = f.apply(pts)
    H = eta.matrix(img)
    g = omega.matrix(pts)
    ginv = np.linalg.inv(g)
    lam = np.einsum("nji,nij->n", ginv, np.einsum("nai,nab,nbj->nij", J, H, np.conj(J))).real
    scale = np.median(np.linalg.norm(H, 2, axis=(1, 2)) * np.linalg.norm(ginv, 2, axis=(1, 2)))
    e_thr = ZERO_RTOL * scale
    labels = [MapClass.NON_CONSTANT if np.max(lam) > e_thr else MapClass.CONSTANT]
    u_max = u_thr = None
    if f.source.dim == f.target.dim:
        u = np.linalg.det(H).real * np.abs(np.linalg.det(J)) ** 2 / np.linalg.det(g).real
        u_max = float(np.max(u))
        u_thr = ZERO_RTOL * scale**f.source.dim
        labels.append(MapClass.NON_DEGENERATE if u_max > u_thr else MapClass.DEGENERATE)
    return MapClassification(tuple(labels), float(np.max(lam)), u_max, float(e_thr), u_thr, len(pts))


# -- consistency checks ------------------------------------------------------------

def _per_chart_pair(f, pts, op):
    """Apply ``op(fn, z)`` where ``fn`` evaluates image coordinates with charts pinned."""
    pts = ChartPoints.of(pts)
    img, _ = f.apply(pts)
    out = [None] * len(pts)
    pairs = np.stack([pts.chart, img.chart], axis=1)
    for sc, tc in np.unique(pairs, axis=0):
        sel = np.nonzero((pts.chart == sc) & (img.chart == tc))[0]

        def fn(z, sc=int(sc), tc=int(tc)):
            return f.apply(ChartPoints(sc, z), target_chart=tc)[0].coords

        res = op(fn, pts.coords[sel])
        for k, i in enumerate(sel):
            out[i] = res[k]
    return np.stack(out)


def cauchy_riemann_defect(f, pts):
    """Max ``|d f / d zbar|`` by finite differences, relative to ``max |J|``."""
    dbar = _per_chart_pair(f, pts, lambda fn, z: derivatives.dzbar(fn, z))
    J = f.jacobian(pts)
    return float(np.max(np.abs(dbar)) / max(np.max(np.abs(J)), 1e-300))


def jacobian_fd_error(f, pts):
    """Relative max deviation of the analytic Jacobian from finite differences."""
    fd = _per_chart_pair(f, pts, lambda fn, z: derivatives.dz(fn, z))
    # dz puts the derivative index on axis 1: fd[n, i, alpha]
    fd = np.swapaxes(fd, 1, 2)
    J = f.jacobian(pts)
    return float(np.max(np.abs(fd - J)) / max(np.max(np.abs(J)), 1e-300))
