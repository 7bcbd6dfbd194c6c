"""Both sides of the integral curvature inequalities, assembled into verdicts.

Conventions: ``dVol = omega^n`` (so a catalog FS volume is 1), ``Lambda =
tr_omega f* eta`` and ``f* alpha ^ omega^{n-1} = (1/n) tr_omega(f* alpha) omega^n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .charts import ChartPoints
from .errors import (
    ConstantMapRejected, DegenerateMapRejected, DimensionMismatch, NotEinstein,
)
from .functionals import kappa_from_pack, lambda_from_pack, sup_hsc_from_pack
from .geometry import curvature_batch, laplacian, volume_density
from .maps import classify_map, energy_batch
from .models import ProjectiveSpace, fubini_study
from .quadrature import weighted_sum

TOL_FLOOR = 1e-8
TOL_FACTOR = 10.0
SUP_STABILITY = 1e-3


class Verdict(str, Enum):
    HOLDS = "Holds"
    HOLDS_WITH_EQUALITY = "HoldsWithEquality"
    FAILS_WITHIN_TOLERANCE = "FailsWithinTolerance"
    FAILS = "Fails"
    NOT_APPLICABLE = "NotApplicable"

    @property
    def passing(self):
        return self in (Verdict.HOLDS, Verdict.HOLDS_WITH_EQUALITY, Verdict.NOT_APPLICABLE)


def verdict_for(margin, tol, loose=False):
    """Classify ``margin = rhs - lhs`` against ``tol``."""
    if margin > tol:
        return Verdict.HOLDS
    if abs(margin) <= tol:
        if loose and margin < 0:
            return Verdict.FAILS_WITHIN_TOLERANCE
        return Verdict.HOLDS_WITH_EQUALITY
    return Verdict.FAILS


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    verdict: Verdict
    provenance: dict = field(default_factory=dict)
    notes: tuple = ()

    @property
    def passing(self):
        return self.verdict.passing


def _tolerance(*errors):
    return max(TOL_FLOOR, TOL_FACTOR * float(sum(errors)))


def _not_applicable(name, reason, provenance=None):
    nan = float("nan")
    return InequalityReport(name, nan, nan, nan, nan, Verdict.NOT_APPLICABLE, provenance or {}, (reason,))


def _lab_schemes(model, resolution, seed):
    fine = model.lab_resolution if resolution is None else int(resolution)
    coarse = model.coarser(fine)
    return fine, coarse, model.quadrature(fine, seed), model.quadrature(coarse, seed)


def _weight(weight, metric, nodes, n, name):
    if weight is None:
        if n > 1 and not metric.gauduchon_known:
            raise ValueError(f"{name}: a conformal weight is required for non-Gauduchon metrics")
        return np.ones(len(nodes))
    return np.exp((n - 1) * np.asarray(weight(nodes), dtype=float))


def _require_nonconstant(f, omega, eta):
    cls = classify_map(f, omega, eta)
    if cls.constant:
        raise ConstantMapRejected(f"{f.name} is constant (max energy {cls.max_energy:.3e})")
    return cls


def kappa_on_image(f, eta, pts, seed=0):
    """kappa_eta at f(pts): values and boundary flags."""
    img = f.eval(pts)
    vals, boundary, branch, _ = kappa_from_pack(eta, curvature_batch(eta, img), seed=seed)
    return vals, boundary, branch


def _two_level(compute, fine, coarse):
    a, b = compute(fine), compute(coarse)
    return a, tuple(abs(x - y) for x, y in zip(a, b))


def verify_main_inequality(f, omega, eta, weight=None, resolution=None, seed=0, loose=False):
    """``int lambda e^{(n-1)phi} omega^n <= n int f*kappa e^{(n-1)phi} f*eta ^ omega^{n-1}``."""
    _require_nonconstant(f, omega, eta)
    X = f.source
    n = X.dim
    r_fine, r_coarse, fine, coarse = _lab_schemes(X, resolution, seed)
    boundary_hit = []

    def compute(scheme):
        pts = scheme.nodes
        w = scheme.weights * volume_density(omega, pts) * _weight(weight, omega, pts, n, "main_inequality")
        lam = lambda_from_pack(curvature_batch(omega, pts))
        kap, boundary, _ = kappa_on_image(f, eta, pts, seed)
        boundary_hit.append(bool(np.any(boundary)))
        energy = energy_batch(f, omega, eta, pts)
        return weighted_sum(w * lam), weighted_sum(w * kap * energy)

    (lhs, rhs), (el, er) = _two_level(compute, fine, coarse)
    tol = _tolerance(el, er)
    notes = ("kappa boundary case: |H_sup| <= 1e-9 at some node",) if any(boundary_hit) else ()
    prov = {"resolutions": (r_fine, r_coarse), "seed": seed, "scheme": fine.kind.value,
            "quad_error": (el, er), "map": f.name, "omega": omega.name, "eta": eta.name}
    return InequalityReport("main_inequality", lhs, rhs, rhs - lhs, tol, verdict_for(rhs - lhs, tol, loose),
                            prov, notes)


def _sample(pts, k):
    if len(pts) <= k:
        return pts
    return pts[np.linspace(0, len(pts) - 1, k).astype(int)]


def sampled_sup_hsc(f, eta, resolution=None, seed=0, budget=512):
    """sup of H_eta over Y's quadrature nodes and the image of X's nodes.

    Returns the estimate at two sample sizes (``budget`` and ``budget // 2``).
    """
    Y, X = f.target, f.source
    y_nodes = Y.quadrature(Y.lab_resolution if resolution is None else resolution, seed).nodes
    x_nodes = X.quadrature(X.lab_resolution, seed).nodes
    out = []
    for k in (budget, budget // 2):
        pts = ChartPoints.concat([_sample(y_nodes, k), f.eval(_sample(x_nodes, k))])
        h, _, _ = sup_hsc_from_pack(curvature_batch(eta, pts), seed=seed)
        out.append(float(np.max(h)))
    return out[0], out[1]


def _pairing(f, omega, eta, scheme):
    w = scheme.weights * volume_density(omega, scheme.nodes)
    return weighted_sum(w * energy_batch(f, omega, eta, scheme.nodes)) / f.source.dim


def verify_cpn_bound(f, eta, omega=None, resolution=None, seed=0, loose=False):
    """``sup_Y H_eta * int f*eta ^ omega_FS^{n-1} >= 2 pi (n+1) / n`` for maps out of CP^n."""
    X = f.source
    if not isinstance(X, ProjectiveSpace):
        raise DimensionMismatch("the projective bound needs a CP^n source")
    if omega is None:
        omega = fubini_study(X.dim)
    _require_nonconstant(f, omega, eta)
    n = X.dim
    h_fine, h_coarse = sampled_sup_hsc(f, eta, seed=seed)
    r_fine, r_coarse, fine, coarse = _lab_schemes(X, resolution, seed)
    p_fine, p_coarse = _pairing(f, omega, eta, fine), _pairing(f, omega, eta, coarse)
    lhs = 2.0 * np.pi * (n + 1) / n
    rhs = h_fine * p_fine
    tol = _tolerance(abs(rhs - h_fine * p_coarse))
    notes = ["sup of H is estimated from samples of Y and f(X); the true sup may be larger"]
    if abs(h_fine - h_coarse) > SUP_STABILITY * max(abs(h_fine), 1e-300):
        notes.append("sampled sup of H not stable under doubling the sample")
    prov = {"resolutions": (r_fine, r_coarse), "seed": seed, "sup_hsc": (h_fine, h_coarse),
            "pairing": (p_fine, p_coarse), "map": f.name, "eta": eta.name}
    return InequalityReport("cpn_bound", lhs, rhs, rhs - lhs, tol, verdict_for(rhs - lhs, tol, loose),
                            prov, tuple(notes))


def verify_degeneracy_inequality(f, omega, eta, weight=None, resolution=None, seed=0, loose=False):
    """``int R e^{(n-1)psi} omega^n <= n int e^{(n-1)psi} f* Ric(eta) ^ omega^{n-1}``."""
    if f.source.dim != f.target.dim:
        raise DimensionMismatch(f"equal dimensions required, got {f.source.dim} -> {f.target.dim}")
    cls = classify_map(f, omega, eta)
    if cls.degenerate:
        raise DegenerateMapRejected(f"{f.name} has vanishing Jacobian (max u {cls.max_jacobian:.3e})")
    X = f.source
    n = X.dim
    r_fine, r_coarse, fine, coarse = _lab_schemes(X, resolution, seed)

    def compute(scheme):
        pts = scheme.nodes
        w = scheme.weights * volume_density(omega, pts) * _weight(weight, omega, pts, n, "degeneracy")
        src = curvature_batch(omega, pts)
        img, J = f.apply(pts)
        ric = curvature_batch(eta, img).ricci
        # signed (1,1)-data: no positivity check on this path
        pulled = np.einsum("nai,nab,nbj->nij", J, ric, np.conj(J))
        tr = np.einsum("nji,nij->n", src.metric_inv, pulled).real
        return weighted_sum(w * src.scalar), weighted_sum(w * tr)

    (lhs, rhs), (el, er) = _two_level(compute, fine, coarse)
    tol = _tolerance(el, er)
    prov = {"resolutions": (r_fine, r_coarse), "seed": seed, "quad_error": (el, er), "map": f.name,
            "omega": omega.name, "eta": eta.name}
    return InequalityReport("degeneracy_inequality", lhs, rhs, rhs - lhs, tol,
                            verdict_for(rhs - lhs, tol, loose), prov)


@dataclass(frozen=True)
class ChernLuResult:
    residual: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    energy: np.ndarray
    eps: float


def chern_lu_batch(f, omega, eta, pts, eps, seed=0, base=None):
    """``Delta log(Lambda + eps) - [lambda Lambda - kappa Lambda^2] / (Lambda + eps)`` at points."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    pts = ChartPoints.of(pts)
    kwargs = {} if base is None else {"base": base}
    lhs = laplacian(omega, lambda q: np.log(energy_batch(f, omega, eta, q) + eps), pts, **kwargs)
    energy = energy_batch(f, omega, eta, pts)
    lam = lambda_from_pack(curvature_batch(omega, pts))
    kap, _, _ = kappa_on_image(f, eta, pts, seed)
    rhs = (lam * energy - kap * energy**2) / (energy + eps)
    return ChernLuResult(lhs - rhs, lhs, rhs, energy, eps)


def chern_lu_residual(f, omega, eta, p, eps, seed=0):
    return float(chern_lu_batch(f, omega, eta, ChartPoints.of(p), eps, seed).residual[0])


def schwarz_bound(inf_lambda, h_sup, pairing, volume, m):
    """Integral Schwarz comparison for negatively curved targets (``h_sup < 0``)."""
    lhs = float(inf_lambda)
    rhs = (m + 1) / (2.0 * m) * h_sup * pairing / volume
    return lhs, float(rhs)


def verify_schwarz_integral(f, omega, eta, resolution=None, seed=0, loose=False):
    """Reported only when the sampled sup of H_eta is negative."""
    h_fine, h_coarse = sampled_sup_hsc(f, eta, seed=seed)
    prov = {"sup_hsc": (h_fine, h_coarse), "map": f.name, "eta": eta.name}
    if abs(h_fine) <= 1e-9:
        return _not_applicable("schwarz_integral", "boundary case: sup of H is zero", prov)
    if h_fine > 0:
        return _not_applicable("schwarz_integral", "target is not negatively curved", prov)
    X = f.source
    r_fine, r_coarse, fine, coarse = _lab_schemes(X, resolution, seed)
    lam = lambda_from_pack(curvature_batch(omega, fine.nodes))
    vol = weighted_sum(fine.weights * volume_density(omega, fine.nodes))
    lhs, rhs = schwarz_bound(np.min(lam), h_fine, _pairing(f, omega, eta, fine), vol, f.target.dim)
    tol = _tolerance(abs(h_fine - h_coarse))
    return InequalityReport("schwarz_integral", lhs, rhs, rhs - lhs, tol, verdict_for(rhs - lhs, tol, loose), prov)


class LinkStatus(str, Enum):
    EQUAL = "equal"
    STRICT = "strict"
    VIOLATED = "violated"


@dataclass(frozen=True)
class EqualityChainReport:
    name: str
    links: tuple
    statuses: tuple
    gaps: tuple
    points: int
    verdict: Verdict
    notes: tuple = ()

    @property
    def passing(self):
        return self.verdict.passing


def _link(upper, lower, tol):
    """Status of ``upper >= lower`` for Hermitian matrix batches."""
    d = upper - lower
    ev = np.linalg.eigvalsh(0.5 * (d + np.conj(np.swapaxes(d, -1, -2))))
    lo, hi = float(np.min(ev)), float(np.max(np.abs(ev)))
    if lo < -tol:
        return LinkStatus.VIOLATED, lo
    if hi <= tol:
        return LinkStatus.EQUAL, hi
    return LinkStatus.STRICT, float(np.max(ev))


def verify_equality_case_ke(model, eta, n_points=20, seed=0, tol=1e-8):
    """Pointwise chain ``n kappa eta >= (n+1)/2 H eta >= R/n eta = Ric(eta)``."""
    if not eta.einstein_known:
        raise NotEinstein(f"{eta.name} is not flagged Einstein")
    n = eta.dim
    pts = model.random_points(n_points, seed=seed)
    cp = curvature_batch(eta, pts)
    h, _, _ = sup_hsc_from_pack(cp, seed=seed)
    kap, _, _, _ = kappa_from_pack(eta, cp, seed=seed)
    g = cp.metric
    scale = max(1.0, float(np.max(np.abs(cp.ricci))))
    a = n * kap[:, None, None] * g
    b = 0.5 * (n + 1) * h[:, None, None] * g
    c = (cp.scalar / n)[:, None, None] * g
    names = ("n kappa eta >= (n+1)/2 H eta", "(n+1)/2 H eta >= R/n eta", "R/n eta = Ric")
    results = [_link(a, b, tol * scale), _link(b, c, tol * scale), _link(c, cp.ricci, tol * scale)]
    statuses = tuple(r[0] for r in results)
    gaps = tuple(r[1] for r in results)
    ok = all(s != LinkStatus.VIOLATED for s in statuses[:2]) and statuses[2] == LinkStatus.EQUAL
    verdict = Verdict.HOLDS_WITH_EQUALITY if all(s == LinkStatus.EQUAL for s in statuses) else (
        Verdict.HOLDS if ok else Verdict.FAILS)
    notes = ()
    if statuses[0] == LinkStatus.STRICT:
        notes = ("first link strict: H_sup > 0 and n > 1",)
    return EqualityChainReport("equality_case_ke", names, statuses, gaps, n_points, verdict, notes)


@dataclass(frozen=True)
class DominatedConvergence:
    eps: tuple
    values: tuple
    limit: float
    tolerance: float

    @property
    def gaps(self):
        return tuple(abs(v - self.limit) for v in self.values)

    @property
    def monotone(self):
        g = self.gaps
        return all(b <= a + self.tolerance for a, b in zip(g, g[1:]))

    @property
    def convergence_tolerance(self):
        # Lambda vanishing at branch points limits the rate to eps log(1/eps)
        return max(self.tolerance, 0.05 * abs(self.limit))

    @property
    def converged(self):
        return self.gaps[-1] <= self.convergence_tolerance


def dominated_convergence(f, omega, eta, eps_values=(1.0, 0.1, 0.01, 0.001), resolution=None, seed=0):
    """``int Lambda/(Lambda+eps) (lambda - kappa Lambda)`` as eps decreases."""
    X = f.source
    r_fine, r_coarse, fine, coarse = _lab_schemes(X, resolution, seed)

    def terms(scheme):
        pts = scheme.nodes
        w = scheme.weights * volume_density(omega, pts)
        lam = lambda_from_pack(curvature_batch(omega, pts))
        kap, _, _ = kappa_on_image(f, eta, pts, seed)
        energy = energy_batch(f, omega, eta, pts)
        return w, energy, lam - kap * energy

    w, energy, core = terms(fine)
    values = tuple(weighted_sum(w * energy / (energy + e) * core) for e in eps_values)
    limit = weighted_sum(w * core)
    wc, ec, cc = terms(coarse)
    tol = _tolerance(abs(limit - weighted_sum(wc * cc)))
    return DominatedConvergence(tuple(eps_values), values, limit, tol)
