"""The bundled reference suite: closed-form constants and identities on catalog models.

Each check records its reference value with a basis label: ``literature`` for
published constants, ``derived`` for values with an independent oracle and
``trivial`` for direct arithmetic.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import inequalities as ineq
from . import krf
from .functionals import berger_average, lambda_field
from .maps import resolve_map
from .models import resolve
from .quadrature import estimate, integrate_top
from .reports import CheckRecord, RunReport, environment
from .runner import CHERN_LU_TOL

FOUR_PI = 4.0 * math.pi
DEFAULT_CP1 = 48


def _ref(value, basis, what):
    return {"value": value, "basis": basis, "what": what}


def _timed(fn):
    def wrapper(ctx):
        t0 = time.perf_counter()
        recs = fn(ctx)
        for r in recs:
            r.elapsed = (time.perf_counter() - t0) / len(recs)
        return recs
    wrapper.__name__ = fn.__name__
    return wrapper


class SuiteContext:
    """Resolution scaling and seed shared by every suite check.

    ``resolution`` is the CP^1 grid size; other models scale with it.
    """

    def __init__(self, resolution=None, seed=0, tolerance=None):
        self.resolution = DEFAULT_CP1 if resolution is None else int(resolution)
        self.scale = self.resolution / DEFAULT_CP1
        self.seed = seed
        self.tolerance = tolerance

    @property
    def cp1(self):
        return max(4, int(round(self.resolution)))

    @property
    def cpn(self):
        return 2 ** max(6, int(round(12 + 2 * math.log2(self.scale))))

    @property
    def torus(self):
        return max(4, int(round(32 * self.scale)))


def _status(ok):
    return "pass" if ok else "fail"


@_timed
def gauss_bonnet(ctx):
    X, om = resolve("cp1_fs")
    est = estimate(X, lambda s: integrate_top(X, om, lambda p: lambda_field(om, p), scheme=s),
                   resolution=ctx.cp1, seed=ctx.seed)
    err = abs(est.value - FOUR_PI) / FOUR_PI
    return [CheckRecord("cp1_fs", "gauss_bonnet", _status(err <= 1e-6), lhs=est.value, rhs=FOUR_PI,
                        margin=est.value - FOUR_PI, tolerance=1e-6 * FOUR_PI, stable=est.stable_digits(3),
                        reference=_ref(FOUR_PI, "literature", "integral of lambda over CP^1 = 2 pi chi"),
                        details={"resolutions": list(est.resolutions), "relative_error": err})]


@_timed
def lambda_constants(ctx):
    out = []
    for name, n in (("cp1_fs", 1), ("cpn_fs:2", 2), ("cpn_fs:3", 3)):
        X, om = resolve(name)
        lam = lambda_field(om, X.random_points(50, seed=ctx.seed))
        ref = 2.0 * math.pi * (n + 1)
        err = float(np.max(np.abs(lam - ref)) / ref)
        vol = integrate_top(X, om, lambda p: np.ones(len(p)), scheme=X.quadrature(ctx.cp1 if n == 1 else ctx.cpn))
        out.append(CheckRecord(name, "lambda_constant", _status(err <= 1e-6 and abs(vol - 1) <= 1e-6),
                               lhs=float(np.min(lam)), rhs=ref, margin=err, tolerance=1e-6,
                               reference=_ref(ref, "literature", f"lambda = 2 pi (n+1) on CP^{n}, volume 1"),
                               details={"max_relative_error": err, "volume": vol, "points": 50}))
    return out


def _inequality_record(scenario, rep, reference, ok, ctx, stable=None):
    return CheckRecord(scenario, rep.name, _status(ok and rep.passing), verdict=rep.verdict.value,
                       lhs=rep.lhs, rhs=rep.rhs, margin=rep.margin, tolerance=rep.tolerance,
                       reference=reference, stable=stable, notes=list(rep.notes), details=dict(rep.provenance))


def _pair(source, target, map_name):
    X, om = resolve(source)
    Y, eta = resolve(target)
    return resolve_map(map_name, X, Y), om, eta


@_timed
def optimal_constant(ctx):
    f, om, eta = _pair("cp1_fs", "cp1_fs", "identity")
    rep = ineq.verify_main_inequality(f, om, eta, resolution=ctx.cp1, seed=ctx.seed)
    ok = abs(rep.lhs - FOUR_PI) <= 1e-5 and abs(rep.rhs - FOUR_PI) <= 1e-5 and \
        rep.verdict == ineq.Verdict.HOLDS_WITH_EQUALITY
    return [_inequality_record("cp1_fs identity", rep,
                               _ref(FOUR_PI, "literature", "lhs = rhs = 4 pi: the lower bound is attained"),
                               ok, ctx)]


@_timed
def projective_margin(ctx):
    f, om, eta = _pair("cpn_fs:2", "cpn_fs:2", "identity")
    rep = ineq.verify_cpn_bound(f, eta, omega=om, resolution=ctx.cpn, seed=ctx.seed)
    ok = abs(rep.rhs - FOUR_PI) <= 1e-4 and abs(rep.lhs - 3 * math.pi) <= 1e-4 and \
        abs(rep.margin - math.pi) <= 1e-4
    return [_inequality_record("cpn_fs:2 identity", rep,
                               _ref(math.pi, "derived", "margin sup H * pairing - 2 pi (n+1)/n = 4 pi - 3 pi"),
                               ok, ctx)]


@_timed
def degree_family(ctx):
    out = []
    for d in (1, 2, 3, 5):
        f, om, eta = _pair("cp1_fs", "cp1_fs", f"power:d={d}")
        rep = ineq.verify_main_inequality(f, om, eta, resolution=ctx.cp1, seed=ctx.seed)
        coarse = ineq.verify_main_inequality(f, om, eta, resolution=max(4, ctx.cp1 // 2), seed=ctx.seed)
        ratio = rep.rhs / rep.lhs
        stable = abs(rep.rhs - coarse.rhs) <= 5e-4 * abs(rep.rhs)
        out.append(_inequality_record(f"cp1_fs power:d={d}", rep,
                                      _ref(float(d), "derived", "rhs / lhs = degree"),
                                      abs(ratio - d) <= 1e-4, ctx, stable))
        out[-1].details["ratio"] = ratio
    return out


@_timed
def degeneracy_equality(ctx):
    out = []
    f, om, eta = _pair("cp1_fs", "cp1_fs", "identity")
    rep = ineq.verify_degeneracy_inequality(f, om, eta, resolution=ctx.cp1, seed=ctx.seed)
    ok = abs(rep.lhs - FOUR_PI) <= 1e-5 and abs(rep.rhs - FOUR_PI) <= 1e-5
    out.append(_inequality_record("cp1_fs identity", rep,
                                  _ref(FOUR_PI, "derived", "integral of R = integral of Ric = 4 pi"), ok, ctx))
    for name, m in (("torus_flat", "identity"), ("torus_flat", "isogeny:k=2")):
        f, om, eta = _pair(name, name, m)
        rep = ineq.verify_degeneracy_inequality(f, om, eta, resolution=ctx.torus, seed=ctx.seed)
        out.append(_inequality_record(f"{name} {m}", rep, _ref(0.0, "trivial", "flat on both sides"),
                                      rep.lhs == 0.0 and rep.rhs == 0.0, ctx))
    return out


@_timed
def berger_identity(ctx):
    X, om = resolve("cpn_fs:2")
    pts = X.random_points(10, seed=ctx.seed)
    results = [berger_average(om, p, num_samples=10_000, seed=ctx.seed + k) for k, p in enumerate(pts)]
    dev = [abs(r.average - FOUR_PI) / max(r.mc_error, 1e-300) for r in results]
    ok = all(abs(r.average - FOUR_PI) <= r.mc_error + 1e-10 * FOUR_PI for r in results) and \
        all(abs(r.reference - FOUR_PI) <= 1e-9 * FOUR_PI for r in results)
    return [CheckRecord("cpn_fs:2", "berger_average", _status(ok), lhs=float(np.mean([r.average for r in results])),
                        rhs=FOUR_PI, margin=max(abs(r.average - FOUR_PI) for r in results),
                        tolerance=max(r.mc_error for r in results),
                        reference=_ref(FOUR_PI, "literature", "mean of H over directions = 2 R / (n (n+1))"),
                        details={"points": 10, "samples": 10_000, "deviation_in_3sigma_units": dev})]


@_timed
def chern_lu(ctx):
    cases = (("cp1_fs", "cp1_fs", "identity"), ("cp1_fs", "cp1_fs", "power:d=2"),
             ("cp1_fs", "cpn_fs:2", "veronese"))
    out = []
    for src, tgt, m in cases:
        f, om, eta = _pair(src, tgt, m)
        pts = f.source.random_points(20, seed=ctx.seed)
        worst = min(float(np.min(ineq.chern_lu_batch(f, om, eta, pts, e, seed=ctx.seed).residual))
                    for e in (1e-2, 1e-1, 1.0))
        out.append(CheckRecord(f"{src} {m}", "chern_lu", _status(worst >= -CHERN_LU_TOL),
                               verdict="Holds" if worst >= -CHERN_LU_TOL else "Fails",
                               margin=worst, tolerance=CHERN_LU_TOL,
                               reference=_ref(0.0, "derived", "pointwise residual >= 0"),
                               details={"min_residual": worst, "points": 20, "eps": [1e-2, 1e-1, 1.0]}))
    return out


def flow_oracle(lam, ky):
    return "TypeIIbForced" if lam > 0 and ky == 0 else ("TypeIIbOrIIIaForced" if lam > 0 else "Inconclusive")


def random_class_data(k, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(k):
        lam = float(rng.choice([0.0, rng.normal() * 10, abs(rng.normal()) * 10, -abs(rng.normal())]))
        ky = float(rng.choice([0.0, rng.exponential()]))
        out.append(krf.FlowClassData(lam, float(rng.exponential() + 1e-3), ky, int(rng.integers(1, 5))))
    return out


@_timed
def flow_classifier(ctx):
    data = random_class_data(100, ctx.seed)
    mismatches = sum(krf.classify_flow(d).classification.value != flow_oracle(d.lambda_total, d.ky_pairing)
                     for d in data)
    worst = 0.0
    for d in data:
        closed = krf.limsup_t_bound(d)
        if d.ky_pairing > 0:
            oracle = d.lambda_total / d.dim_source / (2.0 * math.pi * d.ky_pairing)
            worst = max(worst, abs(closed - oracle) / max(abs(oracle), 1.0))
            # t * bound(t) approaches the limit with gap exactly L * eta0 / (eta0 + 2 pi t ky)
            t = 1e6
            gap = abs(t * krf.flow_bound(d, t) - oracle)
            if gap > abs(oracle) * d.eta0_pairing / (2.0 * math.pi * t * d.ky_pairing) * (1 + 1e-9) + 1e-12:
                mismatches += 1
    ok = mismatches == 0 and worst <= 1e-12
    return [CheckRecord("flow class data", "flow_classifier", _status(ok), margin=worst, tolerance=1e-12,
                        reference=_ref(0.0, "derived", "truth table and limsup = lambda/(2 pi n ky)"),
                        details={"inputs": len(data), "mismatches": mismatches, "limsup_relative_error": worst})]


SUITE = (gauss_bonnet, lambda_constants, optimal_constant, projective_margin, degree_family,
         degeneracy_equality, berger_identity, chern_lu, flow_classifier)


def run_suite(resolution=None, seed=0, tolerance=None):
    """Run every suite check in a fixed order."""
    ctx = SuiteContext(resolution, seed, tolerance)
    records = []
    for fn in SUITE:
        records.extend(fn(ctx))
    return RunReport("suite", [{"name": fn.__name__} for fn in SUITE], records,
                     environment(seed, ctx.resolution, tolerance))
