"""Execute scenarios check by check; failures are recorded per check."""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from . import inequalities as ineq
from . import krf
from .config import Scenario, load_scenarios
from .errors import HolocurvError, TargetNotNef
from .maps import resolve_map
from .models import resolve
from .quadrature import estimate, integrate_top
from .functionals import lambda_field
from .reports import CheckRecord, RunReport, environment

CHERN_LU_TOL = 1e-4


def _constant_weight(value):
    if value is None:
        return None
    return lambda pts: np.full(len(pts), float(value))


def _from_inequality(scenario, rep, floor=None):
    tol = rep.tolerance
    verdict = rep.verdict
    if floor is not None and verdict != ineq.Verdict.NOT_APPLICABLE:
        tol = max(tol, floor)
        verdict = ineq.verdict_for(rep.margin, tol)
    return CheckRecord(
        scenario=scenario.name, check=rep.name, status="pass" if verdict.passing else "fail",
        verdict=verdict.value, lhs=rep.lhs, rhs=rep.rhs, margin=rep.margin, tolerance=tol,
        notes=list(rep.notes), details=dict(rep.provenance),
    )


def _chern_lu(scenario, f, omega, eta):
    X = f.source
    pts = X.random_points(scenario.points, seed=scenario.seed)
    rows, worst = [], np.inf
    for eps in scenario.eps:
        res = ineq.chern_lu_batch(f, omega, eta, pts, eps, seed=scenario.seed)
        worst = min(worst, float(np.min(res.residual)))
        for k in range(len(pts)):
            rows.append({"eps": float(eps), "point": k, "chart": int(pts.chart[k]),
                         "coords": " ".join(f"{c.real:.17g}{c.imag:+.17g}j" for c in pts.coords[k]),
                         "energy": float(res.energy[k]), "lhs": float(res.lhs[k]),
                         "rhs": float(res.rhs[k]), "residual": float(res.residual[k])})
    ok = worst >= -CHERN_LU_TOL
    return CheckRecord(scenario.name, "chern_lu", "pass" if ok else "fail",
                       verdict=(ineq.Verdict.HOLDS if ok else ineq.Verdict.FAILS).value,
                       lhs=None, margin=worst, tolerance=CHERN_LU_TOL,
                       details={"min_residual": worst, "eps": list(scenario.eps), "points": len(pts)},
                       rows=rows)


def _equality_chain(scenario, model, eta):
    rep = ineq.verify_equality_case_ke(model, eta, seed=scenario.seed)
    return CheckRecord(scenario.name, "equality_case_ke", "pass" if rep.passing else "fail",
                       verdict=rep.verdict.value, notes=list(rep.notes),
                       details={"links": list(rep.links), "statuses": [s.value for s in rep.statuses],
                                "gaps": list(rep.gaps), "points": rep.points})


def _dominated(scenario, f, omega, eta):
    dc = ineq.dominated_convergence(f, omega, eta, resolution=scenario.resolution, seed=scenario.seed)
    ok = dc.monotone and dc.converged
    return CheckRecord(scenario.name, "dominated_convergence", "pass" if ok else "fail",
                       verdict=(ineq.Verdict.HOLDS if ok else ineq.Verdict.FAILS).value,
                       lhs=dc.values[-1], rhs=dc.limit, margin=dc.gaps[-1], tolerance=dc.convergence_tolerance,
                       details={"eps": list(dc.eps), "values": list(dc.values), "gaps": list(dc.gaps),
                                "monotone": dc.monotone})


def _lambda_integral(scenario, model, omega):
    est = estimate(model, lambda s: integrate_top(model, omega, lambda p: lambda_field(omega, p), scheme=s),
                   resolution=scenario.resolution, seed=scenario.seed)
    return CheckRecord(scenario.name, "lambda_integral", "pass" if est.stable_digits(3) else "fail",
                       lhs=est.value, rhs=est.value, margin=0.0, tolerance=est.error,
                       stable=est.stable_digits(3), details={"resolutions": list(est.resolutions)})


def run_check(scenario, check, tolerance=None):
    """One check of one scenario; library errors become ``error`` records."""
    t0 = time.perf_counter()
    try:
        X, omega = resolve(scenario.source)
        Y, eta = resolve(scenario.target or scenario.source)
        f = resolve_map(scenario.map or "identity", X, Y)
        weight = _constant_weight(scenario.weight)
        kw = dict(resolution=scenario.resolution, seed=scenario.seed)
        if check == "main_inequality":
            rec = _from_inequality(scenario, ineq.verify_main_inequality(f, omega, eta, weight=weight, **kw),
                                   tolerance)
        elif check == "cpn_bound":
            rec = _from_inequality(scenario, ineq.verify_cpn_bound(f, eta, omega=omega, **kw), tolerance)
        elif check == "degeneracy_inequality":
            rec = _from_inequality(
                scenario, ineq.verify_degeneracy_inequality(f, omega, eta, weight=weight, **kw), tolerance)
        elif check == "schwarz_integral":
            rec = _from_inequality(scenario, ineq.verify_schwarz_integral(f, omega, eta, **kw), tolerance)
        elif check == "chern_lu":
            rec = _chern_lu(scenario, f, omega, eta)
        elif check == "equality_case_ke":
            rec = _equality_chain(scenario, Y, eta)
        elif check == "dominated_convergence":
            rec = _dominated(scenario, f, omega, eta)
        elif check == "lambda_integral":
            rec = _lambda_integral(scenario, X, omega)
        else:
            raise ValueError(f"unknown check {check!r}")
    except (HolocurvError, ValueError) as exc:
        rec = CheckRecord(scenario.name, check, "error", notes=[f"{type(exc).__name__}: {exc}"])
    rec.elapsed = time.perf_counter() - t0
    return rec


def run_flow(scenario):
    t0 = time.perf_counter()
    d = scenario.declared
    try:
        X, omega = resolve(scenario.source)
        if scenario.map is None:
            v = krf.end_to_end_flow_scenario(
                None, omega, source=X, eta0_pairing=d["eta0_pairing"], ky_pairing=d["ky_pairing"],
                target_nef=d["target_nef"], resolution=scenario.resolution, seed=scenario.seed)
        else:
            Y, eta = resolve(scenario.target)
            f = resolve_map(scenario.map, X, Y)
            v = krf.end_to_end_flow_scenario(
                f, omega, eta, ky_pairing=d.get("ky_pairing"), eta0_pairing=d.get("eta0_pairing"),
                target_nef=d.get("target_nef"), resolution=scenario.resolution, seed=scenario.seed)
        details = dict(v.provenance)
        details["limsup_t_times_bound"] = v.limsup_t_times_bound
        if "provenance" in d:
            details["declared_provenance"] = d["provenance"]
        rec = CheckRecord(scenario.name, "flow", "pass", verdict=v.classification.value,
                          notes=list(v.notes), details=details)
    except TargetNotNef as exc:
        rec = CheckRecord(scenario.name, "flow", "pass", verdict="NotApplicable",
                          notes=[f"TargetNotNef: {exc}; hypotheses of the flow criterion violated, not classified"])
    except (HolocurvError, ValueError) as exc:
        rec = CheckRecord(scenario.name, "flow", "error", notes=[f"{type(exc).__name__}: {exc}"])
    rec.elapsed = time.perf_counter() - t0
    return rec


def _override(scenario, resolution, seed):
    changes = {}
    if resolution is not None:
        changes["resolution"] = resolution
    if seed is not None:
        changes["seed"] = seed
    if not changes:
        return scenario
    return replace(scenario, **changes)


def run_scenarios(scenarios, resolution=None, seed=None, tolerance=None, command="verify", kinds=None):
    """Run scenarios in file order; ``kinds`` restricts to 'scenario' and/or 'krf'."""
    records, echoes = [], []
    for sc in scenarios:
        if kinds is not None and sc.kind not in kinds:
            continue
        sc = _override(sc, resolution, seed)
        echoes.append(sc.echo())
        if sc.kind == "krf":
            records.append(run_flow(sc))
        else:
            records.extend(run_check(sc, c, tolerance) for c in sc.checks)
    return RunReport(command, echoes, records, environment(seed, resolution, tolerance))


def run_scenario(path, resolution=None, seed=None, tolerance=None):
    """Parse a scenario file and run every section in it."""
    return run_scenarios(load_scenarios(path), resolution, seed, tolerance)


__all__ = ["Scenario", "run_check", "run_flow", "run_scenario", "run_scenarios"]
