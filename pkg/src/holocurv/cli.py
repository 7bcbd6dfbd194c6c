"""Command-line entry point.

Exit status is 0 when every check passes, 1 when any check fails or errors,
and 2 for invalid input (bad scenario file, unknown names, bad flags).
``HOLOCURV_OUT_DIR`` sets the directory for reports when ``--out`` is not given.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import krf
from .charts import ChartPoint
from .config import load_scenarios
from .errors import ConfigInvalid, HolocurvError
from .functionals import kappa, lambda_first_eigenvalue
from .geometry import chern_curvature, kahler_defect
from .models import resolve
from .reports import CheckRecord, RunReport, environment
from .runner import run_scenarios
from .suite import run_suite

OUT_ENV = "HOLOCURV_OUT_DIR"
EXTENSIONS = {"text": ".txt", "csv": ".csv", "json-lines": ".jsonl"}


def _parse_point(text):
    try:
        return np.array([complex(c.strip().replace(" ", "")) for c in text.split(",") if c.strip()])
    except ValueError as exc:
        raise ConfigInvalid(f"cannot parse point {text!r}; use comma-separated complex numbers like 0.1+0.2j",
                            key="point") from exc


def _curvature(args):
    model, metric = resolve(args.metric)
    seed = args.seed if args.seed is not None else 0
    if args.point:
        z = _parse_point(args.point)
        if len(z) != model.dim:
            raise ConfigInvalid(f"{args.metric} has dimension {model.dim}, point has {len(z)} coordinates",
                                key="point")
        p = ChartPoint(int(args.chart), z)
    else:
        p = model.random_points(1, seed=seed)[0]
        z = p.coords
    eig = lambda_first_eigenvalue(metric, p)
    cp = chern_curvature(metric, p)
    details = {"metric": args.metric, "chart": p.chart, "point": [[c.real, c.imag] for c in z],
               "lambda": eig.lambda_min, "second_ricci_eigenvalues": list(eig.eigenvalues),
               "scalar": float(np.real(cp.scalar)), "kahler_defect": kahler_defect(metric, p)}
    notes = []
    k = kappa(metric, p, seed=seed)
    details.update({"kappa": k.value, "kappa_branch": k.branch.value})
    details["sup_hsc" if metric.kahler_known else "sup_bisectional"] = k.h_sup if metric.kahler_known \
        else k.value
    if k.boundary:
        notes.append("kappa at the rho boundary H = 0")
    rec = CheckRecord(args.metric, "curvature", "pass", lhs=eig.lambda_min, rhs=k.value, margin=0.0,
                      tolerance=0.0, notes=notes, details=details)
    return RunReport("curvature", [{"metric": args.metric, "chart": p.chart}], [rec],
                     environment(seed, None, None))


def _krf_flags(args):
    data = krf.FlowClassData(args.lambda_total, args.eta0, args.ky, args.dim)
    try:
        v = krf.classify_flow(data)
    except HolocurvError as exc:
        rec = CheckRecord("declared", "flow", "error", notes=[f"{type(exc).__name__}: {exc}"])
    else:
        rec = CheckRecord("declared", "flow", "pass", verdict=v.classification.value, notes=list(v.notes),
                          details={"limsup_t_times_bound": v.limsup_t_times_bound,
                                   "lambda_total": data.lambda_total, "eta0_pairing": data.eta0_pairing,
                                   "ky_pairing": data.ky_pairing, "dim_source": data.dim_source})
    return RunReport("krf", [{"name": "declared"}], [rec], environment(args.seed, None, None))


def _krf(args):
    if args.file:
        return run_scenarios(load_scenarios(args.file), args.resolution, args.seed, args.tolerance,
                             command="krf", kinds=("krf",))
    missing = [f for f in ("lambda_total", "eta0", "ky", "dim") if getattr(args, f) is None]
    if missing:
        raise ConfigInvalid("krf needs a scenario file or all of --lambda-total --eta0 --ky --dim",
                            key=missing[0])
    return _krf_flags(args)


def _report(args):
    try:
        text = Path(args.file).read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read report {args.file}: {exc.strerror}") from exc
    try:
        return RunReport.from_jsonl(text)
    except (ValueError, TypeError) as exc:
        raise ConfigInvalid(f"{args.file}: {exc}") from exc


def _dispatch(args):
    if args.command == "curvature":
        return _curvature(args)
    if args.command == "verify":
        return run_scenarios(load_scenarios(args.file), args.resolution, args.seed, args.tolerance)
    if args.command == "suite":
        return run_suite(args.resolution, 0 if args.seed is None else args.seed, args.tolerance)
    if args.command == "krf":
        return _krf(args)
    return _report(args)


def _out_path(args):
    if args.out:
        return Path(args.out)
    base = os.environ.get(OUT_ENV)
    if base:
        return Path(base) / f"{args.command}{EXTENSIONS[args.format]}"
    return None


def _emit(report, args):
    text = report.render(args.format)
    out = _out_path(args)
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    rows = report.rows_csv()
    if rows is not None:
        out.with_name(out.stem + ".rows.csv").write_text(rows)
    if args.format != "text":
        sys.stdout.write(report.to_text())
    else:
        sys.stdout.write(text)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--resolution", type=int, help="quadrature resolution override")
    common.add_argument("--seed", type=int, help="seed override")
    common.add_argument("--tolerance", type=float, help="tolerance floor for inequality verdicts")
    common.add_argument("--out", help=f"report path (default: stdout, or ${OUT_ENV}/<command>.<ext>)")
    common.add_argument("--format", choices=tuple(EXTENSIONS), default="text")

    parser = argparse.ArgumentParser(prog="holocurv", description="Curvature bounds for holomorphic maps.")
    sub = parser.add_subparsers(dest="command", required=True)
    c = sub.add_parser("curvature", parents=[common], help="curvature quantities at one point")
    c.add_argument("--metric", required=True)
    c.add_argument("--chart", type=int, default=0)
    c.add_argument("--point", help="comma-separated complex coordinates, default a seeded random point")
    v = sub.add_parser("verify", parents=[common], help="run a scenario file")
    v.add_argument("file")
    sub.add_parser("suite", parents=[common], help="run the bundled reference suite")
    k = sub.add_parser("krf", parents=[common], help="classify flow scenarios")
    k.add_argument("file", nargs="?")
    k.add_argument("--lambda-total", type=float)
    k.add_argument("--eta0", type=float, help="pairing of [eta0] with the source class")
    k.add_argument("--ky", type=float, help="pairing of c1(K_Y) with the source class")
    k.add_argument("--dim", type=int, help="source dimension")
    r = sub.add_parser("report", parents=[common], help="re-render a stored json-lines report")
    r.add_argument("file")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        report = _dispatch(args)
    except ConfigInvalid as exc:
        print(f"holocurv: invalid input: {exc}", file=sys.stderr)
        return 2
    except HolocurvError as exc:
        print(f"holocurv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    _emit(report, args)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
