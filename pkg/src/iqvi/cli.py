"""Command-line front end.

    iqvi check --spec problem.json --out results/
    iqvi reproduce --out results/

Exit codes: 0 success, 2 invalid spec or input, 3 numeric failure or
divergence, 4 convergence regime violated.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import ConstantsBundle, check_discrete, check_existence, check_stability, feasible_alpha_range
from .certify import certify_solution, grid_oracle
from .config import MODES, RunSpec, SpecError, parse_spec
from .discrete import banach_iterate, he_iterate, iterate, per_step_certificate, step_regime
from .errors import InputError, NumericError, ParameterError
from .ode import integrate, lyapunov_series, rate_envelope
from .plotting import emit_plot

__all__ = ["run", "main", "OutputBundle", "bundled_spec", "EXIT_OK", "EXIT_INPUT", "EXIT_NUMERIC", "EXIT_REGIME"]

log = logging.getLogger("iqvi")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_REGIME = 0, 2, 3, 4


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


class _Writer:
    # every file goes through here so the manifest stays complete
    def __init__(self, root, formats):
        self.root = Path(root)
        self.formats = set(formats)
        self.files = []

    def text(self, name, content, fmt=None):
        if fmt is not None and fmt not in self.formats:
            return
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        data = content.encode("utf-8")
        path.write_bytes(data)
        self.files.append({"name": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()})

    def json(self, name, obj):
        self.text(name, dumps(obj), "json")


@dataclass
class OutputBundle:
    directory: Path
    files: list
    exit_code: int
    summary: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)

    @property
    def manifest(self):
        return self.directory / "manifest.json"


def bundled_spec(name) -> RunSpec:
    """One of the specs shipped with the package: ``"sec3"`` or ``"sec7"``."""
    text = resources.files("iqvi").joinpath("data", f"example_{name}.json").read_text(encoding="utf-8")
    return parse_spec(text)


def _expected():
    return json.loads(resources.files("iqvi").joinpath("data", "expected_summaries.json").read_text(encoding="utf-8"))


# ------------------------------------------------------------------- modes


def _mode_check(spec, w, prefix):
    problem = spec.build_problem()
    c = ConstantsBundle.from_problem(problem)
    reports = {
        "existence": check_existence(c),
        "stability": check_stability(c, spec.build_schedule()),
    }
    bounds = spec.solver.get("bounds")
    if bounds is None and spec.solver.get("lambda_seq", {}).get("kind") == "uniform":
        bounds = {"A": spec.solver["lambda_seq"]["A"], "B": spec.solver["lambda_seq"]["B"]}
    if bounds is not None:
        reports["discrete"] = check_discrete(c, bounds["A"], bounds["B"])
    for name, rep in reports.items():
        w.json(f"{prefix}check_{name}.json", rep.to_dict())
    rng = feasible_alpha_range(c.L, c.beta, c.kappa)
    derived = {}
    for rep in reports.values():
        derived.update(rep.derived)
    summary = {
        "constants": {"L": c.L, "beta": c.beta, "kappa": c.kappa, "l": c.l, "alpha": c.alpha},
        "verdicts": {name: rep.verdict for name, rep in reports.items()},
        "derived": derived,
        "alpha_range": None if rng is None else {"lower": rng[0], "upper": None},
    }
    if bounds is None:
        summary["notes"] = ["no step-size bounds given; discrete conditions not evaluated"]
    w.json(f"{prefix}check_summary.json", summary)
    code = EXIT_OK if all(rep.verdict for rep in reports.values()) else EXIT_REGIME
    return summary, code


def _x_star(spec):
    xs = spec.solver.get("x_star")
    return None if xs is None else np.asarray(xs, dtype=float)


def _plot(spec, w, prefix, logs, title):
    if logs:
        w.text(f"{prefix}plot.svg", emit_plot(logs, spec.output["plot"]["kind"], title), "svg")


def _mode_ode(spec, w, prefix):
    problem = spec.build_problem()
    schedule = spec.build_schedule()
    cfg = spec.build_integrator()
    c = ConstantsBundle.from_problem(problem)
    x_star = _x_star(spec)
    stab = check_stability(c, schedule)
    runs, trajs, code = [], [], EXIT_OK
    for k, x0 in enumerate(spec.solver["x0"], start=1):
        traj = integrate(problem, schedule, x0, cfg, tol=spec.solver["tol"], x_star=x_star)
        trajs.append(traj)
        w.text(f"{prefix}trajectory_{k}.csv", traj.to_csv(), "csv")
        info = {"x0": list(x0), **traj.summary()}
        if traj.termination == "diverged":
            code = EXIT_NUMERIC
        if x_star is not None:
            info["final_dist"] = float(traj.dist[-1])
            if stab.verdict:
                info["envelope"] = rate_envelope(traj, x_star, c, schedule).to_dict()
            if len(traj) >= 3:
                ly = lyapunov_series(traj, x_star, c, schedule)
                info["lyapunov"] = {"fraction_ok": ly.fraction_ok, "strictly_decreasing": ly.strictly_decreasing()}
        runs.append(info)
    summary = {"mode": "solve-ode", "stability": stab.to_dict(), "runs": runs}
    w.json(f"{prefix}summary.json", summary)
    _plot(spec, w, prefix, trajs, f"{spec.name}: network trajectories")
    return summary, code


def _write_logs(spec, w, prefix, logs, mode, extra):
    runs = []
    for k, (x0, lg) in enumerate(logs, start=1):
        w.text(f"{prefix}iterates_{k}.csv", lg.to_csv(), "csv")
        info = {"x0": list(x0), **lg.summary(), "x_final": lg.final.tolist()}
        info.update(extra(lg))
        runs.append(info)
    summary = {"mode": mode, "runs": runs}
    return summary


def _mode_iter(spec, w, prefix):
    problem = spec.build_problem()
    cfg = spec.build_iteration()
    c = ConstantsBundle.from_problem(problem)
    x_star = _x_star(spec)
    bounds = spec.solver.get("bounds")
    if bounds is None and cfg.lambda_seq.bounds is not None:
        bounds = {"A": cfg.lambda_seq.bounds[0], "B": cfg.lambda_seq.bounds[1]}
    A, B = (None, None) if bounds is None else (bounds["A"] * cfg.h, bounds["B"] * cfg.h)
    logs = [(x0, iterate(problem, cfg, x0, x_star)) for x0 in spec.solver["x0"]]
    regime_all = True

    def extra(lg):
        nonlocal regime_all
        info = {}
        lam = lg.lambda_used[:-1]
        if lam.size:
            ok, regime, notes = step_regime(lam, c, A, B)
            regime_all = regime_all and ok
            info["regime_ok"] = ok
            info["regime"] = regime
        if x_star is not None:
            info["certificate"] = per_step_certificate(lg, x_star, c, A, B).to_dict()
        return info

    summary = _write_logs(spec, w, prefix, logs, "solve-iter", extra)
    w.json(f"{prefix}summary.json", summary)
    _plot(spec, w, prefix, [lg for _, lg in logs], f"{spec.name}: iterates")
    return summary, EXIT_OK if regime_all else EXIT_REGIME


def _mode_banach(spec, w, prefix):
    problem = spec.build_problem()
    x_star = _x_star(spec)
    it = spec.solver["iteration"]
    logs = [(x0, banach_iterate(problem, x0, it["tol"], it["max_iter"], x_star)) for x0 in spec.solver["x0"]]

    def extra(lg):
        ratios = lg.step_ratios()
        finite = ratios[np.isfinite(ratios)]
        return {"theta": lg.meta["theta"], "max_step_ratio": float(finite.max()) if finite.size else None}

    summary = _write_logs(spec, w, prefix, logs, "solve-banach", extra)
    w.json(f"{prefix}summary.json", summary)
    _plot(spec, w, prefix, [lg for _, lg in logs], f"{spec.name}: fixed-point iterates")
    return summary, EXIT_OK


def _mode_he(spec, w, prefix):
    problem = spec.build_problem()
    x_star = _x_star(spec)
    it = spec.solver["iteration"]
    logs = [(x0, he_iterate(problem, x0, it["tol"], it["max_iter"], x_star)) for x0 in spec.solver["x0"]]

    def extra(lg):
        info = {"rate": lg.meta["rate"]}
        if lg.dist is not None:
            d = lg.dist
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(d[:-1] > 0, d[1:] / np.where(d[:-1] > 0, d[:-1], 1.0), np.nan)
            finite = r[np.isfinite(r)]
            info["max_error_ratio"] = float(finite.max()) if finite.size else None
        return info

    summary = _write_logs(spec, w, prefix, logs, "solve-he", extra)
    w.json(f"{prefix}summary.json", summary)
    _plot(spec, w, prefix, [lg for _, lg in logs], f"{spec.name}: fixed-set iterates")
    return summary, EXIT_OK


def _mode_certify(spec, w, prefix):
    problem = spec.build_problem()
    points = spec.solver.get("points") or spec.solver.get("x0") or ([spec.solver["x_star"]] if "x_star" in spec.solver else [])
    if not points:
        raise SpecError([("/solver/points", "certify needs points, x0 or x_star")])
    certs = []
    for p in points:
        cert = certify_solution(problem, p, spec.solver["seed"], spec.solver["samples"], spec.solver["tol"])
        certs.append({"x": list(p), **cert.to_dict()})
    summary = {"mode": "certify", "certificates": certs}
    grid = spec.solver.get("grid")
    if grid is not None and problem.dim <= 2:
        res = grid_oracle(problem, (grid["lower"], grid["upper"]), grid.get("resolution", 1e-3))
        summary["grid_oracle"] = {"x_best": res.x_best.tolist(), "residual_best": res.residual_best}
    w.json(f"{prefix}certificates.json", summary)
    return summary, EXIT_OK


_HANDLERS = {
    "check": _mode_check,
    "solve-ode": _mode_ode,
    "solve-iter": _mode_iter,
    "solve-banach": _mode_banach,
    "solve-he": _mode_he,
    "certify": _mode_certify,
}


def _with_mode(spec, mode):
    d = spec.to_dict()
    d["solver"]["mode"] = mode
    return parse_spec(d)


def _compare_reproduce(results):
    exp = _expected()
    checks = []

    def add(label, ok, detail):
        checks.append({"label": label, "passed": bool(ok), "detail": detail})

    e7 = exp["sec7"]
    ode7 = results["sec7"]["solve-ode"]
    norms = [r["final_norm"] for r in ode7["runs"]]
    add("sec7 ode runs", len(norms) == e7["runs"], len(norms))
    add("sec7 ode final norm", max(norms) <= e7["max_final_norm"], max(norms))
    add("sec7 ode termination", all(r["termination"] == e7["termination"] for r in ode7["runs"]), [r["termination"] for r in ode7["runs"]])
    chk = results["sec7"]["check"]
    for key, val in e7["derived"].items():
        got = chk["derived"][key]
        add(f"sec7 {key}", abs(got - val) <= e7["derived_tol"], got)
    add("sec7 alpha range", abs(chk["alpha_range"]["lower"] - e7["alpha_low"]) <= e7["derived_tol"], chk["alpha_range"]["lower"])
    add("sec7 verdicts", all(chk["verdicts"].values()), chk["verdicts"])

    e3 = exp["sec3"]
    for mode in ("solve-ode", "solve-banach", "solve-iter"):
        finals = [abs(v) for r in results["sec3"][mode]["runs"] for v in r["x_final"]]
        add(f"sec3 {mode} final |x|", max(finals) <= e3["max_final_abs"], max(finals))
    cert = results["sec3"]["certify"]
    add("sec3 certificate", all(cc["verdict"] == e3["certificate"] for cc in cert["certificates"]), [cc["verdict"] for cc in cert["certificates"]])
    gx = cert["grid_oracle"]["x_best"]
    add("sec3 grid oracle", max(abs(a - b) for a, b in zip(gx, e3["grid_x_best"])) <= e3["grid_tol"], gx)
    return checks


def _mode_reproduce(spec, w, prefix):
    results = {}
    plan = {"sec7": ["check", "solve-ode"], "sec3": ["check", "solve-ode", "solve-banach", "solve-iter", "certify"]}
    for name, modes in plan.items():
        base = bundled_spec(name)
        results[name] = {}
        for mode in modes:
            s = _with_mode(base, mode)
            results[name][mode], _ = _HANDLERS[mode](s, w, f"{prefix}{name}/{mode}/")
    checks = _compare_reproduce(results)
    report = {"checks": checks, "passed": all(c["passed"] for c in checks)}
    w.json(f"{prefix}reproduce_report.json", report)
    return report, EXIT_OK if report["passed"] else EXIT_NUMERIC


_HANDLERS["reproduce"] = _mode_reproduce


def run(spec: RunSpec, out_dir, mode=None) -> OutputBundle:
    """Execute ``spec`` (optionally overriding its mode) and write all outputs
    plus ``manifest.json`` under ``out_dir``."""
    mode = mode or spec.mode
    if mode not in MODES:
        raise SpecError([("/solver/mode", f"unknown mode {mode!r}")])
    w = _Writer(out_dir, spec.output["formats"] if mode != "reproduce" else ["csv", "json", "svg"])
    errors, summary = [], {}
    try:
        summary, code = _HANDLERS[mode](spec, w, "")
    except SpecError as exc:
        errors, code = [{"path": p, "message": m} for p, m in exc.errors], EXIT_INPUT
    except NumericError as exc:
        errors, code = [{"type": "numeric", "message": str(exc)}], EXIT_NUMERIC
    except ParameterError as exc:
        errors, code = [{"type": "regime", "message": str(exc)}], EXIT_REGIME
    except InputError as exc:
        errors, code = [{"type": "input", "message": str(exc)}], EXIT_INPUT
    manifest = {"name": spec.name, "mode": mode, "exit_code": code, "errors": errors, "files": list(w.files)}
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    (Path(out_dir) / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
    return OutputBundle(Path(out_dir), list(w.files), code, summary, errors)


def _parser():
    ap = argparse.ArgumentParser(prog="iqvi", description="Solvers and condition checks for inverse quasi-variational inequalities.")
    sub = ap.add_subparsers(dest="command", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--spec", help="JSON run spec" + (" (optional)" if mode == "reproduce" else ""), required=mode != "reproduce")
        p.add_argument("--out", help="output directory (default: $IQVI_OUT_DIR or ./iqvi_out)")
        p.add_argument("--seed", type=int, help="override solver.seed")
        p.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    out = args.out or os.environ.get("IQVI_OUT_DIR") or "iqvi_out"
    try:
        if args.spec:
            with open(args.spec, encoding="utf-8") as fh:
                spec = parse_spec(fh.read())
        else:
            spec = bundled_spec("sec7")
        if args.seed is not None:
            d = spec.to_dict()
            d["solver"]["seed"] = args.seed
            spec = parse_spec(d)
    except SpecError as exc:
        for path, msg in exc.errors:
            print(f"spec error at {path}: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"cannot read spec: {exc}", file=sys.stderr)
        return EXIT_INPUT
    bundle = run(spec, out, mode=args.command)
    for err in bundle.errors:
        print(f"error: {err}", file=sys.stderr)
    log.info("%s: %d files written to %s (exit %d)", args.command, len(bundle.files), out, bundle.exit_code)
    return bundle.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
