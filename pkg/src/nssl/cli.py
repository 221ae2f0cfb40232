"""Command-line front end: ``nssl {gen,norms,invariants,scan,verify}``.

Verdicts and reports are JSON lines, curves and proxies CSV; each record
carries the hash of the run configuration.  Figures land next to the
output file as ``<stem>_<what>.png`` unless ``--no-plots`` is given.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import nssf
from .detector import (DEFAULT_C_CAL, DEFAULT_DELTA, DEFAULT_DELTA_STAR, DEFAULT_EPS_STAR,
                       concentration_p3, concentration_rate, epsilon_regularity,
                       wolf_criterion)
from .field import BallSpec, CylinderSpec, DomainError, ParameterError, ball_values
from .invariants import invariants
from .lorentz import ball_distribution, lp_norm, weak_norm
from .morrey import morrey_sup

log = logging.getLogger("nssl")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT, EXIT_PARAM = 0, 1, 2, 3, 4

# lattice axes each criterion ranges over, in expansion order
CRITERION_AXES = {
    "thm11_plain": ("t", "x0", "r", "p"),
    "thm11_oscillation": ("t", "x0", "r", "p"),
    "wolf": ("t", "x0", "r"),
    "concentration_p3": ("t", "x0", "r"),
    "concentration_general": ("t", "x0", "r", "p", "nu"),
}


class UsageError(Exception):
    pass


def _parse_number(v):
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    return float(v)


def load_lattice(text: str | None) -> dict:
    """Lattice JSON given inline or as a path to a file."""
    if text is None:
        return {}
    s = text.strip()
    if not s.startswith(("{", "[")):
        s = Path(text).read_text()
    data = json.loads(s)
    if isinstance(data, list):
        data = {"points": data}
    if not isinstance(data, dict):
        raise UsageError("lattice must be a JSON object or a list of points")
    return data


def _axis(lat: dict, key: str, default):
    v = lat.get(key, default)
    if key == "x0":
        if v and not isinstance(v[0], (list, tuple)):
            v = [v]
        return [tuple(float(c) for c in x) for x in v]
    if not isinstance(v, list):
        v = [v]
    return [_parse_number(x) for x in v]


def expand_points(lat: dict, axes: tuple, defaults: dict) -> list:
    """Explicit ``points`` as given, otherwise the product of the listed axes."""
    if "points" in lat:
        pts = []
        for raw in lat["points"]:
            pt = {k: raw.get(k, defaults.get(k)) for k in axes}
            if "x0" in pt:
                pt["x0"] = tuple(float(c) for c in pt["x0"])
            for k in axes:
                if k != "x0":
                    pt[k] = _parse_number(pt[k])
            if "criterion" in raw:
                pt["criterion"] = raw["criterion"]
            pts.append(pt)
        return pts
    lists = [_axis(lat, k, defaults[k]) for k in axes]
    return [dict(zip(axes, combo)) for combo in itertools.product(*lists)]


def scan_points(lat: dict, field_t: float) -> list:
    defaults = {"t": [field_t], "x0": [[0.0, 0.0, 0.0]], "r": [0.5], "p": [3.0], "nu": [2.0]}
    if "points" in lat:
        pts = []
        for raw in lat["points"]:
            crit = raw.get("criterion")
            if crit not in CRITERION_AXES:
                raise UsageError(f"lattice point needs a known criterion, got {crit!r}")
            (pt,) = expand_points({"points": [raw]}, CRITERION_AXES[crit],
                                  {k: v[0] for k, v in defaults.items()})
            pt["criterion"] = crit
            pts.append(pt)
    else:
        crits = lat.get("criteria", list(CRITERION_AXES))
        pts = []
        for crit in crits:
            if crit not in CRITERION_AXES:
                raise UsageError(f"unknown criterion {crit!r}")
            for pt in expand_points(lat, CRITERION_AXES[crit], defaults):
                pt["criterion"] = crit
                pts.append(pt)
    if not pts:
        raise UsageError("scan lattice is empty")
    return pts


def config_hash(args: argparse.Namespace, extra: dict | None = None) -> str:
    """SHA-256 prefix over the canonical run configuration and the input bytes."""
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("output", "func", "jobs")}
    if extra:
        cfg.update(extra)
    h = hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode())
    if getattr(args, "input", None) and args.command != "gen":
        with open(args.input, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    return h.hexdigest()[:16]


def _sidecar(output: Path, what: str, ext: str = ".png") -> Path:
    return output.with_name(f"{output.stem}_{what}{ext}")


def _thresholds(args):
    for name in ("delta", "eps_star", "delta_star", "c_cal"):
        v = getattr(args, name)
        if not (v > 0 and math.isfinite(v)):
            raise ParameterError(f"--{name.replace('_', '-')} must be positive, got {v}")
    if args.c_cal < 1:
        raise ParameterError("--c-cal must be >= 1")


# ---------------------------------------------------------------- commands

def cmd_gen(args) -> int:
    from .synth import GeneratorSpec, generate
    if args.input is None:
        raise UsageError("gen needs --input <GeneratorSpec JSON file or inline JSON>")
    text = args.input.strip()
    if not text.startswith("{"):
        text = Path(args.input).read_text()
    spec = GeneratorSpec.from_json(text)
    if args.seed is not None and spec.kind == "random_divfree":
        spec.params = dict(spec.params, seed=args.seed)
    fld = generate(spec)
    nssf.write(args.output, fld)
    log.info("wrote %s (%s, dims %s)", args.output, spec.kind, fld.dims)
    return EXIT_OK


def cmd_norms(args) -> int:
    fld = nssf.read(args.input)
    lat = load_lattice(args.lattice)
    pts = expand_points(lat, ("t", "x0", "r", "p"),
                        {"t": [fld.t_range[1]], "x0": [[0.0, 0.0, 0.0]], "r": [1.0], "p": [3.0]})
    chash = config_hash(args)
    out = Path(args.output)
    rows = []
    for i, pt in enumerate(pts):
        k = fld.time_index(pt["t"])
        ball = BallSpec(pt["x0"], pt["r"])
        curve = ball_distribution(fld.speed(k), fld.grid, ball)
        v, w = ball_values(fld.speed(k), fld.grid, ball)
        p = pt["p"]
        row = {"index": i, "t": fld.times[k], "x": pt["x0"][0], "y": pt["x0"][1],
               "z": pt["x0"][2], "r": pt["r"], "p": p, "weak_norm": weak_norm(curve, p),
               "lp_norm": lp_norm(v, w, p), "morrey_sup": "", "morrey_osc_sup": ""}
        if p >= 2:
            try:
                prof = morrey_sup(fld, pt["t"], pt["x0"], pt["r"], p)
                row["morrey_sup"] = prof.supremum
                row["morrey_osc_sup"] = morrey_sup(fld, pt["t"], pt["x0"], pt["r"], p,
                                                   oscillation=True).supremum
                if args.plots:
                    from .plotting import plot_morrey
                    plot_morrey(prof, _sidecar(out, f"morrey_{i}"))
            except DomainError as exc:
                log.warning("point %d: no Morrey value (%s)", i, exc)
        if args.plots:
            from .plotting import plot_distribution
            plot_distribution(curve, _sidecar(out, f"distribution_{i}"), p)
        curve.to_csv(_sidecar(out, f"distribution_{i}", ".csv"))
        row["config_hash"] = chash
        rows.append(row)
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: _csv_value(v) for k, v in row.items()})
    return EXIT_OK


def _csv_value(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(float(v))
    return v


def cmd_invariants(args) -> int:
    fld = nssf.read(args.input)
    lat = load_lattice(args.lattice)
    pts = expand_points(lat, ("t", "x0", "r"),
                        {"t": [fld.t_range[1]], "x0": [[0.0, 0.0, 0.0]], "r": [0.5]})
    chash = config_hash(args)
    with open(args.output, "w") as fh:
        for i, pt in enumerate(pts):
            try:
                rec = invariants(fld, CylinderSpec(pt["t"], pt["x0"], pt["r"])).to_dict()
            except (DomainError, ParameterError) as exc:
                rec = {"error": str(exc), "t0": pt["t"], "x0": list(pt["x0"]), "r": pt["r"]}
            rec.update(index=i, config_hash=chash)
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return EXIT_OK


_WORKER_FIELD = None


def _worker_init(path: str):
    global _WORKER_FIELD
    _WORKER_FIELD = nssf.read(path)


def evaluate_point(fld, pt: dict, thresholds: dict):
    """One lattice point -> DetectionVerdict (library call, no I/O)."""
    crit = pt["criterion"]
    z0 = (pt["t"], pt["x0"])
    if crit in ("thm11_plain", "thm11_oscillation"):
        variant = "oscillation" if crit == "thm11_oscillation" else "plain"
        return epsilon_regularity(fld, z0, pt["p"], variant, thresholds["delta"],
                                  thresholds["eps_star"], r0=pt["r"])
    if crit == "wolf":
        return wolf_criterion(fld, z0, pt["r"], thresholds["eps_star"])
    if crit == "concentration_p3":
        return concentration_p3(fld, z0, pt["r"], thresholds["delta_star"])
    return concentration_rate(fld, z0, pt["r"], pt["p"], pt["nu"], thresholds["delta_star"])


def _scan_task(job):
    i, pt, thresholds = job
    try:
        v = evaluate_point(_WORKER_FIELD, pt, thresholds)
        return i, v.to_dict(), v.series
    except (DomainError, ParameterError) as exc:
        return i, {"error": str(exc), "criterion": pt["criterion"],
                   "z0": [pt["t"], list(pt["x0"])]}, None


def cmd_scan(args) -> int:
    _thresholds(args)
    if args.input is None:
        raise UsageError("scan needs --input")
    head = nssf.read_header(args.input)
    pts = scan_points(load_lattice(args.lattice), head["t_range"][1])
    thresholds = {"delta": args.delta, "eps_star": args.eps_star, "delta_star": args.delta_star}
    # the absolute constants are unquantified, so say which ones were left at their defaults
    stock = {"delta": DEFAULT_DELTA, "eps_star": DEFAULT_EPS_STAR, "delta_star": DEFAULT_DELTA_STAR}
    left_default = sorted(k for k, v in thresholds.items() if v == stock[k])
    chash = config_hash(args)
    jobs = [(i, pt, thresholds) for i, pt in enumerate(pts)]
    out = Path(args.output)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs, initializer=_worker_init,
                                 initargs=(args.input,)) as pool:
            # map yields in submission order, i.e. lattice order
            results = list(pool.map(_scan_task, jobs))
    else:
        _worker_init(args.input)
        results = [_scan_task(j) for j in jobs]
    n_err, plotted = 0, []
    with open(out, "w") as fh, open(_sidecar(out, "series", ".csv"), "w", newline="") as sf:
        sw = csv.writer(sf)
        sw.writerow(["index", "criterion", "t", "value", "config_hash"])
        for i, rec, series in results:
            rec.update(index=i, config_hash=chash, default_thresholds=left_default)
            n_err += "error" in rec
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
            for t, v in series or ():
                sw.writerow([i, rec["criterion"], repr(float(t)), repr(float(v)), chash])
            if series:
                plotted.append((f"#{i} {rec['criterion']}", series, rec["threshold"]))
    if args.plots and plotted:
        from .plotting import plot_series
        plot_series(plotted, _sidecar(out, "series"), f"scan of {Path(args.input).name}")
    if n_err:
        log.warning("%d of %d lattice points could not be evaluated", n_err, len(results))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suites
    names = args.suites.split(",") if args.suites else list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    rows, consts = run_suites(names, {"seed": args.seed or 0})
    chash = config_hash(args)
    out = Path(args.output)
    failed = [r for r in rows if not r["passed"]]
    with open(out, "w") as fh:
        for r in rows:
            fh.write(json.dumps(dict(r, config_hash=chash), sort_keys=True,
                                default=_json_default) + "\n")
        summary = {"summary": True, "checks": len(rows), "failed": len(failed),
                   "constants": consts, "config_hash": chash}
        fh.write(json.dumps(summary, sort_keys=True, default=_json_default) + "\n")
    if args.plots:
        from .plotting import plot_checks
        plot_checks(rows, _sidecar(out, "checks"))
    for r in rows:
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['suite']}/{r['name']}: "
              f"{r['measured']:.6g} {r['sense']} {r['limit']:.6g}  {r['detail']}")
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed; constants {consts}")
    return EXIT_FAIL if failed else EXIT_OK


def _json_default(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return str(v)


COMMANDS = {"gen": cmd_gen, "norms": cmd_norms, "invariants": cmd_invariants,
            "scan": cmd_scan, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nssl", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--input", help="NSSF1 field (or GeneratorSpec JSON for gen)")
    ap.add_argument("--output", required=True, help="output file")
    ap.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    ap.add_argument("--eps-star", type=float, default=DEFAULT_EPS_STAR)
    ap.add_argument("--delta-star", type=float, default=DEFAULT_DELTA_STAR)
    ap.add_argument("--c-cal", type=float, default=DEFAULT_C_CAL)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--lattice", help="lattice JSON (inline or file path)")
    ap.add_argument("--suites", help="comma-separated verify suites (default: all)")
    ap.add_argument("--no-plots", dest="plots", action="store_false",
                    help="skip figure output")
    return ap


def main(argv=None) -> int:
    level = os.environ.get("NSSL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.jobs < 1:
        ap.error("--jobs must be >= 1")
    try:
        if args.command in ("norms", "invariants", "scan") and args.input is None:
            raise UsageError(f"{args.command} needs --input")
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"nssl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except nssf.NSSFError as exc:
        print(json.dumps({"error": "nssf", "message": str(exc), "offset": exc.offset}),
              file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    except (ParameterError, DomainError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
