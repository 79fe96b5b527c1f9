"""``atomsim`` command line: pulse-scan, collection, analyze, budget, reproduce-all.

Exit codes: 0 success, 1 computational failure (or failed check), 2 usage or
input-schema error. JSON outputs are deterministic and echo the resolved
configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, budget, collection, csvio, pulsescan, reproduce
from .config import ConfigError, data_path, dumps, load_config

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _grid(text: str) -> list[float]:
    """Comma-separated durations in ns, or start:stop:count."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return list(np.linspace(float(a), float(b), int(n)))
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}") from None


def _config(args):
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = [args.seed]
    cfg = load_config(args.config, overrides)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _write(path: Path, obj) -> None:
    path.write_text(dumps(obj))
    print(f"wrote {path}")


# -- pulse-scan -------------------------------------------------------------------

def cmd_pulse_scan(args) -> int:
    cfg, out = _config(args)
    ts = _grid(args.grid) if args.grid is not None else list(cfg.grid_ns)
    if not ts:
        raise UsageError("empty duration grid")
    if any(t <= 0 for t in ts):
        raise UsageError("durations must be positive")
    points = pulsescan.scan_pulse_duration(np.array(ts) * 1e-9, cfg.scan)
    pulsescan.write_scan_csv(points, out / "pulse_scan.csv")

    by_t = {round(p.t_pi * 1e9, 9): p for p in points}
    refs = {}
    for t in (12.0, 30.0):
        refs[t] = by_t.get(t) or pulsescan.simulate_duration(t * 1e-9, cfg.scan)
    best = pulsescan.optimum(points)
    golden = reproduce.load_golden()
    values = {"total_error_12ns": refs[12.0].total_error,
              "total_error_30ns": refs[30.0].total_error,
              "leakage_12ns": refs[12.0].leakage_error}
    if len(points) > 2:
        values["scan_optimum_ns"] = best.t_pi * 1e9
    checks = {k: {"value": v, "golden": golden[k], "passed": reproduce.judge(v, golden[k])}
              for k, v in values.items()}
    summary = {
        "optimum": {"t_pi_ns": best.t_pi * 1e9, "total_error": best.total_error,
                    "leakage_error": best.leakage_error,
                    "double_excitation_error": best.double_excitation_error},
        "at_12ns": {"total_error": refs[12.0].total_error, "leakage_error": refs[12.0].leakage_error,
                    "double_excitation_error": refs[12.0].double_excitation_error},
        "at_30ns": {"total_error": refs[30.0].total_error, "leakage_error": refs[30.0].leakage_error,
                    "double_excitation_error": refs[30.0].double_excitation_error},
        "n_points": len(points),
        "golden_checks": checks,
        "all_passed": all(c["passed"] for c in checks.values()),
        "config": cfg.to_dict(),
    }
    _write(out / "pulse_scan_summary.json", summary)
    print(f"optimum {best.t_pi * 1e9:.3f} ns, total {best.total_error:.5f}; "
          f"12 ns {refs[12.0].total_error:.5f}; 30 ns {refs[30.0].total_error:.5f}")
    return EXIT_OK


# -- collection -------------------------------------------------------------------

def cmd_collection(args) -> int:
    cfg, out = _config(args)
    th = cfg.thermal
    kw = dict(order=int(th["order"]), method=th["method"], n_samples=int(th["n_samples"]),
              seed=cfg.seeds[0], n_grid=int(th["n_grid"]), tolerance=th.get("tolerance"))
    try:
        res = collection.thermal_average(cfg.optics, cfg.trap, **kw)
    except collection.ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    report = {"eta_cc": res.eta_cc, "convergence_estimate": res.convergence_estimate,
              "method": res.method, "order": res.order, "evaluations": res.evaluations,
              "sigma_r_m": res.sigma_r, "sigma_z_m": res.sigma_z,
              "per_channel": res.per_channel, "config": cfg.to_dict()}
    line = f"eta_cc = {res.eta_cc:.5f} (convergence estimate {res.convergence_estimate:.2g})"
    if cfg.losses:
        report["success_probability"] = collection.success_probability(res.eta_cc, **cfg.losses)
        line += f", P_s = {report['success_probability']:.5f}"
    sweep = cfg.sweep
    if sweep.get("r_eff_mm") and sweep.get("temperatures_uK"):
        rows = collection.efficiency_vs_aperture(
            cfg.optics, [r * 1e-3 for r in sweep["r_eff_mm"]],
            [t * 1e-6 for t in sweep["temperatures_uK"]], cfg.trap, **kw)
        with open(out / "collection_sweep.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, ["temperature_uK", "r_eff_mm", "eta_cc", "convergence_estimate"])
            w.writeheader()
            for r in rows:
                w.writerow({k: repr(float(v)) for k, v in r.items()})
        print(f"wrote {out / 'collection_sweep.csv'}")
        report["sweep_rows"] = len(rows)
    _write(out / "collection.json", report)
    print(line)
    return EXIT_OK


# -- analyze ----------------------------------------------------------------------

def _parity_correlations(paths, free_period):
    datasets = {}
    for p in paths:
        for basis, ds in csvio.read_parity(p).items():
            if basis in datasets:
                raise UsageError(f"basis {basis} appears in more than one input")
            datasets[basis] = ds
    out = {}
    for basis, ds in sorted(datasets.items()):
        fit = analysis.fit_parity(ds, free_period=free_period)
        corr = analysis.correlation_from_fit(fit)
        out[basis] = {"correlation": corr, "even": fit.even.amplitude_phase(),
                      "odd": fit.odd.amplitude_phase(),
                      "contrast_even": fit.even.contrast, "contrast_odd": fit.odd.contrast,
                      "chi2_even": fit.even.fit.chi2, "chi2_odd": fit.odd.fit.chi2,
                      "dof": fit.even.fit.dof, "complementary": fit.complementary}
    return out


def _analyze(args, cfg) -> dict:
    kind = args.kind
    if kind == "g2":
        if args.attempts is None:
            raise UsageError("g2 needs --attempts")
        recs = csvio.read_timetags(args.inputs[0])
        window = tuple(args.window) if args.window else None
        return {"g2_zero": analysis.g2_from_timetags(recs, args.attempts, window).to_dict(),
                "n_records": len(recs)}
    if kind == "histogram":
        t, counts = csvio.read_histogram(args.inputs[0])
        fit = analysis.fit_arrival_histogram(t, counts)
        return {"fit": fit.to_dict()}
    if kind == "parity":
        return {"bases": _parity_correlations(args.inputs, args.free_period)}
    if kind in ("ramsey", "rabi"):
        t, p, shots = csvio.read_series(args.inputs[0])
        fit = (analysis.fit_ramsey(t, p, shots, args.envelope) if kind == "ramsey"
               else analysis.fit_rabi(t, p, shots))
        return {"fit": fit.to_dict()}
    if kind == "fidelity":
        if len(args.inputs) == 1 and args.inputs[0].endswith(".json"):
            corr = csvio.read_correlations(args.inputs[0])
            extra = {}
        else:
            extra = _parity_correlations(args.inputs, args.free_period)
            if sorted(extra) != ["X", "Y", "Z"]:
                raise UsageError(f"fidelity needs X, Y and Z parity data, got {sorted(extra)}")
            # each basis is read at its maximal-parity angle, i.e. as XX, -YY and ZZ
            c = {b: extra[b]["correlation"] for b in "XYZ"}
            corr = analysis.CorrelationSet(c["X"]["correlation"], c["Y"]["correlation"],
                                           c["Z"]["correlation"], c["X"]["uncertainty"],
                                           c["Y"]["uncertainty"], c["Z"]["uncertainty"])
        f = analysis.bell_fidelity(corr)
        fid = cfg.fidelity
        inf = budget.inferred_fidelity(f.value, f.uncertainty, fid["epsilon_state"],
                                       fid["epsilon_state_err"])
        return {"correlations": {"xx": corr.xx, "minus_yy": corr.minus_yy, "zz": corr.zz,
                                 "xx_err": corr.xx_err, "minus_yy_err": corr.minus_yy_err,
                                 "zz_err": corr.zz_err},
                "fidelity": f.to_dict(), "inferred_fidelity": inf.to_dict(), "bases": extra}
    if kind == "bound":
        z, y = csvio.read_populations(args.inputs[0])
        return {"lower_bound": analysis.fidelity_lower_bound(z, y).to_dict()}
    raise UsageError(f"unknown analysis {kind!r}")


def cmd_analyze(args) -> int:
    cfg, out = _config(args)
    report = _analyze(args, cfg)
    report.update(analysis=args.kind, inputs=[str(p) for p in args.inputs], config=cfg.to_dict())
    _write(out / f"analyze_{args.kind}.json", report)
    return EXIT_OK


# -- budget -----------------------------------------------------------------------

def cmd_budget(args) -> int:
    cfg, out = _config(args)
    path = args.entries or data_path("budget_entries.json")
    try:
        entries = budget.load_entries(path)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: invalid budget entries ({exc})") from exc
    f = cfg.fidelity["measured"] if args.fidelity is None else args.fidelity
    ferr = cfg.fidelity["measured_err"] if args.fidelity_err is None else args.fidelity_err
    report = budget.compose_budget(entries, f, ferr)
    print(report.table())
    print(report.diagnostic)
    _write(out / "budget.json", {**report.to_dict(), "config": cfg.to_dict()})
    return EXIT_OK if report.consistent else EXIT_FAIL


# -- reproduce-all ----------------------------------------------------------------

def cmd_reproduce_all(args) -> int:
    names = list(reproduce.CHECKS)
    if args.only:
        unknown = set(args.only) - set(names)
        if unknown:
            raise UsageError(f"unknown checks: {sorted(unknown)}")
        names = [n for n in names if n in args.only]
    if args.list:
        for n in names:
            c = reproduce.CHECKS[n]
            crit = "-" if c.criterion is None else str(c.criterion)
            print(f"{n:<36} [{crit:>2}] {c.description}")
        return EXIT_OK
    cfg, out = _config(args)
    try:
        golden = reproduce.load_golden(args.golden)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read golden file: {exc}", file=sys.stderr)
        golden = {}

    def progress(row, seconds):
        mark = "PASS" if row["passed"] else "FAIL"
        val = row["value"]
        shown = f"{val:.6g}" if isinstance(val, float) else str(val)
        msg = f"  ({row['error']})" if "error" in row else ""
        print(f"{mark}  {row['name']:<36} {shown:<14} {seconds:7.1f} s{msg}", flush=True)

    manifest = reproduce.run_checks(cfg, golden, names, progress)
    manifest["config"] = cfg.to_dict()
    _write(out / "manifest.json", manifest)
    print(f"{manifest['n_passed']}/{manifest['n_checks']} checks passed")
    return EXIT_OK if manifest["all_passed"] else EXIT_FAIL


# -- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config merged over the defaults")
    common.add_argument("--out", metavar="DIR", help="output directory (default: config output_dir)")
    common.add_argument("--seed", type=int, help="override the seed list with a single seed")

    p = argparse.ArgumentParser(prog="atomsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"atomsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("pulse-scan", parents=[common], help="leakage/double-excitation scan")
    s.add_argument("--grid", metavar="LIST",
                   help="durations in ns: 'a,b,c' or 'start:stop:count' (default from config)")
    s.set_defaults(func=cmd_pulse_scan)

    s = sub.add_parser("collection", parents=[common], help="thermal collection efficiency")
    s.set_defaults(func=cmd_collection)

    s = sub.add_parser("analyze", parents=[common], help="fit or estimate from data files")
    s.add_argument("kind", choices=["g2", "histogram", "parity", "ramsey", "rabi", "fidelity",
                                    "bound"])
    s.add_argument("inputs", nargs="+", help="input CSV/JSON file(s)")
    s.add_argument("--attempts", type=int, help="g2: number of excitation attempts")
    s.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"),
                   help="g2: detection window in ns")
    s.add_argument("--envelope", default="exponential", choices=["exponential", "gaussian"])
    s.add_argument("--free-period", action="store_true", help="parity: fit the period too")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("budget", parents=[common], help="compose the infidelity budget")
    s.add_argument("--entries", metavar="PATH", help="budget entries JSON (default: shipped table)")
    s.add_argument("--fidelity", type=float, help="measured fidelity (default from config)")
    s.add_argument("--fidelity-err", type=float, help="its uncertainty")
    s.set_defaults(func=cmd_budget)

    s = sub.add_parser("reproduce-all", parents=[common], help="run every golden-number check")
    s.add_argument("--list", action="store_true", help="list checks without running them")
    s.add_argument("--golden", metavar="PATH", help="alternative golden-number file")
    s.add_argument("--only", nargs="+", metavar="NAME", help="run only these checks")
    s.set_defaults(func=cmd_reproduce_all)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    threads = os.environ.get("ATOMSIM_THREADS")
    if threads:
        try:
            import numba
            numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
        except ValueError:
            print("error: ATOMSIM_THREADS must be an integer", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError, csvio.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (analysis.FitError, pulsescan.ScanError, collection.ConvergenceError,
            ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
